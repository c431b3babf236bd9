//! Named check suites driven by a JSON configuration.
//!
//! ```json
//! {
//!   "rmatrix": { "builtin": "rational", "n": 2, "g": "1" },
//!   "reflection": [{ "builtin": "identity" }, { "builtin": "diagonal", "params": [["1", "0"], ["-1", "0"]] }],
//!   "grid": ["-2", "-1", "1", "2"],
//!   "suites": ["axioms", "zf", "wellbred", "rtt"],
//!   "mode": "exact"
//! }
//! ```
//!
//! Sources may also be `{ "file": "path" }`, resolved against the config's
//! directory. Suites always run in the fixed order of [`SuiteName::ALL`]; a
//! suite whose prerequisite was requested and failed is skipped.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boundary::{
    check_beta, check_boundary_relations, check_coideal, check_hierarchy,
    check_reflection_equation, check_rho_automorphism, check_rho_identity, parse_reflection,
    Boundary, ReflectionMatrix,
};
use crate::error::{Error, Result};
use crate::fock::{check_zf_relations, RapidityGrid, Zf};
use crate::linalg::Mat;
use crate::report::{Mode, Report};
use crate::rmatrix::{check_rmatrix_axioms, parse_custom_rmatrix, RMatrix};
use crate::scalar::{format_rational, format_scalar, int, parse_rational, real, Rational, Scalar};
use crate::symbolic::{check_confluence_words, parse_word, Word};
use crate::vertex::{
    check_adjoint_is_inverse, check_coproduct_factorization, check_hamiltonian_commutes, check_rtt,
    check_vertex_series, check_wellbred, solve_vertex_series,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteName {
    Axioms,
    Zf,
    Wellbred,
    Rtt,
    Hopf,
    Boundary,
    Hierarchy,
    Coideal,
    Beta,
}

impl SuiteName {
    /// Execution order.
    pub const ALL: [SuiteName; 9] = [
        SuiteName::Axioms,
        SuiteName::Zf,
        SuiteName::Wellbred,
        SuiteName::Rtt,
        SuiteName::Hopf,
        SuiteName::Boundary,
        SuiteName::Hierarchy,
        SuiteName::Coideal,
        SuiteName::Beta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::Axioms => "axioms",
            SuiteName::Zf => "zf",
            SuiteName::Wellbred => "wellbred",
            SuiteName::Rtt => "rtt",
            SuiteName::Hopf => "hopf",
            SuiteName::Boundary => "boundary",
            SuiteName::Hierarchy => "hierarchy",
            SuiteName::Coideal => "coideal",
            SuiteName::Beta => "beta",
        }
    }

    pub fn needs_reflection(self) -> bool {
        matches!(
            self,
            SuiteName::Boundary | SuiteName::Hierarchy | SuiteName::Coideal | SuiteName::Beta
        )
    }

    /// Suites that must pass first, when they are also requested.
    pub fn prerequisites(self) -> &'static [SuiteName] {
        use SuiteName::*;
        match self {
            Axioms => &[],
            Zf | Wellbred | Hopf => &[Axioms],
            Rtt => &[Axioms, Wellbred],
            Boundary => &[Axioms, Wellbred],
            Hierarchy | Coideal | Beta => &[Axioms, Wellbred, Boundary],
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite `{s}`")))
    }
}

/// A rational given as a JSON string (`"-3/2"`) or integer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RatLit {
    Int(i64),
    Text(String),
}

impl RatLit {
    fn value(&self) -> Result<Rational> {
        match self {
            RatLit::Int(i) => Ok(int(*i)),
            RatLit::Text(t) => Ok(parse_rational(t)?),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RMatrixSource {
    Builtin(BuiltinR),
    File { file: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builtin", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BuiltinR {
    Rational {
        n: usize,
        g: RatLit,
    },
    Trigonometric {
        q: RatLit,
    },
    /// The normalization `(I - (ig/u) P)` without the unitarizing factor.
    PrintedYangian {
        n: usize,
        g: RatLit,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReflectionSource {
    Builtin(BuiltinB),
    File { file: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builtin", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BuiltinB {
    Identity,
    /// `diag(ε_i (1 + t_i k)/(1 - t_i k))` from `[ε_i, t_i]` pairs.
    Diagonal {
        params: Vec<(RatLit, RatLit)>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn as_slice(&self) -> &[T] {
        match self {
            OneOrMany::One(x) => std::slice::from_ref(x),
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    #[default]
    Exact,
    Float,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub rmatrix: RMatrixSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflection: Option<OneOrMany<ReflectionSource>>,
    pub grid: Vec<RatLit>,
    #[serde(default)]
    pub suites: Vec<SuiteName>,
    #[serde(default)]
    pub mode: ModeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Largest particle number of the bulk sectors.
    #[serde(default = "default_max_p")]
    pub max_p: usize,
    /// Largest particle number of the boundary sectors.
    #[serde(default = "default_boundary_max_p")]
    pub boundary_max_p: usize,
    /// Longest word in the confluence check.
    #[serde(default = "default_word_length")]
    pub word_length: usize,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_max_p() -> usize {
    2
}

fn default_boundary_max_p() -> usize {
    1
}

fn default_word_length() -> usize {
    3
}

impl SuiteConfig {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut c: SuiteConfig = serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("config: {e}")))?;
        c.base_dir = base_dir.into();
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, dir)
    }

    pub fn mode(&self) -> Result<Mode> {
        match (self.mode, self.tolerance) {
            (ModeName::Exact, None) => Ok(Mode::Exact),
            (ModeName::Exact, Some(_)) => Err(Error::InvalidParameter(
                "`tolerance` applies to float mode only".into(),
            )),
            (ModeName::Float, tol) => {
                let tol = tol.unwrap_or(Mode::DEFAULT_TOL);
                if !(tol >= 0.0 && tol.is_finite()) {
                    return Err(Error::InvalidParameter(format!("bad tolerance {tol}")));
                }
                Ok(Mode::Float { tol })
            }
        }
    }

    fn read(&self, file: &Path) -> Result<String> {
        let path = self.base_dir.join(file);
        std::fs::read_to_string(&path)
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
    }

    pub fn rmatrix(&self) -> Result<RMatrix> {
        match &self.rmatrix {
            RMatrixSource::Builtin(BuiltinR::Rational { n, g }) => {
                RMatrix::rational(*n, g.value()?)
            }
            RMatrixSource::Builtin(BuiltinR::Trigonometric { q }) => {
                RMatrix::trigonometric(q.value()?)
            }
            RMatrixSource::Builtin(BuiltinR::PrintedYangian { n, g }) => {
                RMatrix::printed_yangian(*n, g.value()?)
            }
            RMatrixSource::File { file } => {
                parse_custom_rmatrix(&self.read(file)?, self.mode == ModeName::Float)
            }
        }
    }

    /// Reflection matrices with a short label for reports.
    pub fn reflections(&self, n: usize) -> Result<Vec<(String, ReflectionMatrix)>> {
        let Some(src) = &self.reflection else {
            return Ok(Vec::new());
        };
        src.as_slice()
            .iter()
            .map(|s| {
                let b = match s {
                    ReflectionSource::Builtin(BuiltinB::Identity) => ReflectionMatrix::identity(n),
                    ReflectionSource::Builtin(BuiltinB::Diagonal { params }) => {
                        let ps = params
                            .iter()
                            .map(|(e, t)| Ok((real(e.value()?), real(t.value()?))))
                            .collect::<Result<Vec<(Scalar, Scalar)>>>()?;
                        ReflectionMatrix::diagonal(&ps)
                    }
                    ReflectionSource::File { file } => {
                        parse_reflection(&self.read(file)?, self.mode == ModeName::Float)?
                    }
                };
                let label = match (s, b.constant_value()) {
                    (_, Ok(m)) => format_matrix(&m),
                    (ReflectionSource::File { file }, Err(_)) => file.display().to_string(),
                    (ReflectionSource::Builtin(BuiltinB::Diagonal { params }), Err(_)) => {
                        let ps: Vec<String> = params
                            .iter()
                            .map(|(e, t)| format!("{} {}", lit_text(e), lit_text(t)))
                            .collect();
                        format!("diagonal({})", ps.join("; "))
                    }
                    (ReflectionSource::Builtin(BuiltinB::Identity), Err(e)) => return Err(e),
                };
                Ok((label, b))
            })
            .collect()
    }

    pub fn grid(&self) -> Result<RapidityGrid> {
        let pts = self
            .grid
            .iter()
            .map(RatLit::value)
            .collect::<Result<Vec<_>>>()?;
        RapidityGrid::new(pts)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: SuiteName,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub checks: Vec<Report>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub rmatrix: String,
    pub grid: Vec<String>,
    pub mode: String,
    pub suites: Vec<SuiteResult>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("report: {e}")))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "rmatrix {}", self.rmatrix);
        let _ = writeln!(s, "grid {{{}}}", self.grid.join(", "));
        let _ = writeln!(s, "mode {}", self.mode);
        if self.suites.is_empty() {
            let _ = writeln!(s, "no suites requested");
        }
        for r in &self.suites {
            let status = match r.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Skipped => "skipped",
            };
            let _ = write!(s, "\n[{}] {status}", r.suite);
            if let Some(reason) = &r.reason {
                let _ = write!(s, ": {reason}");
            }
            s.push('\n');
            for c in &r.checks {
                let _ = writeln!(
                    s,
                    "  {:<44} {:>6} samples  max residual {}  {}",
                    c.check,
                    c.samples,
                    residual_text(&c.max_residual),
                    if c.pass { "ok" } else { "FAIL" }
                );
                if let Some(w) = &c.witness {
                    let _ = writeln!(
                        s,
                        "    witness #{}: {} (residual {})",
                        w.index,
                        w.sample,
                        residual_text(&w.residual)
                    );
                }
                for n in &c.notes {
                    let _ = writeln!(s, "    note: {n}");
                }
            }
        }
        let failed = self
            .suites
            .iter()
            .filter(|r| r.status != Status::Pass)
            .count();
        let _ = writeln!(
            s,
            "\n{} suites, {failed} not passing: {}",
            self.suites.len(),
            if self.pass { "PASS" } else { "FAIL" }
        );
        s
    }
}

fn residual_text(r: &crate::report::Residual) -> String {
    match r {
        crate::report::Residual::Exact(x) => format_rational(x),
        crate::report::Residual::Float(x) => format!("{x:e}"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

pub fn emit_report(report: &SuiteReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => report.to_text(),
        ReportFormat::Json => report.to_json(),
    }
}

/// `0` when every suite passed, `1` when a check failed, `2` for
/// configuration and evaluation errors.
pub fn exit_code(result: &Result<SuiteReport>) -> i32 {
    match result {
        Ok(r) => r.exit_code(),
        Err(_) => 2,
    }
}

fn ordered_pairs(pts: &[Rational]) -> Vec<(Rational, Rational)> {
    let mut out = Vec::new();
    for a in pts {
        for b in pts {
            if a != b {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

fn distinct_triples(pts: &[Rational]) -> Vec<[Rational; 3]> {
    let mut out = Vec::new();
    for a in pts {
        for b in pts {
            for c in pts {
                if a != b && b != c && a != c {
                    out.push([a.clone(), b.clone(), c.clone()]);
                }
            }
        }
    }
    out
}

/// Runs the requested suites. Configuration problems and evaluation errors
/// (poles, singular solves) are returned as `Err`; check failures are part of
/// the report.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    let mode = config.mode()?;
    let r = config.rmatrix()?;
    let grid = config.grid()?;
    let refls = config.reflections(r.n())?;
    let requested: Vec<SuiteName> = SuiteName::ALL
        .into_iter()
        .filter(|s| config.suites.contains(s))
        .collect();
    if requested.iter().any(|s| s.needs_reflection()) {
        if refls.is_empty() {
            return Err(Error::InvalidParameter(
                "boundary suites need a reflection source".into(),
            ));
        }
        grid.require_negation_closed()?;
    }
    let zf = Zf::new(r.clone(), grid.clone());
    let pts = grid.points().to_vec();
    let positive = if grid.negation_closed() {
        grid.positive()
    } else {
        pts.clone()
    };
    let max_p = config.max_p;
    let bmax_p = config.boundary_max_p;
    let boundaries = refls
        .iter()
        .map(|(_, b)| Boundary::new(zf.clone(), b.clone()))
        .collect::<Result<Vec<_>>>()?;

    let mut results: Vec<SuiteResult> = Vec::new();
    for suite in requested {
        let blocked = suite.prerequisites().iter().find(|p| {
            results
                .iter()
                .any(|r| r.suite == **p && r.status != Status::Pass)
        });
        if let Some(p) = blocked {
            results.push(SuiteResult {
                suite,
                status: Status::Skipped,
                reason: Some(format!("prerequisite `{p}` did not pass")),
                checks: Vec::new(),
            });
            continue;
        }
        let checks = match suite {
            SuiteName::Axioms => {
                let a = check_rmatrix_axioms(&r, &distinct_triples(&pts), mode)?;
                vec![a.yang_baxter, a.unitarity]
            }
            SuiteName::Zf => vec![
                check_zf_relations(&zf, &ordered_pairs(&pts), max_p, mode)?,
                check_confluence_words(&r, &grid, config.word_length, mode)?,
            ],
            SuiteName::Wellbred => {
                let orders = solve_vertex_series(&zf, 2, &positive)?;
                vec![
                    check_wellbred(&zf, &positive, max_p, mode)?,
                    check_adjoint_is_inverse(&zf, &positive, max_p, mode)?,
                    check_hamiltonian_commutes(&zf, &positive, 4, max_p, mode)?,
                    check_vertex_series(&zf, &orders, &positive, mode)?,
                ]
            }
            SuiteName::Rtt => vec![check_rtt(&zf, &ordered_pairs(&positive), max_p, mode)?],
            SuiteName::Hopf => vec![check_coproduct_factorization(&zf, &positive, 1, 1, mode)?],
            SuiteName::Boundary => {
                let mut out = Vec::new();
                for ((label, b), bd) in refls.iter().zip(&boundaries) {
                    let tag = |mut rep: Report| {
                        rep.check = format!("{} [B = {label}]", rep.check);
                        rep
                    };
                    out.push(tag(check_reflection_equation(
                        &r,
                        b,
                        &ordered_pairs(&pts),
                        mode,
                    )?));
                    out.push(tag(check_boundary_relations(bd, bmax_p, mode)?));
                    out.push(tag(check_rho_identity(bd, bmax_p, mode)?));
                    let words = rho_words(&grid)?;
                    out.push(tag(check_rho_automorphism(bd, &words, bmax_p, mode)?));
                }
                out
            }
            SuiteName::Hierarchy => boundaries
                .iter()
                .zip(&refls)
                .map(|(bd, (label, _))| {
                    let mut rep = check_hierarchy(bd, 1, bmax_p, mode)?;
                    rep.check = format!("{} [B = {label}]", rep.check);
                    Ok(rep)
                })
                .collect::<Result<_>>()?,
            SuiteName::Coideal => boundaries
                .iter()
                .zip(&refls)
                .map(|(bd, (label, _))| {
                    let mut rep = check_coideal(bd, &pts, 1, 1, mode)?;
                    rep.check = format!("{} [B = {label}]", rep.check);
                    Ok(rep)
                })
                .collect::<Result<_>>()?,
            SuiteName::Beta => {
                let mut out = Vec::new();
                for (bd, (label, b)) in boundaries.iter().zip(&refls) {
                    if !b.is_constant() {
                        continue;
                    }
                    let mut rep = check_beta(bd, 2, &positive[..1], mode)?;
                    rep.check = format!("{} [B = {label}]", rep.check);
                    out.push(rep);
                }
                if out.is_empty() {
                    return Err(Error::Unsupported(
                        "the beta suite needs a constant reflection matrix".into(),
                    ));
                }
                out
            }
        };
        let pass = checks.iter().all(|c| c.pass);
        results.push(SuiteResult {
            suite,
            status: if pass { Status::Pass } else { Status::Fail },
            reason: None,
            checks,
        });
    }
    let pass = results.iter().all(|r| r.status == Status::Pass);
    Ok(SuiteReport {
        rmatrix: r.describe(),
        grid: pts.iter().map(format_rational).collect(),
        mode: match mode {
            Mode::Exact => "exact".into(),
            Mode::Float { tol } => format!("float (tol {tol:e})"),
        },
        suites: results,
        pass,
    })
}

fn lit_text(l: &RatLit) -> String {
    match l {
        RatLit::Int(i) => i.to_string(),
        RatLit::Text(t) => t.clone(),
    }
}

fn format_matrix(m: &Mat) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|r| {
            let row: Vec<String> = (0..m.cols()).map(|c| format_scalar(m.get(r, c))).collect();
            format!("[{}]", row.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

/// Two- and three-letter words on the two smallest positive rapidities.
fn rho_words(grid: &RapidityGrid) -> Result<Vec<Word>> {
    let pos = grid.positive();
    let (k1, k2) = match pos.as_slice() {
        [a, b, ..] => (format_rational(a), format_rational(b)),
        [a] => (format_rational(a), format_rational(a)),
        [] => return Ok(Vec::new()),
    };
    [
        format!("a({k1}) ad({k2})"),
        format!("a({k2}) a(-{k1}) ad({k1})"),
    ]
    .iter()
    .map(|t| parse_word(t, grid))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> SuiteConfig {
        SuiteConfig::parse(text, ".").unwrap()
    }

    const BULK: &str = r#"{
        "rmatrix": { "builtin": "rational", "n": 2, "g": "1" },
        "grid": [-2, -1, 1, 2],
        "suites": ["rtt", "axioms", "zf", "wellbred"]
    }"#;

    #[test]
    fn bulk_suites_pass_in_fixed_order() {
        let rep = run_suite(&config(BULK)).unwrap();
        assert!(rep.pass, "{}", rep.to_text());
        let order: Vec<SuiteName> = rep.suites.iter().map(|s| s.suite).collect();
        assert_eq!(
            order,
            [
                SuiteName::Axioms,
                SuiteName::Zf,
                SuiteName::Wellbred,
                SuiteName::Rtt
            ]
        );
        assert_eq!(rep.exit_code(), 0);
    }

    #[test]
    fn printed_normalization_fails_with_witness() {
        let rep = run_suite(&config(
            r#"{ "rmatrix": { "builtin": "printed-yangian", "n": 2, "g": 1 },
                 "grid": [1, 2, 3], "suites": ["axioms", "zf"] }"#,
        ))
        .unwrap();
        assert_eq!(rep.exit_code(), 1);
        let unit = &rep.suites[0].checks[1];
        assert_eq!(unit.check, "unitarity");
        let w = unit.witness.as_ref().unwrap();
        assert!(rep.to_json().contains(&w.sample));
        assert_eq!(rep.suites[1].status, Status::Skipped);
    }

    #[test]
    fn boundary_needs_reflection_and_closed_grid() {
        let missing = config(
            r#"{ "rmatrix": { "builtin": "rational", "n": 2, "g": 1 },
                 "grid": [-1, 1], "suites": ["boundary"] }"#,
        );
        assert!(run_suite(&missing).is_err());
        let open = config(
            r#"{ "rmatrix": { "builtin": "rational", "n": 2, "g": 1 },
                 "reflection": { "builtin": "identity" },
                 "grid": [1, 2], "suites": ["coideal"] }"#,
        );
        assert!(run_suite(&open).is_err());
    }

    #[test]
    fn empty_suite_list_passes() {
        let rep = run_suite(&config(
            r#"{ "rmatrix": { "builtin": "rational", "n": 2, "g": 1 }, "grid": [1] }"#,
        ))
        .unwrap();
        assert!(rep.pass);
        assert!(rep.suites.is_empty());
        assert!(rep.to_text().contains("no suites requested"));
    }

    #[test]
    fn config_errors() {
        assert!(SuiteConfig::parse("{", ".").is_err());
        assert!(
            SuiteConfig::parse(r#"{ "rmatrix": { "builtin": "nope" }, "grid": [] }"#, ".").is_err()
        );
        assert!(SuiteConfig::parse(
            r#"{ "rmatrix": { "builtin": "rational", "n": 2, "g": 1 }, "grid": [1], "suites": ["zz"] }"#,
            "."
        )
        .is_err());
        let c = config(
            r#"{ "rmatrix": { "builtin": "rational", "n": 2, "g": 1 }, "grid": [1], "tolerance": 0.1 }"#,
        );
        assert!(c.mode().is_err());
        let c = config(r#"{ "rmatrix": { "file": "missing.json" }, "grid": [1] }"#);
        assert!(c.rmatrix().is_err());
    }

    #[test]
    fn float_mode_reports_floats() {
        let mut c = config(BULK);
        c.mode = ModeName::Float;
        c.tolerance = Some(1e-12);
        c.suites = vec![SuiteName::Axioms];
        let rep = run_suite(&c).unwrap();
        assert!(rep.pass);
        assert!(rep.mode.starts_with("float"));
        assert!(matches!(
            rep.suites[0].checks[0].max_residual,
            crate::report::Residual::Float(_)
        ));
    }

    #[test]
    fn json_round_trip_and_determinism() {
        let c = config(
            r#"{ "rmatrix": { "builtin": "printed-yangian", "n": 2, "g": 1 },
                 "grid": [1, 2, 3], "suites": ["axioms"] }"#,
        );
        let a = run_suite(&c).unwrap().to_json();
        let b = run_suite(&c).unwrap().to_json();
        assert_eq!(a, b);
        let parsed = SuiteReport::from_json(&a).unwrap();
        assert_eq!(parsed.to_json(), a);
        assert_eq!(parsed, run_suite(&c).unwrap());
    }

    #[test]
    fn suite_names_round_trip() {
        for s in SuiteName::ALL {
            assert_eq!(s.as_str().parse::<SuiteName>().unwrap(), s);
            let text = serde_json::to_string(&s).unwrap();
            assert_eq!(text, format!("\"{s}\""));
        }
    }
}
