//! Evaluated R-matrices, their axioms, and tensor-leg utilities.
//!
//! An R-matrix here is an `N²×N²` matrix-valued function of two rapidities.
//! Row and column indices are `(first factor) * N + (second factor)`, so
//! `R_12(k1,k2)` puts the first factor on leg 1.
//!
//! Built-in families:
//!
//! * rational Yangian `R(u) = (u I + i g P) / (u + i g)`, `u = k1 - k2`;
//! * trigonometric six-vertex (`N = 2`) in the multiplicative variable
//!   `z = ζ(k1)/ζ(k2)`, `ζ(k) = (1 + i k)/(1 - i k)`:
//!
//!   ```text
//!   R(z) = | 1   0              0                0 |
//!          | 0   (z-1)/a        (q-1/q) z/a      0 |    a = q z - 1/q
//!          | 0   (q-1/q)/a      (z-1)/a          0 |
//!          | 0   0              0                1 |
//!   ```
//!
//!   With real `q` and `|z| = 1` this matrix is unitary, which is what the
//!   adjoint `R_12(k1,k2)† = R_21(k2,k1)` requires on a real rapidity grid.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseError, Result};
use crate::linalg::{embed, Mat};
use crate::ratfunc::{literal, parse_ratfunc, RatExpr};
use crate::report::{Mode, Report, ReportBuilder};
use crate::scalar::{format_rational, i_unit, real, Rational, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    RationalYangian,
    TrigonometricSixVertex,
    Custom,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::RationalYangian => "rational-yangian",
            Family::TrigonometricSixVertex => "trigonometric-six-vertex",
            Family::Custom => "custom",
        })
    }
}

#[derive(Clone, Debug)]
enum Kind {
    Rational {
        g: Rational,
    },
    Trigonometric {
        q: Rational,
    },
    Custom {
        label: String,
        entries: Arc<Vec<RatExpr>>,
    },
    Perturbed {
        base: Box<RMatrix>,
        row: usize,
        col: usize,
        delta: Scalar,
    },
}

const VARS: [&str; 2] = ["k1", "k2"];

type Cache = Arc<Mutex<HashMap<(Rational, Rational), Mat>>>;

/// An R-matrix with exact evaluation and a shared evaluation memo.
#[derive(Clone)]
pub struct RMatrix {
    n: usize,
    kind: Kind,
    cache: Cache,
}

impl fmt::Debug for RMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RMatrix({})", self.describe())
    }
}

impl RMatrix {
    fn with_kind(n: usize, kind: Kind) -> Self {
        RMatrix {
            n,
            kind,
            cache: Arc::default(),
        }
    }

    /// Yangian `Y(gl_N)` family in the unitary normalization.
    pub fn rational(n: usize, g: Rational) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("N must be positive".into()));
        }
        if g.is_zero() {
            return Err(Error::InvalidParameter("coupling g must be nonzero".into()));
        }
        Ok(Self::with_kind(n, Kind::Rational { g }))
    }

    /// Six-vertex `U_q(gl_2^)` family, `N = 2`.
    pub fn trigonometric(q: Rational) -> Result<Self> {
        if q.is_zero() {
            return Err(Error::InvalidParameter("q must be nonzero".into()));
        }
        Ok(Self::with_kind(2, Kind::Trigonometric { q }))
    }

    /// User-supplied entries, row-major `N²×N²`, in variables `k1`, `k2`.
    pub fn custom(n: usize, label: impl Into<String>, entries: Vec<RatExpr>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("N must be positive".into()));
        }
        if entries.len() != n.pow(4) {
            return Err(ParseError::dimension(format!(
                "expected {} entries, found {}",
                n.pow(4),
                entries.len()
            ))
            .into());
        }
        Ok(Self::with_kind(
            n,
            Kind::Custom {
                label: label.into(),
                entries: Arc::new(entries),
            },
        ))
    }

    /// The constant identity R-matrix; with `N = 1` the ZF algebra is the
    /// undeformed oscillator algebra.
    pub fn trivial(n: usize) -> Self {
        let size = n * n;
        let entries = (0..size * size)
            .map(|idx| {
                RatExpr::constant(if idx / size == idx % size {
                    Scalar::one()
                } else {
                    Scalar::zero()
                })
            })
            .collect();
        Self::custom(n, "trivial", entries).expect("trivial R-matrix")
    }

    /// Yangian normalization `((u²+g²)/u²)(I - (i g/u) P)`. It satisfies the
    /// Yang-Baxter equation but not unitarity; kept as a negative fixture.
    pub fn printed_yangian(n: usize, g: Rational) -> Result<Self> {
        let g = literal(&g);
        let f = format!("((k1-k2)^2+{g}^2)/(k1-k2)^2");
        let text = entry_grid(n, |a, b, c, d| {
            let id = a == c && b == d;
            let perm = a == d && b == c;
            match (id, perm) {
                (true, true) => format!("{f}*(1-{g}*i/(k1-k2))"),
                (true, false) => f.clone(),
                (false, true) => format!("-{f}*{g}*i/(k1-k2)"),
                (false, false) => "0".into(),
            }
        });
        let entries = text
            .iter()
            .map(|s| parse_ratfunc(s, &VARS, false))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::custom(n, "printed-yangian", entries)
    }

    /// Adds `delta` to one entry of every evaluation.
    pub fn perturbed(&self, row: usize, col: usize, delta: Scalar) -> Self {
        Self::with_kind(
            self.n,
            Kind::Perturbed {
                base: Box::new(self.clone()),
                row,
                col,
                delta,
            },
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> Family {
        match &self.kind {
            Kind::Rational { .. } => Family::RationalYangian,
            Kind::Trigonometric { .. } => Family::TrigonometricSixVertex,
            Kind::Custom { .. } | Kind::Perturbed { .. } => Family::Custom,
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Rational { g } => {
                format!("rational-yangian N={} g={}", self.n, format_rational(g))
            }
            Kind::Trigonometric { q } => {
                format!("trigonometric-six-vertex q={}", format_rational(q))
            }
            Kind::Custom { label, .. } => format!("custom:{label} N={}", self.n),
            Kind::Perturbed { base, row, col, .. } => {
                format!("{} perturbed at ({row},{col})", base.describe())
            }
        }
    }

    /// `R_12(k1, k2)`.
    pub fn eval(&self, k1: &Rational, k2: &Rational) -> Result<Mat> {
        let key = (k1.clone(), k2.clone());
        if let Some(m) = self.cache.lock().unwrap().get(&key) {
            return Ok(m.clone());
        }
        let m = self.eval_uncached(k1, k2)?;
        self.cache.lock().unwrap().insert(key, m.clone());
        Ok(m)
    }

    fn eval_uncached(&self, k1: &Rational, k2: &Rational) -> Result<Mat> {
        let n = self.n;
        let size = n * n;
        match &self.kind {
            Kind::Rational { g } => {
                let u = real(k1 - k2);
                let ig = i_unit() * real(g.clone());
                let d = &u + &ig;
                // d = u + i g has imaginary part g != 0
                let diag = &u / &d;
                let swap = &ig / &d;
                Ok(Mat::from_fn(size, size, |r, c| {
                    let (a, b) = (r / n, r % n);
                    let mut v = Scalar::zero();
                    if r == c {
                        v += &diag;
                    }
                    if c == b * n + a {
                        v += &swap;
                    }
                    v
                }))
            }
            Kind::Trigonometric { q } => {
                let z = cayley(k1) / cayley(k2);
                let q = real(q.clone());
                let q_inv = Scalar::one() / &q;
                let a = &q * &z - &q_inv;
                if a.is_zero() {
                    return Err(Error::Pole {
                        denominator: "q z - 1/q".into(),
                        at: format!("k1={}, k2={}", format_rational(k1), format_rational(k2)),
                    });
                }
                let b = (&z - Scalar::one()) / &a;
                let c = (&q - &q_inv) / &a;
                let cz = &c * &z;
                let one = Scalar::one();
                let zero = Scalar::zero();
                let data = vec![
                    one.clone(),
                    zero.clone(),
                    zero.clone(),
                    zero.clone(),
                    zero.clone(),
                    b.clone(),
                    cz,
                    zero.clone(),
                    zero.clone(),
                    c,
                    b,
                    zero.clone(),
                    zero.clone(),
                    zero.clone(),
                    zero,
                    one,
                ];
                Ok(Mat::from_vec(4, 4, data))
            }
            Kind::Custom { entries, .. } => {
                let vals = [k1.clone(), k2.clone()];
                let data = entries
                    .iter()
                    .map(|e| e.eval(&vals, &VARS))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Mat::from_vec(size, size, data))
            }
            Kind::Perturbed {
                base,
                row,
                col,
                delta,
            } => {
                let mut m = base.eval(k1, k2)?;
                let v = m.get(*row, *col) + delta;
                m.set(*row, *col, v);
                Ok(m)
            }
        }
    }

    /// `R_21(k2, k1) = P R_12(k2, k1) P`, i.e. `R(k2,k1)` with its first
    /// factor on the second leg.
    pub fn eval_swapped(&self, k2: &Rational, k1: &Rational) -> Result<Mat> {
        let p = Mat::swap(self.n);
        Ok(p.mul(&self.eval(k2, k1)?).mul(&p))
    }

    pub fn inverse(&self, k1: &Rational, k2: &Rational) -> Result<Mat> {
        self.eval(k1, k2)?.inverse()
    }

    /// Entry strings in the custom grammar, or `None` for perturbed
    /// matrices (their text form is not tracked).
    pub fn entry_strings(&self) -> Option<Vec<String>> {
        let n = self.n;
        match &self.kind {
            Kind::Rational { g } => {
                let g = literal(g);
                let d = format!("(k1-k2+{g}*i)");
                Some(entry_grid(n, |a, b, c, e| {
                    let id = a == c && b == e;
                    let perm = a == e && b == c;
                    match (id, perm) {
                        (true, true) => "1".into(),
                        (true, false) => format!("(k1-k2)/{d}"),
                        (false, true) => format!("{g}*i/{d}"),
                        (false, false) => "0".into(),
                    }
                }))
            }
            Kind::Trigonometric { q } => {
                let q = literal(q);
                let z = "(((1+i*k1)*(1-i*k2))/((1-i*k1)*(1+i*k2)))";
                let a = format!("({q}*{z}-1/{q})");
                let b = format!("({z}-1)/{a}");
                let c = format!("({q}-1/{q})/{a}");
                let cz = format!("({q}-1/{q})*{z}/{a}");
                let rows = [
                    ["1", "0", "0", "0"],
                    ["0", &b, &cz, "0"],
                    ["0", &c, &b, "0"],
                    ["0", "0", "0", "1"],
                ];
                Some(
                    rows.iter()
                        .flat_map(|r| r.iter().map(|s| s.to_string()))
                        .collect(),
                )
            }
            Kind::Custom { entries, .. } => Some(
                entries
                    .iter()
                    .map(|e| {
                        crate::ratfunc::Render {
                            expr: e,
                            vars: &VARS,
                        }
                        .to_string()
                    })
                    .collect(),
            ),
            Kind::Perturbed { .. } => None,
        }
    }

    /// Serializes to the custom JSON grammar.
    pub fn to_custom_json(&self) -> Option<String> {
        let flat = self.entry_strings()?;
        let size = self.n * self.n;
        let doc = CustomDoc {
            n: self.n,
            vars: VARS.iter().map(|s| s.to_string()).collect(),
            entries: flat.chunks(size).map(|r| r.to_vec()).collect(),
        };
        Some(serde_json::to_string_pretty(&doc).expect("serializable"))
    }
}

fn entry_grid(n: usize, f: impl Fn(usize, usize, usize, usize) -> String) -> Vec<String> {
    let size = n * n;
    (0..size * size)
        .map(|idx| {
            let (r, c) = (idx / size, idx % size);
            f(r / n, r % n, c / n, c % n)
        })
        .collect()
}

/// `(1 + i k)/(1 - i k)`, a unit-modulus Gaussian rational for real `k`.
fn cayley(k: &Rational) -> Scalar {
    let ik = i_unit() * real(k.clone());
    (Scalar::one() + &ik) / (Scalar::one() - ik)
}

#[derive(Serialize, Deserialize)]
struct CustomDoc {
    #[serde(rename = "N")]
    n: usize,
    #[serde(default = "default_vars")]
    vars: Vec<String>,
    entries: Vec<Vec<String>>,
}

fn default_vars() -> Vec<String> {
    VARS.iter().map(|s| s.to_string()).collect()
}

/// Parses `{ "N": int, "vars": ["k1","k2"], "entries": [[string,…],…] }`.
///
/// Entry syntax errors report `line` = matrix row + 1 and `column` = offset
/// inside the entry string. Decimal literals are rejected unless
/// `allow_decimal` is set (float mode).
pub fn parse_custom_rmatrix(text: &str, allow_decimal: bool) -> Result<RMatrix> {
    let doc: CustomDoc = serde_json::from_str(text)
        .map_err(|e| ParseError::syntax(e.line(), e.column(), e.to_string()))?;
    if doc.vars.len() != 2 {
        return Err(ParseError::dimension(format!(
            "expected two variables, found {}",
            doc.vars.len()
        ))
        .into());
    }
    let size = doc.n * doc.n;
    if doc.entries.len() != size || doc.entries.iter().any(|r| r.len() != size) {
        return Err(ParseError::dimension(format!(
            "N={} requires a {size}x{size} entry array",
            doc.n
        ))
        .into());
    }
    let names: Vec<&str> = doc.vars.iter().map(String::as_str).collect();
    let mut entries = Vec::with_capacity(size * size);
    for (r, row) in doc.entries.iter().enumerate() {
        for (c, s) in row.iter().enumerate() {
            let e = parse_ratfunc(s, &names, allow_decimal).map_err(|mut e| {
                e.line = r + 1;
                e.message = format!("entry [{r}][{c}]: {}", e.message);
                e
            })?;
            entries.push(e);
        }
    }
    RMatrix::custom(doc.n, "parsed", entries)
}

/// Residual reports of the two R-matrix axioms.
#[derive(Clone, Debug, PartialEq)]
pub struct AxiomReport {
    pub yang_baxter: Report,
    pub unitarity: Report,
}

impl AxiomReport {
    pub fn pass(&self) -> bool {
        self.yang_baxter.pass && self.unitarity.pass
    }

    pub fn combined(&self) -> Report {
        let mut r = self.yang_baxter.clone().merge(self.unitarity.clone());
        r.check = "rmatrix-axioms".into();
        r.samples = self.yang_baxter.samples;
        r
    }
}

fn fmt_triple(t: &[Rational; 3]) -> String {
    format!(
        "({}, {}, {})",
        format_rational(&t[0]),
        format_rational(&t[1]),
        format_rational(&t[2])
    )
}

/// Yang-Baxter and unitarity residuals at every sampled triple. Unitarity is
/// tested on all three pairs of the triple.
pub fn check_rmatrix_axioms(
    r: &RMatrix,
    samples: &[[Rational; 3]],
    mode: Mode,
) -> Result<AxiomReport> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one sample triple is required".into(),
        ));
    }
    let n = r.n;
    let mut ybe = ReportBuilder::new("yang-baxter", mode);
    let mut unit = ReportBuilder::new("unitarity", mode);
    let id = Mat::identity(n * n);
    for t in samples {
        let [k1, k2, k3] = t;
        let r12 = embed(&r.eval(k1, k2)?, &[0, 1], n, 3);
        let r13 = embed(&r.eval(k1, k3)?, &[0, 2], n, 3);
        let r23 = embed(&r.eval(k2, k3)?, &[1, 2], n, 3);
        let lhs = r12.mul(&r13).mul(&r23);
        let rhs = r23.mul(&r13).mul(&r12);
        ybe.record(|| fmt_triple(t), lhs.sub(&rhs).max_abs());

        let mut worst = Rational::zero();
        for (a, b) in [(k1, k2), (k1, k3), (k2, k3)] {
            let res = r.eval(a, b)?.mul(&r.eval_swapped(b, a)?).sub(&id).max_abs();
            if res > worst {
                worst = res;
            }
        }
        unit.record(|| fmt_triple(t), worst);
    }
    Ok(AxiomReport {
        yang_baxter: ybe.finish(),
        unitarity: unit.finish(),
    })
}

/// Which legs exist: sites `1..=sites`, plus leg 0 when `aux` is set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LegSpace {
    pub sites: usize,
    pub aux: bool,
}

impl LegSpace {
    pub fn total(&self) -> usize {
        self.sites + usize::from(self.aux)
    }

    pub fn position(&self, leg: usize) -> Result<usize> {
        if leg > self.sites || (leg == 0 && !self.aux) {
            return Err(Error::LegOutOfRange {
                leg,
                legs: self.total(),
            });
        }
        Ok(if self.aux { leg } else { leg - 1 })
    }
}

/// `M` acting on legs `(i, j)` (first factor on `i`), identity elsewhere.
pub fn embed_two_site(m: &Mat, n: usize, i: usize, j: usize, space: LegSpace) -> Result<Mat> {
    if i == j {
        return Err(Error::SameLeg(i));
    }
    let (pi, pj) = (space.position(i)?, space.position(j)?);
    Ok(embed(m, &[pi, pj], n, space.total()))
}

/// A rapidity slot of an [`rproduct`] call: `tuple[index]`, optionally negated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arg {
    pub index: usize,
    pub negate: bool,
}

impl Arg {
    pub fn at(index: usize) -> Self {
        Arg {
            index,
            negate: false,
        }
    }

    pub fn neg(index: usize) -> Self {
        Arg {
            index,
            negate: true,
        }
    }

    fn resolve(&self, tuple: &[Rational]) -> Result<Rational> {
        let k = tuple.get(self.index).ok_or_else(|| {
            Error::InvalidParameter(format!("rapidity index {} out of range", self.index))
        })?;
        Ok(if self.negate { -k.clone() } else { k.clone() })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LegFactor {
    pub legs: (usize, usize),
    pub args: (Arg, Arg),
    pub transpose: bool,
    pub inverse: bool,
}

impl LegFactor {
    pub fn r(i: usize, j: usize, a: Arg, b: Arg) -> Self {
        LegFactor {
            legs: (i, j),
            args: (a, b),
            transpose: false,
            inverse: false,
        }
    }
}

/// An ordered product of embedded R factors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LegProduct {
    pub space: LegSpace,
    pub factors: Vec<LegFactor>,
}

impl LegProduct {
    /// `B_ij = (∏←_{a=i+1}^{j-1} R_ia(k_i,k_a)) R_ij(k_i,k_j) (∏→_{b=i+1}^{j-1} R_bj(k_b,k_j))`
    /// on sites `1..=sites`, with rapidity tuple `(k_1, …)` indexed from 1
    /// (slot 0 is unused).
    pub fn braid(i: usize, j: usize, sites: usize) -> Result<Self> {
        if !(1 <= i && i < j && j <= sites) {
            return Err(Error::InvalidParameter(format!(
                "braid needs 1 <= i < j <= {sites}, got ({i}, {j})"
            )));
        }
        let mut factors: Vec<LegFactor> = (i + 1..j)
            .rev()
            .map(|a| LegFactor::r(i, a, Arg::at(i), Arg::at(a)))
            .collect();
        factors.push(LegFactor::r(i, j, Arg::at(i), Arg::at(j)));
        factors.extend((i + 1..j).map(|b| LegFactor::r(b, j, Arg::at(b), Arg::at(j))));
        Ok(LegProduct {
            space: LegSpace { sites, aux: false },
            factors,
        })
    }

    /// `∏→_{s=p+1}^{n} R_0s(-k_0, k_s)`; the identity when `p = n`.
    pub fn reflected_tail(p: usize, n_sites: usize) -> Result<Self> {
        if p > n_sites {
            return Err(Error::InvalidParameter(format!(
                "p = {p} exceeds n = {n_sites}"
            )));
        }
        let factors = (p + 1..=n_sites)
            .map(|s| LegFactor::r(0, s, Arg::neg(0), Arg::at(s)))
            .collect();
        Ok(LegProduct {
            space: LegSpace {
                sites: n_sites,
                aux: true,
            },
            factors,
        })
    }
}

/// Evaluates the ordered product at `rapidities` (indexed by leg number:
/// slot 0 is `k_0`).
pub fn rproduct(r: &RMatrix, spec: &LegProduct, rapidities: &[Rational]) -> Result<Mat> {
    let n = r.n;
    let mut acc = Mat::identity(crate::linalg::dim(n, spec.space.total()));
    for f in &spec.factors {
        let (a, b) = (f.args.0.resolve(rapidities)?, f.args.1.resolve(rapidities)?);
        let mut m = r.eval(&a, &b)?;
        if f.transpose {
            m = m.transpose();
        }
        if f.inverse {
            m = m.inverse()?;
        }
        acc = acc.mul(&embed_two_site(&m, n, f.legs.0, f.legs.1, spec.space)?);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat, sint};
    use num_complex::Complex;

    fn k(v: i64) -> Rational {
        int(v)
    }

    #[test]
    fn rational_entries_at_two_one() {
        let r = RMatrix::rational(2, int(1)).unwrap();
        let m = r.eval(&k(2), &k(1)).unwrap();
        // (I + iP)/(1 + i)
        assert_eq!(m.get(0, 0), &sint(1));
        assert_eq!(m.get(1, 1), &Complex::new(rat(1, 2), rat(-1, 2)));
        assert_eq!(m.get(2, 1), &Complex::new(rat(1, 2), rat(1, 2)));
    }

    #[test]
    fn rational_at_coincident_rapidities_is_permutation() {
        let r = RMatrix::rational(2, int(1)).unwrap();
        assert_eq!(r.eval(&k(3), &k(3)).unwrap(), Mat::swap(2));
    }

    #[test]
    fn rational_n3_matches_closed_form() {
        let r = RMatrix::rational(3, int(2)).unwrap();
        let u = sint(4);
        let ig = Complex::new(int(0), int(2));
        let oracle = Mat::identity(9)
            .scale(&u)
            .add(&Mat::swap(3).scale(&ig))
            .scale(&(Scalar::one() / (&u + &ig)));
        assert_eq!(r.eval(&k(5), &k(1)).unwrap(), oracle);
    }

    #[test]
    fn trigonometric_is_regular_and_unitary_as_matrix() {
        let r = RMatrix::trigonometric(int(2)).unwrap();
        assert_eq!(r.eval(&k(-2), &k(-2)).unwrap(), Mat::swap(2));
        let m = r.eval(&k(3), &k(-1)).unwrap();
        assert_eq!(m.adjoint().mul(&m), Mat::identity(4));
        assert_eq!(m.adjoint(), r.eval_swapped(&k(-1), &k(3)).unwrap());
    }

    #[test]
    fn builtins_pass_axioms_exactly() {
        let samples = [[k(3), k(2), k(1)], [k(-1), k(2), rat(1, 2)]];
        for r in [
            RMatrix::rational(2, int(1)).unwrap(),
            RMatrix::trigonometric(int(2)).unwrap(),
        ] {
            let rep = check_rmatrix_axioms(&r, &samples, Mode::Exact).unwrap();
            assert!(rep.pass(), "{}: {rep:?}", r.describe());
            assert!(rep.combined().max_residual.is_zero());
        }
    }

    #[test]
    fn perturbed_entry_breaks_unitarity() {
        let r = RMatrix::rational(2, int(1))
            .unwrap()
            .perturbed(0, 0, real(rat(1, 100)));
        let rep = check_rmatrix_axioms(&r, &[[k(3), k(2), k(1)]], Mode::Exact).unwrap();
        assert!(!rep.unitarity.pass);
        assert!(rep.unitarity.witness.is_some());
    }

    #[test]
    fn printed_normalization_fails_only_unitarity() {
        let r = RMatrix::printed_yangian(2, int(1)).unwrap();
        let rep = check_rmatrix_axioms(&r, &[[k(2), k(1), k(0)]], Mode::Exact).unwrap();
        assert!(rep.yang_baxter.pass);
        assert!(!rep.unitarity.pass);
        // R(u) R21(-u) = f(u) f(-u) (1 + g²/u²) I = f(u)³ I with f(u) = (u²+g²)/u².
        // The largest deviation among the pairs is at u = 1: f = 2, residual 7.
        assert_eq!(
            rep.unitarity.max_residual,
            crate::report::Residual::Exact(int(7))
        );
    }

    #[test]
    fn pole_is_reported() {
        let vars = ["k1", "k2"];
        let e = parse_ratfunc("1/(k1-k2)", &vars, false).unwrap();
        let r = RMatrix::custom(1, "pole", vec![e]).unwrap();
        assert!(matches!(r.eval(&k(1), &k(1)), Err(Error::Pole { .. })));
    }

    #[test]
    fn custom_json_round_trip_matches_builtin() {
        for r in [
            RMatrix::rational(2, int(1)).unwrap(),
            RMatrix::trigonometric(int(2)).unwrap(),
        ] {
            let text = r.to_custom_json().unwrap();
            let back = parse_custom_rmatrix(&text, false).unwrap();
            for (a, b) in [(2, 1), (-1, 3), (2, 2)] {
                assert_eq!(
                    back.eval(&k(a), &k(b)).unwrap(),
                    r.eval(&k(a), &k(b)).unwrap()
                );
            }
        }
    }

    #[test]
    fn custom_parse_errors() {
        let scalar = r#"{"N": 1, "vars": ["k1","k2"], "entries": [["1"]]}"#;
        let r = parse_custom_rmatrix(scalar, false).unwrap();
        assert_eq!(r.eval(&k(5), &k(-3)).unwrap(), Mat::identity(1));

        let bad_dim = r#"{"N": 2, "entries": [["1"]]}"#;
        assert!(matches!(
            parse_custom_rmatrix(bad_dim, false),
            Err(Error::Parse(ParseError {
                kind: crate::error::ParseErrorKind::DimensionMismatch,
                ..
            }))
        ));
        let bad_syntax = r#"{"N": 1, "entries": [["1 +"]]}"#;
        match parse_custom_rmatrix(bad_syntax, false) {
            Err(Error::Parse(e)) => assert_eq!((e.line, e.column), (1, 4)),
            other => panic!("{other:?}"),
        }
        let bad_json = "{\"N\": 1,\n \"entries\": [[1]]}";
        match parse_custom_rmatrix(bad_json, false) {
            Err(Error::Parse(e)) => assert_eq!(e.line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn embedding_rules() {
        let space = LegSpace {
            sites: 2,
            aux: false,
        };
        let p = Mat::swap(2);
        assert_eq!(embed_two_site(&p, 2, 1, 2, space).unwrap(), p);
        assert_eq!(
            embed_two_site(&Mat::identity(4), 2, 1, 2, space).unwrap(),
            Mat::identity(4)
        );
        assert!(matches!(
            embed_two_site(&p, 2, 1, 1, space),
            Err(Error::SameLeg(1))
        ));
        assert!(matches!(
            embed_two_site(&p, 2, 0, 1, space),
            Err(Error::LegOutOfRange { .. })
        ));
        assert!(matches!(
            embed_two_site(&p, 2, 1, 3, space),
            Err(Error::LegOutOfRange { .. })
        ));

        let r = RMatrix::rational(2, int(1)).unwrap();
        let m = r.eval(&k(2), &k(1)).unwrap();
        let s3 = LegSpace {
            sites: 3,
            aux: false,
        };
        let prod = embed_two_site(&m, 2, 1, 2, s3)
            .unwrap()
            .mul(&embed_two_site(&m.inverse().unwrap(), 2, 1, 2, s3).unwrap());
        assert_eq!(prod, Mat::identity(8));
    }

    #[test]
    fn braid_presets() {
        let r = RMatrix::rational(2, int(1)).unwrap();
        let ks = [int(0), k(3), k(2), k(1)];
        let b12 = rproduct(&r, &LegProduct::braid(1, 2, 3).unwrap(), &ks).unwrap();
        let s3 = LegSpace {
            sites: 3,
            aux: false,
        };
        assert_eq!(
            b12,
            embed_two_site(&r.eval(&k(3), &k(2)).unwrap(), 2, 1, 2, s3).unwrap()
        );

        let b13 = rproduct(&r, &LegProduct::braid(1, 3, 3).unwrap(), &ks).unwrap();
        let oracle = embed_two_site(&r.eval(&k(3), &k(2)).unwrap(), 2, 1, 2, s3)
            .unwrap()
            .mul(&embed_two_site(&r.eval(&k(3), &k(1)).unwrap(), 2, 1, 3, s3).unwrap())
            .mul(&embed_two_site(&r.eval(&k(2), &k(1)).unwrap(), 2, 2, 3, s3).unwrap());
        assert_eq!(b13, oracle);

        let tail = rproduct(
            &r,
            &LegProduct::reflected_tail(2, 2).unwrap(),
            &[k(1), k(2), k(3)],
        )
        .unwrap();
        assert_eq!(tail, Mat::identity(8));
    }
}
