//! Reflection matrices and the boundary algebra realized on a ZF Fock space.
//!
//! `b(k) = T(k) B(k) T(-k)^{-1}` carries one auxiliary leg. The boundary
//! generators are `ã(k) = ½(a(k) + b(k) a(-k))` and
//! `ã†(k) = ½(a†(k) + a†(-k) b(-k))`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseError, Result};
use crate::fock::{
    annihilator, creator, delta, fmt_tuple, kronecker, on_leg, pow, record_fock_adjoint, rfactor,
    zf_relations_with, Expr, FockState, Label, Leg, LegOperator, RapidityGrid, Zf,
};
use crate::linalg::{dim, embed, Mat};
use crate::ratfunc::{parse_ratfunc, RatExpr, Render};
use crate::report::{Mode, Report, ReportBuilder};
use crate::rmatrix::RMatrix;
use crate::scalar::{format_rational, half, i_unit, int, rat, real, Rational, Scalar};
use crate::symbolic::{normal_order, word_expr, Algebra, Gen, Realization, Symbol, Word};
use crate::vertex::{
    order_terms, series_expr, solve_vertex_series, t_matrix, VertexCoefficient, AUX,
};

const VAR: [&str; 1] = ["k"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReflectionKind {
    Constant,
    DiagonalRational,
    Custom,
}

/// An `N × N` matrix of rational functions of `k`.
#[derive(Clone, Debug)]
pub struct ReflectionMatrix {
    n: usize,
    kind: ReflectionKind,
    entries: Vec<RatExpr>,
    diagonal: Option<Vec<(Scalar, Scalar)>>,
}

fn has_var(e: &RatExpr) -> bool {
    match e {
        RatExpr::Const(_) => false,
        RatExpr::Var(_) => true,
        RatExpr::Neg(a) | RatExpr::Pow(a, _) => has_var(a),
        RatExpr::Add(a, b) | RatExpr::Sub(a, b) | RatExpr::Mul(a, b) | RatExpr::Div(a, b) => {
            has_var(a) || has_var(b)
        }
    }
}

impl ReflectionMatrix {
    pub fn constant(m: &Mat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidParameter(
                "reflection matrix must be square".into(),
            ));
        }
        Ok(ReflectionMatrix {
            n: m.rows(),
            kind: ReflectionKind::Constant,
            entries: m.data().iter().cloned().map(RatExpr::Const).collect(),
            diagonal: None,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(&Mat::identity(n)).expect("square")
    }

    /// `diag(ε_i (1 + t_i k)/(1 - t_i k))` from pairs `(ε_i, t_i)`.
    pub fn diagonal(params: &[(Scalar, Scalar)]) -> Self {
        let n = params.len();
        let k = || Box::new(RatExpr::Var(0));
        let one = || Box::new(RatExpr::Const(Scalar::one()));
        let mut entries = vec![RatExpr::Const(Scalar::zero()); n * n];
        for (i, (eps, t)) in params.iter().enumerate() {
            entries[i * n + i] = if t.is_zero() {
                RatExpr::Const(eps.clone())
            } else {
                let tk = || Box::new(RatExpr::Mul(Box::new(RatExpr::Const(t.clone())), k()));
                RatExpr::Mul(
                    Box::new(RatExpr::Const(eps.clone())),
                    Box::new(RatExpr::Div(
                        Box::new(RatExpr::Add(one(), tk())),
                        Box::new(RatExpr::Sub(one(), tk())),
                    )),
                )
            };
        }
        let kind = if params.iter().all(|(_, t)| t.is_zero()) {
            ReflectionKind::Constant
        } else {
            ReflectionKind::DiagonalRational
        };
        ReflectionMatrix {
            n,
            kind,
            entries,
            diagonal: Some(params.to_vec()),
        }
    }

    pub fn custom(n: usize, entries: Vec<RatExpr>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(ParseError::dimension(format!("N={n} requires {} entries", n * n)).into());
        }
        let kind = if entries.iter().any(has_var) {
            ReflectionKind::Custom
        } else {
            ReflectionKind::Constant
        };
        Ok(ReflectionMatrix {
            n,
            kind,
            entries,
            diagonal: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> ReflectionKind {
        self.kind
    }

    pub fn is_constant(&self) -> bool {
        !self.entries.iter().any(has_var)
    }

    /// `(ε_i, t_i)` for matrices built by [`ReflectionMatrix::diagonal`].
    pub fn diagonal_params(&self) -> Option<&[(Scalar, Scalar)]> {
        self.diagonal.as_deref()
    }

    pub fn eval(&self, k: &Rational) -> Result<Mat> {
        let vals = [k.clone()];
        let data = self
            .entries
            .iter()
            .map(|e| e.eval(&vals, &VAR))
            .collect::<Result<Vec<_>>>()?;
        Ok(Mat::from_vec(self.n, self.n, data))
    }

    /// `B0 = lim B(k)` for a constant matrix.
    pub fn constant_value(&self) -> Result<Mat> {
        if !self.is_constant() {
            return Err(Error::Unsupported(
                "the reflection matrix depends on k".into(),
            ));
        }
        self.eval(&Rational::zero())
    }

    pub fn to_json(&self) -> String {
        let entries: Vec<Vec<String>> = (0..self.n)
            .map(|r| {
                (0..self.n)
                    .map(|c| {
                        Render {
                            expr: &self.entries[r * self.n + c],
                            vars: &VAR,
                        }
                        .to_string()
                    })
                    .collect()
            })
            .collect();
        let doc = ReflectionDoc {
            n: self.n,
            kind: Some(self.kind),
            entries,
        };
        serde_json::to_string_pretty(&doc).expect("serializable")
    }
}

#[derive(Serialize, Deserialize)]
struct ReflectionDoc {
    #[serde(rename = "N")]
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<ReflectionKind>,
    entries: Vec<Vec<String>>,
}

/// Parses `{ "N": int, "kind": "constant" | "diagonal-rational" | "custom",
/// "entries": [[string,…],…] }` with entries rational functions of `k`.
pub fn parse_reflection(text: &str, allow_decimal: bool) -> Result<ReflectionMatrix> {
    let doc: ReflectionDoc = serde_json::from_str(text)
        .map_err(|e| ParseError::syntax(e.line(), e.column(), e.to_string()))?;
    let n = doc.n;
    if doc.entries.len() != n || doc.entries.iter().any(|r| r.len() != n) {
        return Err(ParseError::dimension(format!("N={n} requires a {n}x{n} entry array")).into());
    }
    let mut entries = Vec::with_capacity(n * n);
    for (r, row) in doc.entries.iter().enumerate() {
        for (c, s) in row.iter().enumerate() {
            let e = parse_ratfunc(s, &VAR, allow_decimal).map_err(|mut e| {
                e.line = r + 1;
                e.message = format!("entry [{r}][{c}]: {}", e.message);
                e
            })?;
            entries.push(e);
        }
    }
    let mut m = ReflectionMatrix::custom(n, entries)?;
    match doc.kind {
        Some(ReflectionKind::Constant) if !m.is_constant() => {
            return Err(Error::InvalidParameter(
                "kind `constant` but the entries depend on k".into(),
            ))
        }
        Some(ReflectionKind::DiagonalRational)
            if (0..n * n).any(|i| i / n != i % n && has_var(&m.entries[i])) =>
        {
            return Err(Error::InvalidParameter(
                "kind `diagonal-rational` but an off-diagonal entry depends on k".into(),
            ))
        }
        Some(kind) => m.kind = kind,
        None => {}
    }
    Ok(m)
}

fn two_site(m: &Mat, n: usize, first: bool) -> Mat {
    if first {
        m.kron(&Mat::identity(n))
    } else {
        Mat::identity(n).kron(m)
    }
}

/// `R_12(k1,k2) B_1(k1) R_21(k2,-k1) B_2(k2) − B_2(k2) R_12(k1,-k2) B_1(k1) R_21(-k2,-k1)`.
pub fn reflection_residual(
    r: &RMatrix,
    b: &ReflectionMatrix,
    k1: &Rational,
    k2: &Rational,
) -> Result<Rational> {
    let n = r.n();
    let b1 = two_site(&b.eval(k1)?, n, true);
    let b2 = two_site(&b.eval(k2)?, n, false);
    let lhs = r
        .eval(k1, k2)?
        .mul(&b1)
        .mul(&r.eval_swapped(k2, &-k1)?)
        .mul(&b2);
    let rhs = b2
        .mul(&r.eval(k1, &-k2)?)
        .mul(&b1)
        .mul(&r.eval_swapped(&-k2, &-k1)?);
    Ok(lhs.sub(&rhs).max_abs())
}

pub fn involution_residual(b: &ReflectionMatrix, k: &Rational) -> Result<Rational> {
    Ok(b.eval(k)?
        .mul(&b.eval(&-k)?)
        .sub(&Mat::identity(b.n()))
        .max_abs())
}

/// The reflection equation at each pair and `B(k) B(-k) = I` at each
/// rapidity occurring in a pair.
pub fn check_reflection_equation(
    r: &RMatrix,
    b: &ReflectionMatrix,
    pairs: &[(Rational, Rational)],
    mode: Mode,
) -> Result<Report> {
    if r.n() != b.n() {
        return Err(Error::InvalidParameter(format!(
            "R has N={} but B has N={}",
            r.n(),
            b.n()
        )));
    }
    let mut rep = ReportBuilder::new("reflection-equation", mode);
    for (k1, k2) in pairs {
        let res = reflection_residual(r, b, k1, k2)?;
        rep.record(
            || {
                format!(
                    "reflection equation (k1={}, k2={})",
                    format_rational(k1),
                    format_rational(k2)
                )
            },
            res,
        );
    }
    let mut ks: Vec<&Rational> = pairs.iter().flat_map(|(a, b)| [a, b]).collect();
    ks.sort();
    ks.dedup();
    for k in ks {
        let res = involution_residual(b, k)?;
        rep.record(|| format!("B({0}) B(-{0}) = I", format_rational(k)), res);
    }
    Ok(rep.finish())
}

/// Candidate values of `t` in the degree-1 ansatz:
/// `{0} ∪ {±1, ±2, ±1/2} × {1, i}`.
pub fn default_lattice() -> Vec<Scalar> {
    let mut out = vec![Scalar::zero()];
    for base in [int(1), int(2), rat(1, 2)] {
        for unit in [Scalar::one(), i_unit()] {
            let x = real(base.clone()) * &unit;
            out.push(x.clone());
            out.push(-x);
        }
    }
    out
}

fn sample_pairs(pts: &[(i64, i64, i64, i64)]) -> Vec<(Rational, Rational)> {
    pts.iter()
        .map(|&(a, b, c, d)| (rat(a, b), rat(c, d)))
        .collect()
}

/// Diagonal solutions of the reflection equation among the ansatz entries
/// `ε (1 + t k)/(1 - t k)`, `ε = ±1`: `t = 0` only for `degree = 0`, `t` from
/// [`default_lattice`] for `degree = 1`.
pub fn solve_diagonal_reflection(r: &RMatrix, degree: usize) -> Result<Vec<ReflectionMatrix>> {
    let lattice = if degree == 0 {
        vec![Scalar::zero()]
    } else {
        default_lattice()
    };
    let solve = sample_pairs(&[(3, 1, 5, 1), (5, 3, 7, 1), (7, 2, -4, 3)]);
    let verify = sample_pairs(&[(4, 1, 7, 3), (5, 2, 6, 1), (-9, 1, 2, 7), (11, 5, -13, 4)]);
    solve_diagonal_reflection_with(r, &lattice, &solve, &verify)
}

/// Searches `ε_i ∈ {±1}`, `t_i ∈ lattice`, keeping candidates that satisfy
/// the reflection equation exactly on `solve` and then on the disjoint
/// `verify` sample. Candidates with a pole on a sample are skipped.
pub fn solve_diagonal_reflection_with(
    r: &RMatrix,
    lattice: &[Scalar],
    solve: &[(Rational, Rational)],
    verify: &[(Rational, Rational)],
) -> Result<Vec<ReflectionMatrix>> {
    if solve.iter().any(|p| verify.contains(p)) {
        return Err(Error::InvalidParameter(
            "solving and verification samples overlap".into(),
        ));
    }
    let n = r.n();
    let mut choices = Vec::new();
    for t in lattice {
        for eps in [Scalar::one(), -Scalar::one()] {
            choices.push((eps, t.clone()));
        }
    }
    let passes = |b: &ReflectionMatrix, pairs: &[(Rational, Rational)]| -> Result<bool> {
        for (k1, k2) in pairs {
            let ok = reflection_residual(r, b, k1, k2).map(|x| x.is_zero());
            let inv = involution_residual(b, k1)
                .and_then(|x| Ok(x.is_zero() && involution_residual(b, k2)?.is_zero()));
            match (ok, inv) {
                (Ok(true), Ok(true)) => {}
                (Err(Error::Pole { .. }), _) | (_, Err(Error::Pole { .. })) => return Ok(false),
                (Err(e), _) | (_, Err(e)) => return Err(e),
                _ => return Ok(false),
            }
        }
        Ok(true)
    };
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let params: Vec<(Scalar, Scalar)> = idx.iter().map(|&i| choices[i].clone()).collect();
        let b = ReflectionMatrix::diagonal(&params);
        if passes(&b, solve)? && passes(&b, verify)? {
            out.push(b);
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(out);
            }
            idx[pos] += 1;
            if idx[pos] < choices.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

type BCache = Arc<Mutex<HashMap<(Rational, Vec<Rational>), Mat>>>;

/// `b(k)` realized on a ZF Fock space.
#[derive(Clone)]
pub struct Boundary {
    zf: Zf,
    refl: ReflectionMatrix,
    fixed: Option<Mat>,
    cache: BCache,
}

impl fmt::Debug for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Boundary")
            .field("zf", &self.zf)
            .field("refl", &self.refl)
            .field("fixed", &self.fixed)
            .finish()
    }
}

impl Boundary {
    pub fn new(zf: Zf, refl: ReflectionMatrix) -> Result<Self> {
        zf.grid().require_negation_closed()?;
        if zf.n() != refl.n() {
            return Err(Error::InvalidParameter(format!(
                "R has N={} but B has N={}",
                zf.n(),
                refl.n()
            )));
        }
        Ok(Boundary {
            zf,
            refl,
            fixed: None,
            cache: Arc::default(),
        })
    }

    /// A realization where `b(k)` acts as the constant `m` on the auxiliary
    /// leg alone. It does not satisfy the boundary relations unless `R` is
    /// trivial; used as a negative control.
    pub fn with_fixed_b(zf: Zf, m: Mat) -> Result<Self> {
        let refl = ReflectionMatrix::constant(&m)?;
        let mut bd = Boundary::new(zf, refl)?;
        bd.fixed = Some(m);
        Ok(bd)
    }

    pub fn zf(&self) -> &Zf {
        &self.zf
    }

    pub fn reflection(&self) -> &ReflectionMatrix {
        &self.refl
    }

    /// `b(k)` on `aux ⊗ F(sector)`: `M(k) (B(k) ⊗ I) M(-k)^{-1}` with `M` the
    /// vertex operator's sector matrix.
    pub fn b_matrix(&self, k: &Rational, sector: &[Rational]) -> Result<Mat> {
        let key = (k.clone(), sector.to_vec());
        if let Some(m) = self.cache.lock().unwrap().get(&key) {
            return Ok(m.clone());
        }
        let sd = dim(self.zf.n(), sector.len());
        let m = match &self.fixed {
            Some(b0) => b0.kron(&Mat::identity(sd)),
            None => {
                let r = self.zf.r();
                let bk = self.refl.eval(k)?.kron(&Mat::identity(sd));
                t_matrix(r, k, sector)?
                    .mul(&bk)
                    .mul(&t_matrix(r, &-k, sector)?.inverse()?)
            }
        };
        self.cache.lock().unwrap().insert(key, m.clone());
        Ok(m)
    }

    /// `b(k)` with its row on `ket` and its column on `bra`.
    pub fn b(&self, ket: Label, bra: Label, k: &Rational) -> Expr {
        Expr::op(BOp {
            ket,
            bra,
            k: k.clone(),
            boundary: self.clone(),
        })
    }

    pub fn b1(&self, label: Label, k: &Rational) -> Expr {
        self.b(label, label, k)
    }

    /// `ã(k) = ½(a(k) + b(k) a(-k))`.
    pub fn a_tilde(&self, label: Label, k: &Rational) -> Expr {
        (annihilator(label, k) + self.b1(label, k) * annihilator(label, &-k)).scaled(&half())
    }

    /// `ã†(k) = ½(a†(k) + a†(-k) b(-k))`.
    pub fn ad_tilde(&self, label: Label, k: &Rational) -> Expr {
        (creator(label, k) + creator(label, &-k) * self.b1(label, &-k)).scaled(&half())
    }

    /// `ρ_B(a(k)) = b(k) a(-k)`.
    pub fn rho_a(&self, label: Label, k: &Rational) -> Expr {
        self.b1(label, k) * annihilator(label, &-k)
    }

    /// `ρ_B(a†(k)) = a†(-k) b(-k)`.
    pub fn rho_ad(&self, label: Label, k: &Rational) -> Expr {
        creator(label, &-k) * self.b1(label, &-k)
    }

    /// `b(k) s`, attaching the auxiliary leg [`AUX`].
    pub fn apply_b(&self, k: &Rational, s: &FockState) -> Result<FockState> {
        if s.legs().iter().any(|l| l.label == AUX) {
            return Err(Error::LegConflict(format!(
                "state already has an open leg {AUX}"
            )));
        }
        self.zf.apply(&self.b1(AUX, k), s)
    }

    /// Component `α` of `ã(k) s` or `ã†(k) s`.
    pub fn apply_generator(
        &self,
        gen: Gen,
        k: &Rational,
        alpha: usize,
        s: &FockState,
    ) -> Result<FockState> {
        self.zf.grid().require(k)?;
        if alpha >= self.zf.n() {
            return Err(Error::InvalidParameter(format!(
                "color {alpha} out of range for N = {}",
                self.zf.n()
            )));
        }
        const GEN: Label = 1 << 20;
        let (e, leg) = match gen {
            Gen::A => (self.a_tilde(GEN, k), Leg::ket(GEN)),
            Gen::Ad => (self.ad_tilde(GEN, k), Leg::bra(GEN)),
            Gen::B => return Err(Error::InvalidParameter("use apply_b for b".into())),
        };
        let out = self.zf.apply(&e, s)?;
        let n = self.zf.n();
        let pick = Mat::from_fn(1, n, |_, c| {
            if c == alpha {
                Scalar::one()
            } else {
                Scalar::zero()
            }
        });
        out.contract(&[leg], &pick, &[])
    }

    /// `ρ_B` on a word in `a`, `a†`, `b` with site labels `1..=L`.
    pub fn apply_rho(&self, w: &Word) -> Result<Expr> {
        word_expr(w, &RhoB(self))
    }
}

impl Realization for Boundary {
    fn zf(&self) -> &Zf {
        &self.zf
    }

    fn symbol(&self, s: &Symbol, label: Label) -> Result<Expr> {
        self.zf.grid().require(&s.k)?;
        Ok(match s.gen {
            Gen::A => self.a_tilde(label, &s.k),
            Gen::Ad => self.ad_tilde(label, &s.k),
            Gen::B => self.b1(label, &s.k),
        })
    }
}

/// Symbols realized through `ρ_B`: `a ↦ b a(-·)`, `a† ↦ a†(-·) b(-·)`, `b ↦ b`.
pub struct RhoB<'a>(pub &'a Boundary);

impl Realization for RhoB<'_> {
    fn zf(&self) -> &Zf {
        &self.0.zf
    }

    fn symbol(&self, s: &Symbol, label: Label) -> Result<Expr> {
        self.0.zf.grid().require(&s.k)?;
        Ok(match s.gen {
            Gen::A => self.0.rho_a(label, &s.k),
            Gen::Ad => self.0.rho_ad(label, &s.k),
            Gen::B => self.0.b1(label, &s.k),
        })
    }
}

#[derive(Debug)]
struct BOp {
    ket: Label,
    bra: Label,
    k: Rational,
    boundary: Boundary,
}

impl LegOperator for BOp {
    fn kets(&self) -> Vec<Label> {
        vec![self.ket]
    }

    fn bras(&self) -> Vec<Label> {
        vec![self.bra]
    }

    fn act(
        &self,
        _zf: &Zf,
        sector: &[Rational],
        input: &[Scalar],
    ) -> Result<Vec<(Vec<Rational>, Vec<Scalar>)>> {
        Ok(vec![(
            sector.to_vec(),
            self.boundary.b_matrix(&self.k, sector)?.mul_vec(input),
        )])
    }

    /// `b(k)† = b(-k)`, valid for unitary `B`.
    fn adjoint(&self) -> Result<Arc<dyn LegOperator>> {
        Ok(Arc::new(BOp {
            ket: self.bra,
            bra: self.ket,
            k: -&self.k,
            boundary: self.boundary.clone(),
        }))
    }

    fn name(&self) -> String {
        if self.ket == self.bra {
            format!("b_{}({})", self.ket, format_rational(&self.k))
        } else {
            format!("b_{}{}({})", self.ket, self.bra, format_rational(&self.k))
        }
    }
}

/// The boundary exchange relations at one rapidity pair, as
/// `(name, lhs, rhs)`.
pub fn boundary_relations(
    bd: &Boundary,
    k1: &Rational,
    k2: &Rational,
) -> Vec<(String, Expr, Expr)> {
    let n = bd.zf.n();
    let at = |tag: &str| {
        format!(
            "{tag} (k1={}, k2={})",
            format_rational(k1),
            format_rational(k2)
        )
    };
    let a = |l, k: &Rational| bd.a_tilde(l, k);
    let ad = |l, k: &Rational| bd.ad_tilde(l, k);
    let b = |l, k: &Rational| bd.b1(l, k);
    let (m1, m2) = (-k1, -k2);
    vec![
        (
            at("a a"),
            a(1, k1) * a(2, k2),
            rfactor(2, 1, k2, k1) * a(2, k2) * a(1, k1),
        ),
        (
            at("ad ad"),
            ad(1, k1) * ad(2, k2),
            ad(2, k2) * ad(1, k1) * rfactor(2, 1, k2, k1),
        ),
        (
            at("a ad"),
            a(1, k1) * ad(2, k2),
            ad(2, k2) * rfactor(1, 2, k1, k2) * a(1, k1)
                + delta(n, 1, 2).scaled(&(half() * kronecker(k1, k2)))
                + bd.b(1, 2, k1).scaled(&(half() * kronecker(k1, &m2))),
        ),
        (
            at("a b"),
            a(1, k1) * b(2, k2),
            rfactor(2, 1, k2, k1) * b(2, k2) * rfactor(1, 2, k1, &m2) * a(1, k1),
        ),
        (
            at("b ad"),
            b(1, k1) * ad(2, k2),
            ad(2, k2) * rfactor(1, 2, k1, k2) * b(1, k1) * rfactor(2, 1, k2, &m1),
        ),
        (
            at("b b"),
            rfactor(1, 2, k1, k2) * b(1, k1) * rfactor(2, 1, k2, &m1) * b(2, k2),
            b(2, k2) * rfactor(1, 2, k1, &m2) * b(1, k1) * rfactor(2, 1, &m2, &m1),
        ),
    ]
}

/// Every boundary relation and its `†`-image at every grid pair,
/// `b(k) b(-k) = 1`, `ρ(x†) = ρ(x)†` for the generators, and adjointness of
/// `b(k)`, `b(-k)` and of `ã(k)`, `ã†(k)` in the Fock inner product.
pub fn check_boundary_relations(bd: &Boundary, max_p: usize, mode: Mode) -> Result<Report> {
    let zf = &bd.zf;
    let n = zf.n();
    let mut rep = ReportBuilder::new("boundary-relations", mode);
    let pts = zf.grid().points().to_vec();
    for k1 in &pts {
        for k2 in &pts {
            for (name, lhs, rhs) in boundary_relations(bd, k1, k2) {
                zf.record_identity(&mut rep, &name, &lhs, &rhs, max_p)?;
                zf.record_identity(
                    &mut rep,
                    &format!("adjoint of {name}"),
                    &lhs.adjoint()?,
                    &rhs.adjoint()?,
                    max_p,
                )?;
            }
        }
    }
    let one = on_leg(1, Mat::identity(n), "1");
    for k in &pts {
        let m = -k;
        let at = |tag: &str| format!("{tag} (k={})", format_rational(k));
        zf.record_identity(
            &mut rep,
            &at("b(k) b(-k)"),
            &(bd.b1(1, k) * bd.b1(1, &m)),
            &one,
            max_p,
        )?;
        // ρ(x†) = ρ(x)† for x = ã(k), ã†(k), b(k)
        let rho_a = bd.b1(1, k) * bd.a_tilde(1, &m);
        let rho_ad = bd.ad_tilde(1, &m) * bd.b1(1, &m);
        zf.record_identity(
            &mut rep,
            &at("rho of a adjoint"),
            &rho_ad,
            &rho_a.adjoint()?,
            max_p,
        )?;
        zf.record_identity(
            &mut rep,
            &at("rho of ad adjoint"),
            &rho_a,
            &rho_ad.adjoint()?,
            max_p,
        )?;
        zf.record_identity(
            &mut rep,
            &at("rho of b adjoint"),
            &bd.b1(1, &m),
            &bd.b1(1, k).adjoint()?,
            max_p,
        )?;
        let b = bd.b1(1, k);
        record_fock_adjoint(zf, &mut rep, &at("b adjoint"), &b, &b.adjoint()?, max_p)?;
        let a = bd.a_tilde(1, k);
        record_fock_adjoint(
            zf,
            &mut rep,
            &at("a tilde adjoint"),
            &a,
            &bd.ad_tilde(1, k),
            max_p,
        )?;
    }
    Ok(rep.finish())
}

/// `ã(k) = b(k) ã(-k)` and `ã†(k) = ã†(-k) b(-k)` at every grid point.
pub fn check_rho_identity(bd: &Boundary, max_p: usize, mode: Mode) -> Result<Report> {
    let zf = &bd.zf;
    let mut rep = ReportBuilder::new("rho-identity", mode);
    for k in zf.grid().points() {
        let m = -k;
        let at = |tag: &str| format!("{tag} (k={})", format_rational(k));
        zf.record_identity(
            &mut rep,
            &at("a = b a"),
            &bd.a_tilde(1, k),
            &(bd.b1(1, k) * bd.a_tilde(1, &m)),
            max_p,
        )?;
        zf.record_identity(
            &mut rep,
            &at("ad = ad b"),
            &bd.ad_tilde(1, k),
            &(bd.ad_tilde(1, &m) * bd.b1(1, &m)),
            max_p,
        )?;
    }
    Ok(rep.finish())
}

/// `ρ_B` preserves the exchange relations, squares to the identity on the
/// generators, and maps the normal form of each word in `words` to the
/// image of the word.
pub fn check_rho_automorphism(
    bd: &Boundary,
    words: &[Word],
    max_p: usize,
    mode: Mode,
) -> Result<Report> {
    let zf = &bd.zf;
    let n = zf.n();
    let mut rep = ReportBuilder::new("rho-automorphism", mode);
    let pts = zf.grid().points().to_vec();
    for k1 in &pts {
        for k2 in &pts {
            for (name, lhs, rhs) in
                zf_relations_with(n, k1, k2, &|l, k| bd.rho_a(l, k), &|l, k| bd.rho_ad(l, k))
            {
                zf.record_identity(
                    &mut rep,
                    &format!("rho_B image of {name}"),
                    &lhs,
                    &rhs,
                    max_p,
                )?;
            }
        }
    }
    for k in &pts {
        let m = -k;
        let at = |tag: &str| format!("{tag} (k={})", format_rational(k));
        let twice_a = bd.b1(1, k) * bd.rho_a(1, &m);
        zf.record_identity(
            &mut rep,
            &at("rho_B rho_B a"),
            &twice_a,
            &annihilator(1, k),
            max_p,
        )?;
        let twice_ad = bd.rho_ad(1, &m) * bd.b1(1, &m);
        zf.record_identity(
            &mut rep,
            &at("rho_B rho_B ad"),
            &twice_ad,
            &creator(1, k),
            max_p,
        )?;
    }
    for w in words {
        let nf = normal_order(w, zf.r(), Algebra::Zf)?;
        let image = bd.apply_rho(w)?;
        for sector in zf.grid().sectors(max_p) {
            let probe = FockState::probe(n, &sector);
            let res = nf
                .apply(&RhoB(bd), &probe)?
                .residual(&zf.apply(&image, &probe)?)?;
            rep.record(
                || {
                    format!(
                        "rho_B of normal form of {w} on sector {}",
                        fmt_tuple(&sector)
                    )
                },
                res,
            );
        }
    }
    Ok(rep.finish())
}

/// `Ĥ_n = ½ Σ_{k ∈ grid} k^n ã†(k) ã(k)`.
pub fn h_hat(bd: &Boundary, order: u32) -> Expr {
    let mut e = Expr::zero();
    for k in bd.zf.grid().points() {
        let w = real(pow(k, order)) * half();
        e = e + (bd.ad_tilde(1, k) * bd.a_tilde(1, k)).scaled(&w);
    }
    e
}

/// `H̃_n = Σ_{k > 0} k^n ã†(k) ã(k)`.
pub fn h_tilde(bd: &Boundary, order: u32) -> Expr {
    let mut e = Expr::zero();
    for k in bd.zf.grid().positive() {
        e = e + (bd.ad_tilde(1, &k) * bd.a_tilde(1, &k)).scaled(&real(pow(&k, order)));
    }
    e
}

fn bulk(bd: &Boundary, order: u32) -> Expr {
    let mut e = Expr::zero();
    for k in bd.zf.grid().points() {
        e = e + (creator(1, k) * annihilator(1, k)).scaled(&real(pow(k, order)));
    }
    e
}

/// `Σ_{k ∈ grid} w(k) a†(k) b(k) a(s k)`.
fn boundary_term(bd: &Boundary, weight: &dyn Fn(&Rational) -> Scalar, flip: bool) -> Expr {
    let mut e = Expr::zero();
    for k in bd.zf.grid().points() {
        let src = if flip { -k } else { k.clone() };
        e = e + (creator(1, k) * bd.b1(1, k) * annihilator(1, &src)).scaled(&weight(k));
    }
    e
}

/// Hierarchy with boundary, for `Ĥ_{2m+1}` (`m ≤ max_n`) and `Ĥ_{2m}`
/// (`1 ≤ m ≤ max_n`):
/// odd orders vanish; `Ĥ_{2m} = H̃_{2m}`;
/// `H̃_{2m} = ¼ H_{2m} + ¼ Σ_{k} k^{2m} a†(k) b(k) a(-k)`;
/// `[b(k), H̃_{2m}] = 0`; `[H_{2m}, ã†(k)] = k^{2m} ã†(k)`;
/// `b(k) Ω = B(k) Ω`, with a two-particle state on which `b(k)` differs
/// from `B(k) ⊗ 1`.
pub fn check_hierarchy(bd: &Boundary, max_n: u32, max_p: usize, mode: Mode) -> Result<Report> {
    let zf = &bd.zf;
    let n = zf.n();
    let mut rep = ReportBuilder::new("boundary-hierarchy", mode);
    let zero = Expr::zero();
    for m in 0..=max_n {
        let order = 2 * m + 1;
        zf.record_identity(
            &mut rep,
            &format!("H^_{order} = 0"),
            &h_hat(bd, order),
            &zero,
            max_p,
        )?;
    }
    let quarter = real(rat(1, 4));
    let mut printed_worst = Rational::zero();
    for m in 1..=max_n {
        let order = 2 * m;
        let ht = h_tilde(bd, order);
        zf.record_identity(
            &mut rep,
            &format!("H^_{order} = H~_{order}"),
            &h_hat(bd, order),
            &ht,
            max_p,
        )?;
        let split = bulk(bd, order).scaled(&quarter)
            + boundary_term(bd, &|k| real(pow(k, order)) * &quarter, true);
        zf.record_identity(
            &mut rep,
            &format!("H~_{order} bulk plus boundary"),
            &ht,
            &split,
            max_p,
        )?;
        let printed = bulk(bd, order) + boundary_term(bd, &|_| Scalar::one(), false);
        for sector in zf.grid().sectors(max_p) {
            let probe = FockState::probe(n, &sector);
            let res = zf
                .apply(&ht, &probe)?
                .residual(&zf.apply(&printed, &probe)?)?;
            printed_worst = printed_worst.max(res);
        }
        for k in zf.grid().points() {
            let at = |tag: &str| format!("{tag} (k={}, order {order})", format_rational(k));
            let b = bd.b1(2, k);
            zf.record_identity(
                &mut rep,
                &at("[b, H~]"),
                &(b.clone() * ht.clone()),
                &(ht.clone() * b),
                max_p,
            )?;
            let h = bulk(bd, order);
            let ad = bd.ad_tilde(2, k);
            let comm = h.clone() * ad.clone() - ad.clone() * h;
            zf.record_identity(
                &mut rep,
                &at("[H, ad~]"),
                &comm,
                &ad.scaled(&real(pow(k, order))),
                max_p,
            )?;
        }
    }
    if max_n >= 1 {
        rep.note(format!(
            "printed split H~ = H + Σ a†(k) b(k) a(k): max residual {}",
            format_rational(&printed_worst)
        ));
    }
    for k in zf.grid().points() {
        let res = bd.b_matrix(k, &[])?.sub(&bd.refl.eval(k)?).max_abs();
        rep.record(|| format!("b({}) on the vacuum", format_rational(k)), res);
    }
    let witness = symmetry_breaking_witness(bd)?;
    match &witness {
        Some(w) => rep.note(format!("symmetry breaking: {w}")),
        None => rep.note("symmetry breaking: b(k) acts as B(k) on every two-particle sector"),
    }
    rep.record(
        || "symmetry-breaking witness on two-particle sectors".into(),
        if witness.is_some() {
            Rational::zero()
        } else {
            Rational::one()
        },
    );
    Ok(rep.finish())
}

/// A two-particle sector and rapidity where `b(k) ≠ B(k) ⊗ 1`.
pub fn symmetry_breaking_witness(bd: &Boundary) -> Result<Option<String>> {
    let n = bd.zf.n();
    for sector in bd.zf.grid().sectors(2).into_iter().filter(|s| s.len() == 2) {
        for k in bd.zf.grid().points() {
            let diff = bd
                .b_matrix(k, &sector)?
                .sub(&bd.refl.eval(k)?.kron(&Mat::identity(n * n)))
                .max_abs();
            if !diff.is_zero() {
                return Ok(Some(format!(
                    "b({}) on sector {} differs from B ⊗ 1 by {}",
                    format_rational(k),
                    fmt_tuple(&sector),
                    format_rational(&diff)
                )));
            }
        }
    }
    Ok(None)
}

/// `b(k)` on `F(σ)` with `σ = σ_p σ_q` equals
/// `Σ_{e,g} T^{ae}(k) T^{-1}(-k)^{gb} ⊗ b^{eg}(k)` over `F(σ_p) ⊗ F(σ_q)`;
/// also `T^{-1}(k)^{ab} = Σ_e T^{-1}(k)^{eb} ⊗ T^{-1}(k)^{ae}`.
pub fn check_coideal(
    bd: &Boundary,
    ks: &[Rational],
    p: usize,
    q: usize,
    mode: Mode,
) -> Result<Report> {
    let zf = &bd.zf;
    let n = zf.n();
    let r = zf.r();
    let mut rep = ReportBuilder::new("coideal", mode);
    let total = p + q;
    if total > 3 {
        return Err(Error::Unsupported(format!(
            "coideal check on {total} particles"
        )));
    }
    let block = |m: &Mat, sd: usize, a: usize, b: usize| {
        Mat::from_fn(sd, sd, |i, j| m.get(a * sd + i, b * sd + j).clone())
    };
    for k in ks {
        for sector in zf
            .grid()
            .sectors(total)
            .into_iter()
            .filter(|s| s.len() == total)
        {
            let (left, right) = sector.split_at(p);
            let (dp, dq) = (dim(n, p), dim(n, q));
            let d = dp * dq;
            let full = bd.b_matrix(k, &sector)?;
            let tp = t_matrix(r, k, left)?;
            let tinv_p = t_matrix(r, &-k, left)?.inverse()?;
            let bq = bd.b_matrix(k, right)?;
            let mut worst = Rational::zero();
            for a in 0..n {
                for b in 0..n {
                    let mut rhs = Mat::zeros(d, d);
                    for e in 0..n {
                        for g in 0..n {
                            let first = block(&tp, dp, a, e).mul(&block(&tinv_p, dp, g, b));
                            rhs = rhs.add(&first.kron(&block(&bq, dq, e, g)));
                        }
                    }
                    worst = worst.max(block(&full, d, a, b).sub(&rhs).max_abs());
                }
            }
            rep.record(
                || {
                    format!(
                        "coproduct of b({}) on {}",
                        format_rational(k),
                        fmt_tuple(&sector)
                    )
                },
                worst,
            );

            let inv = t_matrix(r, k, &sector)?.inverse()?;
            let ip = t_matrix(r, k, left)?.inverse()?;
            let iq = t_matrix(r, k, right)?.inverse()?;
            let mut worst = Rational::zero();
            for a in 0..n {
                for b in 0..n {
                    let mut rhs = Mat::zeros(d, d);
                    for e in 0..n {
                        rhs = rhs.add(&block(&ip, dp, e, b).kron(&block(&iq, dq, a, e)));
                    }
                    worst = worst.max(block(&inv, d, a, b).sub(&rhs).max_abs());
                }
            }
            rep.record(
                || {
                    format!(
                        "coproduct of Tinv({}) on {}",
                        format_rational(k),
                        fmt_tuple(&sector)
                    )
                },
                worst,
            );
        }
    }
    Ok(rep.finish())
}

/// Vertex coefficients at `±k0` for the β formula.
pub struct BetaInputs {
    pub b0: Mat,
    pub t: Vec<VertexCoefficient>,
}

impl BetaInputs {
    pub fn solve(bd: &Boundary, n: usize, k0s: &[Rational]) -> Result<Self> {
        if bd.fixed.is_some() {
            return Err(Error::Unsupported(
                "β needs the vertex realization of b".into(),
            ));
        }
        let b0 = bd.refl.constant_value()?;
        let mut all: Vec<Rational> = k0s.iter().flat_map(|k| [k.clone(), -k]).collect();
        all.sort();
        all.dedup();
        Ok(BetaInputs {
            b0,
            t: solve_vertex_series(&bd.zf, n, &all)?,
        })
    }

    fn t(&self, m: usize, k0: &Rational, q: &[Rational]) -> Result<&Mat> {
        self.t.get(m - 1).and_then(|c| c.get(k0, q)).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "missing T^({m}) at k0={}, {}",
                format_rational(k0),
                fmt_tuple(q)
            ))
        })
    }
}

/// The displayed closed form for `m = |q| ≤ 2`:
/// `T^{(m)} B0 + B0 T'^{(m)†} + (m-1) Σ_p C(m-2,p-1) T^{(m-p)}_{0,p+1..m} B0 T'^{(p)†}_{0,1..p} R'_p`
/// with `'` meaning `-k0` and `R'_p = Π_{s>p} R_0s(-k0, q_s)`. It omits the
/// contraction terms of `T(k0) B0 T(-k0)†`; see [`beta_formula`].
pub fn beta_printed(
    r: &RMatrix,
    inputs: &BetaInputs,
    k0: &Rational,
    q: &[Rational],
) -> Result<Mat> {
    let n = r.n();
    let m = q.len();
    let legs = m + 1;
    let mk0 = -k0;
    let b0 = embed(&inputs.b0, &[0], n, legs);
    let mut beta = inputs
        .t(m, k0, q)?
        .mul(&b0)
        .add(&b0.mul(&inputs.t(m, &mk0, q)?.adjoint()));
    if m == 2 {
        // p = 1: T^{(1)}_{02}(k0; q2) B0 T'^{(1)†}_{01}(q1) R_02(-k0, q2)
        let t02 = embed(inputs.t(1, k0, &q[1..])?, &[0, 2], n, 3);
        let t01 = embed(&inputs.t(1, &mk0, &q[..1])?.adjoint(), &[0, 1], n, 3);
        let r02 = embed(&r.eval(&mk0, &q[1])?, &[0, 2], n, 3);
        beta = beta.add(&t02.mul(&b0).mul(&t01).mul(&r02));
    } else if m > 2 {
        return Err(Error::Unsupported(format!("β of order {m}")));
    }
    Ok(beta)
}

/// `β^{(m)}(k0; q)` for `m = |q| ≤ 2`, from normal ordering
/// `T(k0) B0 T(-k0)†` with `a a† = a† R a + δ`. Writing `X = T(k0)`,
/// `Y = T(-k0)†`, `q = (q1, q2)`:
///
/// `β^{(1)} = X1 B0 + B0 Y1 - X1 B0 Y1`
///
/// `β^{(2)} = X2 B0 + B0 Y2`
/// `+ R_21(q2,q1) X1_01(q1) B0 R_12(q1,q2) Y1_02(q2)`
/// `- X2 B0 Y1_02(q2) - X2 B0 R_21(q2,q1) Y1_01(q1) R_12(q1,q2)`
/// `- X1_02(q2) B0 Y2 - R_21(q2,q1) X1_01(q1) B0 R_12(q1,q2) Y2`
/// `+ X2 B0 Y2 + X2 B0 P_12 R_12(q2,q1) Y2(q2,q1) P_12 R_12(q1,q2)`.
pub fn beta_formula(
    r: &RMatrix,
    inputs: &BetaInputs,
    k0: &Rational,
    q: &[Rational],
) -> Result<Mat> {
    let n = r.n();
    let m = q.len();
    let mk0 = -k0;
    let b0 = embed(&inputs.b0, &[0], n, m + 1);
    match m {
        1 => {
            let x = inputs.t(1, k0, q)?;
            let y = inputs.t(1, &mk0, q)?.adjoint();
            Ok(x.mul(&b0).add(&b0.mul(&y)).sub(&x.mul(&b0).mul(&y)))
        }
        2 => {
            let (q1, q2) = (&q[0], &q[1]);
            let on = |mat: &Mat, legs: &[usize]| embed(mat, legs, n, 3);
            let x2 = inputs.t(2, k0, q)?;
            let y2 = inputs.t(2, &mk0, q)?.adjoint();
            let y2_swapped = inputs.t(2, &mk0, &[q2.clone(), q1.clone()])?.adjoint();
            let x1_1 = on(inputs.t(1, k0, &q[..1])?, &[0, 1]);
            let x1_2 = on(inputs.t(1, k0, &q[1..])?, &[0, 2]);
            let y1_1 = on(&inputs.t(1, &mk0, &q[..1])?.adjoint(), &[0, 1]);
            let y1_2 = on(&inputs.t(1, &mk0, &q[1..])?.adjoint(), &[0, 2]);
            let r12 = on(&r.eval(q1, q2)?, &[1, 2]);
            let r21 = on(&r.eval_swapped(q2, q1)?, &[1, 2]);
            let p12 = on(&Mat::swap(n), &[1, 2]);
            let pr = p12.mul(&on(&r.eval(q2, q1)?, &[1, 2]));
            let x2b = x2.mul(&b0);
            let lead = r21.mul(&x1_1).mul(&b0).mul(&r12);
            let beta = x2b
                .add(&b0.mul(&y2))
                .add(&lead.mul(&y1_2))
                .sub(&x2b.mul(&y1_2))
                .sub(&x2b.mul(&r21).mul(&y1_1).mul(&r12))
                .sub(&x1_2.mul(&b0).mul(&y2))
                .sub(&lead.mul(&y2))
                .add(&x2b.mul(&y2))
                .add(&x2b.mul(&pr).mul(&y2_swapped).mul(&p12).mul(&r12));
            Ok(beta)
        }
        _ => Err(Error::Unsupported(format!("β of order {m}"))),
    }
}

/// `β^{(1)}, …, β^{(n)}` at each `k0` over every stored tuple.
pub fn compute_beta(bd: &Boundary, n: usize, k0s: &[Rational]) -> Result<Vec<VertexCoefficient>> {
    let inputs = BetaInputs::solve(bd, n, k0s)?;
    let mut out = Vec::new();
    for m in 1..=n {
        let mut c = VertexCoefficient {
            order: m,
            n: bd.zf.n(),
            values: BTreeMap::new(),
        };
        for (k0, q) in inputs.t[m - 1].values.keys() {
            if k0s.contains(k0) {
                c.values.insert(
                    (k0.clone(), q.clone()),
                    beta_formula(bd.zf.r(), &inputs, k0, q)?,
                );
            }
        }
        out.push(c);
    }
    Ok(out)
}

/// The series `B0 + Σ_m (-1)^m/(m-1)! a†_{m…1} β^{(m)} a_{1…m}` on [`AUX`].
pub fn beta_series(bd: &Boundary, b0: &Mat, orders: &[VertexCoefficient], k0: &Rational) -> Expr {
    let n = bd.zf.n();
    on_leg(AUX, b0.clone(), "B0") + series_expr(n, orders, k0) - on_leg(AUX, Mat::identity(n), "1")
}

/// Compares [`beta_formula`] with kernels extracted from `b(k0)` itself: on
/// each sorted tuple `σ` the order-`|σ|` term of `b(k0)` on `aux ⊗ F(σ)`
/// (its action minus the lower orders) must equal the formula's term. At
/// order 1 the coefficients must also agree entrywise; at order 2 a
/// coefficient is fixed only up to the exchange of `q1, q2`. Also checks that
/// the formula's series reproduces `b(k0)` on sectors with at most `n`
/// particles. The residual of [`beta_printed`] goes in a note.
pub fn check_beta(bd: &Boundary, n: usize, k0s: &[Rational], mode: Mode) -> Result<Report> {
    let zf = &bd.zf;
    let dn = zf.n();
    let inputs = BetaInputs::solve(bd, n, k0s)?;
    let formula = compute_beta(bd, n, k0s)?;
    let mut rep = ReportBuilder::new("beta", mode);
    let mut printed_worst = vec![Rational::zero(); n];
    for k0 in k0s {
        let mut extracted: Vec<VertexCoefficient> = Vec::new();
        for m in 1..=n {
            let lower = beta_series(bd, &inputs.b0, &extracted, k0);
            let mut coeff = VertexCoefficient {
                order: m,
                n: dn,
                values: BTreeMap::new(),
            };
            for sigma in zf.grid().sectors(m).into_iter().filter(|s| s.len() == m) {
                let at = format!("k0={}, tuple {}", format_rational(k0), fmt_tuple(&sigma));
                let target = crate::vertex::probe_matrix(zf, &bd.b1(AUX, k0), &sigma)?
                    .sub(&crate::vertex::probe_matrix(zf, &lower, &sigma)?);
                let terms = order_terms(zf, &sigma)?;
                let mut action = Mat::zeros(target.rows(), target.cols());
                for t in &terms {
                    let beta = formula[m - 1].get(k0, &t.q).ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "missing β^({m}) at k0={}, {}",
                            format_rational(k0),
                            fmt_tuple(&t.q)
                        ))
                    })?;
                    action = action.add(&t.left.mul(beta).mul(&t.right));
                }
                rep.record(
                    || format!("order-{m} action at {at}"),
                    action.sub(&target).max_abs(),
                );
                let mut printed = Mat::zeros(target.rows(), target.cols());
                for t in &terms {
                    let beta = beta_printed(zf.r(), &inputs, k0, &t.q)?;
                    printed = printed.add(&t.left.mul(&beta).mul(&t.right));
                }
                let res = printed.sub(&target).max_abs();
                if res > printed_worst[m - 1] {
                    printed_worst[m - 1] = res;
                }
                let d = dim(dn, m + 1);
                let mut sys = crate::vertex::System::new(d);
                let pieces: Vec<(Mat, Mat)> = terms
                    .iter()
                    .map(|t| (t.left.mul(&t.u), t.v.mul(&t.right)))
                    .collect();
                sys.add(&pieces, &target);
                match sys.solve(k0, &sigma) {
                    Ok(x) if m == 1 => {
                        for t in &terms {
                            let ex = t.u.mul(&x).mul(&t.v);
                            let res = ex
                                .sub(formula[m - 1].get(k0, &t.q).expect("checked above"))
                                .max_abs();
                            rep.record(
                                || {
                                    format!(
                                        "β^({m}) entries at k0={}, {}",
                                        format_rational(k0),
                                        fmt_tuple(&t.q)
                                    )
                                },
                                res,
                            );
                            coeff.values.insert((k0.clone(), t.q.clone()), ex);
                        }
                    }
                    Ok(x) => {
                        for t in &terms {
                            coeff
                                .values
                                .insert((k0.clone(), t.q.clone()), t.u.mul(&x).mul(&t.v));
                        }
                    }
                    Err(Error::RankDeficient { .. }) if m == n => {}
                    Err(e) => return Err(e),
                }
            }
            extracted.push(coeff);
        }
        let series = beta_series(bd, &inputs.b0, &formula, k0);
        zf.record_identity(
            &mut rep,
            &format!("β series at k0={}", format_rational(k0)),
            &series,
            &bd.b1(AUX, k0),
            n,
        )?;
    }
    for (m, res) in printed_worst.iter().enumerate() {
        rep.note(format!(
            "displayed closed form without contraction terms: max order-{} action residual {}",
            m + 1,
            format_rational(res)
        ));
    }
    Ok(rep.finish())
}

/// Grid helper for boundary checks: `{±k}` for the given positive points.
pub fn symmetric_grid(positive: &[i64]) -> Result<RapidityGrid> {
    let mut pts: Vec<i64> = positive.iter().flat_map(|&k| [k, -k]).collect();
    pts.sort();
    RapidityGrid::from_ints(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::sint;

    fn yang() -> RMatrix {
        RMatrix::rational(2, int(1)).unwrap()
    }

    fn diag(a: i64, b: i64) -> Mat {
        Mat::from_fn(2, 2, |r, c| {
            if r != c {
                sint(0)
            } else if r == 0 {
                sint(a)
            } else {
                sint(b)
            }
        })
    }

    fn boundary(pos: &[i64], b: Mat) -> Boundary {
        let zf = Zf::new(yang(), symmetric_grid(pos).unwrap());
        Boundary::new(zf, ReflectionMatrix::constant(&b).unwrap()).unwrap()
    }

    fn pairs() -> Vec<(Rational, Rational)> {
        vec![(int(2), int(1)), (int(3), rat(-1, 2)), (rat(5, 3), int(7))]
    }

    #[test]
    fn reflection_equation_for_signs() {
        for (a, b) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let rep = check_reflection_equation(
                &yang(),
                &ReflectionMatrix::constant(&diag(a, b)).unwrap(),
                &pairs(),
                Mode::Exact,
            )
            .unwrap();
            assert!(rep.pass, "{rep:?}");
        }
        // 2I solves the reflection equation but is not an involution
        let bad = ReflectionMatrix::constant(&diag(2, 2)).unwrap();
        let rep = check_reflection_equation(&yang(), &bad, &pairs(), Mode::Exact).unwrap();
        assert!(!rep.pass);
        assert!(rep.witness.unwrap().sample.contains("= I"));
        let bad = ReflectionMatrix::constant(&diag(2, 1)).unwrap();
        assert!(
            !check_reflection_equation(&yang(), &bad, &pairs(), Mode::Exact)
                .unwrap()
                .pass
        );
    }

    #[test]
    fn solver_finds_sign_matrices() {
        let sols = solve_diagonal_reflection(&yang(), 0).unwrap();
        let consts: Vec<Mat> = sols.iter().map(|b| b.constant_value().unwrap()).collect();
        for (a, b) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            assert!(consts.contains(&diag(a, b)));
        }
    }

    #[test]
    fn degree_one_solutions_are_involutions() {
        let sols = solve_diagonal_reflection(&yang(), 1).unwrap();
        assert!(
            sols.iter().any(|b| !b.is_constant()),
            "expected a k-dependent solution"
        );
        for b in &sols {
            // ε² (1 + t k)(1 - t k) and (1 - t k)(1 + t k) agree as polynomials
            for (eps, t) in b.diagonal_params().unwrap() {
                let num = [eps * eps, Scalar::zero(), -(eps * eps) * t * t];
                let den = [Scalar::one(), Scalar::zero(), -(t * t)];
                assert_eq!(num, den);
            }
        }
    }

    #[test]
    fn reflection_json_round_trip() {
        let b =
            ReflectionMatrix::diagonal(&[(sint(1), Scalar::zero()), (sint(-1), real(rat(1, 2)))]);
        let back = parse_reflection(&b.to_json(), false).unwrap();
        assert_eq!(back.kind(), ReflectionKind::DiagonalRational);
        for k in [int(3), rat(-1, 3)] {
            assert_eq!(back.eval(&k).unwrap(), b.eval(&k).unwrap());
        }
        let text = r#"{"N": 2, "kind": "constant", "entries": [["1", "0"], ["0", "k"]]}"#;
        assert!(matches!(
            parse_reflection(text, false),
            Err(Error::InvalidParameter(_))
        ));
        let text = r#"{"N": 2, "entries": [["1", "0"], ["0"]]}"#;
        assert!(matches!(
            parse_reflection(text, false),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn b_on_vacuum_and_inverse() {
        let bd = boundary(&[1, 2], diag(1, -1));
        let zf = bd.zf().clone();
        for k in zf.grid().points() {
            assert_eq!(bd.b_matrix(k, &[]).unwrap(), diag(1, -1));
            for s in zf.grid().sectors(2) {
                let prod = bd
                    .b_matrix(k, &s)
                    .unwrap()
                    .mul(&bd.b_matrix(&-k, &s).unwrap());
                assert_eq!(prod, Mat::identity(prod.rows()));
            }
        }
        let out = bd.apply_b(&int(1), &zf.vacuum()).unwrap();
        assert_eq!(out.legs(), &[Leg::ket(AUX), Leg::bra(AUX)]);
    }

    #[test]
    fn generators_on_vacuum() {
        let bd = boundary(&[1, 2], diag(1, -1));
        let zf = bd.zf().clone();
        let k = int(2);
        assert!(bd
            .apply_generator(Gen::A, &k, 0, &zf.vacuum())
            .unwrap()
            .is_zero());
        for alpha in 0..2 {
            let got = bd
                .apply_generator(Gen::Ad, &k, alpha, &zf.vacuum())
                .unwrap();
            // ½(a†_α(k) + Σ_β a†_β(-k) B(-k)_{βα}) Ω
            let sign = if alpha == 0 { sint(1) } else { sint(-1) };
            let expect = zf
                .create(&zf.vacuum(), &k, alpha)
                .unwrap()
                .add(&zf.create(&zf.vacuum(), &-&k, alpha).unwrap().scale(&sign))
                .unwrap()
                .scale(&half());
            assert_eq!(got.residual(&expect).unwrap(), Rational::zero());
        }
    }

    #[test]
    fn relations_hold_for_identity_and_signs() {
        for b in [diag(1, 1), diag(1, -1)] {
            let bd = boundary(&[1, 2], b);
            let rep = check_boundary_relations(&bd, 2, Mode::Exact).unwrap();
            assert!(rep.pass, "{rep:?}");
            let rep = check_rho_identity(&bd, 2, Mode::Exact).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn fixed_b_breaks_relations() {
        let zf = Zf::new(yang(), symmetric_grid(&[1, 2]).unwrap());
        let bd = Boundary::with_fixed_b(zf, diag(1, -1)).unwrap();
        let rep = check_boundary_relations(&bd, 2, Mode::Exact).unwrap();
        assert!(!rep.pass);
        assert!(rep.witness.is_some());
    }

    #[test]
    fn half_b_term_at_opposite_rapidities() {
        let bd = boundary(&[1, 2], diag(1, -1));
        let zf = bd.zf().clone();
        let (k1, k2) = (int(1), int(-1));
        let lhs = bd.a_tilde(1, &k1) * bd.ad_tilde(2, &k2);
        let without = bd.ad_tilde(2, &k2) * rfactor(1, 2, &k1, &k2) * bd.a_tilde(1, &k1);
        let with = without.clone() + bd.b(1, 2, &k1).scaled(&half());
        assert!(
            zf.check_identity("with", &lhs, &with, 2, Mode::Exact)
                .unwrap()
                .pass
        );
        assert!(
            !zf.check_identity("without", &lhs, &without, 2, Mode::Exact)
                .unwrap()
                .pass
        );
    }

    #[test]
    fn rho_automorphism() {
        let bd = boundary(&[1, 2], diag(1, -1));
        let g = bd.zf().grid().clone();
        let words: Vec<Word> = ["a(1) ad(2)", "a(2) a(-1) ad(1)"]
            .iter()
            .map(|t| crate::symbolic::parse_word(t, &g).unwrap())
            .collect();
        let rep = check_rho_automorphism(&bd, &words, 2, Mode::Exact).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn boundary_normal_forms_match_realization() {
        use crate::symbolic::{all_words, alphabet, check_realization};
        for b in [diag(1, 1), diag(1, -1)] {
            let bd = boundary(&[1, 2], b);
            let letters = alphabet(bd.zf().grid(), &[Gen::A, Gen::Ad, Gen::B]);
            let words: Vec<Word> = all_words(&letters, 2).into_iter().step_by(3).collect();
            let rep = check_realization(&bd, &words, Algebra::Boundary, 2, Mode::Exact).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn hierarchy() {
        let bd = boundary(&[1, 2], diag(1, -1));
        let rep = check_hierarchy(&bd, 1, 2, Mode::Exact).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(
            rep.notes
                .iter()
                .any(|n| n.starts_with("symmetry breaking: b(")),
            "{:?}",
            rep.notes
        );
    }

    #[test]
    fn coideal() {
        let bd = boundary(&[1, 2], diag(1, -1));
        for (p, q) in [(0, 1), (1, 0), (1, 1), (2, 1), (1, 2)] {
            let rep = check_coideal(&bd, &[int(1), rat(1, 2)], p, q, Mode::Exact).unwrap();
            assert!(rep.pass, "{p} {q} {rep:?}");
        }
    }

    #[test]
    fn beta_order_one_closed_form() {
        for b in [diag(1, 1), diag(1, -1)] {
            let bd = boundary(&[1, 2], b.clone());
            let k0 = rat(1, 2);
            let betas = compute_beta(&bd, 1, &[k0.clone()]).unwrap();
            let r = yang();
            let b0 = b.kron(&Mat::identity(2));
            let id = Mat::identity(4);
            for k1 in bd.zf().grid().points() {
                // X B0 + B0 Y - X B0 Y, X = I - R_01(k0,k1), Y = I - R_10(k1,-k0)
                let x = id.sub(&r.eval(&k0, k1).unwrap());
                let y = id.sub(&r.eval_swapped(k1, &-&k0).unwrap());
                let expect = x.mul(&b0).add(&b0.mul(&y)).sub(&x.mul(&b0).mul(&y));
                assert_eq!(betas[0].get(&k0, &[k1.clone()]).unwrap(), &expect);
            }
        }
    }

    #[test]
    fn beta_matches_extraction() {
        let bd = boundary(&[1, 2], diag(1, 1));
        let rep = check_beta(&bd, 2, &[rat(1, 2)], Mode::Exact).unwrap();
        assert!(rep.pass, "{rep:?}");
        // without the contraction terms the order-1 action is already off for B = I
        assert!(!rep.notes[0].ends_with(" 0"), "{:?}", rep.notes);
    }

    #[test]
    fn trivial_beta() {
        let zf = Zf::new(RMatrix::trivial(1), symmetric_grid(&[1]).unwrap());
        let bd = Boundary::new(zf, ReflectionMatrix::identity(1)).unwrap();
        let betas = compute_beta(&bd, 1, &[int(1)]).unwrap();
        assert!(betas[0].values.values().all(|m| m.is_zero()));
    }
}
