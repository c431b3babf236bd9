//! Vertex operators `T(k0)` on the Fock space and their series coefficients.
//!
//! `T(k0)` carries one auxiliary leg. On the sector `(k_1, …, k_p)` it acts
//! by `R_01(k0, k_1) … R_0p(k0, k_p)` over `aux ⊗ sites`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fock::{
    annihilator, creator, fmt_tuple, hamiltonian, on_leg, probe_legs, rfactor, AuxOperator, Expr,
    FockState, Label, Leg, LegMatrix, Zf,
};
use crate::linalg::{dim, embed, solve_unique, Mat};
use crate::report::{Mode, Report, ReportBuilder};
use crate::rmatrix::{rproduct, Arg, LegFactor, LegProduct, LegSpace, RMatrix};
use crate::scalar::{
    format_rational, format_scalar, parse_rational, parse_scalar, real, Rational, Scalar,
};

/// Label of the auxiliary leg attached by [`apply_t`].
pub const AUX: Label = 0;
const SERIES_BASE: Label = 100;

/// `R_01(k0, k_1) … R_0p(k0, k_p)` over `aux ⊗ sites`.
pub fn t_matrix(r: &RMatrix, k0: &Rational, sector: &[Rational]) -> Result<Mat> {
    let p = sector.len();
    let spec = LegProduct {
        space: LegSpace {
            sites: p,
            aux: true,
        },
        factors: (1..=p)
            .map(|s| LegFactor::r(0, s, Arg::at(0), Arg::at(s)))
            .collect(),
    };
    let mut ks = Vec::with_capacity(p + 1);
    ks.push(k0.clone());
    ks.extend(sector.iter().cloned());
    rproduct(r, &spec, &ks)
}

/// `T(k0)` (or its inverse) with its auxiliary leg on `label`.
pub fn vertex_op(label: Label, k0: &Rational, inverse: bool) -> AuxOperator {
    let k = k0.clone();
    let name = if inverse {
        format!("Tinv({})", format_rational(k0))
    } else {
        format!("T({})", format_rational(k0))
    };
    AuxOperator::new(label, name, move |zf: &Zf, sector: &[Rational]| {
        let m = t_matrix(zf.r(), &k, sector)?;
        if inverse {
            m.inverse()
        } else {
            Ok(m)
        }
    })
}

pub fn vertex(label: Label, k0: &Rational) -> Expr {
    Expr::op(vertex_op(label, k0, false))
}

pub fn vertex_inverse(label: Label, k0: &Rational) -> Expr {
    Expr::op(vertex_op(label, k0, true))
}

/// Applies `T(k0)` (or `T(k0)^{-1}`), attaching the auxiliary leg [`AUX`].
pub fn apply_t(zf: &Zf, k0: &Rational, s: &FockState, inverse: bool) -> Result<FockState> {
    if s.legs().iter().any(|l| l.label == AUX) {
        return Err(Error::LegConflict(format!(
            "state already has an open leg {AUX}"
        )));
    }
    zf.apply_op(&vertex_op(AUX, k0, inverse), s)
}

/// `L_1(k0) a_2(k) = R_21(k, k0) a_2(k) L_1(k0)` and
/// `L_1(k0) a†_2(k) = a†_2(k) R_12(k0, k) L_1(k0)` for every grid point `k`,
/// with `L` built by `make_l(label, k0)`.
pub fn check_wellbred_with(
    zf: &Zf,
    k0s: &[Rational],
    max_p: usize,
    mode: Mode,
    make_l: &dyn Fn(Label, &Rational) -> Expr,
) -> Result<Report> {
    let mut b = ReportBuilder::new("well-bred", mode);
    for k0 in k0s {
        for k in zf.grid().points() {
            let at = format!("(k0={}, k={})", format_rational(k0), format_rational(k));
            let l = make_l(1, k0);
            zf.record_identity(
                &mut b,
                &format!("L a relation {at}"),
                &(l.clone() * annihilator(2, k)),
                &(rfactor(2, 1, k, k0) * annihilator(2, k) * l.clone()),
                max_p,
            )?;
            zf.record_identity(
                &mut b,
                &format!("L ad relation {at}"),
                &(l.clone() * creator(2, k)),
                &(creator(2, k) * rfactor(1, 2, k0, k) * l),
                max_p,
            )?;
        }
    }
    Ok(b.finish())
}

pub fn check_wellbred(zf: &Zf, k0s: &[Rational], max_p: usize, mode: Mode) -> Result<Report> {
    check_wellbred_with(zf, k0s, max_p, mode, &|l, k0| vertex(l, k0))
}

/// `R_12(k1, k2) T_1(k1) T_2(k2) = T_2(k2) T_1(k1) R_12(k1, k2)`.
pub fn check_rtt(
    zf: &Zf,
    pairs: &[(Rational, Rational)],
    max_p: usize,
    mode: Mode,
) -> Result<Report> {
    let mut b = ReportBuilder::new("rtt", mode);
    for (k1, k2) in pairs {
        let lhs = rfactor(1, 2, k1, k2) * vertex(1, k1) * vertex(2, k2);
        let rhs = vertex(2, k2) * vertex(1, k1) * rfactor(1, 2, k1, k2);
        let at = format!(
            "RTT (k1={}, k2={})",
            format_rational(k1),
            format_rational(k2)
        );
        zf.record_identity(&mut b, &at, &lhs, &rhs, max_p)?;
    }
    Ok(b.finish())
}

/// `T(k0)† = T(k0)^{-1}` with respect to the Fock inner product, checked per
/// sector as `(I ⊗ G) M^{-1} = M^H (I ⊗ G)`. Also checks `T T^{-1} = 1`
/// through the leg engine.
pub fn check_adjoint_is_inverse(
    zf: &Zf,
    k0s: &[Rational],
    max_p: usize,
    mode: Mode,
) -> Result<Report> {
    let n = zf.n();
    let mut b = ReportBuilder::new("vertex-adjoint-inverse", mode);
    for k0 in k0s {
        let t = vertex_op(AUX, k0, false);
        let tinv = vertex_op(AUX, k0, true);
        for sector in zf.grid().sectors(max_p) {
            let m = t.sector_matrix(zf, &sector)?;
            let minv = tinv.sector_matrix(zf, &sector)?;
            let g = Mat::identity(n).kron(&zf.gram(&sector)?);
            let res = g.mul(&minv).sub(&m.adjoint().mul(&g)).max_abs();
            b.record(
                || {
                    format!(
                        "T({})† on sector {}",
                        format_rational(k0),
                        fmt_tuple(&sector)
                    )
                },
                res,
            );
        }
        let one = on_leg(1, Mat::identity(n), "1");
        zf.record_identity(
            &mut b,
            &format!("T({0}) Tinv({0})", format_rational(k0)),
            &(vertex(1, k0) * vertex_inverse(1, k0)),
            &one,
            max_p,
        )?;
    }
    Ok(b.finish())
}

/// Coproduct factorisation: on `F_{p+q} ≅ F_p ⊗ F_q`,
/// `T^{ab} = Σ_c T^{ac} ⊗ T^{cb}` and `(T^{-1})^{ab} = Σ_c (T^{-1})^{cb} ⊗ (T^{-1})^{ac}`.
pub fn check_coproduct_factorization(
    zf: &Zf,
    k0s: &[Rational],
    p: usize,
    q: usize,
    mode: Mode,
) -> Result<Report> {
    let n = zf.n();
    let mut b = ReportBuilder::new("coproduct", mode);
    let total = p + q;
    for k0 in k0s {
        let t = vertex_op(AUX, k0, false);
        let tinv = vertex_op(AUX, k0, true);
        for sector in zf
            .grid()
            .sectors(total)
            .into_iter()
            .filter(|s| s.len() == total)
        {
            let (left, right) = sector.split_at(p);
            let full = probe_matrix(zf, &vertex(AUX, k0), &sector)?;
            let full_inv = probe_matrix(zf, &vertex_inverse(AUX, k0), &sector)?;
            let lp: Vec<usize> = (0..=p).collect();
            let rq: Vec<usize> = std::iter::once(0).chain(p + 1..=total).collect();
            let ml = embed(&t.sector_matrix(zf, left)?, &lp, n, total + 1);
            let mr = embed(&t.sector_matrix(zf, right)?, &rq, n, total + 1);
            let il = embed(&tinv.sector_matrix(zf, left)?, &lp, n, total + 1);
            let ir = embed(&tinv.sector_matrix(zf, right)?, &rq, n, total + 1);
            let res = full.sub(&ml.mul(&mr)).max_abs();
            let res_inv = full_inv.sub(&ir.mul(&il)).max_abs();
            let worst = if res > res_inv { res } else { res_inv };
            b.record(
                || {
                    format!(
                        "Δ at k0={} on {} ⊗ {}",
                        format_rational(k0),
                        fmt_tuple(left),
                        fmt_tuple(right)
                    )
                },
                worst,
            );
        }
    }
    Ok(b.finish())
}

/// `[H_n, T(k0)] = 0` for `n = 1..=max_order`.
pub fn check_hamiltonian_commutes(
    zf: &Zf,
    k0s: &[Rational],
    max_order: u32,
    max_p: usize,
    mode: Mode,
) -> Result<Report> {
    let mut b = ReportBuilder::new("vertex-conserved", mode);
    for k0 in k0s {
        for order in 1..=max_order {
            let lhs = hamiltonian(order) * vertex(1, k0);
            let rhs = vertex(1, k0) * hamiltonian(order);
            zf.record_identity(
                &mut b,
                &format!("[H_{order}, T({})]", format_rational(k0)),
                &lhs,
                &rhs,
                max_p,
            )?;
        }
    }
    Ok(b.finish())
}

/// Matrix over `aux ⊗ sites` of an expression with one open aux leg, on one sector.
pub(crate) fn probe_matrix(zf: &Zf, e: &Expr, sector: &[Rational]) -> Result<Mat> {
    let out = zf.apply(e, &FockState::probe(zf.n(), sector))?;
    out.sector_matrix(
        sector,
        &[Leg::ket(AUX)],
        &with_first(Leg::bra(AUX), &probe_legs(sector.len())),
    )
}

pub(crate) fn with_first(first: Leg, rest: &[Leg]) -> Vec<Leg> {
    std::iter::once(first).chain(rest.iter().copied()).collect()
}

/// Order-`n` coefficient `T^{(n)}(k0; k_1, …, k_n)` over `aux ⊗ site_1 ⊗ … ⊗ site_n`,
/// stored for every ordering of every grid tuple that was solved.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexCoefficient {
    pub order: usize,
    pub n: usize,
    pub values: BTreeMap<(Rational, Vec<Rational>), Mat>,
}

impl VertexCoefficient {
    pub fn get(&self, k0: &Rational, ks: &[Rational]) -> Option<&Mat> {
        self.values.get(&(k0.clone(), ks.to_vec()))
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .values
            .iter()
            .map(|((k0, ks), m)| {
                let rows: Vec<Value> = (0..m.rows())
                    .map(|r| {
                        Value::Array(
                            (0..m.cols())
                                .map(|c| Value::String(format_scalar(m.get(r, c))))
                                .collect(),
                        )
                    })
                    .collect();
                json!({
                    "k0": format_rational(k0),
                    "ks": ks.iter().map(format_rational).collect::<Vec<_>>(),
                    "tensor": rows,
                })
            })
            .collect();
        json!({ "order": self.order, "N": self.n, "entries": entries })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let bad = |what: &str| Error::Config(format!("vertex coefficient: {what}"));
        let order = value["order"]
            .as_u64()
            .ok_or_else(|| bad("missing order"))? as usize;
        let n = value["N"].as_u64().ok_or_else(|| bad("missing N"))? as usize;
        let d = dim(n, order + 1);
        let mut values = BTreeMap::new();
        for e in value["entries"]
            .as_array()
            .ok_or_else(|| bad("missing entries"))?
        {
            let k0 = parse_rational(e["k0"].as_str().ok_or_else(|| bad("k0 must be a string"))?)?;
            let ks = e["ks"]
                .as_array()
                .ok_or_else(|| bad("ks must be a list"))?
                .iter()
                .map(|x| {
                    parse_rational(x.as_str().ok_or_else(|| bad("rapidity must be a string"))?)
                        .map_err(Into::into)
                })
                .collect::<Result<Vec<_>>>()?;
            if ks.len() != order {
                return Err(bad("tuple length differs from order"));
            }
            let rows = e["tensor"]
                .as_array()
                .ok_or_else(|| bad("tensor must be a list"))?;
            if rows.len() != d {
                return Err(bad("tensor has the wrong shape"));
            }
            let mut m = Mat::zeros(d, d);
            for (r, row) in rows.iter().enumerate() {
                let row = row
                    .as_array()
                    .filter(|x| x.len() == d)
                    .ok_or_else(|| bad("tensor has the wrong shape"))?;
                for (c, x) in row.iter().enumerate() {
                    m.set(
                        r,
                        c,
                        parse_scalar(x.as_str().ok_or_else(|| bad("entry must be a string"))?)?,
                    );
                }
            }
            values.insert((k0, ks), m);
        }
        Ok(VertexCoefficient { order, n, values })
    }
}

/// `(-1)^m / (m-1)!`
pub(crate) fn series_weight(m: usize) -> Scalar {
    let fact = (1..m).fold(Rational::one(), |acc, i| acc * Rational::from(i as i64));
    let w = Rational::one() / fact;
    real(if m % 2 == 1 { -w } else { w })
}

/// The truncated series `1 + Σ_m (-1)^m/(m-1)! Σ_q a†_{m…1}(q) T^{(m)}(k0; q) a_{1…m}(q)`
/// with the auxiliary leg on [`AUX`], the inner sums running over every
/// stored tuple.
pub fn series_expr(n: usize, orders: &[VertexCoefficient], k0: &Rational) -> Expr {
    let mut e = on_leg(AUX, Mat::identity(n), "1");
    for coeff in orders {
        let m = coeff.order;
        let w = series_weight(m);
        let labels: Vec<Label> = (1..=m as Label).map(|i| SERIES_BASE + i).collect();
        for ((kk0, q), x) in &coeff.values {
            if kk0 != k0 {
                continue;
            }
            let mut term = Expr::one();
            for i in (0..m).rev() {
                term = term * creator(labels[i], &q[i]);
            }
            let mut legs = vec![AUX];
            legs.extend(&labels);
            term = term
                * Expr::op(LegMatrix {
                    kets: legs.clone(),
                    bras: legs,
                    matrix: x.clone(),
                    tag: format!("T{m}({}; {})", format_rational(k0), fmt_tuple(q)),
                });
            for (i, k) in q.iter().enumerate() {
                term = term * annihilator(labels[i], k);
            }
            e = e + term.scaled(&w);
        }
    }
    e
}

/// Every ordering of a sorted tuple with the maps `(U, V)` giving
/// `T(k0; ordering) = U T(k0; sorted) V` under the exchange symmetry
/// `T_{01…n} = B_ij^{-1} T_{01…n|ij} B_ij`.
pub(crate) fn orderings(r: &RMatrix, sigma: &[Rational]) -> Result<Vec<(Vec<Rational>, Mat, Mat)>> {
    let n = r.n();
    let m = sigma.len();
    let d = dim(n, m + 1);
    let mut out = vec![(sigma.to_vec(), Mat::identity(d), Mat::identity(d))];
    match m {
        1 => {}
        2 if sigma[0] != sigma[1] => {
            let p = embed(&Mat::swap(n), &[1, 2], n, 3);
            let bm = embed(&r.eval(&sigma[0], &sigma[1])?, &[1, 2], n, 3);
            let u = p.mul(&bm);
            let v = bm.inverse()?.mul(&p);
            out.push((vec![sigma[1].clone(), sigma[0].clone()], u, v));
        }
        2 => {}
        _ => {
            return Err(Error::Unsupported(format!(
                "vertex coefficients of order {m}"
            )))
        }
    }
    Ok(out)
}

pub(crate) struct System {
    unknowns: usize,
    rows: Vec<Vec<Scalar>>,
    rhs: Vec<Scalar>,
}

impl System {
    pub(crate) fn new(unknowns: usize) -> Self {
        System {
            unknowns,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    /// The unique `d × d` solution.
    pub(crate) fn solve(&self, k0: &Rational, sigma: &[Rational]) -> Result<Mat> {
        let d = self.unknowns;
        let a = Mat::from_fn(self.rows.len(), d * d, |r, c| self.rows[r][c].clone());
        let x = solve_unique(&a, &self.rhs).map_err(|e| match e {
            Error::Inconsistent(msg) => Error::Inconsistent(format!(
                "order {} at k0={}, tuple {}: {msg}",
                sigma.len(),
                format_rational(k0),
                fmt_tuple(sigma)
            )),
            other => other,
        })?;
        Ok(Mat::from_vec(d, d, x))
    }

    /// Adds `Σ_t L_t X M_t = Z` entrywise, with `X` a `d × d` unknown.
    pub(crate) fn add(&mut self, terms: &[(Mat, Mat)], z: &Mat) {
        let d = self.unknowns;
        for i in 0..z.rows() {
            for j in 0..z.cols() {
                let mut row = vec![Scalar::zero(); d * d];
                for (l, m) in terms {
                    for r in 0..d {
                        let a = l.get(i, r);
                        if a.is_zero() {
                            continue;
                        }
                        for c in 0..d {
                            let b = m.get(c, j);
                            if !b.is_zero() {
                                row[r * d + c] += a * b;
                            }
                        }
                    }
                }
                if row.iter().all(Zero::is_zero) && z.get(i, j).is_zero() {
                    continue;
                }
                self.rows.push(row);
                self.rhs.push(z.get(i, j).clone());
            }
        }
    }
}

/// One ordering `q` of a sorted tuple `σ` in the order-`m` series term on
/// `aux ⊗ F(σ)`: the term reads `left · Y · right` for the coefficient `Y` at
/// `q`, and `Y = u X v` with `X` the coefficient at `σ`.
pub(crate) struct OrderTerm {
    pub q: Vec<Rational>,
    pub left: Mat,
    pub right: Mat,
    pub u: Mat,
    pub v: Mat,
}

pub(crate) fn order_terms(zf: &Zf, sigma: &[Rational]) -> Result<Vec<OrderTerm>> {
    let n = zf.n();
    let m = sigma.len();
    let labels: Vec<Label> = (1..=m as Label).map(|i| SERIES_BASE + i).collect();
    let w = series_weight(m);
    let id_aux = Mat::identity(n);
    let mut terms = Vec::new();
    for (q, u, v) in orderings(zf.r(), sigma)? {
        let mut ann = Expr::one();
        let mut cre = Expr::one();
        for i in 0..m {
            ann = ann * annihilator(labels[i], &q[i]);
            cre = cre * creator(labels[m - 1 - i], &q[m - 1 - i]);
        }
        let kets: Vec<Leg> = labels.iter().map(|&l| Leg::ket(l)).collect();
        let bras: Vec<Leg> = labels.iter().map(|&l| Leg::bra(l)).collect();
        let a_q = zf.apply(&ann, &FockState::probe(n, sigma))?.sector_matrix(
            &[],
            &kets,
            &probe_legs(m),
        )?;
        let c_q = zf
            .apply(&cre, &zf.vacuum())?
            .sector_matrix(sigma, &[], &bras)?;
        terms.push(OrderTerm {
            q,
            left: id_aux.kron(&c_q).scale(&w),
            right: id_aux.kron(&a_q),
            u,
            v,
        });
    }
    Ok(terms)
}

/// The order-`m` series term on `aux ⊗ F(σ)`, `m = |σ|`, as `Σ_q L_q X R_q`
/// in the coefficient `X = T^{(m)}(k0; σ)` at the sorted tuple.
pub(crate) fn order_pieces(zf: &Zf, sigma: &[Rational]) -> Result<Vec<(Mat, Mat)>> {
    Ok(order_terms(zf, sigma)?
        .into_iter()
        .map(|t| (t.left.mul(&t.u), t.v.mul(&t.right)))
        .collect())
}

/// Solves for `T^{(m)}(k0; σ)` given all lower orders, from the two
/// well-bred relations restricted to the sectors `σ` and `σ` minus one point.
fn solve_tuple(
    zf: &Zf,
    lower: &[VertexCoefficient],
    k0: &Rational,
    sigma: &[Rational],
) -> Result<Mat> {
    let n = zf.n();
    let m = sigma.len();
    let d = dim(n, m + 1);
    let known = series_expr(n, lower, k0);
    let id_aux = Mat::identity(n);
    let probes_sigma = probe_legs(m);
    let pieces = order_pieces(zf, sigma)?;

    let mut sys = System::new(d);
    let mut seen = Vec::new();
    for (pos, k) in sigma.iter().enumerate() {
        if seen.contains(k) {
            continue;
        }
        seen.push(k.clone());
        let mut tau = sigma.to_vec();
        tau.remove(pos);
        let probes_tau = probe_legs(tau.len());

        // L a† relation on F(τ): O(X) Y = a† R L_known − L_known a†
        let probe_tau = FockState::probe(n, &tau);
        let y = zf.apply(&creator(2, k), &probe_tau)?;
        let y_cols = with_first(Leg::bra(2), &probes_tau);
        let y_mat = y.sector_matrix(sigma, &[], &y_cols)?;
        let rhs = zf.apply(
            &(creator(2, k) * rfactor(AUX, 2, k0, k) * known.clone()),
            &probe_tau,
        )?;
        let lhs_known = zf.apply(&known, &y)?;
        let z_cols = with_first(Leg::bra(AUX), &y_cols);
        let z = rhs
            .sub(&lhs_known)?
            .sector_matrix(sigma, &[Leg::ket(AUX)], &z_cols)?;
        let ext = id_aux.kron(&y_mat);
        let terms: Vec<(Mat, Mat)> = pieces
            .iter()
            .map(|(l, r)| (l.clone(), r.mul(&ext)))
            .collect();
        sys.add(&terms, &z);

        // L a relation on F(σ): W O(X) = L_known a − W L_known
        let probe_sigma = FockState::probe(n, sigma);
        let wexpr = rfactor(2, AUX, k, k0) * annihilator(2, k);
        let rows = [Leg::ket(AUX), Leg::ket(2)];
        let cols = with_first(Leg::bra(AUX), &probes_sigma);
        let wmat = zf
            .apply(&wexpr, &probe_sigma)?
            .sector_matrix(&tau, &rows, &cols)?;
        let lhs = zf.apply(&(known.clone() * annihilator(2, k)), &probe_sigma)?;
        let rhs_known = zf.apply(&(wexpr * known.clone()), &probe_sigma)?;
        let z = lhs.sub(&rhs_known)?.sector_matrix(&tau, &rows, &cols)?;
        let terms: Vec<(Mat, Mat)> = pieces
            .iter()
            .map(|(l, r)| (wmat.mul(l), r.clone()))
            .collect();
        sys.add(&terms, &z);
    }
    sys.solve(k0, sigma)
}

/// Solves orders `1..=n` of the vertex series at each `k0`, for every grid
/// tuple (coincident rapidities included). Orders above 2 are unsupported.
pub fn solve_vertex_series(zf: &Zf, n: usize, k0s: &[Rational]) -> Result<Vec<VertexCoefficient>> {
    if n == 0 || n > 2 {
        return Err(Error::Unsupported(format!(
            "vertex coefficient of order {n}; orders 1 and 2 are supported"
        )));
    }
    let mut orders: Vec<VertexCoefficient> = Vec::new();
    for m in 1..=n {
        let mut coeff = VertexCoefficient {
            order: m,
            n: zf.n(),
            values: BTreeMap::new(),
        };
        for k0 in k0s {
            for sigma in zf.grid().sectors(m).into_iter().filter(|s| s.len() == m) {
                let x = solve_tuple(zf, &orders, k0, &sigma)?;
                for (q, u, v) in orderings(zf.r(), &sigma)? {
                    coeff.values.insert((k0.clone(), q), u.mul(&x).mul(&v));
                }
            }
        }
        orders.push(coeff);
    }
    Ok(orders)
}

pub fn solve_vertex_coefficient(zf: &Zf, n: usize, k0s: &[Rational]) -> Result<VertexCoefficient> {
    Ok(solve_vertex_series(zf, n, k0s)?
        .pop()
        .expect("at least one order"))
}

/// The truncated series reproduces `T(k0)` on every sector with at most
/// `orders.len()` particles, and order-2 coefficients satisfy
/// `T_{012} = B_12^{-1} T_{012|12} B_12`.
pub fn check_vertex_series(
    zf: &Zf,
    orders: &[VertexCoefficient],
    k0s: &[Rational],
    mode: Mode,
) -> Result<Report> {
    let n = zf.n();
    let mut b = ReportBuilder::new("vertex-series", mode);
    let max_p = orders.len();
    for k0 in k0s {
        let series = series_expr(n, orders, k0);
        zf.record_identity(
            &mut b,
            &format!("series at k0={}", format_rational(k0)),
            &series,
            &vertex(AUX, k0),
            max_p,
        )?;
    }
    if let Some(c2) = orders.iter().find(|c| c.order == 2) {
        let p = embed(&Mat::swap(n), &[1, 2], n, 3);
        for ((k0, q), x) in &c2.values {
            let Some(swapped) = c2.get(k0, &[q[1].clone(), q[0].clone()]) else {
                continue;
            };
            let bm = embed(&zf.r().eval(&q[0], &q[1])?, &[1, 2], n, 3);
            let rhs = bm.inverse()?.mul(&p).mul(swapped).mul(&p).mul(&bm);
            let res = x.sub(&rhs).max_abs();
            b.record(
                || {
                    format!(
                        "exchange symmetry at k0={}, tuple {}",
                        format_rational(k0),
                        fmt_tuple(q)
                    )
                },
                res,
            );
        }
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::RapidityGrid;
    use crate::scalar::{int, rat};

    fn zf(r: RMatrix) -> Zf {
        Zf::new(r, RapidityGrid::from_ints(&[1, 2, 3]).unwrap())
    }

    fn rational() -> Zf {
        zf(RMatrix::rational(2, int(1)).unwrap())
    }

    #[test]
    fn vacuum_is_fixed() {
        let z = rational();
        let out = apply_t(&z, &int(2), &z.vacuum(), false).unwrap();
        let m = out
            .sector_matrix(&[], &[Leg::ket(AUX)], &[Leg::bra(AUX)])
            .unwrap();
        assert_eq!(m, Mat::identity(2));
    }

    #[test]
    fn apply_t_rejects_open_aux() {
        let z = rational();
        let once = apply_t(&z, &int(1), &z.vacuum(), false).unwrap();
        assert!(matches!(
            apply_t(&z, &int(1), &once, false),
            Err(Error::LegConflict(_))
        ));
    }

    #[test]
    fn one_particle_action_is_r() {
        let z = rational();
        let m = t_matrix(z.r(), &int(3), &[int(1)]).unwrap();
        assert_eq!(m, z.r().eval(&int(3), &int(1)).unwrap());
    }

    #[test]
    fn wellbred_and_rtt() {
        let z = rational();
        let k0s = [int(1), rat(1, 2)];
        assert!(check_wellbred(&z, &k0s, 2, Mode::Exact).unwrap().pass);
        assert!(
            check_rtt(&z, &[(int(1), int(2)), (rat(1, 2), int(3))], 2, Mode::Exact)
                .unwrap()
                .pass
        );
        assert!(
            check_adjoint_is_inverse(&z, &k0s, 2, Mode::Exact)
                .unwrap()
                .pass
        );
        assert!(
            check_coproduct_factorization(&z, &k0s, 1, 1, Mode::Exact)
                .unwrap()
                .pass
        );
        assert!(
            check_hamiltonian_commutes(&z, &k0s, 2, 2, Mode::Exact)
                .unwrap()
                .pass
        );
    }

    #[test]
    fn swapped_arguments_are_not_wellbred() {
        let z = rational();
        let bad = |label: Label, k0: &Rational| {
            let k = k0.clone();
            Expr::op(AuxOperator::new(
                label,
                "Tswap",
                move |zf: &Zf, sector: &[Rational]| {
                    let p = sector.len();
                    let spec = LegProduct {
                        space: LegSpace {
                            sites: p,
                            aux: true,
                        },
                        factors: (1..=p)
                            .map(|s| LegFactor::r(0, s, Arg::at(s), Arg::at(0)))
                            .collect(),
                    };
                    let mut ks = vec![k.clone()];
                    ks.extend(sector.iter().cloned());
                    rproduct(zf.r(), &spec, &ks)
                },
            ))
        };
        let r = check_wellbred_with(&z, &[int(1) / int(2)], 2, Mode::Exact, &bad).unwrap();
        assert!(!r.pass);
        assert!(r.witness.is_some());
    }

    #[test]
    fn first_order_is_identity_minus_r() {
        // oracle: on one particle the series reads 1 − T1, so T1 = 1 − R_01
        let z = rational();
        let k0 = rat(1, 2);
        let c = solve_vertex_coefficient(&z, 1, &[k0.clone()]).unwrap();
        for k in z.grid().points() {
            let expect = Mat::identity(4).sub(&z.r().eval(&k0, k).unwrap());
            assert_eq!(c.get(&k0, &[k.clone()]).unwrap(), &expect);
        }
    }

    #[test]
    fn trivial_r_has_vanishing_coefficients() {
        let z = zf(RMatrix::trivial(1));
        let orders = solve_vertex_series(&z, 2, &[int(5)]).unwrap();
        for c in &orders {
            assert!(c.values.values().all(Mat::is_zero));
        }
    }

    #[test]
    fn second_order_reproduces_action() {
        let z = rational();
        let k0s = [rat(1, 2), int(2)];
        let orders = solve_vertex_series(&z, 2, &k0s).unwrap();
        assert_eq!(orders[1].values.len(), 2 * 9);
        let r = check_vertex_series(&z, &orders, &k0s, Mode::Exact).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn coefficient_json_round_trip() {
        let z = rational();
        let c = solve_vertex_coefficient(&z, 1, &[rat(1, 2)]).unwrap();
        let back = VertexCoefficient::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn order_three_is_unsupported() {
        assert!(matches!(
            solve_vertex_series(&rational(), 3, &[int(1)]),
            Err(Error::Unsupported(_))
        ));
    }
}
