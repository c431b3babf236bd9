//! Fock sectors of the ZF algebra over a discrete rapidity grid, and an
//! engine that applies products of leg-carrying operators to them.
//!
//! A sector `(k_1 ≤ … ≤ k_p)` with tensor `v` stands for
//! `Σ_α v_α a†_{α_1}(k_1) … a†_{α_p}(k_p) Ω`. Delta functions become
//! Kronecker symbols on the grid and integrals become grid sums.
//!
//! Operators written with auxiliary-space subscripts (`a_1`, `a†_2`, `R_12`,
//! `T_1`, …) carry labelled legs: a column index ("ket") or a row index
//! ("bra") per label. A state produced by such operators carries the open
//! legs. Applying an operator contracts its bra `ℓ` with the state's ket `ℓ`;
//! a bra with nothing to contract stays open, and a ket stays open.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{apply_on_legs, digits, dim, max_magnitude, undigits, Mat};
use crate::report::{Mode, Report, ReportBuilder};
use crate::rmatrix::RMatrix;
use crate::scalar::{
    format_rational, format_scalar, parse_rational, parse_scalar, real, Rational, Scalar,
};

pub type Label = u32;

/// Labels at or above this value are reserved for probe legs.
pub const PROBE_BASE: Label = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LegKind {
    Ket,
    Bra,
}

impl LegKind {
    pub fn flip(self) -> Self {
        match self {
            LegKind::Ket => LegKind::Bra,
            LegKind::Bra => LegKind::Ket,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Leg {
    pub label: Label,
    pub kind: LegKind,
}

impl Leg {
    pub fn ket(label: Label) -> Self {
        Leg {
            label,
            kind: LegKind::Ket,
        }
    }

    pub fn bra(label: Label) -> Self {
        Leg {
            label,
            kind: LegKind::Bra,
        }
    }
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            LegKind::Ket => write!(f, "ket:{}", self.label),
            LegKind::Bra => write!(f, "bra:{}", self.label),
        }
    }
}

fn parse_leg(text: &str) -> Result<Leg> {
    let bad = || Error::Config(format!("bad leg `{text}`"));
    let (kind, label) = text.split_once(':').ok_or_else(bad)?;
    let label = label.parse().map_err(|_| bad())?;
    match kind {
        "ket" => Ok(Leg::ket(label)),
        "bra" => Ok(Leg::bra(label)),
        _ => Err(bad()),
    }
}

pub fn probe_legs(p: usize) -> Vec<Leg> {
    (0..p).map(|i| Leg::bra(PROBE_BASE + i as Label)).collect()
}

pub fn fmt_tuple(ks: &[Rational]) -> String {
    let parts: Vec<String> = ks.iter().map(format_rational).collect();
    format!("({})", parts.join(", "))
}

/// Finite ordered set of nonzero rapidities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RapidityGrid {
    points: Vec<Rational>,
    negation_closed: bool,
}

impl RapidityGrid {
    pub fn new(mut points: Vec<Rational>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        points.sort();
        if points.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGrid("duplicate rapidity".into()));
        }
        if points.iter().any(Zero::is_zero) {
            return Err(Error::InvalidGrid("0 is not an allowed rapidity".into()));
        }
        let negation_closed = points
            .iter()
            .all(|k| points.binary_search(&-k.clone()).is_ok());
        Ok(RapidityGrid {
            points,
            negation_closed,
        })
    }

    pub fn from_ints(points: &[i64]) -> Result<Self> {
        Self::new(points.iter().map(|&k| Rational::from(k)).collect())
    }

    pub fn points(&self) -> &[Rational] {
        &self.points
    }

    pub fn negation_closed(&self) -> bool {
        self.negation_closed
    }

    pub fn contains(&self, k: &Rational) -> bool {
        self.points.binary_search(k).is_ok()
    }

    pub fn require(&self, k: &Rational) -> Result<()> {
        if self.contains(k) {
            Ok(())
        } else {
            Err(Error::OffGrid(format_rational(k)))
        }
    }

    pub fn require_negation_closed(&self) -> Result<()> {
        if self.negation_closed {
            Ok(())
        } else {
            Err(Error::InvalidGrid(
                "grid must be closed under negation".into(),
            ))
        }
    }

    pub fn positive(&self) -> Vec<Rational> {
        self.points
            .iter()
            .filter(|k| k > &&Rational::zero())
            .cloned()
            .collect()
    }

    /// All sorted rapidity tuples with `p ≤ max_p` entries (repetition allowed),
    /// shortest first.
    pub fn sectors(&self, max_p: usize) -> Vec<Vec<Rational>> {
        let mut out = vec![Vec::new()];
        let mut layer: Vec<(Vec<Rational>, usize)> = vec![(Vec::new(), 0)];
        for _ in 0..max_p {
            let mut next = Vec::new();
            for (t, start) in &layer {
                for i in *start..self.points.len() {
                    let mut u = t.clone();
                    u.push(self.points[i].clone());
                    next.push((u, i));
                }
            }
            out.extend(next.iter().map(|(t, _)| t.clone()));
            layer = next;
        }
        out
    }

    /// Sorted tuples of `p` pairwise distinct rapidities.
    pub fn distinct_sectors(&self, p: usize) -> Vec<Vec<Rational>> {
        self.sectors(p)
            .into_iter()
            .filter(|t| t.len() == p && t.windows(2).all(|w| w[0] != w[1]))
            .collect()
    }
}

/// A finite sum of sector monomials with a common set of open legs.
///
/// Each tensor is laid out over the open legs (in sorted order) followed by
/// the sites of the sector.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    n: usize,
    legs: Vec<Leg>,
    sectors: BTreeMap<Vec<Rational>, Vec<Scalar>>,
}

impl FockState {
    pub fn zero(n: usize) -> Self {
        FockState {
            n,
            legs: Vec::new(),
            sectors: BTreeMap::new(),
        }
    }

    pub(crate) fn zero_with_legs(n: usize, legs: Vec<Leg>) -> Self {
        FockState {
            n,
            legs,
            sectors: BTreeMap::new(),
        }
    }

    pub fn vacuum(n: usize) -> Self {
        let mut s = Self::zero(n);
        s.sectors.insert(Vec::new(), vec![Scalar::one()]);
        s
    }

    /// `a†_{α_1}(k_1) … a†_{α_p}(k_p) Ω` for a sorted `sector`.
    pub fn basis(n: usize, sector: &[Rational], colors: &[usize]) -> Result<Self> {
        if sector.len() != colors.len() {
            return Err(Error::InvalidParameter(
                "one color per rapidity is required".into(),
            ));
        }
        if colors.iter().any(|&c| c >= n) {
            return Err(Error::InvalidParameter(format!(
                "colors must be below N = {n}"
            )));
        }
        let mut t = vec![Scalar::zero(); dim(n, sector.len())];
        t[undigits(colors, n)] = Scalar::one();
        Self::from_sector(n, sector.to_vec(), t)
    }

    pub fn from_sector(n: usize, sector: Vec<Rational>, tensor: Vec<Scalar>) -> Result<Self> {
        if sector.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter(
                "sector rapidities must be ascending".into(),
            ));
        }
        if tensor.len() != dim(n, sector.len()) {
            return Err(Error::InvalidParameter(
                "tensor size does not match the sector".into(),
            ));
        }
        let mut s = Self::zero(n);
        s.sectors.insert(sector, tensor);
        s.prune();
        Ok(s)
    }

    /// The identity on a sector, carried by one probe bra per site: applying
    /// an operator to it yields the operator's matrix on that sector.
    pub fn probe(n: usize, sector: &[Rational]) -> Self {
        let p = sector.len();
        let sd = dim(n, p);
        let mut t = vec![Scalar::zero(); sd * sd];
        for i in 0..sd {
            t[i * sd + i] = Scalar::one();
        }
        let mut s = Self::zero_with_legs(n, probe_legs(p));
        s.sectors.insert(sector.to_vec(), t);
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn sectors(&self) -> impl Iterator<Item = (&Vec<Rational>, &Vec<Scalar>)> {
        self.sectors.iter()
    }

    pub fn sector(&self, ks: &[Rational]) -> Option<&[Scalar]> {
        self.sectors.get(ks).map(Vec::as_slice)
    }

    pub fn is_zero(&self) -> bool {
        self.sectors.is_empty()
    }

    fn has(&self, leg: Leg) -> bool {
        self.legs.binary_search(&leg).is_ok()
    }

    fn prune(&mut self) {
        self.sectors.retain(|_, t| t.iter().any(|x| !x.is_zero()));
    }

    fn block_size(&self, sector_len: usize) -> usize {
        dim(self.n, self.legs.len() + sector_len)
    }

    fn add_at(&mut self, sector: &[Rational], offset: usize, values: &[Scalar]) {
        if values.iter().all(Zero::is_zero) {
            return;
        }
        let size = self.block_size(sector.len());
        let t = self
            .sectors
            .entry(sector.to_vec())
            .or_insert_with(|| vec![Scalar::zero(); size]);
        for (dst, v) in t[offset..offset + values.len()].iter_mut().zip(values) {
            *dst += v;
        }
    }

    fn compatible(&self, other: &FockState) -> Result<()> {
        if self.n != other.n {
            return Err(Error::InvalidParameter("states have different N".into()));
        }
        if self.legs != other.legs && !self.is_zero() && !other.is_zero() {
            return Err(Error::LegConflict(format!(
                "cannot combine states with legs [{}] and [{}]",
                join_legs(&self.legs),
                join_legs(&other.legs)
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &FockState) -> Result<FockState> {
        self.compatible(other)?;
        if self.is_zero() {
            return Ok(other.clone());
        }
        let mut out = self.clone();
        for (k, t) in &other.sectors {
            out.add_at(k, 0, t);
        }
        out.prune();
        Ok(out)
    }

    pub fn scale(&self, c: &Scalar) -> FockState {
        let mut out = self.clone();
        for t in out.sectors.values_mut() {
            for x in t.iter_mut() {
                *x *= c;
            }
        }
        out.prune();
        out
    }

    pub fn sub(&self, other: &FockState) -> Result<FockState> {
        self.add(&other.scale(&-Scalar::one()))
    }

    /// Largest entry of `self - other`.
    pub fn residual(&self, other: &FockState) -> Result<Rational> {
        Ok(self
            .sub(other)?
            .sectors
            .values()
            .map(|t| max_magnitude(t))
            .max()
            .unwrap_or_else(Rational::zero))
    }

    /// Adds a ket and a bra leg labelled `label`, joined by the identity.
    pub fn with_identity_leg(&self, label: Label) -> Result<FockState> {
        if self.has(Leg::ket(label)) || self.has(Leg::bra(label)) {
            return Err(Error::LegConflict(format!("leg {label} is already open")));
        }
        let mut legs = self.legs.clone();
        legs.push(Leg::ket(label));
        legs.push(Leg::bra(label));
        legs.sort();
        let ket_pos = legs.binary_search(&Leg::ket(label)).unwrap();
        let n = self.n;
        let mut out = Self::zero_with_legs(n, legs);
        for (sector, t) in &self.sectors {
            let old_legs = self.legs.len();
            let sd = dim(n, sector.len());
            let mut nt = vec![Scalar::zero(); dim(n, old_legs + 2) * sd];
            for li in 0..dim(n, old_legs) {
                let d = digits(li, n, old_legs);
                for c in 0..n {
                    let mut nd = d.clone();
                    nd.insert(ket_pos, c);
                    nd.insert(ket_pos + 1, c);
                    let base = undigits(&nd, n) * sd;
                    nt[base..base + sd].clone_from_slice(&t[li * sd..(li + 1) * sd]);
                }
            }
            out.sectors.insert(sector.clone(), nt);
        }
        Ok(out)
    }

    /// Applies a leg-free sector map to every open-leg block.
    fn map_blocks(
        &self,
        mut f: impl FnMut(&[Rational], &[Scalar]) -> Result<Vec<(Vec<Rational>, Vec<Scalar>)>>,
    ) -> Result<FockState> {
        let n = self.n;
        let mut out = Self::zero_with_legs(n, self.legs.clone());
        for (sector, t) in &self.sectors {
            let sd = dim(n, sector.len());
            for li in 0..dim(n, self.legs.len()) {
                let block = &t[li * sd..(li + 1) * sd];
                if block.iter().all(Zero::is_zero) {
                    continue;
                }
                for (s2, v) in f(sector, block)? {
                    let sd2 = dim(n, s2.len());
                    out.add_at(&s2, li * sd2, &v);
                }
            }
        }
        out.prune();
        Ok(out)
    }

    /// One sector's tensor as a matrix with rows over `rows` legs followed by
    /// the sites, and columns over `cols` legs. Every open leg must be listed
    /// exactly once. A missing sector gives a zero matrix.
    pub fn sector_matrix(&self, sector: &[Rational], rows: &[Leg], cols: &[Leg]) -> Result<Mat> {
        let mut listed: Vec<Leg> = rows.iter().chain(cols).copied().collect();
        listed.sort();
        if listed != self.legs {
            return Err(Error::LegConflict(format!(
                "matrix legs [{}] do not match open legs [{}]",
                join_legs(&listed),
                join_legs(&self.legs)
            )));
        }
        let n = self.n;
        let sd = dim(n, sector.len());
        let mut m = Mat::zeros(dim(n, rows.len()) * sd, dim(n, cols.len()));
        let Some(t) = self.sectors.get(sector) else {
            return Ok(m);
        };
        let row_pos: Vec<usize> = rows
            .iter()
            .map(|l| self.legs.binary_search(l).unwrap())
            .collect();
        let col_pos: Vec<usize> = cols
            .iter()
            .map(|l| self.legs.binary_search(l).unwrap())
            .collect();
        for (idx, x) in t.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let d = digits(idx / sd, n, self.legs.len());
            let r = undigits(&row_pos.iter().map(|&p| d[p]).collect::<Vec<_>>(), n) * sd + idx % sd;
            let c = undigits(&col_pos.iter().map(|&p| d[p]).collect::<Vec<_>>(), n);
            m.set(r, c, x.clone());
        }
        Ok(m)
    }

    /// Contracts the open `legs` against the columns of `coeff` and opens
    /// `outer` legs indexed by its rows: `out[o, rest] = Σ_c coeff[o, c] self[c, rest]`.
    pub fn contract(&self, legs: &[Leg], coeff: &Mat, outer: &[Leg]) -> Result<FockState> {
        let n = self.n;
        let pos: Vec<usize> = legs
            .iter()
            .map(|l| {
                self.legs.binary_search(l).map_err(|_| {
                    Error::LegConflict(format!("contraction over {l}, which is not open"))
                })
            })
            .collect::<Result<_>>()?;
        let rest: Vec<usize> = (0..self.legs.len()).filter(|i| !pos.contains(i)).collect();
        let unsorted: Vec<Leg> = outer
            .iter()
            .copied()
            .chain(rest.iter().map(|&i| self.legs[i]))
            .collect();
        let mut out_legs = unsorted.clone();
        out_legs.sort();
        if out_legs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::LegConflict(format!(
                "contraction repeats a leg among [{}]",
                join_legs(&unsorted)
            )));
        }
        let order: Vec<usize> = unsorted
            .iter()
            .map(|l| out_legs.binary_search(l).unwrap())
            .collect();
        let (lo, lr) = (outer.len(), rest.len());
        let mut out = FockState::zero_with_legs(n, out_legs);
        let total = dim(n, lo + lr);
        for (sector, t) in &self.sectors {
            let sd = dim(n, sector.len());
            let mut block = vec![Scalar::zero(); total * sd];
            for (idx, x) in t.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                let d = digits(idx / sd, n, self.legs.len());
                let c = undigits(&pos.iter().map(|&p| d[p]).collect::<Vec<_>>(), n);
                let mut full = vec![0; lo + lr];
                for (i, &p) in rest.iter().enumerate() {
                    full[order[lo + i]] = d[p];
                }
                for o in 0..coeff.rows() {
                    let w = coeff.get(o, c);
                    if w.is_zero() {
                        continue;
                    }
                    for (i, od) in digits(o, n, lo).into_iter().enumerate() {
                        full[order[i]] = od;
                    }
                    block[undigits(&full, n) * sd + idx % sd] += w * x;
                }
            }
            out.add_at(sector, 0, &block);
        }
        out.prune();
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        let legs: Vec<Value> = self
            .legs
            .iter()
            .map(|l| Value::String(l.to_string()))
            .collect();
        let items = self
            .sectors
            .iter()
            .map(|(k, t)| {
                serde_json::json!({
                    "rapidities": k.iter().map(format_rational).collect::<Vec<_>>(),
                    "tensor": nest(t, self.n, self.legs.len() + k.len()),
                    "aux_legs": legs.clone(),
                })
            })
            .collect();
        Value::Array(items)
    }

    pub fn from_json(n: usize, value: &Value) -> Result<FockState> {
        let items = value
            .as_array()
            .ok_or_else(|| Error::Config("state must be a list of sectors".into()))?;
        let mut out = Self::zero(n);
        for (idx, item) in items.iter().enumerate() {
            let field = |name: &str| {
                item.get(name)
                    .ok_or_else(|| Error::Config(format!("sector {idx}: missing `{name}`")))
            };
            let ks = field("rapidities")?
                .as_array()
                .ok_or_else(|| Error::Config(format!("sector {idx}: rapidities must be a list")))?
                .iter()
                .map(|v| {
                    let s = v
                        .as_str()
                        .ok_or_else(|| Error::Config("rapidity must be a string".into()))?;
                    Ok(parse_rational(s)?)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut legs = match item.get("aux_legs") {
                None => Vec::new(),
                Some(v) => v
                    .as_array()
                    .ok_or_else(|| Error::Config(format!("sector {idx}: aux_legs must be a list")))?
                    .iter()
                    .map(|l| parse_leg(l.as_str().unwrap_or("")))
                    .collect::<Result<Vec<_>>>()?,
            };
            legs.sort();
            let mut flat = Vec::new();
            flatten(field("tensor")?, n, legs.len() + ks.len(), &mut flat)?;
            if idx == 0 {
                out.legs = legs;
            } else if out.legs != legs {
                return Err(Error::Config(
                    "all sectors must carry the same aux_legs".into(),
                ));
            }
            if ks.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::Config(format!(
                    "sector {idx}: rapidities must be ascending"
                )));
            }
            out.add_at(&ks, 0, &flat);
        }
        out.prune();
        Ok(out)
    }
}

fn join_legs(legs: &[Leg]) -> String {
    legs.iter()
        .map(Leg::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn nest(t: &[Scalar], n: usize, depth: usize) -> Value {
    if depth == 0 {
        return Value::String(format_scalar(&t[0]));
    }
    let chunk = t.len() / n;
    Value::Array(
        (0..n)
            .map(|i| nest(&t[i * chunk..(i + 1) * chunk], n, depth - 1))
            .collect(),
    )
}

fn flatten(v: &Value, n: usize, depth: usize, out: &mut Vec<Scalar>) -> Result<()> {
    if depth == 0 {
        let s = v
            .as_str()
            .ok_or_else(|| Error::Config("tensor entries must be strings".into()))?;
        out.push(parse_scalar(s)?);
        return Ok(());
    }
    let items = v
        .as_array()
        .filter(|a| a.len() == n)
        .ok_or_else(|| Error::Config(format!("tensor level must be a list of {n} entries")))?;
    for item in items {
        flatten(item, n, depth - 1, out)?;
    }
    Ok(())
}

/// An operator with labelled legs acting sector by sector.
pub trait LegOperator: fmt::Debug + Send + Sync {
    fn kets(&self) -> Vec<Label>;
    fn bras(&self) -> Vec<Label>;
    /// `input` is laid out over `bras()` then the sites of `sector`; each
    /// output tensor over `kets()` then the sites of its sector.
    fn act(
        &self,
        zf: &Zf,
        sector: &[Rational],
        input: &[Scalar],
    ) -> Result<Vec<(Vec<Rational>, Vec<Scalar>)>>;
    fn adjoint(&self) -> Result<Arc<dyn LegOperator>> {
        Err(Error::Unsupported(format!("adjoint of {}", self.name())))
    }
    fn name(&self) -> String;
}

/// `a_ℓ(k) = Σ_i a_i(k) e_i`.
#[derive(Clone, Debug)]
pub struct Annihilator {
    pub label: Label,
    pub k: Rational,
}

impl LegOperator for Annihilator {
    fn kets(&self) -> Vec<Label> {
        vec![self.label]
    }
    fn bras(&self) -> Vec<Label> {
        vec![]
    }
    fn act(
        &self,
        zf: &Zf,
        sector: &[Rational],
        input: &[Scalar],
    ) -> Result<Vec<(Vec<Rational>, Vec<Scalar>)>> {
        zf.grid.require(&self.k)?;
        zf.annihilate_raw(sector, &self.k, input)
    }
    fn adjoint(&self) -> Result<Arc<dyn LegOperator>> {
        Ok(Arc::new(Creator {
            label: self.label,
            k: self.k.clone(),
        }))
    }
    fn name(&self) -> String {
        format!("a_{}({})", self.label, format_rational(&self.k))
    }
}

/// `a†_ℓ(k) = Σ_i a†_i(k) e†_i`.
#[derive(Clone, Debug)]
pub struct Creator {
    pub label: Label,
    pub k: Rational,
}

impl LegOperator for Creator {
    fn kets(&self) -> Vec<Label> {
        vec![]
    }
    fn bras(&self) -> Vec<Label> {
        vec![self.label]
    }
    fn act(
        &self,
        zf: &Zf,
        sector: &[Rational],
        input: &[Scalar],
    ) -> Result<Vec<(Vec<Rational>, Vec<Scalar>)>> {
        zf.grid.require(&self.k)?;
        // the input's leading bra index is exactly the new leading site
        Ok(vec![zf.create_raw(sector, &self.k, input.to_vec())?])
    }
    fn adjoint(&self) -> Result<Arc<dyn LegOperator>> {
        Ok(Arc::new(Annihilator {
            label: self.label,
            k: self.k.clone(),
        }))
    }
    fn name(&self) -> String {
        format!("ad_{}({})", self.label, format_rational(&self.k))
    }
}

/// A numeric tensor: rows over the ket labels, columns over the bra labels.
#[derive(Clone, Debug)]
pub struct LegMatrix {
    pub kets: Vec<Label>,
    pub bras: Vec<Label>,
    pub matrix: Mat,
    pub tag: String,
}

fn contract_numeric(m: &Mat, input: &[Scalar], site_dim: usize) -> Vec<Scalar> {
    let mut out = vec![Scalar::zero(); m.rows() * site_dim];
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let a = m.get(r, c);
            if a.is_zero() {
                continue;
            }
            for s in 0..site_dim {
                let x = &input[c * site_dim + s];
                if !x.is_zero() {
                    out[r * site_dim + s] += a * x;
                }
            }
        }
    }
    out
}

impl LegOperator for LegMatrix {
    fn kets(&self) -> Vec<Label> {
        self.kets.clone()
    }
    fn bras(&self) -> Vec<Label> {
        self.bras.clone()
    }
    fn act(
        &self,
        zf: &Zf,
        sector: &[Rational],
        input: &[Scalar],
    ) -> Result<Vec<(Vec<Rational>, Vec<Scalar>)>> {
        let sd = dim(zf.n(), sector.len());
        Ok(vec![(
            sector.to_vec(),
            contract_numeric(&self.matrix, input, sd),
        )])
    }
    fn adjoint(&self) -> Result<Arc<dyn LegOperator>> {
        Ok(Arc::new(LegMatrix {
            kets: self.bras.clone(),
            bras: self.kets.clone(),
            matrix: self.matrix.adjoint(),
            tag: format!("{}†", self.tag),
        }))
    }
    fn name(&self) -> String {
        self.tag.clone()
    }
}

/// `R(k1, k2)` with its first factor on `legs.0`. Its adjoint is
/// `R(k2, k1)` with the factors exchanged.
#[derive(Clone, Debug)]
pub struct RFactor {
    pub legs: (Label, Label),
    pub k1: Rational,
    pub k2: Rational,
}

impl LegOperator for RFactor {
    fn kets(&self) -> Vec<Label> {
        vec![self.legs.0, self.legs.1]
    }
    fn bras(&self) -> Vec<Label> {
        vec![self.legs.0, self.legs.1]
    }
    fn act(
        &self,
        zf: &Zf,
        sector: &[Rational],
        input: &[Scalar],
    ) -> Result<Vec<(Vec<Rational>, Vec<Scalar>)>> {
        let m = zf.r.eval(&self.k1, &self.k2)?;
        let sd = dim(zf.n(), sector.len());
        Ok(vec![(sector.to_vec(), contract_numeric(&m, input, sd))])
    }
    fn adjoint(&self) -> Result<Arc<dyn LegOperator>> {
        Ok(Arc::new(RFactor {
            legs: (self.legs.1, self.legs.0),
            k1: self.k2.clone(),
            k2: self.k1.clone(),
        }))
    }
    fn name(&self) -> String {
        format!(
            "R_{}{}({}, {})",
            self.legs.0,
            self.legs.1,
            format_rational(&self.k1),
            format_rational(&self.k2)
        )
    }
}

/// `H_n = Σ_k k^n a†(k) a(k)` on the grid.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    pub order: u32,
}

pub fn power_sum(ks: &[Rational], order: u32) -> Rational {
    ks.iter()
        .fold(Rational::zero(), |acc, k| acc + pow(k, order))
}

pub fn pow(k: &Rational, e: u32) -> Rational {
    (0..e).fold(Rational::one(), |acc, _| acc * k)
}

impl LegOperator for Hamiltonian {
    fn kets(&self) -> Vec<Label> {
        vec![]
    }
    fn bras(&self) -> Vec<Label> {
        vec![]
    }
    fn act(
        &self,
        _zf: &Zf,
        sector: &[Rational],
        input: &[Scalar],
    ) -> Result<Vec<(Vec<Rational>, Vec<Scalar>)>> {
        let e = real(power_sum(sector, self.order));
        Ok(vec![(
            sector.to_vec(),
            input.iter().map(|x| x * &e).collect(),
        )])
    }
    fn adjoint(&self) -> Result<Arc<dyn LegOperator>> {
        Ok(Arc::new(self.clone()))
    }
    fn name(&self) -> String {
        format!("H_{}", self.order)
    }
}

type SectorMatrixFn = dyn Fn(&Zf, &[Rational]) -> Result<Mat> + Send + Sync;

/// An operator with one ket and one bra on the same label, acting on each
/// sector by a matrix over `aux ⊗ sites` (aux index most significant).
pub struct AuxOperator {
    label: Label,
    name: String,
    matrix: Arc<SectorMatrixFn>,
    cache: Mutex<HashMap<Vec<Rational>, Mat>>,
}

impl AuxOperator {
    pub fn new(
        label: Label,
        name: impl Into<String>,
        matrix: impl Fn(&Zf, &[Rational]) -> Result<Mat> + Send + Sync + 'static,
    ) -> Self {
        AuxOperator {
            label,
            name: name.into(),
            matrix: Arc::new(matrix),
            cache: Mutex::default(),
        }
    }

    pub fn sector_matrix(&self, zf: &Zf, sector: &[Rational]) -> Result<Mat> {
        if let Some(m) = self.cache.lock().unwrap().get(sector) {
            return Ok(m.clone());
        }
        let m = (self.matrix)(zf, sector)?;
        self.cache
            .lock()
            .unwrap()
            .insert(sector.to_vec(), m.clone());
        Ok(m)
    }
}

impl fmt::Debug for AuxOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AuxOperator({})", self.name())
    }
}

impl LegOperator for AuxOperator {
    fn kets(&self) -> Vec<Label> {
        vec![self.label]
    }
    fn bras(&self) -> Vec<Label> {
        vec![self.label]
    }
    fn act(
        &self,
        zf: &Zf,
        sector: &[Rational],
        input: &[Scalar],
    ) -> Result<Vec<(Vec<Rational>, Vec<Scalar>)>> {
        Ok(vec![(
            sector.to_vec(),
            self.sector_matrix(zf, sector)?.mul_vec(input),
        )])
    }
    fn name(&self) -> String {
        format!("{}_{}", self.name, self.label)
    }
}

/// Linear combination of operator products; each product is written left to
/// right and applied right to left.
#[derive(Clone, Debug, Default)]
pub struct Expr {
    terms: Vec<(Scalar, Vec<Arc<dyn LegOperator>>)>,
}

impl Expr {
    pub fn zero() -> Self {
        Expr::default()
    }

    pub fn one() -> Self {
        Expr::scalar(Scalar::one())
    }

    pub fn scalar(c: Scalar) -> Self {
        Expr {
            terms: vec![(c, Vec::new())],
        }
    }

    pub fn op(op: impl LegOperator + 'static) -> Self {
        Self::shared(Arc::new(op))
    }

    pub fn shared(op: Arc<dyn LegOperator>) -> Self {
        Expr {
            terms: vec![(Scalar::one(), vec![op])],
        }
    }

    pub fn scaled(mut self, c: &Scalar) -> Self {
        for (k, _) in &mut self.terms {
            *k *= c;
        }
        self
    }

    /// The anti-automorphism `†`: reverses products and conjugates
    /// coefficients and factors.
    pub fn adjoint(&self) -> Result<Expr> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (c, ops) in &self.terms {
            let rev = ops
                .iter()
                .rev()
                .map(|o| o.adjoint())
                .collect::<Result<Vec<_>>>()?;
            terms.push((c.conj(), rev));
        }
        Ok(Expr { terms })
    }

    pub fn describe(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(c, ops)| {
                let body: Vec<String> = ops.iter().map(|o| o.name()).collect();
                format!("({}) {}", format_scalar(c), body.join(" "))
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(mut self, rhs: Expr) -> Expr {
        self.terms.extend(rhs.terms);
        self
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scaled(&-Scalar::one())
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        self + (-rhs)
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (a, x) in &self.terms {
            for (b, y) in &rhs.terms {
                terms.push((a * b, x.iter().chain(y.iter()).cloned().collect()));
            }
        }
        Expr { terms }
    }
}

pub fn annihilator(label: Label, k: &Rational) -> Expr {
    Expr::op(Annihilator {
        label,
        k: k.clone(),
    })
}

pub fn creator(label: Label, k: &Rational) -> Expr {
    Expr::op(Creator {
        label,
        k: k.clone(),
    })
}

pub fn rfactor(l1: Label, l2: Label, k1: &Rational, k2: &Rational) -> Expr {
    Expr::op(RFactor {
        legs: (l1, l2),
        k1: k1.clone(),
        k2: k2.clone(),
    })
}

/// `δ_12 = Σ_i e_i ⊗ e†_i`: ket on `l1`, bra on `l2`.
pub fn delta(n: usize, l1: Label, l2: Label) -> Expr {
    Expr::op(LegMatrix {
        kets: vec![l1],
        bras: vec![l2],
        matrix: Mat::identity(n),
        tag: format!("δ_{l1}{l2}"),
    })
}

/// A numeric matrix acting on a single leg.
pub fn on_leg(label: Label, m: Mat, tag: impl Into<String>) -> Expr {
    Expr::op(LegMatrix {
        kets: vec![label],
        bras: vec![label],
        matrix: m,
        tag: tag.into(),
    })
}

pub fn hamiltonian(order: u32) -> Expr {
    Expr::op(Hamiltonian { order })
}

pub fn kronecker(a: &Rational, b: &Rational) -> Scalar {
    if a == b {
        Scalar::one()
    } else {
        Scalar::zero()
    }
}

/// The ZF algebra of one R-matrix, represented on the grid's Fock space.
#[derive(Clone, Debug)]
pub struct Zf {
    r: RMatrix,
    grid: RapidityGrid,
    grams: Arc<Mutex<HashMap<Vec<Rational>, Mat>>>,
}

impl Zf {
    pub fn new(r: RMatrix, grid: RapidityGrid) -> Self {
        Zf {
            r,
            grid,
            grams: Arc::default(),
        }
    }

    pub fn r(&self) -> &RMatrix {
        &self.r
    }

    pub fn grid(&self) -> &RapidityGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.r.n()
    }

    pub fn vacuum(&self) -> FockState {
        FockState::vacuum(self.n())
    }

    /// Moves a new leading site with rapidity `k` into ascending position.
    /// `w` is laid out over the new site followed by `sector`.
    pub(crate) fn create_raw(
        &self,
        sector: &[Rational],
        k: &Rational,
        mut w: Vec<Scalar>,
    ) -> Result<(Vec<Rational>, Vec<Scalar>)> {
        let n = self.n();
        let p = sector.len();
        let swap = Mat::swap(n);
        let mut t = 0;
        while t < p && sector[t] < *k {
            // a†_i(K) a†_j(κ) = Σ R(κ,K)_{(j',i'),(j,i)} a†_{j'}(κ) a†_{i'}(K)
            let rp = self.r.eval(&sector[t], k)?.mul(&swap);
            w = apply_on_legs(&rp, &[t, t + 1], n, p + 1, &w);
            t += 1;
        }
        let mut out = sector.to_vec();
        out.insert(t, k.clone());
        Ok((out, w))
    }

    /// `a_c(k)` on a sector tensor, for every `c`: outputs are laid out over
    /// `c` followed by the remaining sites.
    pub(crate) fn annihilate_raw(
        &self,
        sector: &[Rational],
        k: &Rational,
        v: &[Scalar],
    ) -> Result<Vec<(Vec<Rational>, Vec<Scalar>)>> {
        let n = self.n();
        let p = sector.len();
        let sd = dim(n, p);
        // legs: output index c, running annihilator index γ, sites
        let mut w = vec![Scalar::zero(); n * n * sd];
        for c in 0..n {
            let base = (c * n + c) * sd;
            w[base..base + sd].clone_from_slice(v);
        }
        let mut out: BTreeMap<Vec<Rational>, Vec<Scalar>> = BTreeMap::new();
        for j in 0..p {
            if sector[j] == *k {
                let mut rest = sector.to_vec();
                rest.remove(j);
                let acc = out
                    .entry(rest)
                    .or_insert_with(|| vec![Scalar::zero(); n * dim(n, p - 1)]);
                for (idx, x) in w.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    let mut d = digits(idx, n, p + 2);
                    if d[1] != d[2 + j] {
                        continue;
                    }
                    d.remove(2 + j);
                    d.remove(1);
                    acc[undigits(&d, n)] += x;
                }
            }
            // a_γ(k) a†_α(k_j) = Σ R(k,k_j)_{(γ,j'),(i',α)} a†_{j'}(k_j) a_{i'}(k) + δ
            let r = self.r.eval(k, &sector[j])?;
            let size = n * n;
            let q = Mat::from_fn(size, size, |row, col| {
                let (i2, j2) = (row / n, row % n);
                let (g, a) = (col / n, col % n);
                r.get(g * n + j2, i2 * n + a).clone()
            });
            w = apply_on_legs(&q, &[1, 2 + j], n, p + 2, &w);
        }
        Ok(out.into_iter().collect())
    }

    /// `a†_α(k) s`.
    pub fn create(&self, s: &FockState, k: &Rational, alpha: usize) -> Result<FockState> {
        self.grid.require(k)?;
        self.check_color(alpha)?;
        let n = self.n();
        s.map_blocks(|sector, v| {
            let mut w = vec![Scalar::zero(); n * v.len()];
            w[alpha * v.len()..(alpha + 1) * v.len()].clone_from_slice(v);
            Ok(vec![self.create_raw(sector, k, w)?])
        })
    }

    /// `a_β(k) s`.
    pub fn annihilate(&self, s: &FockState, k: &Rational, beta: usize) -> Result<FockState> {
        self.grid.require(k)?;
        self.check_color(beta)?;
        let n = self.n();
        s.map_blocks(|sector, v| {
            Ok(self
                .annihilate_raw(sector, k, v)?
                .into_iter()
                .map(|(s2, t)| {
                    let chunk = t.len() / n;
                    (s2, t[beta * chunk..(beta + 1) * chunk].to_vec())
                })
                .collect())
        })
    }

    /// `H_n s`.
    pub fn apply_hamiltonian(&self, s: &FockState, order: u32) -> FockState {
        s.map_blocks(|sector, v| {
            let e = real(power_sum(sector, order));
            Ok(vec![(sector.to_vec(), v.iter().map(|x| x * &e).collect())])
        })
        .expect("hamiltonian is total")
    }

    fn check_color(&self, c: usize) -> Result<()> {
        if c < self.n() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "color {c} out of range for N = {}",
                self.n()
            )))
        }
    }

    /// Applies one leg operator.
    pub fn apply_op(&self, op: &dyn LegOperator, s: &FockState) -> Result<FockState> {
        let n = self.n();
        let kets = op.kets();
        let bras = op.bras();
        let mut s = std::borrow::Cow::Borrowed(s);
        for &b in &bras {
            if !s.has(Leg::ket(b)) {
                if s.has(Leg::bra(b)) {
                    return Err(Error::LegConflict(format!(
                        "{} meets an open bra {b}",
                        op.name()
                    )));
                }
                s = std::borrow::Cow::Owned(s.with_identity_leg(b)?);
            }
        }
        for &k in &kets {
            if s.has(Leg::ket(k)) && !bras.contains(&k) {
                return Err(Error::LegConflict(format!(
                    "{} meets an open ket {k}",
                    op.name()
                )));
            }
        }
        let contracted: Vec<usize> = bras
            .iter()
            .map(|b| s.legs.binary_search(&Leg::ket(*b)).unwrap())
            .collect();
        let rest: Vec<usize> = (0..s.legs.len())
            .filter(|i| !contracted.contains(i))
            .collect();
        let unsorted: Vec<Leg> = rest
            .iter()
            .map(|&i| s.legs[i])
            .chain(kets.iter().map(|&k| Leg::ket(k)))
            .collect();
        let mut out_legs = unsorted.clone();
        out_legs.sort();
        if out_legs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::LegConflict(format!("{} repeats a leg", op.name())));
        }
        let order: Vec<usize> = unsorted
            .iter()
            .map(|l| out_legs.binary_search(l).unwrap())
            .collect();
        let (lr, lk, lb, ls) = (rest.len(), kets.len(), bras.len(), s.legs.len());
        let mut out = FockState::zero_with_legs(n, out_legs);
        for (sector, t) in &s.sectors {
            let sd = dim(n, sector.len());
            for r in 0..dim(n, lr) {
                let rd = digits(r, n, lr);
                let mut input = vec![Scalar::zero(); dim(n, lb) * sd];
                let mut any = false;
                for b in 0..dim(n, lb) {
                    let bd = digits(b, n, lb);
                    let mut full = vec![0; ls];
                    for (i, &pos) in rest.iter().enumerate() {
                        full[pos] = rd[i];
                    }
                    for (i, &pos) in contracted.iter().enumerate() {
                        full[pos] = bd[i];
                    }
                    let base = undigits(&full, n) * sd;
                    let block = &t[base..base + sd];
                    if block.iter().any(|x| !x.is_zero()) {
                        any = true;
                        input[b * sd..(b + 1) * sd].clone_from_slice(block);
                    }
                }
                if !any {
                    continue;
                }
                for (s2, y) in op.act(self, sector, &input)? {
                    let sd2 = dim(n, s2.len());
                    for kk in 0..dim(n, lk) {
                        let kd = digits(kk, n, lk);
                        let mut od = vec![0; lr + lk];
                        for i in 0..lr {
                            od[order[i]] = rd[i];
                        }
                        for i in 0..lk {
                            od[order[lr + i]] = kd[i];
                        }
                        out.add_at(&s2, undigits(&od, n) * sd2, &y[kk * sd2..(kk + 1) * sd2]);
                    }
                }
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn apply(&self, e: &Expr, s: &FockState) -> Result<FockState> {
        let mut total: Option<FockState> = None;
        for (c, ops) in &e.terms {
            if c.is_zero() {
                continue;
            }
            let mut st = s.clone();
            for op in ops.iter().rev() {
                st = self.apply_op(op.as_ref(), &st)?;
            }
            let st = st.scale(c);
            total = Some(match total {
                None => st,
                Some(acc) => acc.add(&st)?,
            });
        }
        Ok(total.unwrap_or_else(|| FockState::zero_with_legs(self.n(), s.legs.clone())))
    }

    /// Records `max |lhs ψ − rhs ψ|` for every sector with at most `max_p`
    /// particles.
    pub fn record_identity(
        &self,
        report: &mut ReportBuilder,
        context: &str,
        lhs: &Expr,
        rhs: &Expr,
        max_p: usize,
    ) -> Result<()> {
        for sector in self.grid.sectors(max_p) {
            let probe = FockState::probe(self.n(), &sector);
            let res = self
                .apply(lhs, &probe)?
                .residual(&self.apply(rhs, &probe)?)?;
            report.record(
                || format!("{context} on sector {}", fmt_tuple(&sector)),
                res,
            );
        }
        Ok(())
    }

    pub fn check_identity(
        &self,
        check: &str,
        lhs: &Expr,
        rhs: &Expr,
        max_p: usize,
        mode: Mode,
    ) -> Result<Report> {
        let mut b = ReportBuilder::new(check, mode);
        self.record_identity(&mut b, check, lhs, rhs, max_p)?;
        Ok(b.finish())
    }

    /// Gram matrix of a sector's basis: entry `(α, β)` is the vacuum
    /// component of `a_{α_p}(k_p) … a_{α_1}(k_1) a†_{β_1}(k_1) … a†_{β_p}(k_p) Ω`.
    pub fn gram(&self, sector: &[Rational]) -> Result<Mat> {
        if let Some(g) = self.grams.lock().unwrap().get(sector) {
            return Ok(g.clone());
        }
        let n = self.n();
        let p = sector.len();
        let mut st = FockState::probe(n, sector);
        for (i, k) in sector.iter().enumerate() {
            st = self.apply_op(
                &Annihilator {
                    label: i as Label + 1,
                    k: k.clone(),
                },
                &st,
            )?;
        }
        let sd = dim(n, p);
        let g = match st.sector(&[]) {
            Some(t) => Mat::from_vec(sd, sd, t.to_vec()),
            None => Mat::zeros(sd, sd),
        };
        self.grams
            .lock()
            .unwrap()
            .insert(sector.to_vec(), g.clone());
        Ok(g)
    }

    /// Fock inner product `⟨a|b⟩` of leg-free states.
    pub fn inner(&self, a: &FockState, b: &FockState) -> Result<Scalar> {
        if !a.legs.is_empty() || !b.legs.is_empty() {
            return Err(Error::LegConflict(
                "inner product needs leg-free states".into(),
            ));
        }
        let mut total = Scalar::zero();
        for (sector, x) in &a.sectors {
            if let Some(y) = b.sectors.get(sector) {
                let gy = self.gram(sector)?.mul_vec(y);
                for (xi, gi) in x.iter().zip(&gy) {
                    total += xi.conj() * gi;
                }
            }
        }
        Ok(total)
    }
}

/// The three exchange relations at one rapidity pair, as `(name, lhs, rhs)`.
pub fn zf_relations(n: usize, k1: &Rational, k2: &Rational) -> Vec<(String, Expr, Expr)> {
    zf_relations_with(n, k1, k2, &annihilator, &creator)
}

/// [`zf_relations`] with the generators replaced by images `a(label, k)` and
/// `ad(label, k)`, e.g. under an algebra map.
pub fn zf_relations_with(
    n: usize,
    k1: &Rational,
    k2: &Rational,
    a: &dyn Fn(Label, &Rational) -> Expr,
    ad: &dyn Fn(Label, &Rational) -> Expr,
) -> Vec<(String, Expr, Expr)> {
    let at = format!("(k1={}, k2={})", format_rational(k1), format_rational(k2));
    vec![
        (
            format!("a a exchange {at}"),
            a(1, k1) * a(2, k2),
            rfactor(2, 1, k2, k1) * a(2, k2) * a(1, k1),
        ),
        (
            format!("ad ad exchange {at}"),
            ad(1, k1) * ad(2, k2),
            ad(2, k2) * ad(1, k1) * rfactor(2, 1, k2, k1),
        ),
        (
            format!("a ad exchange {at}"),
            a(1, k1) * ad(2, k2),
            ad(2, k2) * rfactor(1, 2, k1, k2) * a(1, k1)
                + delta(n, 1, 2).scaled(&kronecker(k1, k2)),
        ),
    ]
}

/// Checks the exchange relations and their images under `†` as operator
/// identities on every sector with at most `max_p` particles, for every
/// pair in `pairs`. Also checks that `a(k)` and `a†(k)` are adjoint with
/// respect to the Fock inner product.
pub fn check_zf_relations(
    zf: &Zf,
    pairs: &[(Rational, Rational)],
    max_p: usize,
    mode: Mode,
) -> Result<Report> {
    let mut b = ReportBuilder::new("zf-relations", mode);
    for (k1, k2) in pairs {
        for (name, lhs, rhs) in zf_relations(zf.n(), k1, k2) {
            zf.record_identity(&mut b, &name, &lhs, &rhs, max_p)?;
            let name = format!("adjoint of {name}");
            zf.record_identity(&mut b, &name, &lhs.adjoint()?, &rhs.adjoint()?, max_p)?;
        }
    }
    record_fock_adjointness(zf, &mut b, max_p)?;
    Ok(b.finish())
}

/// `⟨φ|e ψ⟩ = ⟨e_dag φ|ψ⟩` for the Fock inner product, on every pair of
/// sectors with at most `max_p` particles and every value of the open legs.
/// An open leg `(ℓ, ket)` of `e` pairs with `(ℓ, bra)` of `e_dag`.
pub fn record_fock_adjoint(
    zf: &Zf,
    b: &mut ReportBuilder,
    context: &str,
    e: &Expr,
    e_dag: &Expr,
    max_p: usize,
) -> Result<()> {
    let n = zf.n();
    let sectors = zf.grid.sectors(max_p);
    let fwd: Vec<FockState> = sectors
        .iter()
        .map(|s| zf.apply(e, &FockState::probe(n, s)))
        .collect::<Result<_>>()?;
    let bwd: Vec<FockState> = sectors
        .iter()
        .map(|s| zf.apply(e_dag, &FockState::probe(n, s)))
        .collect::<Result<_>>()?;
    for (i, src) in sectors.iter().enumerate() {
        for (j, dst) in sectors.iter().enumerate() {
            let (f, g) = (&fwd[i], &bwd[j]);
            let open: Vec<Leg> = f
                .legs
                .iter()
                .filter(|l| l.label < PROBE_BASE)
                .copied()
                .collect();
            let flipped: Vec<Leg> = open
                .iter()
                .map(|l| Leg {
                    label: l.label,
                    kind: l.kind.flip(),
                })
                .collect();
            let mut expect: Vec<Leg> = flipped.clone();
            expect.extend(probe_legs(dst.len()));
            expect.sort();
            if g.legs != expect {
                return Err(Error::LegConflict(format!(
                    "{context}: adjoint has legs [{}], expected [{}]",
                    join_legs(&g.legs),
                    join_legs(&expect)
                )));
            }
            if f.sector(dst).is_none() && g.sector(src).is_none() {
                continue;
            }
            let fm = f.sector_matrix(dst, &open, &probe_legs(src.len()))?;
            let gm = g.sector_matrix(src, &flipped, &probe_legs(dst.len()))?;
            let (gs, gd) = (zf.gram(src)?, zf.gram(dst)?);
            let (ds, dd) = (dim(n, src.len()), dim(n, dst.len()));
            let mut worst = Rational::zero();
            for x in 0..dim(n, open.len()) {
                let fx = Mat::from_fn(dd, ds, |r, c| fm.get(x * dd + r, c).clone());
                let gx = Mat::from_fn(ds, dd, |r, c| gm.get(x * ds + r, c).clone());
                let res = gd.mul(&fx).sub(&gx.adjoint().mul(&gs)).max_abs();
                if res > worst {
                    worst = res;
                }
            }
            b.record(
                || format!("{context} from {} to {}", fmt_tuple(src), fmt_tuple(dst)),
                worst,
            );
        }
    }
    Ok(())
}

/// `⟨φ|a†_α(k)ψ⟩ = ⟨a_α(k)φ|ψ⟩` on sector bases, in matrix form
/// `G' C_α = A_α^H G`.
pub fn record_fock_adjointness(zf: &Zf, b: &mut ReportBuilder, max_p: usize) -> Result<()> {
    let n = zf.n();
    for k in zf.grid.points() {
        for sector in zf.grid.sectors(max_p.saturating_sub(1)) {
            let mut bigger = sector.clone();
            bigger.insert(sector.partition_point(|x| x < k), k.clone());
            let (sd, bd) = (dim(n, sector.len()), dim(n, bigger.len()));
            let created = zf.apply_op(
                &Creator {
                    label: 1,
                    k: k.clone(),
                },
                &FockState::probe(n, &sector),
            )?;
            let removed = zf.apply_op(
                &Annihilator {
                    label: 1,
                    k: k.clone(),
                },
                &FockState::probe(n, &bigger),
            )?;
            let g_small = zf.gram(&sector)?;
            let g_big = zf.gram(&bigger)?;
            let zeros = vec![Scalar::zero(); n * sd * bd];
            let ct = created.sector(&bigger).unwrap_or(&zeros);
            let at = removed.sector(&sector).unwrap_or(&zeros);
            let mut worst = Rational::zero();
            for alpha in 0..n {
                // created legs: bra 1, probes (over the small sector), sites of `bigger`
                let c = Mat::from_fn(bd, sd, |row, col| ct[(alpha * sd + col) * bd + row].clone());
                // removed legs: ket 1, probes (over `bigger`), sites of `sector`
                let a = Mat::from_fn(sd, bd, |row, col| at[(alpha * bd + col) * sd + row].clone());
                let res = g_big.mul(&c).sub(&a.adjoint().mul(&g_small)).max_abs();
                if res > worst {
                    worst = res;
                }
            }
            b.record(
                || {
                    format!(
                        "adjointness of a({}) on sector {}",
                        format_rational(k),
                        fmt_tuple(&sector)
                    )
                },
                worst,
            );
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, sint};

    fn k(v: i64) -> Rational {
        int(v)
    }

    fn zf(grid: &[i64]) -> Zf {
        Zf::new(
            RMatrix::rational(2, int(1)).unwrap(),
            RapidityGrid::from_ints(grid).unwrap(),
        )
    }

    #[test]
    fn grid_validation() {
        assert!(RapidityGrid::from_ints(&[1, 0]).is_err());
        assert!(RapidityGrid::from_ints(&[1, 1]).is_err());
        let g = RapidityGrid::from_ints(&[2, -1, 1, -2]).unwrap();
        assert!(g.negation_closed());
        assert_eq!(g.points()[0], k(-2));
        assert!(!RapidityGrid::from_ints(&[1, 2]).unwrap().negation_closed());
        assert_eq!(
            RapidityGrid::from_ints(&[1, 2, 3])
                .unwrap()
                .sectors(3)
                .len(),
            20
        );
    }

    #[test]
    fn vacuum_is_killed() {
        let z = zf(&[1, 2]);
        let s = z.annihilate(&z.vacuum(), &k(1), 0).unwrap();
        assert!(s.is_zero());
        assert!(z.apply_hamiltonian(&z.vacuum(), 3).is_zero());
    }

    #[test]
    fn create_then_annihilate_gives_kronecker() {
        let z = zf(&[1, 2]);
        for a in 0..2 {
            let one = z.create(&z.vacuum(), &k(1), a).unwrap();
            assert_eq!(one, FockState::basis(2, &[k(1)], &[a]).unwrap());
            for b in 0..2 {
                let back = z.annihilate(&one, &k(1), b).unwrap();
                let expect = if a == b {
                    z.vacuum()
                } else {
                    FockState::zero(2)
                };
                assert_eq!(back, expect);
                assert!(z.annihilate(&one, &k(2), b).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn create_dresses_with_one_exchange() {
        let z = zf(&[1, 2]);
        // a†_0(2) a†_1(1) Ω = Σ R(1,2)_{(j',i'),(1,0)} a†_{j'}(1) a†_{i'}(2) Ω
        let s = z
            .create(&z.create(&z.vacuum(), &k(1), 1).unwrap(), &k(2), 0)
            .unwrap();
        let r = z.r().eval(&k(1), &k(2)).unwrap();
        let expect: Vec<Scalar> = (0..4).map(|row| r.get(row, 2).clone()).collect();
        assert_eq!(s.sector(&[k(1), k(2)]).unwrap(), expect.as_slice());

        let same = z
            .create(&z.create(&z.vacuum(), &k(1), 1).unwrap(), &k(1), 0)
            .unwrap();
        assert_eq!(same, FockState::basis(2, &[k(1), k(1)], &[0, 1]).unwrap());
    }

    #[test]
    fn annihilate_larger_rapidity_in_two_particle_state() {
        let z = zf(&[1, 2]);
        // a_0(2) a†_0(1) a†_1(2) Ω = Σ R(2,1)_{(0,j'),(i',0)} a†_{j'}(1) [a_{i'}(2) a†_1(2) Ω]
        //                          = Σ_j' R(2,1)_{(0,j'),(1,0)} a†_{j'}(1) Ω
        let s = FockState::basis(2, &[k(1), k(2)], &[0, 1]).unwrap();
        let out = z.annihilate(&s, &k(2), 0).unwrap();
        let r = z.r().eval(&k(2), &k(1)).unwrap();
        let expect: Vec<Scalar> = (0..2).map(|j| r.get(j, 2).clone()).collect();
        assert_eq!(out.sector(&[k(1)]).unwrap(), expect.as_slice());
    }

    #[test]
    fn hamiltonian_eigenvalues() {
        let z = zf(&[1, 2]);
        let s = FockState::basis(2, &[k(1), k(2)], &[1, 0]).unwrap();
        assert_eq!(z.apply_hamiltonian(&s, 2), s.scale(&sint(5)));
        assert_eq!(z.apply_hamiltonian(&s, 0), s.scale(&sint(2)));
    }

    #[test]
    fn gram_matrices() {
        let z = zf(&[1, 2]);
        assert_eq!(z.gram(&[k(1), k(2)]).unwrap(), Mat::identity(4));
        assert_eq!(
            z.gram(&[k(1), k(1)]).unwrap(),
            Mat::identity(4).scale(&sint(2))
        );
    }

    #[test]
    fn zf_relations_hold_on_small_grid() {
        let z = zf(&[1, 2]);
        let pairs: Vec<_> = [(1, 1), (1, 2), (2, 1)]
            .iter()
            .map(|&(a, b)| (k(a), k(b)))
            .collect();
        let rep = check_zf_relations(&z, &pairs, 2, Mode::Exact).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn dropping_contraction_term_fails() {
        let z = zf(&[1, 2]);
        let lhs = annihilator(1, &k(1)) * creator(2, &k(1));
        let rhs = creator(2, &k(1)) * rfactor(1, 2, &k(1), &k(1)) * annihilator(1, &k(1));
        let rep = z
            .check_identity("a ad without contraction", &lhs, &rhs, 1, Mode::Exact)
            .unwrap();
        assert!(!rep.pass);
        assert!(rep.witness.unwrap().sample.contains("sector ()"));
    }

    #[test]
    fn undeformed_limit_is_bosonic() {
        let z = Zf::new(
            RMatrix::trivial(1),
            RapidityGrid::from_ints(&[1, 2]).unwrap(),
        );
        let pairs = vec![(k(1), k(1)), (k(1), k(2))];
        assert!(check_zf_relations(&z, &pairs, 2, Mode::Exact).unwrap().pass);
        let one = z.create(&z.vacuum(), &k(1), 0).unwrap();
        let two = z.create(&one, &k(1), 0).unwrap();
        // a a† a† Ω = 2 a† Ω at equal rapidity
        assert_eq!(z.annihilate(&two, &k(1), 0).unwrap(), one.scale(&sint(2)));
    }

    #[test]
    fn leg_conflicts_are_errors() {
        let z = zf(&[1, 2]);
        let e = annihilator(1, &k(1)) * annihilator(1, &k(2));
        assert!(matches!(
            z.apply(&e, &z.vacuum()),
            Err(Error::LegConflict(_))
        ));
        assert!(matches!(
            z.create(&z.vacuum(), &k(3), 0),
            Err(Error::OffGrid(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let z = zf(&[1, 2]);
        let s = z
            .apply(
                &creator(1, &k(2)),
                &FockState::basis(2, &[k(1)], &[1]).unwrap(),
            )
            .unwrap();
        let back = FockState::from_json(2, &s.to_json()).unwrap();
        assert_eq!(back, s);
    }
}
