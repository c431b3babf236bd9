//! Words in the generators `a(k)`, `a†(k)`, `b(k)` and their normal forms.
//!
//! A word of length `L` carries site labels `1..=L` in reading order. Each
//! `a` or `a†` symbol has one color slot, each `b` has two (row, column).
//! A normal form is a sum of terms: a string of head symbols together with a
//! coefficient tensor over the word's slots (outer) followed by the term's
//! slots. The term stands for
//! `Σ_idx C[outer, idx] · s_1[idx_1] … s_m[idx_m]`.
//!
//! Normal order puts `a†` first, then `b`, then `a`, with rapidities
//! ascending inside the `a†` and `a` strings. `b` symbols sort by `|k|`, then
//! `k`, through the `b`–`b` exchange relation; an adjacent pair
//! `b(k) b(-k)` is reduced through `Σ_y b_{xy}(k) b_{yw}(-k) = δ_{xw}`,
//! rewriting the `y = 0` summand.
//! In words containing `b`, `a` and `a†` denote the boundary generators.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, ParseError, Result};
use crate::fock::Expr;
use crate::fock::{annihilator, creator, fmt_tuple, FockState, Label, Leg, RapidityGrid, Zf};
use crate::linalg::{digits, dim, max_magnitude, undigits, Mat};
use crate::report::{Mode, Report, ReportBuilder};
use crate::rmatrix::RMatrix;
use crate::scalar::{
    format_rational, format_scalar, half, magnitude, parse_rational, Rational, Scalar,
};

/// Generator kinds, in normal-order position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gen {
    Ad,
    B,
    A,
}

impl Gen {
    fn name(self) -> &'static str {
        match self {
            Gen::A => "a",
            Gen::Ad => "ad",
            Gen::B => "b",
        }
    }

    fn slots(self) -> usize {
        if self == Gen::B {
            2
        } else {
            1
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol {
    pub gen: Gen,
    pub k: Rational,
}

impl Symbol {
    pub fn new(gen: Gen, k: Rational) -> Self {
        Symbol { gen, k }
    }

    pub fn a(k: Rational) -> Self {
        Symbol::new(Gen::A, k)
    }

    pub fn ad(k: Rational) -> Self {
        Symbol::new(Gen::Ad, k)
    }

    pub fn b(k: Rational) -> Self {
        Symbol::new(Gen::B, k)
    }

    pub fn adjoint(&self) -> Symbol {
        match self.gen {
            Gen::A => Symbol::ad(self.k.clone()),
            Gen::Ad => Symbol::a(self.k.clone()),
            Gen::B => Symbol::b(-&self.k),
        }
    }

    /// Open legs of this symbol on `label`: `a` a ket, `a†` a bra, `b` a
    /// ket (row) then a bra (column).
    pub fn legs(&self, label: Label) -> Vec<Leg> {
        match self.gen {
            Gen::A => vec![Leg::ket(label)],
            Gen::Ad => vec![Leg::bra(label)],
            Gen::B => vec![Leg::ket(label), Leg::bra(label)],
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.gen.name(), format_rational(&self.k))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word {
    pub symbols: Vec<Symbol>,
}

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word { symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn has_b(&self) -> bool {
        self.symbols.iter().any(|s| s.gen == Gen::B)
    }

    fn slots(&self) -> usize {
        slot_count(&self.symbols)
    }

    /// Legs of the word with site labels `1..=L`.
    pub fn legs(&self) -> Vec<Leg> {
        word_legs(&self.symbols, 1)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.symbols.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.symbols.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

fn slot_count(symbols: &[Symbol]) -> usize {
    symbols.iter().map(|s| s.gen.slots()).sum()
}

fn word_legs(symbols: &[Symbol], first: Label) -> Vec<Leg> {
    symbols
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.legs(first + i as Label))
        .collect()
}

/// Parses whitespace-separated tokens `a(k)`, `ad(k)`, `b(k)` with rational
/// `k` on the grid. `b` needs a negation-closed grid.
pub fn parse_word(text: &str, grid: &RapidityGrid) -> Result<Word> {
    let mut symbols = Vec::new();
    let mut col = 1;
    for token in text.split_inclusive(char::is_whitespace) {
        let trimmed = token.trim_end();
        let lead = trimmed.len() - trimmed.trim_start().len();
        let tok = trimmed.trim_start();
        let at = col + lead;
        col += token.chars().count();
        if tok.is_empty() {
            continue;
        }
        let open = tok
            .find('(')
            .ok_or_else(|| ParseError::syntax(1, at, format!("expected `name(k)`, got `{tok}`")))?;
        if !tok.ends_with(')') {
            return Err(ParseError::syntax(1, at + tok.len() - 1, "missing `)`").into());
        }
        let gen = match &tok[..open] {
            "a" => Gen::A,
            "ad" => Gen::Ad,
            "b" => Gen::B,
            other => {
                return Err(
                    ParseError::syntax(1, at, format!("unknown generator `{other}`")).into(),
                )
            }
        };
        let inner = &tok[open + 1..tok.len() - 1];
        let k =
            parse_rational(inner).map_err(|e| ParseError::syntax(1, at + open + 1, e.message))?;
        grid.require(&k)?;
        if gen == Gen::B {
            grid.require_negation_closed()?;
        }
        symbols.push(Symbol::new(gen, k));
    }
    Ok(Word { symbols })
}

/// The image of a word under `†`: reversed, with `a ↔ a†` and
/// `b(k) ↦ b(-k)`.
pub fn adjoint_word(w: &Word) -> Word {
    Word {
        symbols: w.symbols.iter().rev().map(Symbol::adjoint).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algebra {
    /// Plain exchange relations.
    Zf,
    /// Boundary relations: `a`, `a†` stand for the boundary generators and
    /// `b` may occur.
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Always rewrite the leftmost reducible pair.
    Leftmost,
    /// Always rewrite the rightmost reducible pair.
    Rightmost,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalForm {
    n: usize,
    outer: Vec<Symbol>,
    terms: BTreeMap<Vec<Symbol>, Vec<Scalar>>,
}

impl NormalForm {
    pub fn n(&self) -> usize {
        self.n
    }

    /// The word whose slots index the coefficients' outer part.
    pub fn outer(&self) -> Word {
        Word::new(self.outer.clone())
    }

    /// Terms as `(head symbols, coefficient)`, coefficients laid out over
    /// the outer slots followed by the head slots.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Symbol>, &Vec<Scalar>)> {
        self.terms.iter()
    }

    pub fn term(&self, symbols: &[Symbol]) -> Option<&[Scalar]> {
        self.terms.get(symbols).map(|v| v.as_slice())
    }

    /// Coefficient of one term as a matrix: rows over outer slots, columns
    /// over head slots.
    pub fn coefficient(&self, symbols: &[Symbol]) -> Option<Mat> {
        let c = self.terms.get(symbols)?;
        let rows = dim(self.n, slot_count(&self.outer));
        Some(Mat::from_vec(rows, c.len() / rows, c.clone()))
    }

    /// The image under `†`, term by term. Not normal ordered in general.
    pub fn adjoint(&self) -> NormalForm {
        let outer_perm = adjoint_perm(&self.outer, 0);
        let base = slot_count(&self.outer);
        let mut terms = BTreeMap::new();
        for (syms, c) in &self.terms {
            let mut perm = outer_perm.clone();
            perm.extend(adjoint_perm(syms, base));
            let out = permute_axes(c, self.n, &perm);
            let out: Vec<Scalar> = out.into_iter().map(|x| x.conj()).collect();
            terms.insert(syms.iter().rev().map(Symbol::adjoint).collect(), out);
        }
        NormalForm {
            n: self.n,
            outer: self.outer.iter().rev().map(Symbol::adjoint).collect(),
            terms,
        }
    }

    /// Largest coefficient difference over all terms.
    pub fn residual(&self, other: &NormalForm) -> Result<Rational> {
        if self.n != other.n || self.outer != other.outer {
            return Err(Error::InvalidParameter(
                "normal forms of different words".into(),
            ));
        }
        let mut worst = Rational::zero();
        for (syms, c) in &self.terms {
            let r = match other.terms.get(syms) {
                Some(d) => c
                    .iter()
                    .zip(d)
                    .map(|(x, y)| magnitude(&(x - y)))
                    .max()
                    .unwrap_or_else(Rational::zero),
                None => max_magnitude(c),
            };
            worst = worst.max(r);
        }
        for (syms, d) in &other.terms {
            if !self.terms.contains_key(syms) {
                worst = worst.max(max_magnitude(d));
            }
        }
        Ok(worst)
    }

    pub fn is_normal(&self) -> bool {
        let base = slot_count(&self.outer);
        self.terms.iter().all(|(s, c)| {
            find_reducible(s, &to_sparse(c), self.n, base, Strategy::Leftmost).is_none()
        })
    }

    /// Evaluates the normal form on `s` in a realization. The result has the
    /// legs of the outer word (site labels `1..=L`) plus those of `s`.
    pub fn apply(&self, real: &dyn Realization, s: &FockState) -> Result<FockState> {
        let zf = real.zf();
        let outer_legs = word_legs(&self.outer, 1);
        let rows = dim(self.n, outer_legs.len());
        let mut total: Option<FockState> = None;
        for (syms, c) in &self.terms {
            let mut st = s.clone();
            for (j, sym) in syms.iter().enumerate().rev() {
                st = zf.apply(&real.symbol(sym, TERM_BASE + j as Label)?, &st)?;
            }
            let legs = word_legs(syms, TERM_BASE);
            let m = Mat::from_vec(rows, c.len() / rows, c.clone());
            let st = st.contract(&legs, &m, &outer_legs)?;
            total = Some(match total {
                None => st,
                Some(acc) => acc.add(&st)?,
            });
        }
        match total {
            Some(t) => Ok(t),
            None => s.contract(&[], &Mat::zeros(rows, 1), &outer_legs),
        }
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(syms, c)| {
                json!({
                    "symbols": Word::new(syms.clone()).to_string(),
                    "coefficient": c.iter().map(format_scalar).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({ "N": self.n, "word": self.outer().to_string(), "terms": terms })
    }
}

const TERM_BASE: Label = 1 << 16;

/// Old axis feeding each new axis when a symbol string is replaced by its
/// adjoint; `b` swaps row and column.
fn adjoint_perm(symbols: &[Symbol], base: usize) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(symbols.len());
    let mut at = base;
    for s in symbols {
        offsets.push(at);
        at += s.gen.slots();
    }
    let mut perm = Vec::new();
    for (s, &o) in symbols.iter().zip(&offsets).rev() {
        if s.gen == Gen::B {
            perm.extend([o + 1, o]);
        } else {
            perm.push(o);
        }
    }
    perm
}

fn permute_axes(c: &[Scalar], n: usize, perm: &[usize]) -> Vec<Scalar> {
    let axes = perm.len();
    let mut out = vec![Scalar::zero(); c.len()];
    for (idx, x) in c.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        let d = digits(idx, n, axes);
        let nd: Vec<usize> = perm.iter().map(|&p| d[p]).collect();
        out[undigits(&nd, n)] = x.clone();
    }
    out
}

/// How symbols act on a Fock space.
pub trait Realization {
    fn zf(&self) -> &Zf;
    fn symbol(&self, s: &Symbol, label: Label) -> Result<Expr>;
}

impl Realization for Zf {
    fn zf(&self) -> &Zf {
        self
    }

    fn symbol(&self, s: &Symbol, label: Label) -> Result<Expr> {
        match s.gen {
            Gen::A => Ok(annihilator(label, &s.k)),
            Gen::Ad => Ok(creator(label, &s.k)),
            Gen::B => Err(Error::Unsupported(
                "`b` needs a boundary realization".into(),
            )),
        }
    }
}

/// The word as an operator, with site labels `1..=L`.
pub fn word_expr(w: &Word, real: &dyn Realization) -> Result<Expr> {
    let mut e = Expr::one();
    for (i, s) in w.symbols.iter().enumerate() {
        e = e * real.symbol(s, i as Label + 1)?;
    }
    Ok(e)
}

/// `b` factors sort by `|k|` and then `k`, so `b(-k) b(k)` stay adjacent.
fn b_key(k: &Rational) -> (Rational, Rational) {
    (k.abs(), k.clone())
}

fn reducible_pair(x: &Symbol, y: &Symbol) -> bool {
    match (x.gen, y.gen) {
        (Gen::A, Gen::A) | (Gen::Ad, Gen::Ad) => x.k > y.k,
        (Gen::B, Gen::B) => false,
        (gx, gy) => gx > gy,
    }
}

/// Whether the coefficient has weight on the `y = 0 = z` entries of the
/// `b(k) b(-k)` pair whose first row axis is `axis`.
fn collapsible(c: &Coeff, n: usize, axis: usize, axes: usize) -> bool {
    let after = dim(n, axes - axis - 4);
    let local = dim(n, 4);
    c.iter()
        .any(|(idx, _)| (idx / after % local / n).is_multiple_of(n * n))
}

fn find_reducible(
    syms: &[Symbol],
    c: &Coeff,
    n: usize,
    base: usize,
    strategy: Strategy,
) -> Option<usize> {
    if syms.len() < 2 {
        return None;
    }
    let axes = base + slot_count(syms);
    let mut offsets = Vec::with_capacity(syms.len());
    let mut at = base;
    for s in syms {
        offsets.push(at);
        at += s.gen.slots();
    }
    let test = |j: usize| {
        let (x, y) = (&syms[j], &syms[j + 1]);
        if x.gen == Gen::B && y.gen == Gen::B {
            if y.k == -&x.k {
                collapsible(c, n, offsets[j], axes)
            } else {
                b_key(&x.k) > b_key(&y.k)
            }
        } else {
            reducible_pair(x, y)
        }
    };
    match strategy {
        Strategy::Leftmost => (0..syms.len() - 1).find(|&j| test(j)),
        Strategy::Rightmost => (0..syms.len() - 1).rev().find(|&j| test(j)),
    }
}

/// A sparse coefficient: `(flat index, value)` sorted by index, no zeros.
type Coeff = Vec<(usize, Scalar)>;

type Terms = BTreeMap<Vec<Symbol>, Coeff>;

fn to_sparse(c: &[Scalar]) -> Coeff {
    c.iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, x)| (i, x.clone()))
        .collect()
}

fn to_dense(c: &Coeff, len: usize) -> Vec<Scalar> {
    let mut out = vec![Scalar::zero(); len];
    for (i, x) in c {
        out[*i] = x.clone();
    }
    out
}

/// Sorts by index, merging duplicates and dropping zeros.
fn normalize(mut c: Vec<(usize, Scalar)>) -> Coeff {
    c.sort_unstable_by_key(|(i, _)| *i);
    let mut out: Coeff = Vec::with_capacity(c.len());
    for (i, x) in c {
        match out.last_mut() {
            Some((j, acc)) if *j == i => *acc += x,
            _ => {
                if out.last().is_some_and(|(_, acc)| acc.is_zero()) {
                    out.pop();
                }
                out.push((i, x));
            }
        }
    }
    if out.last().is_some_and(|(_, x)| x.is_zero()) {
        out.pop();
    }
    out
}

fn identity(n: usize, slots: usize) -> Coeff {
    let d = dim(n, slots);
    (0..d).map(|t| (t * d + t, Scalar::one())).collect()
}

/// `max |a - b|` over all entries.
fn sparse_residual(a: &[(usize, Scalar)], b: &[(usize, Scalar)]) -> Rational {
    let (mut i, mut j) = (0, 0);
    let mut worst = Rational::zero();
    loop {
        let d = match (a.get(i), b.get(j)) {
            (None, None) => break,
            (Some((ia, x)), Some((ib, y))) if ia == ib => {
                i += 1;
                j += 1;
                if x == y {
                    continue;
                }
                magnitude(&(x - y))
            }
            (Some((ia, x)), Some((ib, _))) if ia < ib => {
                i += 1;
                magnitude(x)
            }
            (Some((_, x)), None) => {
                i += 1;
                magnitude(x)
            }
            (_, Some((_, y))) => {
                j += 1;
                magnitude(y)
            }
        };
        if d > worst {
            worst = d;
        }
    }
    worst
}

/// Replaces the local axes `[before | local_in | after]` by `k · local`.
fn local_apply(c: &Coeff, local_in: usize, after: usize, k: &Mat) -> Coeff {
    let rows = k.rows();
    let cols: Vec<Vec<(usize, &Scalar)>> = (0..local_in)
        .map(|l| {
            (0..rows)
                .filter(|&r| !k.get(r, l).is_zero())
                .map(|r| (r, k.get(r, l)))
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(c.len() * 2);
    for (idx, x) in c {
        let b = idx % after;
        let l = (idx / after) % local_in;
        let a = idx / (after * local_in);
        for (r, w) in &cols[l] {
            out.push(((a * rows + r) * after + b, *w * x));
        }
    }
    normalize(out)
}

type Rewrite = (Vec<Symbol>, Mat);

/// Normal-orders terms under one strategy, with kernels built from `r`.
struct Rewriter<'a> {
    r: &'a RMatrix,
    n: usize,
    algebra: Algebra,
    strategy: Strategy,
    kernels: BTreeMap<(Symbol, Symbol), Vec<Rewrite>>,
}

impl<'a> Rewriter<'a> {
    fn new(r: &'a RMatrix, algebra: Algebra, strategy: Strategy) -> Self {
        Rewriter {
            r,
            n: r.n(),
            algebra,
            strategy,
            kernels: BTreeMap::new(),
        }
    }

    /// Replacements of the adjacent pair `x y`; kernels map old pair slots
    /// (columns) to new slots (rows).
    fn rewrites(&mut self, x: &Symbol, y: &Symbol) -> Result<&[Rewrite]> {
        let key = (x.clone(), y.clone());
        if !self.kernels.contains_key(&key) {
            let v = self.build(x, y)?;
            self.kernels.insert(key.clone(), v);
        }
        Ok(&self.kernels[&key])
    }

    fn build(&self, x: &Symbol, y: &Symbol) -> Result<Vec<Rewrite>> {
        let n = self.n;
        let nn = n * n;
        let (k1, k2) = (&x.k, &y.k);
        let boundary = self.algebra == Algebra::Boundary;
        let mut out = Vec::new();
        match (x.gen, y.gen) {
            (Gen::A, Gen::A) => {
                // a_α(k1) a_β(k2) = Σ R(k2,k1)_{(β,α),(β',α')} a_β'(k2) a_α'(k1)
                let r = self.r.eval(k2, k1)?;
                let k = Mat::from_fn(nn, nn, |row, col| {
                    r.get((col % n) * n + col / n, row).clone()
                });
                out.push((vec![y.clone(), x.clone()], k));
            }
            (Gen::Ad, Gen::Ad) => {
                // a†_α(k1) a†_β(k2) = Σ R(k2,k1)_{(β',α'),(β,α)} a†_β'(k2) a†_α'(k1)
                let r = self.r.eval(k2, k1)?;
                let k = Mat::from_fn(nn, nn, |row, col| {
                    r.get(row, (col % n) * n + col / n).clone()
                });
                out.push((vec![y.clone(), x.clone()], k));
            }
            (Gen::A, Gen::Ad) => {
                // a_i(k1) a†_j(k2) = Σ R(k1,k2)_{(i,m2),(m1,j)} a†_m2(k2) a_m1(k1) + δ terms
                let r = self.r.eval(k1, k2)?;
                let k = Mat::from_fn(nn, nn, |row, col| {
                    let (m2, m1) = (row / n, row % n);
                    let (i, j) = (col / n, col % n);
                    r.get(i * n + m2, m1 * n + j).clone()
                });
                out.push((vec![y.clone(), x.clone()], k));
                let w = if boundary { half() } else { Scalar::one() };
                if k1 == k2 {
                    let d = Mat::from_fn(1, nn, |_, col| {
                        if col / n == col % n {
                            w.clone()
                        } else {
                            Scalar::zero()
                        }
                    });
                    out.push((vec![], d));
                }
                if boundary && *k1 == -k2 {
                    out.push((
                        vec![Symbol::b(k1.clone())],
                        Mat::identity(nn).scale(&half()),
                    ));
                }
            }
            (Gen::A, Gen::B) => {
                // a_1(k1) b_2(k2) = R_21(k2,k1) b_2(k2) R_12(k1,-k2) a_1(k1)
                let r1 = self.r.eval(k2, k1)?;
                let r2 = self.r.eval(k1, &-k2)?;
                let k = Mat::from_fn(n * nn, n * nn, |row, col| {
                    let (m2, n2, p1) = (row / nn, (row / n) % n, row % n);
                    let (i1, i2, j2) = (col / nn, (col / n) % n, col % n);
                    let mut s = Scalar::zero();
                    for m1 in 0..n {
                        let a = r1.get(i2 * n + i1, m2 * n + m1);
                        if a.is_zero() {
                            continue;
                        }
                        s += a * r2.get(m1 * n + n2, p1 * n + j2);
                    }
                    s
                });
                out.push((vec![y.clone(), x.clone()], k));
            }
            (Gen::B, Gen::Ad) => {
                // b_1(k1) a†_2(k2) = a†_2(k2) R_12(k1,k2) b_1(k1) R_21(k2,-k1)
                let r1 = self.r.eval(k1, k2)?;
                let r2 = self.r.eval(k2, &-k1)?;
                let k = Mat::from_fn(n * nn, n * nn, |row, col| {
                    let (m2, x1, z1) = (row / nn, (row / n) % n, row % n);
                    let (i1, j1, j2) = (col / nn, (col / n) % n, col % n);
                    let mut s = Scalar::zero();
                    for y2 in 0..n {
                        let a = r1.get(i1 * n + m2, x1 * n + y2);
                        if a.is_zero() {
                            continue;
                        }
                        s += a * r2.get(y2 * n + z1, j2 * n + j1);
                    }
                    s
                });
                out.push((vec![y.clone(), x.clone()], k));
            }
            (Gen::B, Gen::B) if *k2 != -k1 => {
                // R_12(k1,k2) b_1(k1) R_21(k2,-k1) b_2(k2) = b_2(k2) R_12(k1,-k2) b_1(k1) R_21(-k2,-k1),
                // solved for b(k1) b(k2) through the reshuffled middle factor
                let ainv = self.r.inverse(k1, k2)?;
                let mid = self.r.eval_swapped(k2, &-k1)?;
                let c = self.r.eval(k1, &-k2)?;
                let d = self.r.eval_swapped(&-k2, &-k1)?;
                // M[(u2,y1),(v1,w2)] = mid[(v1,u2),(y1,w2)]
                let m = Mat::from_fn(nn, nn, |row, col| {
                    let (u2, y1, v1, w2) = (row / n, row % n, col / n, col % n);
                    mid.get(v1 * n + u2, y1 * n + w2).clone()
                });
                let minv = m.inverse().map_err(|_| {
                    Error::Unsupported(format!(
                        "b({}) b({}) cannot be reordered: singular middle factor",
                        format_rational(&x.k),
                        format_rational(&y.k)
                    ))
                })?;
                // F[(x1,u2,y1,y2),(p1,q1,p2,q2)] = Σ_{a1,t2} Ainv[(x1,u2),(a1,p1)] C[(a1,q1),(p2,t2)] D[(q2,t2),(y1,y2)]
                let d4 = nn * nn;
                let mut f = Mat::zeros(d4, d4);
                for x1 in 0..n {
                    for u2 in 0..n {
                        for a1 in 0..n {
                            for p1 in 0..n {
                                let w = ainv.get(x1 * n + u2, a1 * n + p1);
                                if w.is_zero() {
                                    continue;
                                }
                                for q1 in 0..n {
                                    for p2 in 0..n {
                                        for t2 in 0..n {
                                            let wc = c.get(a1 * n + q1, p2 * n + t2);
                                            if wc.is_zero() {
                                                continue;
                                            }
                                            let wac = w * wc;
                                            for q2 in 0..n {
                                                for y1 in 0..n {
                                                    for y2 in 0..n {
                                                        let wd = d.get(q2 * n + t2, y1 * n + y2);
                                                        if wd.is_zero() {
                                                            continue;
                                                        }
                                                        let row = ((x1 * n + u2) * n + y1) * n + y2;
                                                        let col = ((p1 * n + q1) * n + p2) * n + q2;
                                                        let v = f.get(row, col) + &wac * wd;
                                                        f.set(row, col, v);
                                                    }
                                                }
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                // b_{x1 v1}(k1) b_{w2 y2}(k2) = Σ_{u2,y1} Minv[(v1,w2),(u2,y1)] E(x1,u2,y1,y2)
                let k = Mat::from_fn(d4, d4, |row, col| {
                    let (x1, v1, w2, y2) = (col / (n * nn), (col / nn) % n, (col / n) % n, col % n);
                    let mut s = Scalar::zero();
                    for u2 in 0..n {
                        for y1 in 0..n {
                            let w = minv.get(v1 * n + w2, u2 * n + y1);
                            if w.is_zero() {
                                continue;
                            }
                            s += w * f.get(((x1 * n + u2) * n + y1) * n + y2, row);
                        }
                    }
                    s
                });
                out.push((vec![y.clone(), x.clone()], k));
            }
            (Gen::B, Gen::B) => {
                // b_{x0}(k) b_{0w}(-k) = δ_{xw} - Σ_{y≥1} b_{xy}(k) b_{yw}(-k)
                let d4 = nn * nn;
                let idx = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
                let mut keep = Mat::identity(d4);
                let mut drop = Mat::zeros(1, d4);
                for xx in 0..n {
                    for ww in 0..n {
                        let lead = idx(xx, 0, 0, ww);
                        keep.set(lead, lead, Scalar::zero());
                        for yy in 1..n {
                            keep.set(idx(xx, yy, yy, ww), lead, -Scalar::one());
                        }
                        if xx == ww {
                            drop.set(0, lead, Scalar::one());
                        }
                    }
                }
                out.push((vec![x.clone(), y.clone()], keep));
                out.push((vec![], drop));
            }
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "pair {x} {y} is already ordered"
                )))
            }
        }
        Ok(out)
    }

    fn run(&mut self, base: usize, start: Vec<(Vec<Symbol>, Coeff)>) -> Result<Terms> {
        let n = self.n;
        let mut work = Terms::new();
        for (s, c) in start {
            accumulate(&mut work, s, c);
        }
        let mut done = Terms::new();
        while let Some((syms, c)) = work.pop_last() {
            if c.is_empty() {
                continue;
            }
            let Some(j) = find_reducible(&syms, &c, n, base, self.strategy) else {
                accumulate(&mut done, syms, c);
                continue;
            };
            if self.algebra == Algebra::Zf && (syms[j].gen == Gen::B || syms[j + 1].gen == Gen::B) {
                return Err(Error::Unsupported(
                    "`b` needs the boundary relations".into(),
                ));
            }
            let off = base + slot_count(&syms[..j]);
            let width = syms[j].gen.slots() + syms[j + 1].gen.slots();
            let axes = base + slot_count(&syms);
            let (local, after) = (dim(n, width), dim(n, axes - off - width));
            let rewrites = self.rewrites(&syms[j], &syms[j + 1])?.to_vec();
            for (pair, k) in rewrites {
                let mut next = syms[..j].to_vec();
                next.extend(pair);
                next.extend_from_slice(&syms[j + 2..]);
                let c2 = local_apply(&c, local, after, &k);
                accumulate(&mut work, next, c2);
            }
        }
        done.retain(|_, c| !c.is_empty());
        Ok(done)
    }
}

fn accumulate(map: &mut Terms, key: Vec<Symbol>, c: Coeff) {
    match map.get_mut(&key) {
        Some(acc) => {
            let mut all = std::mem::take(acc);
            all.extend(c);
            *acc = normalize(all);
        }
        None => {
            map.insert(key, c);
        }
    }
}

fn dense_terms(terms: Terms, n: usize, base: usize) -> BTreeMap<Vec<Symbol>, Vec<Scalar>> {
    terms
        .into_iter()
        .map(|(s, c)| {
            let d = to_dense(&c, dim(n, base + slot_count(&s)));
            (s, d)
        })
        .collect()
}

fn check_algebra(w: &[Symbol], algebra: Algebra) -> Result<()> {
    if algebra == Algebra::Zf && w.iter().any(|s| s.gen == Gen::B) {
        return Err(Error::Unsupported(
            "`b` needs the boundary relations".into(),
        ));
    }
    Ok(())
}

/// Normal form of `w` along the given rewrite strategy.
pub fn normal_order_with(
    w: &Word,
    r: &RMatrix,
    algebra: Algebra,
    strategy: Strategy,
) -> Result<NormalForm> {
    check_algebra(&w.symbols, algebra)?;
    let n = r.n();
    let start = vec![(w.symbols.clone(), identity(n, w.slots()))];
    let terms = Rewriter::new(r, algebra, strategy).run(w.slots(), start)?;
    Ok(NormalForm {
        n,
        outer: w.symbols.clone(),
        terms: dense_terms(terms, n, w.slots()),
    })
}

pub fn normal_order(w: &Word, r: &RMatrix, algebra: Algebra) -> Result<NormalForm> {
    normal_order_with(w, r, algebra, Strategy::Leftmost)
}

/// Normal-orders every term of `nf`.
pub fn renormalize(
    nf: &NormalForm,
    r: &RMatrix,
    algebra: Algebra,
    strategy: Strategy,
) -> Result<NormalForm> {
    for s in nf.terms.keys() {
        check_algebra(s, algebra)?;
    }
    let start = nf
        .terms
        .iter()
        .map(|(s, c)| (s.clone(), to_sparse(c)))
        .collect();
    let base = slot_count(&nf.outer);
    let terms = Rewriter::new(r, algebra, strategy).run(base, start)?;
    Ok(NormalForm {
        n: nf.n,
        outer: nf.outer.clone(),
        terms: dense_terms(terms, nf.n, base),
    })
}

/// Exchanges `a(k1) a(k2)` and back; by unitarity the composite kernel is
/// the identity.
pub fn exchange_twice(r: &RMatrix, k1: &Rational, k2: &Rational) -> Result<Mat> {
    let rw = Rewriter::new(r, Algebra::Zf, Strategy::Leftmost);
    let x = Symbol::a(k1.clone());
    let y = Symbol::a(k2.clone());
    let fwd = rw.build(&x, &y)?.remove(0).1;
    let back = rw.build(&y, &x)?.remove(0).1;
    Ok(back.mul(&fwd))
}

/// Every word of length `1..=max_len` over `alphabet`, shortest first.
pub fn all_words(alphabet: &[Symbol], max_len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<Symbol>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * alphabet.len());
        for w in &layer {
            for s in alphabet {
                let mut v = w.clone();
                v.push(s.clone());
                next.push(v);
            }
        }
        out.extend(next.iter().cloned().map(Word::new));
        layer = next;
    }
    out
}

pub fn alphabet(grid: &RapidityGrid, gens: &[Gen]) -> Vec<Symbol> {
    gens.iter()
        .flat_map(|&g| grid.points().iter().map(move |k| Symbol::new(g, k.clone())))
        .collect()
}

/// Compares two rewrite paths for each word: normalizing the suffix
/// after the first letter and then moving that letter in (leftmost
/// strategy), against normalizing the prefix before the last letter and then
/// moving that letter in (rightmost strategy). Normal forms of subwords are
/// memoized per path.
pub fn record_confluence(
    b: &mut ReportBuilder,
    r: &RMatrix,
    words: &[Word],
    algebra: Algebra,
) -> Result<()> {
    let mut left = Memo::new(Rewriter::new(r, algebra, Strategy::Leftmost), true);
    let mut right = Memo::new(Rewriter::new(r, algebra, Strategy::Rightmost), false);
    for w in words {
        check_algebra(&w.symbols, algebra)?;
        left.get(&w.symbols)?;
        let l = &left.cache[&w.symbols];
        let rr = right.get(&w.symbols)?;
        let mut worst = Rational::zero();
        for (syms, c) in l {
            worst = worst.max(sparse_residual(c, rr.get(syms).map_or(&[], |d| d)));
        }
        for (syms, d) in rr {
            if !l.contains_key(syms) {
                worst = worst.max(sparse_residual(d, &[]));
            }
        }
        b.record(|| format!("word {w}"), worst);
    }
    Ok(())
}

/// Normal forms built one letter at a time, from the left (`prepend`) or
/// from the right.
struct Memo<'a> {
    rewriter: Rewriter<'a>,
    prepend: bool,
    cache: HashMap<Vec<Symbol>, Terms>,
}

impl<'a> Memo<'a> {
    fn new(rewriter: Rewriter<'a>, prepend: bool) -> Self {
        Memo {
            rewriter,
            prepend,
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, syms: &[Symbol]) -> Result<&Terms> {
        if !self.cache.contains_key(syms) {
            let terms = self.compute(syms)?;
            self.cache.insert(syms.to_vec(), terms);
        }
        Ok(&self.cache[syms])
    }

    fn compute(&mut self, syms: &[Symbol]) -> Result<Terms> {
        let n = self.rewriter.n;
        let total = slot_count(syms);
        if syms.len() <= 1 {
            return Ok(BTreeMap::from([(syms.to_vec(), identity(n, total))]));
        }
        let (letter, rest) = if self.prepend {
            (&syms[0], &syms[1..])
        } else {
            (&syms[syms.len() - 1], &syms[..syms.len() - 1])
        };
        let inner = self.get(rest)?.clone();
        let dl = dim(n, letter.gen.slots());
        let dw = dim(n, slot_count(rest));
        let mut start = Vec::with_capacity(inner.len());
        for (t, c) in inner {
            let dt = dim(n, slot_count(&t));
            let cols = dl * dt;
            let mut out = Vec::with_capacity(c.len() * dl);
            for (idx, x) in c {
                let (wo, tt) = (idx / dt, idx % dt);
                for l in 0..dl {
                    let i = if self.prepend {
                        (l * dw + wo) * cols + l * dt + tt
                    } else {
                        (wo * dl + l) * cols + tt * dl + l
                    };
                    out.push((i, x.clone()));
                }
            }
            out.sort_unstable_by_key(|(i, _)| *i);
            let mut ext = Vec::with_capacity(t.len() + 1);
            if self.prepend {
                ext.push(letter.clone());
                ext.extend(t);
            } else {
                ext.extend(t);
                ext.push(letter.clone());
            }
            start.push((ext, out));
        }
        self.rewriter.run(total, start)
    }
}

/// Confluence of the two rewrite strategies on `a(k1) a(k2) a(k3)` times
/// `a†` strings, on three-letter words in `a`, `a†`, and on three-letter
/// boundary words over `±k`.
/// Also checks that exchanging two `a` factors twice is the identity.
pub fn check_confluence(r: &RMatrix, ks: &[Rational; 3], mode: Mode) -> Result<Report> {
    let mut b = ReportBuilder::new("confluence", mode);
    let [k1, k2, k3] = ks;
    let perms = [
        [k1, k2, k3],
        [k1, k3, k2],
        [k2, k1, k3],
        [k2, k3, k1],
        [k3, k1, k2],
        [k3, k2, k1],
    ];
    let mut words = Vec::new();
    for p in &perms {
        let head: Vec<Symbol> = p.iter().map(|&k| Symbol::a(k.clone())).collect();
        for tail_len in 0..=2 {
            for q in &perms {
                let mut s = head.clone();
                s.extend(q[..tail_len].iter().map(|&k| Symbol::ad(k.clone())));
                words.push(Word::new(s));
            }
        }
    }
    let three: Vec<Symbol> = ks
        .iter()
        .flat_map(|k| [Symbol::a(k.clone()), Symbol::ad(k.clone())])
        .collect();
    words.extend(all_words(&three, 3).into_iter().filter(|w| w.len() == 3));
    words.sort();
    words.dedup();
    record_confluence(&mut b, r, &words, Algebra::Zf)?;

    let mut points: Vec<Rational> = ks
        .iter()
        .flat_map(|k| [k.clone(), -k])
        .filter(|k| !k.is_zero())
        .collect();
    points.sort();
    points.dedup();
    let grid = RapidityGrid::new(points)?;
    let bw: Vec<Word> = all_words(&alphabet(&grid, &[Gen::A, Gen::Ad, Gen::B]), 3)
        .into_iter()
        .filter(|w| w.len() == 3 && w.has_b())
        .collect();
    record_confluence(&mut b, r, &bw, Algebra::Boundary)?;

    let n = r.n();
    for (x, y) in [(k1, k2), (k2, k3), (k1, k3)] {
        let res = exchange_twice(r, x, y)?
            .sub(&Mat::identity(n * n))
            .max_abs();
        b.record(
            || {
                format!(
                    "double exchange ({}, {})",
                    format_rational(x),
                    format_rational(y)
                )
            },
            res,
        );
    }
    Ok(b.finish())
}

/// Confluence on every word of length at most `max_len` over `a`, `a†` and
/// the grid.
pub fn check_confluence_words(
    r: &RMatrix,
    grid: &RapidityGrid,
    max_len: usize,
    mode: Mode,
) -> Result<Report> {
    let mut b = ReportBuilder::new("confluence-words", mode);
    let words = all_words(&alphabet(grid, &[Gen::A, Gen::Ad]), max_len);
    record_confluence(&mut b, r, &words, Algebra::Zf)?;
    Ok(b.finish())
}

/// `normal_order(w†)` equals the normal-ordered `†`-image of
/// `normal_order(w)`.
pub fn check_adjoint_compatibility(
    r: &RMatrix,
    words: &[Word],
    algebra: Algebra,
    mode: Mode,
) -> Result<Report> {
    let mut b = ReportBuilder::new("normal-order-adjoint", mode);
    for w in words {
        let nf = normal_order(w, r, algebra)?;
        let direct = normal_order(&adjoint_word(w), r, algebra)?;
        let image = renormalize(&nf.adjoint(), r, algebra, Strategy::Leftmost)?;
        b.record(|| format!("word {w}"), direct.residual(&image)?);
    }
    Ok(b.finish())
}

/// The normal form, evaluated in `real`, agrees with the word applied
/// directly, on every sector with at most `max_p` particles.
pub fn check_realization(
    real: &dyn Realization,
    words: &[Word],
    algebra: Algebra,
    max_p: usize,
    mode: Mode,
) -> Result<Report> {
    let zf = real.zf();
    let mut b = ReportBuilder::new("normal-order-realization", mode);
    for w in words {
        let nf = normal_order(w, zf.r(), algebra)?;
        let e = word_expr(w, real)?;
        for sector in zf.grid().sectors(max_p) {
            let probe = FockState::probe(zf.n(), &sector);
            let res = nf.apply(real, &probe)?.residual(&zf.apply(&e, &probe)?)?;
            b.record(|| format!("word {w} on sector {}", fmt_tuple(&sector)), res);
        }
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat, real, sint};

    fn grid(pts: &[i64]) -> RapidityGrid {
        RapidityGrid::from_ints(pts).unwrap()
    }

    fn yang() -> RMatrix {
        RMatrix::rational(2, int(1)).unwrap()
    }

    fn w(text: &str, g: &RapidityGrid) -> Word {
        parse_word(text, g).unwrap()
    }

    #[test]
    fn parse_and_display() {
        let g = grid(&[-2, -1, 1, 2]);
        let word = w("a(2)  ad(-1) b(1)", &g);
        assert_eq!(word.to_string(), "a(2) ad(-1) b(1)");
        assert_eq!(adjoint_word(&word).to_string(), "b(-1) a(-1) ad(2)");
        assert!(matches!(parse_word("a(3)", &g), Err(Error::OffGrid(_))));
        assert!(matches!(
            parse_word("b(1)", &grid(&[1, 2])),
            Err(Error::InvalidGrid(_))
        ));
        match parse_word("a(1) c(2)", &g) {
            Err(Error::Parse(e)) => assert_eq!(e.column, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ordered_word_is_fixed() {
        let g = grid(&[1, 2]);
        let word = w("ad(1) ad(2) a(1) a(2)", &g);
        let nf = normal_order(&word, &yang(), Algebra::Zf).unwrap();
        assert_eq!(nf.terms().count(), 1);
        let c = nf.coefficient(&word.symbols).unwrap();
        assert_eq!(c, Mat::identity(16));
    }

    #[test]
    fn a_ad_at_equal_rapidity() {
        // a_i(1) a†_j(1) = Σ R(1,1)_{(i,m2),(m1,j)} a†_m2 a_m1 + δ_ij; R(1,1) = P
        let g = grid(&[1]);
        let nf = normal_order(&w("a(1) ad(1)", &g), &yang(), Algebra::Zf).unwrap();
        assert_eq!(nf.terms().count(), 2);
        let d = nf.coefficient(&[]).unwrap();
        assert_eq!(
            d,
            Mat::from_fn(4, 1, |r, _| if r == 0 || r == 3 {
                sint(1)
            } else {
                sint(0)
            })
        );
        let ex = nf
            .coefficient(&[Symbol::ad(int(1)), Symbol::a(int(1))])
            .unwrap();
        // P_{(i,m2),(m1,j)} = δ_{i j} δ_{m2 m1}
        let expect = Mat::from_fn(4, 4, |r, c| {
            let (i, j) = (r / 2, r % 2);
            let (m2, m1) = (c / 2, c % 2);
            if i == j && m2 == m1 {
                sint(1)
            } else {
                sint(0)
            }
        });
        assert_eq!(ex, expect);
    }

    #[test]
    fn boundary_pair_at_opposite_rapidities() {
        let g = grid(&[-1, 1]);
        let nf = normal_order(&w("a(1) ad(-1)", &g), &yang(), Algebra::Boundary).unwrap();
        let keys: Vec<String> = nf
            .terms()
            .map(|(s, _)| Word::new(s.clone()).to_string())
            .collect();
        assert_eq!(keys, vec!["ad(-1) a(1)", "b(1)"]);
        assert_eq!(
            nf.coefficient(&[Symbol::b(int(1))]).unwrap(),
            Mat::identity(4).scale(&half())
        );
        let same = normal_order(&w("a(1) ad(1)", &g), &yang(), Algebra::Boundary).unwrap();
        let keys: Vec<String> = same
            .terms()
            .map(|(s, _)| Word::new(s.clone()).to_string())
            .collect();
        assert_eq!(keys, vec!["1", "ad(1) a(1)"]);
        let d = same.coefficient(&[]).unwrap();
        assert_eq!(d.get(0, 0), &half());
    }

    #[test]
    fn b_pairs_collapse() {
        let g = grid(&[-1, 1]);
        let nf = normal_order(&w("b(1) b(-1)", &g), &yang(), Algebra::Boundary).unwrap();
        assert!(nf.is_normal());
        // b_{x0}(1) b_{0w}(-1) = δ_{xw} - b_{x1}(1) b_{1w}(-1)
        let idx = |a: usize, b: usize, c: usize, d: usize| ((a * 2 + b) * 2 + c) * 2 + d;
        let c = nf.coefficient(&[]).unwrap();
        assert_eq!(c.get(idx(0, 0, 0, 0), 0), &sint(1));
        assert_eq!(c.get(idx(0, 0, 0, 1), 0), &sint(0));
        assert_eq!(c.get(idx(0, 1, 1, 0), 0), &sint(0));
        let full = nf
            .coefficient(&[Symbol::b(int(1)), Symbol::b(int(-1))])
            .unwrap();
        assert_eq!(full.get(idx(0, 0, 0, 0), idx(0, 1, 1, 0)), &sint(-1));
        assert_eq!(full.get(idx(0, 0, 0, 0), idx(0, 0, 0, 0)), &sint(0));
        assert_eq!(full.get(idx(0, 1, 0, 0), idx(0, 1, 0, 0)), &sint(1));
    }

    #[test]
    fn length_eight_words_terminate() {
        let g = grid(&[-2, -1, 1, 2]);
        for text in [
            "a(-2) a(2) a(1) a(-1) a(2) a(-2) a(-1) a(1)",
            "a(2) ad(-1) a(-2) ad(1) a(1) ad(2) a(-1) ad(-2)",
        ] {
            let nf = normal_order(&w(text, &g), &yang(), Algebra::Zf).unwrap();
            assert!(nf.is_normal());
            assert_eq!(nf.outer().len(), 8);
        }
    }

    #[test]
    fn double_exchange_is_identity() {
        for (x, y) in [(1, 2), (2, -3), (1, 1)] {
            assert_eq!(
                exchange_twice(&yang(), &int(x), &int(y)).unwrap(),
                Mat::identity(4)
            );
        }
    }

    #[test]
    fn confluence_passes_for_yang() {
        let rep = check_confluence(&yang(), &[int(1), int(2), int(3)], Mode::Exact).unwrap();
        assert!(rep.pass, "{rep:?}");
        let rep = check_confluence(&yang(), &[int(1), int(-1), int(2)], Mode::Exact).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn confluence_fails_for_broken_yang_baxter() {
        let bad = yang().perturbed(1, 2, real(rat(1, 10)));
        let rep = check_confluence(&bad, &[int(1), int(2), int(3)], Mode::Exact).unwrap();
        assert!(!rep.pass);
        assert!(rep.witness.unwrap().sample.starts_with("word"));
    }

    #[test]
    fn trig_confluence() {
        let r = RMatrix::trigonometric(int(2)).unwrap();
        let rep = check_confluence(&r, &[int(1), int(2), rat(1, 2)], Mode::Exact).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn agrees_with_fock() {
        let g = grid(&[1, 2]);
        let zf = Zf::new(yang(), g.clone());
        let words: Vec<Word> = [
            "a(2) ad(1) ad(2)",
            "a(1) a(2) ad(2) ad(1)",
            "ad(2) a(2) ad(1)",
            "a(2) a(1)",
        ]
        .iter()
        .map(|t| w(t, &g))
        .collect();
        let rep = check_realization(&zf, &words, Algebra::Zf, 2, Mode::Exact).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn adjoint_compatible() {
        let g = grid(&[-1, 1, 2]);
        let words: Vec<Word> = ["a(2) ad(1) ad(2)", "a(1) a(2) ad(-1)", "ad(2) ad(1) a(1)"]
            .iter()
            .map(|t| w(t, &g))
            .collect();
        let rep = check_adjoint_compatibility(&yang(), &words, Algebra::Zf, Mode::Exact).unwrap();
        assert!(rep.pass, "{rep:?}");
        let g2 = grid(&[-2, -1, 1, 2]);
        let bw: Vec<Word> = [
            "a(1) b(2) ad(-1)",
            "b(1) ad(-1) a(2)",
            "b(2) b(-1) a(1)",
            "a(-2) ad(2) b(1)",
        ]
        .iter()
        .map(|t| w(t, &g2))
        .collect();
        let rep =
            check_adjoint_compatibility(&yang(), &bw, Algebra::Boundary, Mode::Exact).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn plain_algebra_rejects_b() {
        let g = grid(&[-1, 1]);
        assert!(matches!(
            normal_order(&w("b(1)", &g), &yang(), Algebra::Zf),
            Err(Error::Unsupported(_))
        ));
    }
}
