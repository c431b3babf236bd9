//! Dense exact matrices over Gaussian rationals.
//!
//! Tensor spaces use row-major order over `e_{a1} ⊗ … ⊗ e_{am}` with the
//! first leg most significant.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{magnitude, Rational, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![Scalar::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Scalar::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Scalar>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Mat { rows, cols, data }
    }

    /// Permutation of two `n`-dimensional tensor factors.
    pub fn swap(n: usize) -> Self {
        Mat::from_fn(n * n, n * n, |r, c| {
            if r / n == c % n && r % n == c / n {
                Scalar::one()
            } else {
                Scalar::zero()
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Scalar] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> &Scalar {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Scalar) {
        self.data[r * self.cols + c] = v;
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matrix product shape");
        let mut out = Mat::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[r * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let b = &other.data[k * other.cols + c];
                    if !b.is_zero() {
                        out.data[r * other.cols + c] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape");
        let mut out = vec![Scalar::zero(); self.rows];
        for (r, o) in out.iter_mut().enumerate() {
            for (k, x) in v.iter().enumerate() {
                let a = &self.data[r * self.cols + k];
                if !a.is_zero() && !x.is_zero() {
                    *o += a * x;
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, s: &Scalar) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn kron(&self, other: &Mat) -> Mat {
        Mat::from_fn(self.rows * other.rows, self.cols * other.cols, |r, c| {
            let a = self.get(r / other.rows, c / other.cols);
            if a.is_zero() {
                return Scalar::zero();
            }
            a * other.get(r % other.rows, c % other.cols)
        })
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |r, c| self.get(c, r).clone())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Largest entry magnitude `max(|re|, |im|)`.
    pub fn max_abs(&self) -> Rational {
        max_magnitude(&self.data)
    }

    pub fn inverse(&self) -> Result<Mat> {
        if !self.is_square() {
            return Err(Error::Singular(format!(
                "{}x{} is not square",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Mat::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !a.get(r, col).is_zero())
                .ok_or_else(|| Error::Singular(format!("no pivot in column {col}")))?;
            a.swap_rows(pivot, col);
            inv.swap_rows(pivot, col);
            let p = a.get(col, col).clone();
            let p_inv = Scalar::one() / p;
            a.scale_row(col, &p_inv);
            inv.scale_row(col, &p_inv);
            for r in 0..n {
                if r != col && !a.get(r, col).is_zero() {
                    let f = a.get(r, col).clone();
                    a.axpy_row(r, col, &f);
                    inv.axpy_row(r, col, &f);
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    fn scale_row(&mut self, i: usize, s: &Scalar) {
        for c in 0..self.cols {
            let v = &mut self.data[i * self.cols + c];
            if !v.is_zero() {
                *v = &*v * s;
            }
        }
    }

    /// row[i] -= f * row[j]
    fn axpy_row(&mut self, i: usize, j: usize, f: &Scalar) {
        for c in 0..self.cols {
            let b = self.data[j * self.cols + c].clone();
            if !b.is_zero() {
                self.data[i * self.cols + c] -= f * b;
            }
        }
    }

    /// Exact rank by Gauss-Jordan elimination.
    pub fn rank(&self) -> usize {
        let mut a = self.clone();
        let mut rank = 0;
        for col in 0..a.cols {
            if rank == a.rows {
                break;
            }
            let Some(pivot) = (rank..a.rows).find(|&r| !a.get(r, col).is_zero()) else {
                continue;
            };
            a.swap_rows(pivot, rank);
            let p_inv = Scalar::one() / a.get(rank, col).clone();
            a.scale_row(rank, &p_inv);
            for r in 0..a.rows {
                if r != rank && !a.get(r, col).is_zero() {
                    let f = a.get(r, col).clone();
                    a.axpy_row(r, rank, &f);
                }
            }
            rank += 1;
        }
        rank
    }
}

/// Unique solution of a possibly overdetermined system `A x = b`.
///
/// Pivoting is first-nonzero in column order, so results are reproducible.
pub fn solve_unique(a: &Mat, b: &[Scalar]) -> Result<Vec<Scalar>> {
    assert_eq!(a.rows, b.len(), "right-hand side length");
    let cols = a.cols;
    let mut aug = Mat::from_fn(a.rows, cols + 1, |r, c| {
        if c < cols {
            a.get(r, c).clone()
        } else {
            b[r].clone()
        }
    });
    let mut rank = 0;
    let mut pivots = Vec::new();
    for col in 0..cols {
        let Some(pivot) = (rank..aug.rows).find(|&r| !aug.get(r, col).is_zero()) else {
            continue;
        };
        aug.swap_rows(pivot, rank);
        let p_inv = Scalar::one() / aug.get(rank, col).clone();
        aug.scale_row(rank, &p_inv);
        for r in 0..aug.rows {
            if r != rank && !aug.get(r, col).is_zero() {
                let f = aug.get(r, col).clone();
                aug.axpy_row(r, rank, &f);
            }
        }
        pivots.push(col);
        rank += 1;
    }
    if let Some(r) = (rank..aug.rows).find(|&r| !aug.get(r, cols).is_zero()) {
        return Err(Error::Inconsistent(format!(
            "equation {r} has a nonzero residual after elimination"
        )));
    }
    if rank < cols {
        return Err(Error::RankDeficient {
            rank,
            unknowns: cols,
        });
    }
    Ok((0..cols).map(|r| aug.get(r, cols).clone()).collect())
}

pub fn max_magnitude(entries: &[Scalar]) -> Rational {
    entries
        .iter()
        .map(magnitude)
        .fold(Rational::zero(), |m, x| if x > m { x } else { m })
}

/// Dimension of `legs` tensor factors of size `n`.
pub fn dim(n: usize, legs: usize) -> usize {
    n.pow(legs as u32)
}

/// Digits of `index` in base `n` over `legs` positions, most significant first.
pub fn digits(mut index: usize, n: usize, legs: usize) -> Vec<usize> {
    let mut out = vec![0; legs];
    for slot in out.iter_mut().rev() {
        *slot = index % n;
        index /= n;
    }
    out
}

pub fn undigits(digits: &[usize], n: usize) -> usize {
    digits.iter().fold(0, |acc, d| acc * n + d)
}

/// Embeds an operator on `legs.len()` factors into `total` factors of size
/// `n`. The operator's i-th factor acts on `legs[i]`; all other legs see the
/// identity.
pub fn embed(op: &Mat, legs: &[usize], n: usize, total: usize) -> Mat {
    let k = legs.len();
    assert_eq!(op.rows, dim(n, k));
    let size = dim(n, total);
    let mut out = Mat::zeros(size, size);
    for col in 0..size {
        let cd = digits(col, n, total);
        let sub_col = undigits(&legs.iter().map(|&l| cd[l]).collect::<Vec<_>>(), n);
        for sub_row in 0..op.rows {
            let v = op.get(sub_row, sub_col);
            if v.is_zero() {
                continue;
            }
            let sd = digits(sub_row, n, k);
            let mut rd = cd.clone();
            for (i, &l) in legs.iter().enumerate() {
                rd[l] = sd[i];
            }
            out.set(undigits(&rd, n), col, v.clone());
        }
    }
    out
}

/// Applies an operator on selected legs to a tensor over `total` legs without
/// materialising the embedded matrix.
pub fn apply_on_legs(
    op: &Mat,
    legs: &[usize],
    n: usize,
    total: usize,
    v: &[Scalar],
) -> Vec<Scalar> {
    let k = legs.len();
    debug_assert_eq!(op.rows, dim(n, k));
    debug_assert_eq!(v.len(), dim(n, total));
    let mut out = vec![Scalar::zero(); v.len()];
    for (col, x) in v.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        let cd = digits(col, n, total);
        let sub_col = undigits(&legs.iter().map(|&l| cd[l]).collect::<Vec<_>>(), n);
        for sub_row in 0..op.rows {
            let a = op.get(sub_row, sub_col);
            if a.is_zero() {
                continue;
            }
            let sd = digits(sub_row, n, k);
            let mut rd = cd.clone();
            for (i, &l) in legs.iter().enumerate() {
                rd[l] = sd[i];
            }
            out[undigits(&rd, n)] += a * x;
        }
    }
    out
}
