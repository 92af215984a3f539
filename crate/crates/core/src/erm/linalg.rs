//! Small dense matrices and a one-sided Jacobi SVD.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Off-diagonal convergence threshold of the Jacobi sweeps (relative).
pub const SVD_THRESHOLD: f64 = 1e-12;
const MAX_SWEEPS: usize = 80;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged matrix rows"));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, actual: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_diag(rows: usize, cols: usize, diag: &[T]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (i, &d) in diag.iter().enumerate().take(rows.min(cols)) {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, actual: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: T, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + alpha * b).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn distance(&self, other: &Self) -> T {
        self.axpy(-T::one(), other).frobenius_norm()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn trace_norm(&self) -> Result<T> {
        Ok(jacobi_svd(self)?.singular_values.iter().copied().sum())
    }

    pub fn spectral_norm(&self) -> Result<T> {
        Ok(jacobi_svd(self)?.singular_values.first().copied().unwrap_or(T::zero()))
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Thin SVD `A = U diag(s) Vᵀ` with `s` sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// `m × k`, `k = min(m, n)`. Columns for zero singular values are zero.
    pub u: Matrix<T>,
    pub singular_values: Vec<T>,
    /// `n × k`.
    pub v: Matrix<T>,
    pub sweeps: usize,
}

impl<T: Scalar> Svd<T> {
    /// `U diag(s) Vᵀ` for replacement singular values `s`.
    pub fn reconstruct_with(&self, s: &[T]) -> Matrix<T> {
        let (m, n) = (self.u.rows(), self.v.rows());
        let mut out = Matrix::zeros(m, n);
        for (k, &sk) in s.iter().enumerate() {
            if sk == T::zero() {
                continue;
            }
            for i in 0..m {
                let a = self.u[(i, k)] * sk;
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + a * self.v[(j, k)];
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Matrix<T> {
        self.reconstruct_with(&self.singular_values)
    }
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Columns `p, q` are rotated until every pair satisfies
/// `|⟨a_p, a_q⟩| ≤ ε ‖a_p‖ ‖a_q‖` with `ε = max(1e-12, 8·machine ε)`, or the
/// inner product is below machine precision relative to `‖A‖_F²`.
pub fn jacobi_svd<T: Scalar>(a: &Matrix<T>) -> Result<Svd<T>> {
    if !a.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    if a.rows() < a.cols() {
        let t = jacobi_svd(&a.transpose())?;
        return Ok(Svd { u: t.v, singular_values: t.singular_values, v: t.u, sweeps: t.sweeps });
    }
    let (m, n) = (a.rows(), a.cols());
    let eps = T::lit(SVD_THRESHOLD).max(T::epsilon() * T::lit(8.0));
    // column-major working copies
    let mut u: Vec<T> = (0..n).flat_map(|j| (0..m).map(move |i| a[(i, j)])).collect();
    let mut v: Vec<T> = (0..n * n).map(|k| if k % (n + 1) == 0 { T::one() } else { T::zero() }).collect();

    // rounding-noise floor for columns that have collapsed to ~0
    let floor = T::epsilon() * a.as_slice().iter().map(|&x| x * x).sum::<T>();
    let mut sweeps = 0;
    loop {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numeric { message: "Jacobi SVD did not converge".into(), iterations: sweeps });
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for (&x, &y) in u[p * m..(p + 1) * m].iter().zip(&u[q * m..(q + 1) * m]) {
                    alpha = alpha + x * x;
                    beta = beta + y * y;
                    gamma = gamma + x * y;
                }
                if gamma.abs() <= floor || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::two() * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut u, m, p, q, c, s);
                rotate(&mut v, n, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<(T, usize)> =
        u.chunks_exact(m).enumerate().map(|(j, col)| (col.iter().map(|&x| x * x).sum::<T>().sqrt(), j)).collect();
    sv.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite singular values").then(a.1.cmp(&b.1)));

    let mut um = Matrix::zeros(m, n);
    let mut vm = Matrix::zeros(n, n);
    for (k, &(s, j)) in sv.iter().enumerate() {
        for i in 0..m {
            um[(i, k)] = if s > T::zero() { u[j * m + i] / s } else { T::zero() };
        }
        for i in 0..n {
            vm[(i, k)] = v[j * n + i];
        }
    }
    Ok(Svd { u: um, singular_values: sv.into_iter().map(|(s, _)| s).collect(), v: vm, sweeps })
}

#[inline]
/// Rotates columns `p < q` of a column-major buffer with column length `len`.
fn rotate<T: Scalar>(cols: &mut [T], len: usize, p: usize, q: usize, c: T, s: T) {
    let (left, right) = cols.split_at_mut(q * len);
    for (x, y) in left[p * len..(p + 1) * len].iter_mut().zip(&mut right[..len]) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}
