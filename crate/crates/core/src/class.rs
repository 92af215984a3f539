//! Explicit finite classes of static experts.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An `N × T` table of expert predictions, each bounded by `b` in absolute value.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteExpertClass<T> {
    n_experts: usize,
    horizon: usize,
    data: Vec<T>,
    bound_b: T,
}

impl<T: Scalar> FiniteExpertClass<T> {
    pub fn new(rows: Vec<Vec<T>>, bound_b: T) -> Result<Self> {
        let horizon = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != horizon) {
            return Err(Error::invalid("expert rows have different lengths"));
        }
        let n_experts = rows.len();
        Self::from_flat(n_experts, horizon, rows.into_iter().flatten().collect(), bound_b)
    }

    /// Builds a class from a row-major table.
    pub fn from_flat(n_experts: usize, horizon: usize, data: Vec<T>, bound_b: T) -> Result<Self> {
        if n_experts == 0 || horizon == 0 {
            return Err(Error::invalid("expert class needs N >= 1 and T >= 1"));
        }
        if data.len() != n_experts * horizon {
            return Err(Error::DimensionMismatch { expected: n_experts * horizon, actual: data.len() });
        }
        if !(bound_b > T::zero()) || !bound_b.is_finite() {
            return Err(Error::invalid(format!("bound b must be positive, got {bound_b}")));
        }
        if let Some(bad) = data.iter().find(|e| !(e.abs() <= bound_b)) {
            return Err(Error::invalid(format!("expert prediction {bad} outside [-{bound_b}, {bound_b}]")));
        }
        Ok(Self { n_experts, horizon, data, bound_b })
    }

    pub fn n_experts(&self) -> usize {
        self.n_experts
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn bound(&self) -> T {
        self.bound_b
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.horizon..(i + 1) * self.horizon]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.horizon)
    }

    pub fn as_flat(&self) -> &[T] {
        &self.data
    }

    /// Entrywise image under `f`, with a new bound.
    pub fn map(&self, bound_b: T, f: impl Fn(T) -> T) -> Result<Self> {
        Self::from_flat(self.n_experts, self.horizon, self.data.iter().map(|&e| f(e)).collect(), bound_b)
    }

    /// The class `{c·f}` for `c > 0`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        if !(c > T::zero()) {
            return Err(Error::invalid("scale factor must be positive"));
        }
        self.map(self.bound_b * c, |e| e * c)
    }

    /// Reorders the columns: column `t` of the result is column `perm[t]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.horizon)?;
        let data = self.rows().flat_map(|row| perm.iter().map(move |&s| row[s])).collect();
        Self::from_flat(self.n_experts, self.horizon, data, self.bound_b)
    }

    /// Keeps the first occurrence of every distinct row.
    pub fn dedup_rows(&self) -> Self {
        let mut kept: Vec<&[T]> = Vec::new();
        for row in self.rows() {
            if !kept.contains(&row) {
                kept.push(row);
            }
        }
        let n = kept.len();
        Self { n_experts: n, horizon: self.horizon, data: kept.concat(), bound_b: self.bound_b }
    }

    /// Appends the rows of `other` (same horizon).
    pub fn union(&self, other: &Self) -> Result<Self> {
        if other.horizon != self.horizon {
            return Err(Error::DimensionMismatch { expected: self.horizon, actual: other.horizon });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self::from_flat(self.n_experts + other.n_experts, self.horizon, data, self.bound_b.max(other.bound_b))
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::invalid(format!("permutation has length {}, expected {n}", perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::invalid("not a permutation"));
        }
        seen[p] = true;
    }
    Ok(())
}
