use crate::class::FiniteExpertClass;
use crate::erm::{ClassDescriptor, ErmOracle, ErmSolution};
use crate::error::{check_len, Error, Result};
use crate::loss::LossSpec;
use crate::scalar::Scalar;

/// Exact minimum of `L(f, y)` over the rows of `class`, ties to the lowest row.
pub fn finite_erm<T: Scalar>(class: &FiniteExpertClass<T>, y: &[T], loss: &LossSpec<T>) -> Result<(T, usize)> {
    check_len(class.horizon(), y.len())?;
    Ok(prefix_argmin(class, y, loss))
}

fn prefix_argmin<T: Scalar>(class: &FiniteExpertClass<T>, y: &[T], loss: &LossSpec<T>) -> (T, usize) {
    let mut best = (T::infinity(), 0);
    for (i, row) in class.rows().enumerate() {
        let v: T = row.iter().zip(y).map(|(&f, &o)| loss.value(f, o)).sum();
        if v < best.0 {
            best = (v, i);
        }
    }
    best
}

/// [`ErmOracle`] over an explicit expert table, optionally rescaled by `1/b`.
#[derive(Debug, Clone)]
pub struct FiniteErm<T> {
    class: FiniteExpertClass<T>,
    scaled: bool,
}

impl<T: Scalar> FiniteErm<T> {
    pub fn new(class: FiniteExpertClass<T>) -> Self {
        Self { class, scaled: false }
    }

    /// Oracle over `{f / b : f ∈ F}`, predictions in `[-1, 1]`.
    pub fn scaled(class: &FiniteExpertClass<T>) -> Result<Self> {
        let b = class.bound();
        Ok(Self { class: class.map(T::one(), |e| (e / b).max(-T::one()).min(T::one()))?, scaled: true })
    }

    pub fn class(&self) -> &FiniteExpertClass<T> {
        &self.class
    }

    pub fn argmin(&self, outcomes: &[T], loss: &LossSpec<T>) -> Result<(T, usize)> {
        if outcomes.len() > self.class.horizon() {
            return Err(Error::DimensionMismatch { expected: self.class.horizon(), actual: outcomes.len() });
        }
        Ok(prefix_argmin(&self.class, outcomes, loss))
    }
}

impl<T: Scalar> ErmOracle<T> for FiniteErm<T> {
    fn horizon(&self) -> usize {
        self.class.horizon()
    }

    fn descriptor(&self) -> ClassDescriptor {
        ClassDescriptor::Finite
    }

    fn is_scaled(&self) -> bool {
        self.scaled
    }

    fn minimize(&self, outcomes: &[T], loss: &LossSpec<T>) -> Result<ErmSolution<T>> {
        let (value, idx) = self.argmin(outcomes, loss)?;
        Ok(ErmSolution::exact(value, Some(self.class.row(idx).to_vec())))
    }
}
