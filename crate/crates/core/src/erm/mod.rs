//! Empirical-risk-minimization oracles.
//!
//! Every forecaster in the crate reduces a round to one or more calls of
//! `inf_{f ∈ F} L(f, y)` on a full-length outcome vector (real prefix followed
//! by a random playout suffix). [`ErmOracle`] is that contract; the finite,
//! threshold and trace-norm classes implement it.

mod finite;
mod linalg;
mod projection;
mod threshold;
mod tracenorm;

use std::sync::atomic::{AtomicU64, Ordering};

pub use finite::{finite_erm, FiniteErm};
pub use linalg::{jacobi_svd, Matrix, Svd, SVD_THRESHOLD};
pub use projection::{box_project, dykstra_project, l1_ball_project, tracenorm_project, DykstraOutcome};
pub use threshold::{threshold_behaviors, threshold_erm, Polarity, PolaritySet, ThresholdErm, ThresholdFit};
pub use tracenorm::{tracenorm_erm, SolverMethod, SolverParams, TraceNormClass, TraceNormErm, TraceNormSolution};

use crate::error::Result;
use crate::loss::LossSpec;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassDescriptor {
    Finite,
    Threshold,
    TraceNorm,
}

/// Result of one oracle call.
#[derive(Debug, Clone, PartialEq)]
pub struct ErmSolution<T> {
    /// The (approximate, for iterative solvers) infimum of the cumulative loss.
    pub value: T,
    /// A prediction vector attaining `value`, when the oracle produces one.
    pub minimizer: Option<Vec<T>>,
    pub converged: bool,
    /// Additive optimization tolerance; zero for exact oracles.
    pub tolerance: T,
}

impl<T: Scalar> ErmSolution<T> {
    pub fn exact(value: T, minimizer: Option<Vec<T>>) -> Self {
        Self { value, minimizer, converged: true, tolerance: T::zero() }
    }
}

/// `y ↦ inf_{f ∈ F} Σ_t ℓ(f_t, y_t)` for some class `F`.
///
/// `outcomes` may be shorter than [`horizon`](Self::horizon); the sum then runs
/// over the prefix only.
pub trait ErmOracle<T: Scalar>: Send + Sync {
    fn horizon(&self) -> usize;

    fn descriptor(&self) -> ClassDescriptor;

    /// Whether predictions were divided by the class bound `b` (the class `f/b`).
    fn is_scaled(&self) -> bool {
        false
    }

    fn minimize(&self, outcomes: &[T], loss: &LossSpec<T>) -> Result<ErmSolution<T>>;

    fn infimum(&self, outcomes: &[T], loss: &LossSpec<T>) -> Result<T> {
        self.minimize(outcomes, loss).map(|s| s.value)
    }
}

impl<T: Scalar, O: ErmOracle<T> + ?Sized> ErmOracle<T> for &O {
    fn horizon(&self) -> usize {
        (**self).horizon()
    }
    fn descriptor(&self) -> ClassDescriptor {
        (**self).descriptor()
    }
    fn is_scaled(&self) -> bool {
        (**self).is_scaled()
    }
    fn minimize(&self, outcomes: &[T], loss: &LossSpec<T>) -> Result<ErmSolution<T>> {
        (**self).minimize(outcomes, loss)
    }
}

/// Wraps an oracle and counts its calls.
#[derive(Debug)]
pub struct CountingOracle<O> {
    inner: O,
    calls: AtomicU64,
}

impl<O> CountingOracle<O> {
    pub fn new(inner: O) -> Self {
        Self { inner, calls: AtomicU64::new(0) }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<T: Scalar, O: ErmOracle<T>> ErmOracle<T> for CountingOracle<O> {
    fn horizon(&self) -> usize {
        self.inner.horizon()
    }
    fn descriptor(&self) -> ClassDescriptor {
        self.inner.descriptor()
    }
    fn is_scaled(&self) -> bool {
        self.inner.is_scaled()
    }
    fn minimize(&self, outcomes: &[T], loss: &LossSpec<T>) -> Result<ErmSolution<T>> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.minimize(outcomes, loss)
    }
}
