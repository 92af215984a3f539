//! The Randomized Rounding (R²) Forecaster for convex `ρ`-Lipschitz losses and
//! real outcomes in `[-b, b]`.
//!
//! Each round averages `J = ceil(ηT)` random playout differences over the
//! scaled class `f/b`, fed with the rounded labels `z_1..z_{t−1}` instead of
//! the real outcomes. After `y_t` is revealed the subgradient is rounded to a
//! label `z_t ∈ {−1, +1}` with `P(z_t = 1) = ½(1 − ∂ℓ/ρ)`.

use crate::config::GameConfig;
use crate::erm::ErmOracle;
use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::minimax::{mf_exact_prediction, playout_difference};
use crate::rng::RandomStream;
use crate::scalar::Scalar;

/// Relative excess over `b` tolerated in a prediction before it is treated as
/// an invariant violation; smaller excesses come from inexact ERM and are
/// clamped.
pub const PREDICTION_SLACK: f64 = 1e-3;

/// Round counter and rounded-label history.
#[derive(Debug, Clone, PartialEq)]
pub struct R2State<T> {
    config: GameConfig<T>,
    inner: usize,
    z: Vec<T>,
}

impl<T: Scalar> R2State<T> {
    pub fn new(config: GameConfig<T>) -> Result<Self> {
        config.validate()?;
        let inner = config.inner_iterations();
        Ok(Self { config, inner, z: Vec::new() })
    }

    pub fn config(&self) -> &GameConfig<T> {
        &self.config
    }

    /// The 1-based round about to be played.
    pub fn round(&self) -> usize {
        self.z.len() + 1
    }

    pub fn labels(&self) -> &[T] {
        &self.z
    }

    /// `J`, playout draws per round.
    pub fn inner_iterations(&self) -> usize {
        self.inner
    }

    /// Records `z_t` and advances to the next round.
    pub fn push_label(&mut self, z: T) -> Result<()> {
        if !(z == T::one() || z == -T::one()) {
            return Err(Error::invalid(format!("rounded label {z} is not ±1")));
        }
        if self.z.len() >= self.config.horizon {
            return Err(Error::invalid("all rounds already played"));
        }
        self.z.push(z);
        Ok(())
    }
}

fn check_oracle<T: Scalar, O: ErmOracle<T> + ?Sized>(state: &R2State<T>, oracle: &O) -> Result<()> {
    if !oracle.is_scaled() {
        return Err(Error::invalid("the R² oracle must range over the scaled class f/b"));
    }
    if oracle.horizon() != state.config.horizon {
        return Err(Error::DimensionMismatch { expected: state.config.horizon, actual: oracle.horizon() });
    }
    if state.z.len() >= state.config.horizon {
        return Err(Error::invalid("all rounds already played"));
    }
    Ok(())
}

fn within_bound<T: Scalar>(p: T, b: T, round: usize) -> Result<T> {
    let slack = b * T::lit(PREDICTION_SLACK);
    if !(p.abs() <= b + slack) {
        return Err(Error::InvariantViolation(format!("R² prediction {p} outside [-{b}, {b}] at round {round}")));
    }
    Ok(p.max(-b).min(b))
}

/// `p_t = (b/J) Σ_j Δ_j` with `Δ_j` the playout difference at a fresh sign
/// suffix `Y_{t+1..T}` drawn from `stream`. Issues exactly `2J` oracle calls.
pub fn r2_predict<T: Scalar, O: ErmOracle<T> + ?Sized>(
    state: &R2State<T>,
    oracle: &O,
    stream: &mut RandomStream,
) -> Result<T> {
    check_oracle(state, oracle)?;
    let horizon = state.config.horizon;
    let rest = horizon - state.z.len() - 1;
    let loss = LossSpec::absolute(T::one())?;
    let mut buf = Vec::with_capacity(horizon);
    let mut total = T::zero();
    for _ in 0..state.inner {
        let suffix: Vec<T> = stream.rademacher_vec(rest);
        total = total + playout_difference(oracle, &state.z, &suffix, &loss, &mut buf)?;
    }
    let b = state.config.bound_b;
    within_bound(b * total / T::from_usize_lossy(state.inner), b, state.round())
}

/// The expectation that [`r2_predict`] estimates, by enumerating all suffixes.
pub fn r2_expected_prediction<T: Scalar, O: ErmOracle<T> + ?Sized>(state: &R2State<T>, oracle: &O) -> Result<T> {
    check_oracle(state, oracle)?;
    let b = state.config.bound_b;
    within_bound(b * mf_exact_prediction(oracle, &state.z)?, b, state.round())
}

/// Rounding probability `r_t = ½(1 − ∂ℓ(p_t, y_t)/ρ)` and label
/// `z_t = +1` with probability `r_t`.
pub fn r2_round_labels<T: Scalar>(p: T, y: T, loss: &LossSpec<T>, stream: &mut RandomStream) -> Result<(T, T)> {
    let g = loss.subgradient(p, y);
    let rho = loss.rho();
    if !(g.abs() <= rho) {
        return Err(Error::InvariantViolation(format!("subgradient {g} at (p={p}, y={y}) exceeds rho = {rho}")));
    }
    let r = T::half() * (T::one() - g / rho);
    let z = if stream.bernoulli(r.to_f64_lossy()) { T::one() } else { -T::one() };
    Ok((r, z))
}

/// `ρ R + ρ b (√(1/η) + 2) √(2T ln(2T/δ))`, the high-probability regret bound.
pub fn theorem3_bound<T: Scalar>(rho: T, b: T, eta: T, horizon: usize, delta: T, rademacher: T) -> Result<T> {
    if !(rho > T::zero() && b > T::zero() && eta > T::zero()) {
        return Err(Error::invalid("rho, b and eta must be positive"));
    }
    if horizon == 0 {
        return Err(Error::invalid("horizon must be positive"));
    }
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::invalid("delta must lie in (0, 1)"));
    }
    if !(rademacher >= T::zero()) {
        return Err(Error::invalid("Rademacher complexity must be nonnegative"));
    }
    let t = T::from_usize_lossy(horizon);
    let dev = (T::two() * t * (T::two() * t / delta).ln()).sqrt();
    Ok(rho * rademacher + rho * b * (eta.recip().sqrt() + T::two()) * dev)
}

/// A full R² player: state, oracle over the scaled class, loss and seed.
///
/// Round `t` draws its playouts from stream `(seed, "r2-playout", t, 0)` and
/// its rounding coin from `(seed, "r2-rounding", t, 0)`.
#[derive(Debug, Clone)]
pub struct R2Forecaster<T: Scalar, O> {
    state: R2State<T>,
    oracle: O,
    loss: LossSpec<T>,
    seed: u64,
}

impl<T: Scalar, O: ErmOracle<T>> R2Forecaster<T, O> {
    pub fn new(config: GameConfig<T>, oracle: O, loss: LossSpec<T>) -> Result<Self> {
        let seed = config.master_seed;
        let state = R2State::new(config)?;
        check_oracle(&state, &oracle)?;
        Ok(Self { state, oracle, loss, seed })
    }

    pub fn state(&self) -> &R2State<T> {
        &self.state
    }

    pub fn oracle(&self) -> &O {
        &self.oracle
    }

    pub fn predict(&self) -> Result<T> {
        let mut stream = RandomStream::derive(self.seed, "r2-playout", self.state.round() as u64, 0);
        r2_predict(&self.state, &self.oracle, &mut stream)
    }

    /// Rounds the feedback of the current round and advances; returns `(r_t, z_t)`.
    pub fn observe(&mut self, prediction: T, outcome: T) -> Result<(T, T)> {
        let mut stream = RandomStream::derive(self.seed, "r2-rounding", self.state.round() as u64, 0);
        let (r, z) = r2_round_labels(prediction, outcome, &self.loss, &mut stream)?;
        self.state.push_label(z)?;
        Ok((r, z))
    }
}
