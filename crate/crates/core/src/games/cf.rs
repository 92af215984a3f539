use crate::erm::{ErmOracle, Matrix, SolverParams, TraceNormClass, TraceNormErm};
use crate::error::{Error, Result};
use crate::games::{Adversary, Forecaster};
use crate::loss::LossSpec;
use crate::rng::RandomStream;
use crate::scalar::Scalar;
use crate::transcript::Transcript;

/// Largest side for which the best-in-class loss is recomputed every round;
/// bigger games recompute it at `T/8, T/4, T/2, T` only.
pub const EVERY_ROUND_MAX_SIDE: usize = 8;

/// Order in which the entries of an `n_rows × n_cols` matrix are revealed,
/// each entry at most once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfSchedule {
    n_rows: usize,
    n_cols: usize,
    order: Vec<(usize, usize)>,
    horizon: usize,
}

impl CfSchedule {
    /// `order` must list every entry exactly once; `horizon ≤ n_rows·n_cols`
    /// rounds are played.
    pub fn new(n_rows: usize, n_cols: usize, order: Vec<(usize, usize)>, horizon: usize) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        if order.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch { expected: n_rows * n_cols, actual: order.len() });
        }
        let mut seen = vec![false; n_rows * n_cols];
        for &(i, j) in &order {
            if i >= n_rows || j >= n_cols {
                return Err(Error::invalid(format!("entry ({i}, {j}) out of range")));
            }
            if std::mem::replace(&mut seen[i * n_cols + j], true) {
                return Err(Error::invalid(format!("entry ({i}, {j}) scheduled twice")));
            }
        }
        if horizon > order.len() {
            return Err(Error::invalid(format!("horizon {horizon} exceeds the {} entries", order.len())));
        }
        Ok(Self { n_rows, n_cols, order, horizon })
    }

    pub fn row_major(n_rows: usize, n_cols: usize) -> Result<Self> {
        let order = (0..n_rows).flat_map(|i| (0..n_cols).map(move |j| (i, j))).collect();
        Self::new(n_rows, n_cols, order, n_rows * n_cols)
    }

    /// A uniformly random revelation order over all entries.
    pub fn shuffled(n_rows: usize, n_cols: usize, stream: &mut RandomStream) -> Result<Self> {
        let mut s = Self::row_major(n_rows, n_cols)?;
        stream.shuffle(&mut s.order);
        Ok(s)
    }

    pub fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        if horizon > self.order.len() {
            return Err(Error::invalid(format!("horizon {horizon} exceeds the {} entries", self.order.len())));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn order(&self) -> &[(usize, usize)] {
        &self.order
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// The trace-norm class over this schedule (all entries, horizon `mn`).
    pub fn class<T: Scalar>(&self, radius: T, entry_bound: T) -> Result<TraceNormClass<T>> {
        TraceNormClass::new(self.n_rows, self.n_cols, radius, entry_bound, self.order.clone())
    }

    /// The entries of `target` in revelation order, for a fixed-sequence adversary.
    pub fn reveal<T: Scalar>(&self, target: &Matrix<T>) -> Result<Vec<T>> {
        if target.rows() != self.n_rows || target.cols() != self.n_cols {
            return Err(Error::invalid("target matrix has the wrong shape"));
        }
        Ok(self.order[..self.horizon].iter().map(|&ij| target[ij]).collect())
    }

    fn checkpoints(&self) -> Vec<usize> {
        if self.n_rows.max(self.n_cols) <= EVERY_ROUND_MAX_SIDE {
            return (1..=self.horizon).collect();
        }
        let mut c: Vec<usize> = [8, 4, 2, 1].iter().map(|d| self.horizon.div_ceil(*d)).filter(|&t| t > 0).collect();
        c.dedup();
        c
    }
}

/// Collaborative filtering: round `t` reveals the entry `schedule.order()[t]`,
/// the forecaster predicts it and the adversary supplies its value.
///
/// The running best-in-class loss is the trace-norm ERM over the revealed
/// prefix, recomputed every round for sides up to 8 and at checkpoints
/// otherwise (between checkpoints the last value is carried, which can only
/// overstate regret). The transcript's `solver_tolerance` is the solver's
/// additive tolerance whenever an ERM ran. Whether the loss satisfies the
/// uniform-regret condition is the caller's concern.
pub fn play_cf_game<T: Scalar, F: Forecaster<T> + ?Sized>(
    schedule: &CfSchedule,
    forecaster: &mut F,
    class: &TraceNormClass<T>,
    adversary: &mut Adversary<T>,
    loss: &LossSpec<T>,
    params: &SolverParams<T>,
) -> Result<Transcript<T>> {
    if class.schedule() != schedule.order() {
        return Err(Error::invalid("class schedule differs from the game schedule"));
    }
    let b = class.entry_bound();
    let best_oracle = TraceNormErm::new(class.clone(), false, *params);
    let checkpoints = schedule.checkpoints();
    let mut outcomes = Vec::with_capacity(schedule.horizon);
    let mut transcript: Transcript<T> = Transcript::new();
    let mut best = T::zero();
    for t in 1..=schedule.horizon {
        let p = forecaster.predict(&outcomes)?;
        let y = adversary.next_outcome(&outcomes)?;
        for (what, v) in [("prediction", p), ("outcome", y)] {
            if !(v.abs() <= b) {
                return Err(Error::ProtocolViolation { round: t, message: format!("{what} {v} outside [-{b}, {b}]") });
            }
        }
        outcomes.push(y);
        if checkpoints.binary_search(&t).is_ok() {
            let sol = best_oracle.minimize(&outcomes, loss).map_err(|e| e.at_round(t))?;
            best = sol.value;
            transcript.solver_tolerance = transcript.solver_tolerance.max(sol.tolerance);
        }
        let rounding = forecaster.observe(p, y)?;
        transcript.push(p, y, loss.value(p, y), rounding, best);
    }
    Ok(transcript)
}
