//! The Minimax Forecaster for absolute loss and binary outcomes.
//!
//! Two exact evaluations of the optimal prediction are provided: the
//! dynamic program over the `{0,1}` world ([`dp_build`], [`dp_prediction`])
//! and direct enumeration of the random playout in the `±1` world
//! ([`mf_exact_prediction`]). [`mf_star_round`] is the one-sample version
//! that needs two ERM calls per round.
//!
//! All playout differences carry a factor `½`: with it the prediction equals
//! `2p̃ − 1` for the `{0,1}`-world optimum `p̃`, stays in `[-1, 1]`, and a
//! singleton class is followed exactly.

use crate::class::FiniteExpertClass;
use crate::erm::{finite_erm, ErmOracle};
use crate::error::{Error, Result};
use crate::loss::{LossKind, LossSpec};
use crate::rng::RandomStream;
use crate::scalar::Scalar;

/// Largest horizon for a dense DP table (`2^{T+1}` entries).
pub const MAX_DP_HORIZON: usize = 20;
/// Largest playout suffix enumerated by [`mf_exact_prediction`].
pub const MAX_ENUMERATED_SUFFIX: usize = 20;
/// Largest horizon for [`worst_case_regret_exhaustive`].
pub const MAX_EXHAUSTIVE_HORIZON: usize = 16;

fn capacity(what: &'static str, value: usize, limit: usize) -> Result<()> {
    if value > limit {
        Err(Error::Capacity { what, value, limit })
    } else {
        Ok(())
    }
}

fn is_sign<T: Scalar>(y: T) -> bool {
    y == T::one() || y == -T::one()
}

/// Maps a class from `[-1, 1]` to `[0, 1]` by `x ↦ (x + 1)/2`.
pub fn class_to_01<T: Scalar>(class: &FiniteExpertClass<T>) -> Result<FiniteExpertClass<T>> {
    if class.as_flat().iter().any(|e| e.abs() > T::one()) {
        return Err(Error::invalid("class entries must lie in [-1, 1]"));
    }
    class.map(T::one(), |x| (x + T::one()) * T::half())
}

/// Maps `±1` outcomes to `{0, 1}`.
pub fn outcomes_to_01<T: Scalar>(y: &[T]) -> Result<Vec<T>> {
    y.iter()
        .map(|&v| {
            if is_sign(v) {
                Ok((v + T::one()) * T::half())
            } else {
                Err(Error::invalid(format!("outcome {v} is not ±1")))
            }
        })
        .collect()
}

/// `±1` outcomes as bits, `+1 ↦ true`.
pub fn outcome_bits<T: Scalar>(y: &[T]) -> Result<Vec<bool>> {
    y.iter()
        .map(|&v| if is_sign(v) { Ok(v > T::zero()) } else { Err(Error::invalid(format!("outcome {v} is not ±1"))) })
        .collect()
}

/// Converts a `{0,1}`-world prediction `p̃` to the `±1` world, `2p̃ − 1`.
pub fn prediction_to_pm1<T: Scalar>(p01: T) -> T {
    T::two() * p01 - T::one()
}

/// Values `A_t(y^t)` for every binary prefix, stored heap-style: the prefix
/// `y^t` lives at index `2^t + bits(y^t)` with `y_1` as the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct DpTable<T> {
    horizon: usize,
    values: Vec<T>,
}

impl<T: Scalar> DpTable<T> {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `A_0`, the minimax regret of the `{0,1}`-world game.
    pub fn root(&self) -> T {
        self.values[1]
    }

    fn index(&self, prefix: &[bool]) -> Result<usize> {
        if prefix.len() > self.horizon {
            return Err(Error::invalid(format!(
                "prefix of length {} not in a table of horizon {}",
                prefix.len(),
                self.horizon
            )));
        }
        Ok(prefix.iter().fold(1usize, |k, &b| 2 * k + usize::from(b)))
    }

    pub fn value(&self, prefix: &[bool]) -> Result<T> {
        Ok(self.values[self.index(prefix)?])
    }

    /// `max |A_t(y1) − A_t(y0)|` over all prefixes of length `< T`.
    pub fn max_sibling_gap(&self) -> T {
        (1..(1usize << self.horizon))
            .map(|k| (self.values[2 * k + 1] - self.values[2 * k]).abs())
            .fold(T::zero(), T::max)
    }
}

/// Builds the table for a `{0,1}`-world class under absolute loss:
/// `A_T = −inf_f L(f, y)` and `A_{t−1} = ½(A_t(y0) + A_t(y1) + 1)`.
pub fn dp_build<T: Scalar>(class01: &FiniteExpertClass<T>, loss: &LossSpec<T>) -> Result<DpTable<T>> {
    if loss.kind() != LossKind::Absolute {
        return Err(Error::invalid("the DP recursion holds for absolute loss only"));
    }
    if class01.as_flat().iter().any(|&e| e < T::zero() || e > T::one()) {
        return Err(Error::invalid("class entries must lie in [0, 1]"));
    }
    let horizon = class01.horizon();
    capacity("DP horizon", horizon, MAX_DP_HORIZON)?;
    let leaves = 1usize << horizon;
    let mut values = vec![T::zero(); 2 * leaves];
    let mut y = vec![T::zero(); horizon];
    for bits in 0..leaves {
        for (t, v) in y.iter_mut().enumerate() {
            *v = if bits >> (horizon - 1 - t) & 1 == 1 { T::one() } else { T::zero() };
        }
        values[leaves + bits] = -finite_erm(class01, &y, loss)?.0;
    }
    for k in (1..leaves).rev() {
        values[k] = T::half() * (values[2 * k] + values[2 * k + 1] + T::one());
    }
    Ok(DpTable { horizon, values })
}

/// The optimal `{0,1}`-world prediction after `prefix`:
/// `½(A_t(y1) − A_t(y0) + 1)`, clamped to `[0, 1]` against rounding.
pub fn dp_prediction<T: Scalar>(table: &DpTable<T>, prefix: &[bool]) -> Result<T> {
    if prefix.len() >= table.horizon {
        return Err(Error::invalid(format!(
            "no prediction after {} rounds of a {}-round game",
            prefix.len(),
            table.horizon
        )));
    }
    let k = table.index(prefix)?;
    let p = T::half() * (table.values[2 * k + 1] - table.values[2 * k] + T::one());
    Ok(p.max(T::zero()).min(T::one()))
}

/// `½[inf_f L(f, prefix·(−1)·suffix) − inf_f L(f, prefix·(+1)·suffix)]` under
/// absolute loss; `buf` is scratch space.
pub(crate) fn playout_difference<T: Scalar, O: ErmOracle<T> + ?Sized>(
    oracle: &O,
    prefix: &[T],
    suffix: &[T],
    loss: &LossSpec<T>,
    buf: &mut Vec<T>,
) -> Result<T> {
    let round = prefix.len() + 1;
    buf.clear();
    buf.extend_from_slice(prefix);
    buf.push(-T::one());
    buf.extend_from_slice(suffix);
    let minus = oracle.infimum(buf, loss).map_err(|e| e.at_round(round))?;
    buf[prefix.len()] = T::one();
    let plus = oracle.infimum(buf, loss).map_err(|e| e.at_round(round))?;
    Ok(T::half() * (minus - plus))
}

fn check_prefix<T: Scalar>(prefix: &[T], horizon: usize) -> Result<()> {
    if prefix.len() >= horizon {
        return Err(Error::invalid(format!(
            "no round left after {} outcomes of a {}-round game",
            prefix.len(),
            horizon
        )));
    }
    outcome_bits(prefix).map(drop)
}

fn suffix_from_bits<T: Scalar>(bits: usize, len: usize, out: &mut Vec<T>) {
    out.clear();
    out.extend((0..len).map(|i| if bits >> (len - 1 - i) & 1 == 1 { T::one() } else { -T::one() }));
}

/// Exact minimax prediction in the `±1` world: the playout difference
/// averaged over all `2^{T−t}` suffixes, enumerated in lexicographic order
/// (`−1` before `+1`).
pub fn mf_exact_prediction<T: Scalar, O: ErmOracle<T> + ?Sized>(oracle: &O, prefix: &[T]) -> Result<T> {
    let horizon = oracle.horizon();
    check_prefix(prefix, horizon)?;
    let rest = horizon - prefix.len() - 1;
    capacity("playout suffix length", rest, MAX_ENUMERATED_SUFFIX)?;
    let loss = LossSpec::absolute(T::one())?;
    let (mut buf, mut suffix) = (Vec::with_capacity(horizon), Vec::with_capacity(rest));
    let mut total = T::zero();
    for bits in 0..(1usize << rest) {
        suffix_from_bits(bits, rest, &mut suffix);
        total = total + playout_difference(oracle, prefix, &suffix, &loss, &mut buf)?;
    }
    Ok(total / T::from_usize_lossy(1usize << rest))
}

/// How MF* obtains its playout signs.
#[derive(Debug, Clone, PartialEq)]
pub enum PlayoutMode<T> {
    /// Fresh signs `Y_{t+1..T}` every round.
    Fresh,
    /// One frozen vector `Y_1..Y_T`, read at positions `t+1..T` in round `t`.
    Reused(Vec<T>),
}

impl<T: Scalar> PlayoutMode<T> {
    /// A reused-mode vector drawn once from `stream`.
    pub fn reused(horizon: usize, stream: &mut RandomStream) -> Self {
        PlayoutMode::Reused(stream.rademacher_vec(horizon))
    }
}

/// One MF* prediction: the playout difference at a single sign suffix.
pub fn mf_star_round<T: Scalar, O: ErmOracle<T> + ?Sized>(
    oracle: &O,
    prefix: &[T],
    mode: &PlayoutMode<T>,
    stream: &mut RandomStream,
) -> Result<T> {
    let horizon = oracle.horizon();
    check_prefix(prefix, horizon)?;
    let suffix: Vec<T> = match mode {
        PlayoutMode::Fresh => stream.rademacher_vec(horizon - prefix.len() - 1),
        PlayoutMode::Reused(y) => {
            if y.len() != horizon {
                return Err(Error::DimensionMismatch { expected: horizon, actual: y.len() });
            }
            y[prefix.len() + 1..].to_vec()
        }
    };
    let loss = LossSpec::absolute(T::one())?;
    let mut buf = Vec::with_capacity(horizon);
    playout_difference(oracle, prefix, &suffix, &loss, &mut buf)
}

/// A deterministic forecaster: the prediction for round `prefix.len() + 1`
/// as a function of the outcomes so far.
pub trait PredictionRule<T: Scalar> {
    fn predict(&self, prefix: &[T]) -> Result<T>;
}

/// The exact Minimax Forecaster, backed by a DP table.
#[derive(Debug, Clone)]
pub struct ExactMinimax<T> {
    table: DpTable<T>,
}

impl<T: Scalar> ExactMinimax<T> {
    /// Builds the table for a `±1`-world class with entries in `[-1, 1]`.
    pub fn new(class: &FiniteExpertClass<T>) -> Result<Self> {
        let table = dp_build(&class_to_01(class)?, &LossSpec::absolute(T::one())?)?;
        Ok(Self { table })
    }

    pub fn table(&self) -> &DpTable<T> {
        &self.table
    }
}

impl<T: Scalar> PredictionRule<T> for ExactMinimax<T> {
    fn predict(&self, prefix: &[T]) -> Result<T> {
        Ok(prediction_to_pm1(dp_prediction(&self.table, &outcome_bits(prefix)?)?))
    }
}

/// Predicts the same value every round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantRule<T>(pub T);

impl<T: Scalar> PredictionRule<T> for ConstantRule<T> {
    fn predict(&self, _prefix: &[T]) -> Result<T> {
        Ok(self.0)
    }
}

/// `max_y L(p, y) − inf_f L(f, y)` over all `y ∈ {−1,+1}^T` under absolute
/// loss. Ties go to the first maximizer in depth-first order with `+1` tried
/// before `−1`. The rule is queried once per node of the outcome tree.
pub fn worst_case_regret_exhaustive<T: Scalar, R: PredictionRule<T> + ?Sized>(
    rule: &R,
    class: &FiniteExpertClass<T>,
) -> Result<(T, Vec<T>)> {
    let horizon = class.horizon();
    capacity("exhaustive horizon", horizon, MAX_EXHAUSTIVE_HORIZON)?;
    let loss = LossSpec::absolute(T::one())?;
    let mut best: Option<(T, Vec<T>)> = None;
    let mut prefix = Vec::with_capacity(horizon);
    walk(rule, class, &loss, &mut prefix, T::zero(), &mut best)?;
    Ok(best.expect("the outcome tree has at least one leaf"))
}

fn walk<T: Scalar, R: PredictionRule<T> + ?Sized>(
    rule: &R,
    class: &FiniteExpertClass<T>,
    loss: &LossSpec<T>,
    prefix: &mut Vec<T>,
    cum_loss: T,
    best: &mut Option<(T, Vec<T>)>,
) -> Result<()> {
    if prefix.len() == class.horizon() {
        let regret = cum_loss - finite_erm(class, prefix, loss)?.0;
        if best.as_ref().is_none_or(|(b, _)| regret > *b) {
            *best = Some((regret, prefix.clone()));
        }
        return Ok(());
    }
    let p = rule.predict(prefix)?;
    if !(p.abs() <= T::one()) {
        return Err(Error::ProtocolViolation {
            round: prefix.len() + 1,
            message: format!("prediction {p} outside [-1, 1]"),
        });
    }
    for y in [T::one(), -T::one()] {
        prefix.push(y);
        walk(rule, class, loss, prefix, cum_loss + loss.value(p, y), best)?;
        prefix.pop();
    }
    Ok(())
}
