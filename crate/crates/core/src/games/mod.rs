//! Game protocols, forecaster adapters and adversaries.
//!
//! A round is: the forecaster predicts from the outcomes so far, the
//! adversary picks `y_t` from the same history (it never sees `p_t`), the
//! loss is charged and the forecaster is told the outcome.

mod cf;
mod lemma4;
mod transductive;

pub use cf::{play_cf_game, CfSchedule, EVERY_ROUND_MAX_SIDE};
pub use lemma4::{lemma4_adversary, Lemma4Adversary, OutcomeSet, LEMMA4_TOLERANCE};
pub use transductive::{induced_class, play_transductive, TransductiveForecaster};

use crate::class::FiniteExpertClass;
use crate::config::GameConfig;
use crate::erm::ErmOracle;
use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::minimax::{
    mf_star_round, worst_case_regret_exhaustive, ConstantRule, ExactMinimax, PlayoutMode, PredictionRule,
};
use crate::r2::R2Forecaster;
use crate::rng::RandomStream;
use crate::scalar::Scalar;
use crate::transcript::Transcript;

pub trait Forecaster<T: Scalar> {
    /// Prediction for round `outcomes.len() + 1`.
    fn predict(&mut self, outcomes: &[T]) -> Result<T>;

    /// Called once `y_t` is known; rounding forecasters return `(r_t, z_t)`.
    fn observe(&mut self, _prediction: T, _outcome: T) -> Result<Option<(T, T)>> {
        Ok(None)
    }
}

impl<T: Scalar> Forecaster<T> for ExactMinimax<T> {
    fn predict(&mut self, outcomes: &[T]) -> Result<T> {
        PredictionRule::predict(self, outcomes)
    }
}

impl<T: Scalar> Forecaster<T> for ConstantRule<T> {
    fn predict(&mut self, _outcomes: &[T]) -> Result<T> {
        Ok(self.0)
    }
}

impl<T: Scalar, O: ErmOracle<T>> Forecaster<T> for R2Forecaster<T, O> {
    fn predict(&mut self, _outcomes: &[T]) -> Result<T> {
        R2Forecaster::predict(self)
    }

    fn observe(&mut self, prediction: T, outcome: T) -> Result<Option<(T, T)>> {
        R2Forecaster::observe(self, prediction, outcome).map(Some)
    }
}

/// MF*: two oracle calls per round. Fresh mode draws round `t`'s suffix from
/// stream `(seed, "mf-star-playout", t, 0)`; reused mode draws `Y_1..Y_T`
/// once from `(seed, "mf-star-reused", 0, 0)`.
#[derive(Debug, Clone)]
pub struct MfStar<T, O> {
    oracle: O,
    mode: PlayoutMode<T>,
    seed: u64,
}

impl<T: Scalar, O: ErmOracle<T>> MfStar<T, O> {
    pub fn fresh(oracle: O, seed: u64) -> Self {
        Self { oracle, mode: PlayoutMode::Fresh, seed }
    }

    pub fn reused(oracle: O, seed: u64) -> Self {
        let mut stream = RandomStream::derive(seed, "mf-star-reused", 0, 0);
        let mode = PlayoutMode::reused(oracle.horizon(), &mut stream);
        Self { oracle, mode, seed }
    }

    pub fn mode(&self) -> &PlayoutMode<T> {
        &self.mode
    }

    pub fn oracle(&self) -> &O {
        &self.oracle
    }
}

impl<T: Scalar, O: ErmOracle<T>> Forecaster<T> for MfStar<T, O> {
    fn predict(&mut self, outcomes: &[T]) -> Result<T> {
        let round = outcomes.len() as u64 + 1;
        let mut stream = RandomStream::derive(self.seed, "mf-star-playout", round, 0);
        mf_star_round(&self.oracle, outcomes, &self.mode, &mut stream)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutcomeDistribution<T> {
    /// `+1` with probability `p_plus`, else `−1`.
    Signs {
        p_plus: f64,
    },
    Uniform {
        lo: T,
        hi: T,
    },
}

#[derive(Debug, Clone)]
pub enum Adversary<T: Scalar> {
    FixedSequence(Vec<T>),
    /// Independent draws; round `t` uses stream `(seed, "adversary", t, 0)`.
    IidRandom {
        distribution: OutcomeDistribution<T>,
        seed: u64,
    },
    /// Replays a maximizer of a deterministic forecaster's regret.
    ExhaustiveWorstCase(Vec<T>),
    Lemma4Switch(Box<Lemma4Adversary<T>>),
}

impl<T: Scalar> Adversary<T> {
    /// Solves the game tree of `rule` against `class` and replays the worst
    /// outcome sequence. Horizons up to 16 only.
    pub fn exhaustive_worst_case<R: PredictionRule<T> + ?Sized>(
        rule: &R,
        class: &FiniteExpertClass<T>,
    ) -> Result<Self> {
        let (_, y) = worst_case_regret_exhaustive(rule, class)?;
        Ok(Adversary::ExhaustiveWorstCase(y))
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Adversary::FixedSequence(_) => "fixed_sequence",
            Adversary::IidRandom { .. } => "iid_random",
            Adversary::ExhaustiveWorstCase(_) => "exhaustive_worst_case",
            Adversary::Lemma4Switch(_) => "lemma4_switch",
        }
    }

    /// The outcome of round `outcomes.len() + 1`.
    pub fn next_outcome(&mut self, outcomes: &[T]) -> Result<T> {
        let round = outcomes.len() + 1;
        match self {
            Adversary::FixedSequence(y) | Adversary::ExhaustiveWorstCase(y) => {
                y.get(round - 1).copied().ok_or_else(|| Error::ProtocolViolation {
                    round,
                    message: format!("adversary sequence has only {} outcomes", y.len()),
                })
            }
            Adversary::IidRandom { distribution, seed } => {
                let mut s = RandomStream::derive(*seed, "adversary", round as u64, 0);
                Ok(match *distribution {
                    OutcomeDistribution::Signs { p_plus } => {
                        if s.bernoulli(p_plus) {
                            T::one()
                        } else {
                            -T::one()
                        }
                    }
                    OutcomeDistribution::Uniform { lo, hi } => s.uniform_in(lo, hi),
                })
            }
            Adversary::Lemma4Switch(a) => a.next_outcome(outcomes),
        }
    }
}

fn check_range<T: Scalar>(what: &str, v: T, b: T, round: usize) -> Result<()> {
    if v.abs() <= b {
        Ok(())
    } else {
        Err(Error::ProtocolViolation { round, message: format!("{what} {v} outside [-{b}, {b}]") })
    }
}

/// Prediction with expert advice over a finite class for `class.horizon()`
/// rounds. Predictions and outcomes must lie in `[-b, b]` with `b` from
/// `config`; `cum_best` is the exact best expert on each prefix.
pub fn play_expert_game<T: Scalar, F: Forecaster<T> + ?Sized>(
    forecaster: &mut F,
    adversary: &mut Adversary<T>,
    class: &FiniteExpertClass<T>,
    loss: &LossSpec<T>,
    config: &GameConfig<T>,
) -> Result<Transcript<T>> {
    if config.horizon != class.horizon() {
        return Err(Error::DimensionMismatch { expected: class.horizon(), actual: config.horizon });
    }
    let b = config.bound_b;
    let mut expert_loss = vec![T::zero(); class.n_experts()];
    let mut outcomes = Vec::with_capacity(config.horizon);
    let mut transcript = Transcript::new();
    for t in 0..config.horizon {
        let p = forecaster.predict(&outcomes)?;
        check_range("prediction", p, b, t + 1)?;
        let y = adversary.next_outcome(&outcomes)?;
        check_range("outcome", y, b, t + 1)?;
        for (acc, row) in expert_loss.iter_mut().zip(class.rows()) {
            *acc = *acc + loss.value(row[t], y);
        }
        let best = expert_loss.iter().copied().fold(T::infinity(), T::min);
        let rounding = forecaster.observe(p, y)?;
        transcript.push(p, y, loss.value(p, y), rounding, best);
        outcomes.push(y);
    }
    Ok(transcript)
}
