use crate::class::{check_permutation, FiniteExpertClass};
use crate::erm::{threshold_behaviors, ErmOracle, PolaritySet, ThresholdErm};
use crate::error::{Error, Result};
use crate::games::Adversary;
use crate::loss::LossSpec;
use crate::minimax::{mf_exact_prediction, mf_star_round, PlayoutMode};
use crate::rng::RandomStream;
use crate::scalar::Scalar;
use crate::transcript::Transcript;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransductiveForecaster {
    /// MF* with fresh playouts, stream `(seed, "transductive-playout", t, 0)`.
    MfStarFresh,
    /// MF* with one sign vector drawn from `(seed, "transductive-reused", 0, 0)`.
    MfStarReused,
    /// Exact minimax prediction by suffix enumeration (short horizons).
    Exact,
}

/// The threshold class on `instances` as a finite expert class in round
/// order `order`, deduplicated to distinct behaviors.
pub fn induced_class<T: Scalar>(
    instances: &[T],
    order: &[usize],
    polarity: PolaritySet,
) -> Result<FiniteExpertClass<T>> {
    check_permutation(order, instances.len())?;
    threshold_behaviors(instances, polarity)?.permute_columns(order)
}

/// Round order known to the forecaster at round `t`: the revealed
/// `π_1..π_t`, then the unrevealed instances in increasing index order. The
/// playout signs are exchangeable, so any completion gives the same
/// expected prediction.
fn virtual_order(order: &[usize], revealed: usize) -> Vec<usize> {
    let mut seen = vec![false; order.len()];
    let mut out = Vec::with_capacity(order.len());
    for &i in &order[..revealed] {
        seen[i] = true;
        out.push(i);
    }
    out.extend((0..order.len()).filter(|&i| !seen[i]));
    out
}

/// Transductive online learning with thresholds: the instance set is known,
/// round `t` reveals `π_t` and the forecaster predicts the label of
/// `instances[π_t]`. Regret is measured against the best threshold on the
/// revealed prefix.
pub fn play_transductive<T: Scalar>(
    instances: &[T],
    order: &[usize],
    forecaster: TransductiveForecaster,
    adversary: &mut Adversary<T>,
    polarity: PolaritySet,
    loss: &LossSpec<T>,
    seed: u64,
) -> Result<Transcript<T>> {
    let horizon = instances.len();
    let truth = ThresholdErm::new(instances.to_vec(), order.to_vec(), polarity)?;
    let mode = match forecaster {
        TransductiveForecaster::MfStarReused => {
            PlayoutMode::reused(horizon, &mut RandomStream::derive(seed, "transductive-reused", 0, 0))
        }
        _ => PlayoutMode::Fresh,
    };
    let mut outcomes = Vec::with_capacity(horizon);
    let mut transcript = Transcript::new();
    for t in 1..=horizon {
        let view = ThresholdErm::new(instances.to_vec(), virtual_order(order, t), polarity)?;
        let p = match forecaster {
            TransductiveForecaster::Exact => mf_exact_prediction(&view, &outcomes)?,
            _ => {
                let mut stream = RandomStream::derive(seed, "transductive-playout", t as u64, 0);
                mf_star_round(&view, &outcomes, &mode, &mut stream)?
            }
        };
        let y = adversary.next_outcome(&outcomes)?;
        if !(y == T::one() || y == -T::one()) {
            return Err(Error::ProtocolViolation { round: t, message: format!("label {y} is not ±1") });
        }
        outcomes.push(y);
        let best = truth.infimum(&outcomes, loss).map_err(|e| e.at_round(t))?;
        transcript.push(p, y, loss.value(p, y), None, best);
    }
    Ok(transcript)
}
