use std::fmt;
use std::sync::Arc;

use crate::erm::ErmOracle;
use crate::error::{Error, Result};
use crate::games::Adversary;
use crate::loss::{check_lemma4_condition, uniform_grid, LossSpec};
use crate::scalar::Scalar;

/// Outcome space searched by the switching adversary.
#[derive(Debug, Clone, PartialEq)]
pub enum OutcomeSet<T> {
    /// A finite outcome alphabet, e.g. `{−1, +1}`.
    Discrete(Vec<T>),
    /// The interval `[lo, hi]`, searched on `points` uniform grid points plus
    /// the comparator's own prediction `f*_t`.
    Interval { lo: T, hi: T, points: usize },
}

impl<T: Scalar> OutcomeSet<T> {
    fn grid(&self) -> Result<Vec<T>> {
        match self {
            OutcomeSet::Discrete(v) => {
                if v.is_empty() {
                    return Err(Error::invalid("empty outcome alphabet"));
                }
                let mut v = v.clone();
                v.sort_by(|a, b| a.partial_cmp(b).expect("finite outcomes"));
                Ok(v)
            }
            OutcomeSet::Interval { lo, hi, points } => Ok(uniform_grid(*lo, *hi, *points)),
        }
    }
}

/// Plays `base` through round `switch`, then fixes a best-in-class `f*` on
/// that prefix and answers `y*_t = argmax_y inf_p (ℓ(p, y) − ℓ(f*_t, y))`,
/// ties to the smallest `y`.
#[derive(Clone)]
pub struct Lemma4Adversary<T: Scalar> {
    base: Adversary<T>,
    switch: usize,
    oracle: Arc<dyn ErmOracle<T>>,
    loss: LossSpec<T>,
    outcomes: OutcomeSet<T>,
    outcome_grid: Vec<T>,
    prediction_grid: Vec<T>,
    comparator: Option<Vec<T>>,
}

impl<T: Scalar> fmt::Debug for Lemma4Adversary<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lemma4Adversary")
            .field("base", &self.base)
            .field("switch", &self.switch)
            .field("loss", &self.loss)
            .field("outcomes", &self.outcomes)
            .field("comparator", &self.comparator)
            .finish_non_exhaustive()
    }
}

/// Grid tolerance of the admissibility check done at construction.
pub const LEMMA4_TOLERANCE: f64 = 1e-9;

/// Wraps `base` into the switching adversary. Refused unless
/// `inf_{p'} sup_y inf_p (ℓ(p, y) − ℓ(p', y)) ≥ −1e-9` on the grids.
pub fn lemma4_adversary<T: Scalar>(
    base: Adversary<T>,
    switch: usize,
    oracle: Arc<dyn ErmOracle<T>>,
    loss: LossSpec<T>,
    outcomes: OutcomeSet<T>,
    prediction_grid: Vec<T>,
) -> Result<Adversary<T>> {
    let outcome_grid = outcomes.grid()?;
    if !check_lemma4_condition(&loss, &prediction_grid, &outcome_grid, T::lit(LEMMA4_TOLERANCE))? {
        return Err(Error::invalid(format!(
            "loss '{}' fails the uniform-regret condition on the given grids",
            loss.name()
        )));
    }
    if switch > oracle.horizon() {
        return Err(Error::invalid(format!("switch round {switch} beyond horizon {}", oracle.horizon())));
    }
    Ok(Adversary::Lemma4Switch(Box::new(Lemma4Adversary {
        base,
        switch,
        oracle,
        loss,
        outcomes,
        outcome_grid,
        prediction_grid,
        comparator: None,
    })))
}

impl<T: Scalar> Lemma4Adversary<T> {
    pub fn switch_round(&self) -> usize {
        self.switch
    }

    /// `f*`, once the switch has happened.
    pub fn comparator(&self) -> Option<&[T]> {
        self.comparator.as_deref()
    }

    /// `argmax_y inf_p (ℓ(p, y) − ℓ(f, y))` over the outcome grid, ties to the smallest `y`.
    pub fn best_response(&self, f: T) -> T {
        let mut candidates = self.outcome_grid.clone();
        if let OutcomeSet::Interval { lo, hi, .. } = self.outcomes {
            candidates.push(f.max(lo).min(hi));
            candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite outcomes"));
        }
        let mut best = (T::neg_infinity(), candidates[0]);
        for &y in &candidates {
            let v = self.prediction_grid.iter().map(|&p| self.loss.value(p, y)).fold(T::infinity(), T::min)
                - self.loss.value(f, y);
            if v > best.0 {
                best = (v, y);
            }
        }
        best.1
    }

    pub(crate) fn next_outcome(&mut self, outcomes: &[T]) -> Result<T> {
        let round = outcomes.len() + 1;
        if round <= self.switch {
            return self.base.next_outcome(outcomes);
        }
        if self.comparator.is_none() {
            let sol = self.oracle.minimize(&outcomes[..self.switch], &self.loss).map_err(|e| e.at_round(round))?;
            let f = sol
                .minimizer
                .ok_or_else(|| Error::invalid("switching adversary needs an oracle that returns a minimizer"))?;
            self.comparator = Some(f);
        }
        let f = self.comparator.as_ref().expect("set above");
        let ft = *f
            .get(round - 1)
            .ok_or_else(|| Error::ProtocolViolation { round, message: "comparator shorter than the game".into() })?;
        Ok(self.best_response(ft))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::class::FiniteExpertClass;
    use crate::erm::FiniteErm;

    fn adversary(f: Vec<f64>, outcomes: OutcomeSet<f64>, pgrid: Vec<f64>, switch: usize) -> Result<Adversary<f64>> {
        let n = f.len();
        let class = FiniteExpertClass::new(vec![f], 1.0).unwrap();
        lemma4_adversary(
            Adversary::FixedSequence(vec![1.0; n]),
            switch,
            Arc::new(FiniteErm::new(class)),
            LossSpec::absolute(1.0).unwrap(),
            outcomes,
            pgrid,
        )
    }

    fn play(adv: &mut Adversary<f64>, n: usize) -> Vec<f64> {
        let mut y = Vec::new();
        for _ in 0..n {
            let v = adv.next_outcome(&y).unwrap();
            y.push(v);
        }
        y
    }

    #[test]
    fn binary_outcomes_pick_the_nearer_sign() {
        let mut adv =
            adversary(vec![0.5, 0.7, -0.2], OutcomeSet::Discrete(vec![-1.0, 1.0]), vec![-1.0, 1.0], 1).unwrap();
        assert_eq!(play(&mut adv, 3), vec![1.0, 1.0, -1.0]);
    }

    #[test]
    fn binary_outcomes_with_interior_predictions_are_refused() {
        let err = adversary(vec![0.5], OutcomeSet::Discrete(vec![-1.0, 1.0]), uniform_grid(-1.0, 1.0, 101), 0);
        assert!(err.is_err());
    }

    #[test]
    fn interval_outcomes_answer_the_comparator() {
        let f = vec![0.3, 0.123, -0.777];
        let mut adv = adversary(
            f.clone(),
            OutcomeSet::Interval { lo: -1.0, hi: 1.0, points: 101 },
            uniform_grid(-1.0, 1.0, 101),
            1,
        )
        .unwrap();
        let y = play(&mut adv, 3);
        assert_eq!(&y[1..], &f[1..]);
    }

    #[test]
    fn switch_at_horizon_is_the_base() {
        let mut adv = adversary(vec![0.5, -0.5], OutcomeSet::Discrete(vec![-1.0, 1.0]), vec![-1.0, 1.0], 2).unwrap();
        assert_eq!(play(&mut adv, 2), vec![1.0, 1.0]);
    }

    #[test]
    fn ties_go_to_the_smallest_outcome() {
        let mut adv = adversary(vec![0.0, 0.0], OutcomeSet::Discrete(vec![1.0, -1.0]), vec![-1.0, 1.0], 1).unwrap();
        assert_eq!(play(&mut adv, 2)[1], -1.0);
    }
}
