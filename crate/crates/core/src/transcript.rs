//! Per-round game records.

use crate::error::{Error, Result};
use crate::loss::{cumulative_loss, LossSpec};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptRow<T> {
    /// 1-based round index.
    pub round: usize,
    pub prediction: T,
    pub outcome: T,
    pub loss: T,
    /// Rounding probability, randomized-rounding rounds only.
    pub r_t: Option<T>,
    /// Rounded label, present exactly when `r_t` is.
    pub z_t: Option<T>,
    pub cum_loss: T,
    pub cum_best: T,
    pub regret: T,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Transcript<T> {
    pub rows: Vec<TranscriptRow<T>>,
    /// Largest optimization tolerance reported by the best-in-class oracle.
    pub solver_tolerance: T,
}

impl<T: Scalar> Transcript<T> {
    pub fn new() -> Self {
        Self { rows: Vec::new(), solver_tolerance: T::zero() }
    }

    /// Appends a round. `cum_best` is the best-in-class loss on the prefix
    /// ending at this round.
    pub fn push(&mut self, prediction: T, outcome: T, loss: T, rounding: Option<(T, T)>, cum_best: T) {
        let cum_loss = self.rows.last().map_or(T::zero(), |r| r.cum_loss) + loss;
        self.rows.push(TranscriptRow {
            round: self.rows.len() + 1,
            prediction,
            outcome,
            loss,
            r_t: rounding.map(|r| r.0),
            z_t: rounding.map(|r| r.1),
            cum_loss,
            cum_best,
            regret: cum_loss - cum_best,
        });
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn final_regret(&self) -> T {
        self.rows.last().map_or(T::zero(), |r| r.regret)
    }

    /// `max_t` running regret (0 for an empty transcript).
    pub fn max_regret(&self) -> T {
        self.rows.iter().map(|r| r.regret).reduce(T::max).unwrap_or(T::zero())
    }

    pub fn predictions(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.prediction).collect()
    }

    pub fn outcomes(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.outcome).collect()
    }

    /// Checks the row-level invariants: regret column consistency and
    /// `r_t` present iff `z_t` present.
    pub fn check_consistency(&self, tol: T) -> Result<()> {
        let mut cum = T::zero();
        for row in &self.rows {
            cum = cum + row.loss;
            if (cum - row.cum_loss).abs() > tol {
                return Err(Error::InvariantViolation(format!("round {}: cumulative loss column drifted", row.round)));
            }
            if (row.regret - (row.cum_loss - row.cum_best)).abs() > tol {
                return Err(Error::InvariantViolation(format!("round {}: regret != cum_loss - cum_best", row.round)));
            }
            if row.r_t.is_some() != row.z_t.is_some() {
                return Err(Error::InvariantViolation(format!(
                    "round {}: r_t and z_t must be present together",
                    row.round
                )));
            }
        }
        Ok(())
    }

    /// Recomputes every prefix's forecaster loss with [`cumulative_loss`] and
    /// checks it against the stored regret column.
    pub fn check_replay(&self, loss: &LossSpec<T>, tol: T) -> Result<()> {
        let p = self.predictions();
        let y = self.outcomes();
        for (t, row) in self.rows.iter().enumerate() {
            let replayed = cumulative_loss(&p[..=t], &y[..=t], loss)? - row.cum_best;
            if (replayed - row.regret).abs() > tol {
                return Err(Error::InvariantViolation(format!(
                    "round {}: replayed regret {replayed} vs stored {}",
                    row.round, row.regret
                )));
            }
        }
        Ok(())
    }
}
