use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Horizon, bounds, precision and confidence for one game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameConfig<T> {
    pub horizon: usize,
    pub bound_b: T,
    pub rho: T,
    pub eta: T,
    pub delta: T,
    pub master_seed: u64,
}

impl<T: Scalar> GameConfig<T> {
    pub fn new(horizon: usize, bound_b: T, rho: T, eta: T, delta: T, master_seed: u64) -> Result<Self> {
        let cfg = Self { horizon, bound_b, rho, eta, delta, master_seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be positive"));
        }
        if !(self.bound_b > T::zero()) || !(self.rho > T::zero()) {
            return Err(Error::invalid("bound b and rho must be positive"));
        }
        if !(self.delta > T::zero() && self.delta < T::one()) {
            return Err(Error::invalid(format!("delta must lie in (0,1), got {}", self.delta)));
        }
        // eta >= 1/T, with slack for 1/T not being representable
        let min_eta = T::one() / T::from_usize_lossy(self.horizon);
        if !(self.eta >= min_eta * (T::one() - T::lit(1e-12))) || !self.eta.is_finite() {
            return Err(Error::invalid(format!("eta must be at least 1/T = {min_eta}, got {}", self.eta)));
        }
        Ok(())
    }

    /// Number of playout draws per round, `ceil(eta * T)` (at least 1).
    pub fn inner_iterations(&self) -> usize {
        inner_iterations(self.eta, self.horizon)
    }
}

/// `ceil(eta * T)`, ignoring representation error just above an integer.
pub fn inner_iterations<T: Scalar>(eta: T, horizon: usize) -> usize {
    let raw = eta.to_f64_lossy() * horizon as f64;
    let slack = raw * (4.0 * T::epsilon().to_f64_lossy()).max(1e-12);
    ((raw - slack).ceil() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_below_one_over_t_is_rejected() {
        assert!(GameConfig::new(4, 1.0, 1.0, 0.2, 0.1, 0).is_err());
        assert!(GameConfig::new(4, 1.0, 1.0, 0.25, 0.1, 0).is_ok());
        assert!(GameConfig::new(3, 1.0, 1.0, 1.0 / 3.0, 0.1, 0).is_ok());
    }

    #[test]
    fn inner_iterations_rounds_up() {
        assert_eq!(inner_iterations(1.0, 4), 4);
        assert_eq!(inner_iterations(1.0 / 3.0, 3), 1);
        assert_eq!(inner_iterations(0.3, 10), 3);
        assert_eq!(inner_iterations(0.31, 10), 4);
        assert_eq!(inner_iterations(0.1f32, 10), 1);
    }

    #[test]
    fn delta_domain() {
        assert!(GameConfig::new(4, 1.0, 1.0, 1.0, 1.0, 0).is_err());
        assert!(GameConfig::new(4, 1.0, 1.0, 1.0, 0.0, 0).is_err());
    }
}
