//! Convex losses with explicit subgradients and Lipschitz constants.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::scalar::{sign0, Scalar};

/// Grid density used when a loss is checked without an explicit grid.
pub const DEFAULT_GRID_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Absolute,
    Squared,
    Custom,
}

pub type LossFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// A convex loss `ℓ(p, y)` on `[-b, b] × [-b, b]` together with a subgradient
/// in `p` and the Lipschitz constant `rho` that bounds it.
#[derive(Clone)]
pub struct LossSpec<T: Scalar> {
    kind: LossKind,
    name: String,
    custom: Option<(LossFn<T>, LossFn<T>)>,
    rho: T,
    bound_b: T,
    lemma4: bool,
}

impl<T: Scalar> fmt::Debug for LossSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LossSpec")
            .field("kind", &self.kind)
            .field("name", &self.name)
            .field("rho", &self.rho)
            .field("bound_b", &self.bound_b)
            .field("lemma4", &self.lemma4)
            .finish()
    }
}

/// Subgradient of `|p - y|` in `p`. Returns 0 at the kink.
#[inline]
pub fn absolute_subgradient<T: Scalar>(p: T, y: T) -> T {
    sign0(p - y)
}

fn check_bound<T: Scalar>(bound_b: T) -> Result<()> {
    if bound_b > T::zero() && bound_b.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("bound b must be positive, got {bound_b}")))
    }
}

impl<T: Scalar> LossSpec<T> {
    /// `|p - y|`, with `rho = 1`.
    pub fn absolute(bound_b: T) -> Result<Self> {
        check_bound(bound_b)?;
        Ok(Self {
            kind: LossKind::Absolute,
            name: "absolute".into(),
            custom: None,
            rho: T::one(),
            bound_b,
            lemma4: true,
        })
    }

    /// `(p - y)^2` on `[-b, b]^2`, where the subgradient `2(p - y)` is bounded by `4b`.
    pub fn squared(bound_b: T) -> Result<Self> {
        check_bound(bound_b)?;
        Ok(Self {
            kind: LossKind::Squared,
            name: "squared".into(),
            custom: None,
            rho: T::lit(4.0) * bound_b,
            bound_b,
            lemma4: true,
        })
    }

    /// A user supplied loss. The uniform-regret admissibility flag is computed
    /// once on a default grid over `[-b, b]`.
    pub fn custom<V, G>(name: &str, value: V, subgradient: G, rho: T, bound_b: T) -> Result<Self>
    where
        V: Fn(T, T) -> T + Send + Sync + 'static,
        G: Fn(T, T) -> T + Send + Sync + 'static,
    {
        check_bound(bound_b)?;
        if !(rho > T::zero()) {
            return Err(Error::invalid(format!("rho must be positive, got {rho}")));
        }
        let mut loss = Self {
            kind: LossKind::Custom,
            name: name.to_string(),
            custom: Some((Arc::new(value), Arc::new(subgradient))),
            rho,
            bound_b,
            lemma4: false,
        };
        let grid = uniform_grid(-bound_b, bound_b, DEFAULT_GRID_POINTS);
        loss.lemma4 = check_lemma4_condition(&loss, &grid, &grid, T::lit(1e-9))?;
        Ok(loss)
    }

    #[inline]
    pub fn value(&self, p: T, y: T) -> T {
        match self.kind {
            LossKind::Absolute => (p - y).abs(),
            LossKind::Squared => (p - y) * (p - y),
            LossKind::Custom => (self.custom.as_ref().expect("custom loss").0)(p, y),
        }
    }

    #[inline]
    pub fn subgradient(&self, p: T, y: T) -> T {
        match self.kind {
            LossKind::Absolute => absolute_subgradient(p, y),
            LossKind::Squared => T::two() * (p - y),
            LossKind::Custom => (self.custom.as_ref().expect("custom loss").1)(p, y),
        }
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn bound(&self) -> T {
        self.bound_b
    }

    /// Whether the uniform-regret condition holds (grid checked for custom losses).
    pub fn lemma4_admissible(&self) -> bool {
        self.lemma4
    }

    /// Largest `|subgradient| - rho` over the grid; nonpositive when the bound holds.
    pub fn lipschitz_excess(&self, grid: &[T]) -> T {
        let mut worst = T::neg_infinity();
        for &p in grid {
            for &y in grid {
                worst = worst.max(self.subgradient(p, y).abs() - self.rho);
            }
        }
        worst
    }

    /// Largest midpoint-convexity violation `ℓ((p+q)/2, y) - (ℓ(p,y) + ℓ(q,y))/2`
    /// over all grid pairs; nonpositive for convex losses.
    pub fn convexity_excess(&self, grid: &[T]) -> T {
        let mut worst = T::neg_infinity();
        for &y in grid {
            for (i, &p) in grid.iter().enumerate() {
                for &q in &grid[i..] {
                    let mid = self.value((p + q) * T::half(), y);
                    let chord = (self.value(p, y) + self.value(q, y)) * T::half();
                    worst = worst.max(mid - chord);
                }
            }
        }
        worst
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn uniform_grid<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / T::from_usize_lossy(n - 1);
            (0..n).map(|i| if i == n - 1 { hi } else { lo + step * T::from_usize_lossy(i) }).collect()
        }
    }
}

/// `Σ_t ℓ(f_t, y_t)`.
pub fn cumulative_loss<T: Scalar>(f: &[T], y: &[T], loss: &LossSpec<T>) -> Result<T> {
    check_len(f.len(), y.len())?;
    Ok(f.iter().zip(y).map(|(&p, &o)| loss.value(p, o)).sum())
}

/// Evaluates `inf_{p'} sup_y inf_p (ℓ(p, y) - ℓ(p', y))` on the given grids and
/// reports whether it is at least `-tol`.
pub fn check_lemma4_condition<T: Scalar>(
    loss: &LossSpec<T>,
    prediction_grid: &[T],
    outcome_grid: &[T],
    tol: T,
) -> Result<bool> {
    Ok(lemma4_value(loss, prediction_grid, outcome_grid)? >= -tol)
}

/// The raw inf/sup/inf value behind [`check_lemma4_condition`].
pub fn lemma4_value<T: Scalar>(loss: &LossSpec<T>, prediction_grid: &[T], outcome_grid: &[T]) -> Result<T> {
    if prediction_grid.is_empty() || outcome_grid.is_empty() {
        return Err(Error::invalid("uniform-regret check needs nonempty grids"));
    }
    // inf_p ℓ(p, y) does not depend on p'
    let best_at: Vec<T> = outcome_grid
        .iter()
        .map(|&y| prediction_grid.iter().map(|&p| loss.value(p, y)).fold(T::infinity(), T::min))
        .collect();
    let mut outer = T::infinity();
    for &p_ref in prediction_grid {
        let mut sup = T::neg_infinity();
        for (&y, &best) in outcome_grid.iter().zip(&best_at) {
            sup = sup.max(best - loss.value(p_ref, y));
        }
        outer = outer.min(sup);
    }
    Ok(outer)
}
