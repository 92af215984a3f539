//! One-dimensional threshold classifiers with exact zero-one ERM.

use crate::class::{check_permutation, FiniteExpertClass};
use crate::erm::{ClassDescriptor, ErmOracle, ErmSolution};
use crate::error::{check_len, Error, Result};
use crate::loss::LossSpec;
use crate::scalar::Scalar;

/// `Positive`: `x ↦ +1` above the threshold, `-1` at or below it. `Negative` flips both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    #[inline]
    fn label<T: Scalar>(self, above: bool) -> T {
        match (self, above) {
            (Polarity::Positive, true) | (Polarity::Negative, false) => T::one(),
            _ => -T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolaritySet {
    Both,
    Positive,
}

impl PolaritySet {
    fn members(self) -> &'static [Polarity] {
        match self {
            PolaritySet::Both => &[Polarity::Positive, Polarity::Negative],
            PolaritySet::Positive => &[Polarity::Positive],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdFit<T> {
    pub errors: usize,
    pub threshold: T,
    pub polarity: Polarity,
    /// Gap index `k`: the threshold separates `x[..k]` from `x[k..]`.
    pub gap: usize,
}

fn check_sorted<T: Scalar>(instances: &[T]) -> Result<()> {
    if instances.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("instances must be finite"));
    }
    if instances.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("instances must be strictly increasing"));
    }
    Ok(())
}

fn gap_threshold<T: Scalar>(instances: &[T], gap: usize) -> T {
    let n = instances.len();
    match (gap, n) {
        (_, 0) => T::zero(),
        (0, _) => instances[0] - T::one(),
        (k, _) if k == n => instances[n - 1] + T::one(),
        (k, _) => (instances[k - 1] + instances[k]) * T::half(),
    }
}

fn is_positive<T: Scalar>(y: T) -> Result<bool> {
    if y == T::one() {
        Ok(true)
    } else if y == -T::one() {
        Ok(false)
    } else {
        Err(Error::invalid(format!("label {y} is not ±1")))
    }
}

/// Exact zero-one-loss ERM over thresholds placed in the `T + 1` gaps of the
/// sorted instances. Returns the leftmost optimal threshold; within a gap the
/// positive polarity wins ties.
pub fn threshold_erm<T: Scalar>(instances: &[T], labels: &[T], polarity: PolaritySet) -> Result<ThresholdFit<T>> {
    check_len(instances.len(), labels.len())?;
    check_sorted(instances)?;
    let pos: Vec<bool> = labels.iter().map(|&y| is_positive(y)).collect::<Result<_>>()?;
    Ok(scan_gaps(instances, &pos, polarity))
}

fn scan_gaps<T: Scalar>(instances: &[T], pos: &[bool], polarity: PolaritySet) -> ThresholdFit<T> {
    let n = pos.len();
    let total_pos = pos.iter().filter(|&&p| p).count();
    // positive polarity at gap k errs on positives left of k and negatives right of it
    let mut pos_left = 0usize;
    let mut best: Option<ThresholdFit<T>> = None;
    for gap in 0..=n {
        let neg_right = (n - gap) - (total_pos - pos_left);
        let err_pos = pos_left + neg_right;
        for &pol in polarity.members() {
            let errors = match pol {
                Polarity::Positive => err_pos,
                Polarity::Negative => n - err_pos,
            };
            if best.is_none_or(|b| errors < b.errors) {
                best = Some(ThresholdFit { errors, threshold: gap_threshold(instances, gap), polarity: pol, gap });
            }
        }
        if pos.get(gap) == Some(&true) {
            pos_left += 1;
        }
    }
    best.expect("at least one gap")
}

/// The distinct `±1` behaviour vectors the threshold class induces on `instances`.
pub fn threshold_behaviors<T: Scalar>(instances: &[T], polarity: PolaritySet) -> Result<FiniteExpertClass<T>> {
    check_sorted(instances)?;
    let n = instances.len();
    let mut rows = Vec::new();
    for gap in 0..=n {
        for &pol in polarity.members() {
            rows.push((0..n).map(|i| pol.label(i >= gap)).collect::<Vec<T>>());
        }
    }
    Ok(FiniteExpertClass::new(rows, T::one())?.dedup_rows())
}

/// Threshold class seen through a round order: round `t` asks about instance
/// `order[t]`. Works for `±1` outcomes and losses symmetric on `{-1, +1}`.
#[derive(Debug, Clone)]
pub struct ThresholdErm<T> {
    instances: Vec<T>,
    order: Vec<usize>,
    polarity: PolaritySet,
}

impl<T: Scalar> ThresholdErm<T> {
    pub fn new(instances: Vec<T>, order: Vec<usize>, polarity: PolaritySet) -> Result<Self> {
        check_sorted(&instances)?;
        check_permutation(&order, instances.len())?;
        Ok(Self { instances, order, polarity })
    }

    /// Best fit on the instances revealed by the `outcomes` prefix.
    pub fn fit(&self, outcomes: &[T]) -> Result<ThresholdFit<T>> {
        if outcomes.len() > self.order.len() {
            return Err(Error::DimensionMismatch { expected: self.order.len(), actual: outcomes.len() });
        }
        let mut seen: Vec<Option<bool>> = vec![None; self.instances.len()];
        for (&idx, &y) in self.order.iter().zip(outcomes) {
            seen[idx] = Some(is_positive(y)?);
        }
        let (xs, pos): (Vec<T>, Vec<bool>) =
            self.instances.iter().zip(&seen).filter_map(|(&x, s)| s.map(|p| (x, p))).unzip();
        Ok(scan_gaps(&xs, &pos, self.polarity))
    }
}

impl<T: Scalar> ErmOracle<T> for ThresholdErm<T> {
    fn horizon(&self) -> usize {
        self.instances.len()
    }

    fn descriptor(&self) -> ClassDescriptor {
        ClassDescriptor::Threshold
    }

    fn minimize(&self, outcomes: &[T], loss: &LossSpec<T>) -> Result<ErmSolution<T>> {
        let one = T::one();
        let hit = loss.value(one, one);
        let miss = loss.value(one, -one);
        if loss.value(-one, -one) != hit || loss.value(-one, one) != miss || miss < hit {
            return Err(Error::invalid("threshold oracle needs a loss symmetric on {-1,+1}"));
        }
        let fit = self.fit(outcomes)?;
        let n = T::from_usize_lossy(outcomes.len());
        let e = T::from_usize_lossy(fit.errors);
        let minimizer = self.order.iter().map(|&i| fit.polarity.label(self.instances[i] > fit.threshold)).collect();
        Ok(ErmSolution::exact(hit * (n - e) + miss * e, Some(minimizer)))
    }
}
