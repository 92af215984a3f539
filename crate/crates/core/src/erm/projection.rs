//! Euclidean projections used by the trace-norm solver.

use crate::erm::linalg::{jacobi_svd, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Projection of a nonnegative vector onto `{u ≥ 0 : Σu ≤ radius}`.
///
/// Water-filling: subtract the level `θ` solving `Σ max(v_i − θ, 0) = radius`.
pub fn l1_ball_project<T: Scalar>(v: &[T], radius: T) -> Result<Vec<T>> {
    if !(radius > T::zero()) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    if v.iter().any(|&x| !(x >= T::zero())) {
        return Err(Error::invalid("l1-ball projection expects a nonnegative vector"));
    }
    let total: T = v.iter().copied().sum();
    if total <= radius {
        return Ok(v.to_vec());
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut prefix = T::zero();
    let mut theta = T::zero();
    for (j, &u) in sorted.iter().enumerate() {
        prefix = prefix + u;
        let level = (prefix - radius) / T::from_usize_lossy(j + 1);
        if u - level > T::zero() {
            theta = level;
        } else {
            break;
        }
    }
    Ok(v.iter().map(|&x| (x - theta).max(T::zero())).collect())
}

/// Projection onto `{W : ‖W‖_tr ≤ radius}`: project the singular values onto
/// the l1 ball and reassemble. Interior points are returned unchanged.
pub fn tracenorm_project<T: Scalar>(w: &Matrix<T>, radius: T) -> Result<Matrix<T>> {
    if !(radius > T::zero()) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    let svd = jacobi_svd(w)?;
    let norm: T = svd.singular_values.iter().copied().sum();
    if norm <= radius {
        return Ok(w.clone());
    }
    let s = l1_ball_project(&svd.singular_values, radius)?;
    Ok(svd.reconstruct_with(&s))
}

/// Entrywise clamp to `[-bound, bound]`.
pub fn box_project<T: Scalar>(w: &Matrix<T>, bound: T) -> Matrix<T> {
    w.map(|x| x.max(-bound).min(bound))
}

#[derive(Debug, Clone)]
pub struct DykstraOutcome<T> {
    pub point: Matrix<T>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Projection onto the trace-norm ball ∩ entry box by Dykstra's alternating
/// projections. The returned point always satisfies the entry bound exactly;
/// the trace-norm bound holds to the sweep tolerance.
pub fn dykstra_project<T: Scalar>(
    w: &Matrix<T>,
    radius: T,
    bound: T,
    max_sweeps: usize,
    tol: T,
) -> Result<DykstraOutcome<T>> {
    // cheap exits: one set's projection already lies in the other
    let boxed = box_project(w, bound);
    let svd = jacobi_svd(&boxed)?;
    if svd.singular_values.iter().copied().sum::<T>() <= radius {
        return Ok(DykstraOutcome { point: boxed, sweeps: 0, converged: true });
    }
    let balled = tracenorm_project(w, radius)?;
    if balled.max_abs() <= bound {
        return Ok(DykstraOutcome { point: balled, sweeps: 0, converged: true });
    }

    let mut duals = DykstraDuals::new(w.rows(), w.cols());
    duals.project(w, radius, bound, max_sweeps, tol)
}

/// Dykstra correction terms carried between projections of nearby points.
///
/// Dykstra's method is block-coordinate ascent on the dual of the projection
/// problem and converges from any starting pair `(p, q)` when the primal
/// iterate starts at `w − p − q`. Successive subgradient steps move little,
/// so the previous pair is a good start.
#[derive(Debug, Clone)]
pub(crate) struct DykstraDuals<T> {
    p: Matrix<T>,
    q: Matrix<T>,
}

impl<T: Scalar> DykstraDuals<T> {
    pub(crate) fn new(rows: usize, cols: usize) -> Self {
        Self { p: Matrix::zeros(rows, cols), q: Matrix::zeros(rows, cols) }
    }

    pub(crate) fn project(
        &mut self,
        w: &Matrix<T>,
        radius: T,
        bound: T,
        max_sweeps: usize,
        tol: T,
    ) -> Result<DykstraOutcome<T>> {
        let mut x = w.axpy(-T::one(), &self.p).axpy(-T::one(), &self.q);
        for sweep in 1..=max_sweeps {
            let xp = x.axpy(T::one(), &self.p);
            let y = tracenorm_project(&xp, radius)?;
            self.p = xp.axpy(-T::one(), &y);
            let yq = y.axpy(T::one(), &self.q);
            let next = box_project(&yq, bound);
            self.q = yq.axpy(-T::one(), &next);
            let moved = next.distance(&x);
            x = next;
            if moved < tol {
                return Ok(DykstraOutcome { point: x, sweeps: sweep, converged: true });
            }
        }
        Ok(DykstraOutcome { point: x, sweeps: max_sweeps, converged: false })
    }
}
