//! ERM over matrices with bounded trace norm and bounded entries.

use crate::erm::linalg::Matrix;
use crate::erm::projection::{tracenorm_project, DykstraDuals};
use crate::erm::{ClassDescriptor, ErmOracle, ErmSolution};
use crate::error::{Error, Result};
use crate::loss::{LossKind, LossSpec};
use crate::scalar::Scalar;

/// `W = {W ∈ R^{m×n} : ‖W‖_tr ≤ r, |W_ij| ≤ b}` observed through a schedule
/// of distinct entries; round `t` reveals entry `schedule[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceNormClass<T> {
    n_rows: usize,
    n_cols: usize,
    radius: T,
    entry_bound: T,
    schedule: Vec<(usize, usize)>,
}

impl<T: Scalar> TraceNormClass<T> {
    pub fn new(n_rows: usize, n_cols: usize, radius: T, entry_bound: T, schedule: Vec<(usize, usize)>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        if !(radius > T::zero()) || !(entry_bound > T::zero()) {
            return Err(Error::invalid("trace-norm radius and entry bound must be positive"));
        }
        let mut seen = vec![false; n_rows * n_cols];
        for &(i, j) in &schedule {
            if i >= n_rows || j >= n_cols {
                return Err(Error::invalid(format!("entry ({i},{j}) outside {n_rows}x{n_cols}")));
            }
            if std::mem::replace(&mut seen[i * n_cols + j], true) {
                return Err(Error::invalid(format!("entry ({i},{j}) scheduled twice")));
            }
        }
        Ok(Self { n_rows, n_cols, radius, entry_bound, schedule })
    }

    /// All entries, row by row.
    pub fn full(n_rows: usize, n_cols: usize, radius: T, entry_bound: T) -> Result<Self> {
        let schedule = (0..n_rows).flat_map(|i| (0..n_cols).map(move |j| (i, j))).collect();
        Self::new(n_rows, n_cols, radius, entry_bound, schedule)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn entry_bound(&self) -> T {
        self.entry_bound
    }

    pub fn schedule(&self) -> &[(usize, usize)] {
        &self.schedule
    }
}

/// Projected-subgradient settings.
/// Algorithm used by [`tracenorm_erm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMethod {
    /// ADMM on the split `W = V`: an entrywise proximal step on loss + box,
    /// then a projection of `V` onto the trace-norm ball.
    #[default]
    Admm,
    /// Projected subgradient with steps `c/√k`, restarted with a halved `c`
    /// every `epoch_len` steps.
    ProjectedSubgradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams<T> {
    pub method: SolverMethod,
    /// ADMM penalty `ρ`; `None` means `1/b²`.
    pub penalty: Option<T>,
    /// Subgradient step constant `c` in `c/√k`; `None` means the entry bound `b`.
    pub step_c: Option<T>,
    /// Total iteration cap.
    pub max_iters: usize,
    /// ADMM stops once both residuals `‖W − V‖` and `ρ‖V − V_prev‖` are below
    /// this. The subgradient method stops once two restart epochs in a row
    /// improve the best value by less than this and the step scale `c·‖g‖`
    /// has dropped below its square root.
    pub tolerance: T,
    /// Subgradient iterations per restart epoch.
    pub epoch_len: usize,
    pub dykstra_sweeps: usize,
    pub dykstra_tol: T,
}

impl<T: Scalar> Default for SolverParams<T> {
    fn default() -> Self {
        Self {
            method: SolverMethod::Admm,
            penalty: None,
            step_c: None,
            max_iters: 6000,
            tolerance: T::lit(1e-7),
            epoch_len: 60,
            dykstra_sweeps: 50,
            dykstra_tol: T::lit(1e-10),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TraceNormSolution<T> {
    pub value: T,
    pub minimizer: Matrix<T>,
    pub converged: bool,
    pub iterations: usize,
}

fn objective<T: Scalar>(w: &Matrix<T>, sched: &[(usize, usize)], z: &[T], loss: &LossSpec<T>, scale: T) -> T {
    sched.iter().zip(z).map(|(&(i, j), &y)| loss.value(w[(i, j)] / scale, y)).sum()
}

/// Approximately minimizes `Σ_k ℓ(W[i_k, j_k] / scale, z_k)` over the class.
/// Every candidate is projected onto ball ∩ box with Dykstra's method before
/// it is scored, so the returned value is attained by the returned matrix.
pub fn tracenorm_erm<T: Scalar>(
    class: &TraceNormClass<T>,
    z: &[T],
    loss: &LossSpec<T>,
    scale: T,
    params: &SolverParams<T>,
) -> Result<TraceNormSolution<T>> {
    if z.len() > class.schedule.len() {
        return Err(Error::DimensionMismatch { expected: class.schedule.len(), actual: z.len() });
    }
    if !(scale > T::zero()) {
        return Err(Error::invalid("prediction scale must be positive"));
    }
    if z.is_empty() {
        return Ok(TraceNormSolution {
            value: T::zero(),
            minimizer: Matrix::zeros(class.n_rows, class.n_cols),
            converged: true,
            iterations: 0,
        });
    }
    let sched = &class.schedule[..z.len()];
    match params.method {
        SolverMethod::Admm => admm(class, sched, z, loss, scale, params),
        SolverMethod::ProjectedSubgradient => subgradient(class, sched, z, loss, scale, params),
    }
}

/// `argmin_{|w| ≤ b} ℓ(w/s, y) + (ρ/2)(w − a)²`.
fn entry_prox<T: Scalar>(loss: &LossSpec<T>, y: T, a: T, scale: T, rho: T, b: T) -> T {
    let w = match loss.kind() {
        LossKind::Absolute => {
            let c = scale * y;
            let d = a - c;
            c + d.signum() * (d.abs() - T::one() / (scale * rho)).max(T::zero())
        }
        LossKind::Squared => {
            let k = T::two() / (scale * scale);
            (k * scale * y + rho * a) / (k + rho)
        }
        LossKind::Custom => {
            // the derivative of a convex 1-d objective is monotone: bisect
            let slope = |w: T| loss.subgradient(w / scale, y) / scale + rho * (w - a);
            if slope(-b) >= T::zero() {
                return -b;
            }
            if slope(b) <= T::zero() {
                return b;
            }
            let (mut lo, mut hi) = (-b, b);
            for _ in 0..100 {
                let mid = (lo + hi) / T::two();
                if mid <= lo || mid >= hi {
                    break;
                }
                if slope(mid) > T::zero() {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            (lo + hi) / T::two()
        }
    };
    w.max(-b).min(b)
}

/// Iterations between scorings of the feasible point.
const ADMM_SCORE_EVERY: usize = 10;

fn admm<T: Scalar>(
    class: &TraceNormClass<T>,
    sched: &[(usize, usize)],
    z: &[T],
    loss: &LossSpec<T>,
    scale: T,
    params: &SolverParams<T>,
) -> Result<TraceNormSolution<T>> {
    let (m, n) = (class.n_rows, class.n_cols);
    let b = class.entry_bound;
    let rho = params.penalty.unwrap_or(T::one() / (b * b));
    if !(rho > T::zero()) {
        return Err(Error::invalid("ADMM penalty must be positive"));
    }
    let mut target = vec![None; m * n];
    for (&(i, j), &y) in sched.iter().zip(z) {
        target[i * n + j] = Some(y);
    }
    let mut duals = DykstraDuals::new(m, n);
    let mut best_w = Matrix::zeros(m, n);
    let mut best = objective(&best_w, sched, z, loss, scale);
    let mut v = Matrix::zeros(m, n);
    let mut u = Matrix::zeros(m, n);
    let mut score = |v: &Matrix<T>, best: &mut T, best_w: &mut Matrix<T>| -> Result<()> {
        let f = duals.project(v, class.radius, b, params.dykstra_sweeps, params.dykstra_tol)?.point;
        let val = objective(&f, sched, z, loss, scale);
        if val < *best {
            *best = val;
            *best_w = f;
        }
        Ok(())
    };
    for k in 1..=params.max_iters {
        let a = v.axpy(-T::one(), &u);
        let mut w = a.clone();
        for (wi, (&ai, t)) in w.as_mut_slice().iter_mut().zip(a.as_slice().iter().zip(&target)) {
            *wi = match *t {
                Some(y) => entry_prox(loss, y, ai, scale, rho, b),
                None => ai.max(-b).min(b),
            };
        }
        let wu = w.axpy(T::one(), &u);
        let next = tracenorm_project(&wu, class.radius)?;
        let primal = w.distance(&next);
        let dual = rho * next.distance(&v);
        u = wu.axpy(-T::one(), &next);
        v = next;
        let done = primal <= params.tolerance && dual <= params.tolerance;
        if done || k % ADMM_SCORE_EVERY == 0 || k == params.max_iters {
            score(&v, &mut best, &mut best_w)?;
        }
        if done {
            return Ok(TraceNormSolution { value: best, minimizer: best_w, converged: true, iterations: k });
        }
    }
    Ok(TraceNormSolution { value: best, minimizer: best_w, converged: false, iterations: params.max_iters })
}

fn subgradient<T: Scalar>(
    class: &TraceNormClass<T>,
    sched: &[(usize, usize)],
    z: &[T],
    loss: &LossSpec<T>,
    scale: T,
    params: &SolverParams<T>,
) -> Result<TraceNormSolution<T>> {
    let c0 = params.step_c.unwrap_or(class.entry_bound);
    let epoch_len = params.epoch_len.max(1);
    let mut best_w = Matrix::zeros(class.n_rows, class.n_cols);
    let mut best = objective(&best_w, sched, z, loss, scale);
    let mut iterations = 0;
    let mut epoch = 0;
    let mut stalled = 0;
    let mut duals = DykstraDuals::new(class.n_rows, class.n_cols);
    loop {
        let c = c0 * T::lit(0.5f64.powi(epoch));
        let epoch_start = best;
        let mut x = best_w.clone();
        let mut gmax = T::zero();
        for k in 1..=epoch_len {
            if iterations == params.max_iters {
                return Ok(TraceNormSolution { value: best, minimizer: best_w, converged: false, iterations });
            }
            iterations += 1;
            let mut g = Matrix::zeros(class.n_rows, class.n_cols);
            for (&(i, j), &y) in sched.iter().zip(z) {
                g[(i, j)] = loss.subgradient(x[(i, j)] / scale, y) / scale;
            }
            if g.max_abs() == T::zero() {
                // zero subgradient: global minimizer of the unconstrained objective
                let v = objective(&x, sched, z, loss, scale);
                return Ok(TraceNormSolution { value: v, minimizer: x, converged: true, iterations });
            }
            gmax = gmax.max(g.frobenius_norm());
            let step = c / T::from_usize_lossy(k).sqrt();
            // warm-started from the previous step's correction terms
            x = duals
                .project(
                    &x.axpy(-step, &g),
                    class.radius,
                    class.entry_bound,
                    params.dykstra_sweeps,
                    params.dykstra_tol,
                )?
                .point;
            let v = objective(&x, sched, z, loss, scale);
            if v < best {
                best = v;
                best_w = x.clone();
            }
        }
        epoch += 1;
        if epoch_start - best < params.tolerance {
            stalled += 1;
        } else {
            stalled = 0;
        }
        // a stalled epoch only counts once its steps are too short to matter
        if stalled >= 2 && c * gmax <= params.tolerance.sqrt() {
            return Ok(TraceNormSolution { value: best, minimizer: best_w, converged: true, iterations });
        }
    }
}

/// [`ErmOracle`] view of a [`TraceNormClass`]. With `scaled`, predictions are
/// `W_ij / b`, the class rescaled into `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct TraceNormErm<T> {
    class: TraceNormClass<T>,
    scaled: bool,
    params: SolverParams<T>,
}

impl<T: Scalar> TraceNormErm<T> {
    pub fn new(class: TraceNormClass<T>, scaled: bool, params: SolverParams<T>) -> Self {
        Self { class, scaled, params }
    }

    pub fn class(&self) -> &TraceNormClass<T> {
        &self.class
    }

    pub fn params(&self) -> &SolverParams<T> {
        &self.params
    }

    fn scale(&self) -> T {
        if self.scaled {
            self.class.entry_bound
        } else {
            T::one()
        }
    }
}

impl<T: Scalar> ErmOracle<T> for TraceNormErm<T> {
    fn horizon(&self) -> usize {
        self.class.schedule.len()
    }

    fn descriptor(&self) -> ClassDescriptor {
        ClassDescriptor::TraceNorm
    }

    fn is_scaled(&self) -> bool {
        self.scaled
    }

    fn minimize(&self, outcomes: &[T], loss: &LossSpec<T>) -> Result<ErmSolution<T>> {
        let scale = self.scale();
        let sol = tracenorm_erm(&self.class, outcomes, loss, scale, &self.params)?;
        let minimizer = self.class.schedule.iter().map(|&(i, j)| sol.minimizer[(i, j)] / scale).collect();
        Ok(ErmSolution {
            value: sol.value,
            minimizer: Some(minimizer),
            converged: sol.converged,
            tolerance: self.params.tolerance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_entries() {
        assert!(TraceNormClass::new(2, 2, 1.0, 1.0, vec![(0, 0), (0, 0)]).is_err());
        assert!(TraceNormClass::new(2, 2, 1.0, 1.0, vec![(2, 0)]).is_err());
        assert!(TraceNormClass::new(2, 2, 0.0, 1.0, vec![]).is_err());
    }

    #[test]
    fn exact_fit_of_all_ones() {
        let class = TraceNormClass::<f64>::full(2, 2, 10.0, 1.0).unwrap();
        let abs = LossSpec::absolute(1.0).unwrap();
        let sol = tracenorm_erm(&class, &[1.0; 4], &abs, 1.0, &SolverParams::default()).unwrap();
        assert!(sol.value.abs() < 1e-9, "{}", sol.value);
        assert!(sol.converged);
    }

    #[test]
    fn one_by_one_ball_boundary() {
        let class = TraceNormClass::<f64>::full(1, 1, 0.5, 1.0).unwrap();
        let abs = LossSpec::absolute(1.0).unwrap();
        let sol = tracenorm_erm(&class, &[1.0], &abs, 1.0, &SolverParams::default()).unwrap();
        assert!((sol.value - 0.5).abs() < 1e-9, "{}", sol.value);
    }

    #[test]
    fn empty_outcomes() {
        let class = TraceNormClass::full(3, 2, 1.0, 1.0).unwrap();
        let abs = LossSpec::absolute(1.0).unwrap();
        let sol = tracenorm_erm(&class, &[], &abs, 1.0, &SolverParams::default()).unwrap();
        assert_eq!(sol.value, 0.0);
        assert_eq!(sol.minimizer, Matrix::zeros(3, 2));
    }

    #[test]
    fn iteration_cap_flags_non_convergence() {
        let class = TraceNormClass::full(2, 2, 1.0, 1.0).unwrap();
        let abs = LossSpec::absolute(1.0).unwrap();
        let params = SolverParams { max_iters: 3, ..SolverParams::default() };
        let sol = tracenorm_erm(&class, &[1.0, -1.0, 0.3, 1.0], &abs, 1.0, &params).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 3);
    }

    #[test]
    fn oracle_minimizer_is_consistent() {
        let class = TraceNormClass::full(2, 2, 1.5, 1.0).unwrap();
        let oracle = TraceNormErm::new(class, false, SolverParams::default());
        let sq = LossSpec::squared(1.0).unwrap();
        let z = [0.9, -0.2, 0.4, 0.7];
        let sol = oracle.minimize(&z, &sq).unwrap();
        let m = sol.minimizer.unwrap();
        let replay: f64 = m.iter().zip(&z).map(|(f, y)| (f - y) * (f - y)).sum();
        assert!((replay - sol.value).abs() < 1e-12);
    }

    #[test]
    fn methods_agree_on_a_3x3_instance() {
        let class = TraceNormClass::full(3, 3, 2.0, 1.0).unwrap();
        let z = [1.0, -1.0, 0.5, 1.0, 1.0, -0.3, -1.0, 0.8, 1.0];
        let abs = LossSpec::absolute(1.0).unwrap();
        let a = tracenorm_erm(&class, &z, &abs, 1.0, &SolverParams::default()).unwrap();
        let params = SolverParams { method: SolverMethod::ProjectedSubgradient, ..SolverParams::default() };
        let s = tracenorm_erm(&class, &z, &abs, 1.0, &params).unwrap();
        assert!(a.converged && s.converged);
        assert!(a.value <= s.value + 1e-6 && s.value - a.value < 1e-3, "{} {}", a.value, s.value);
        assert!(a.minimizer.trace_norm().unwrap() <= 2.0 + 1e-6);
        assert!(a.minimizer.max_abs() <= 1.0);
    }

    #[test]
    fn custom_loss_uses_the_generic_prox() {
        let class = TraceNormClass::full(2, 3, 1.5, 1.0).unwrap();
        let z = [0.9, -0.4, 0.1, 1.0, -1.0];
        let sq = LossSpec::squared(1.0).unwrap();
        let custom =
            LossSpec::custom("sq", |p: f64, y: f64| (p - y) * (p - y), |p: f64, y: f64| 2.0 * (p - y), 4.0, 1.0)
                .unwrap();
        let a = tracenorm_erm(&class, &z, &sq, 1.0, &SolverParams::default()).unwrap();
        let b = tracenorm_erm(&class, &z, &custom, 1.0, &SolverParams::default()).unwrap();
        assert!((a.value - b.value).abs() < 1e-8, "{} {}", a.value, b.value);
    }
}
