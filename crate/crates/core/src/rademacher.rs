//! Rademacher complexity `R_T(F) = E[sup_f Σ_t σ_t f_t]`.

use crate::class::FiniteExpertClass;
use crate::erm::{ErmOracle, Matrix};
use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::rng::RandomStream;
use crate::scalar::Scalar;

/// Largest horizon for exact enumeration of sign vectors.
pub const MAX_EXACT_HORIZON: usize = 20;
/// Largest side of the sign matrices in the spectral estimator.
pub const MAX_SPECTRAL_SIDE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    MonteCarlo,
    Spectral,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::MonteCarlo => "monte_carlo",
            Method::Spectral => "spectral",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RademacherEstimate<T> {
    pub estimate: T,
    /// One standard error; zero when computed by enumeration.
    pub stderr: T,
    pub method: Method,
    pub samples: usize,
}

/// Mean and standard error of the mean, summed in the given order.
pub fn mean_stderr<T: Scalar>(xs: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(xs.len());
    if xs.is_empty() {
        return (T::zero(), T::zero());
    }
    let mean = xs.iter().copied().sum::<T>() / n;
    if xs.len() < 2 {
        return (mean, T::zero());
    }
    let ss: T = xs.iter().map(|&x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - T::one()) / n).sqrt())
}

fn sign_vector<T: Scalar>(bits: u64, len: usize, out: &mut [T]) {
    for (t, s) in out.iter_mut().enumerate().take(len) {
        *s = if bits >> t & 1 == 1 { T::one() } else { -T::one() };
    }
}

/// `R_T(F)` by enumerating all `2^T` sign vectors.
pub fn exact_rademacher<T: Scalar>(class: &FiniteExpertClass<T>) -> Result<T> {
    let horizon = class.horizon();
    if horizon > MAX_EXACT_HORIZON {
        return Err(Error::Capacity { what: "exact Rademacher horizon", value: horizon, limit: MAX_EXACT_HORIZON });
    }
    let mut sigma = vec![T::zero(); horizon];
    let mut total = T::zero();
    for bits in 0..(1u64 << horizon) {
        sign_vector(bits, horizon, &mut sigma);
        let sup =
            class.rows().map(|f| f.iter().zip(&sigma).map(|(&a, &s)| a * s).sum::<T>()).fold(T::neg_infinity(), T::max);
        total = total + sup;
    }
    Ok(total / T::from_usize_lossy(1usize << horizon))
}

/// Monte-Carlo `R_T(F)` through an ERM oracle over a class inside `[-1, 1]^T`,
/// using `sup_f Σ σ_t f_t = T − inf_f L(f, σ)` under absolute loss.
///
/// Signs are drawn in antithetic pairs `(σ, −σ)` and the standard error is
/// taken over pair means, so `samples / 2` pairs are used. A singleton class
/// then estimates exactly `0 ± 0`.
pub fn mc_rademacher<T: Scalar, O: ErmOracle<T> + ?Sized>(
    oracle: &O,
    samples: usize,
    stream: &mut RandomStream,
) -> Result<RademacherEstimate<T>> {
    if samples < 2 {
        return Err(Error::invalid("Monte-Carlo estimation needs at least 2 samples"));
    }
    let horizon = oracle.horizon();
    let loss = LossSpec::absolute(T::one())?;
    let t = T::from_usize_lossy(horizon);
    let pairs = samples / 2;
    let means = (0..pairs)
        .map(|_| {
            let mut sigma: Vec<T> = stream.rademacher_vec(horizon);
            let a = t - oracle.infimum(&sigma, &loss)?;
            sigma.iter_mut().for_each(|s| *s = -*s);
            let b = t - oracle.infimum(&sigma, &loss)?;
            Ok(T::half() * (a + b))
        })
        .collect::<Result<Vec<T>>>()?;
    let (estimate, stderr) = mean_stderr(&means);
    Ok(RademacherEstimate { estimate, stderr, method: Method::MonteCarlo, samples: 2 * pairs })
}

/// `r · E‖Σ‖_op` over uniform `n × n` sign matrices `Σ`: the Rademacher
/// complexity of the trace-norm ball of radius `r` with every entry revealed
/// once, an upper bound for the box-intersected class.
///
/// All `2^{n²}` matrices are enumerated when that is no more work than
/// `samples` draws (stderr 0); otherwise `samples` matrices are drawn.
pub fn spectral_rademacher_tracenorm<T: Scalar>(
    n: usize,
    radius: T,
    samples: usize,
    stream: &mut RandomStream,
) -> Result<RademacherEstimate<T>> {
    if n == 0 || n > MAX_SPECTRAL_SIDE {
        return Err(Error::Capacity { what: "spectral matrix side", value: n, limit: MAX_SPECTRAL_SIDE });
    }
    if !(radius > T::zero()) {
        return Err(Error::invalid("radius must be positive"));
    }
    let cells = n * n;
    let enumerate = cells < 63 && (1u64 << cells) <= samples as u64;
    if !enumerate && samples < 2 {
        return Err(Error::invalid("Monte-Carlo estimation needs at least 2 samples"));
    }
    let mut m = Matrix::zeros(n, n);
    let norms = if enumerate {
        (0..(1u64 << cells))
            .map(|bits| {
                sign_vector(bits, cells, m.as_mut_slice());
                m.spectral_norm()
            })
            .collect::<Result<Vec<T>>>()?
    } else {
        (0..samples)
            .map(|_| {
                for e in m.as_mut_slice() {
                    *e = stream.rademacher();
                }
                m.spectral_norm()
            })
            .collect::<Result<Vec<T>>>()?
    };
    let (mean, se) = mean_stderr(&norms);
    Ok(RademacherEstimate {
        estimate: radius * mean,
        stderr: if enumerate { T::zero() } else { radius * se },
        method: Method::Spectral,
        samples: norms.len(),
    })
}
