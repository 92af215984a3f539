//! Independent reference computations used by the integration and acceptance
//! tests. Nothing here calls into the implementation paths it checks.
#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

/// Trace norm of `[[a, b], [c, d]]` in closed form: with
/// `s = |(a+d, b−c)|` and `t = |(a−d, b+c)|` the singular values are
/// `(s+t)/2` and `|s−t|/2`, so the trace norm is `max(s, t)`.
pub fn trace_norm_2x2(w: [f64; 4]) -> f64 {
    let [a, b, c, d] = w;
    let s = ((a + d).powi(2) + (b - c).powi(2)).sqrt();
    let t = ((a - d).powi(2) + (b + c).powi(2)).sqrt();
    s.max(t)
}

/// Spectral norm of `[[a, b], [c, d]]` in closed form, `(s + t)/2`.
pub fn spectral_norm_2x2(w: [f64; 4]) -> f64 {
    let [a, b, c, d] = w;
    let s = ((a + d).powi(2) + (b - c).powi(2)).sqrt();
    let t = ((a - d).powi(2) + (b + c).powi(2)).sqrt();
    0.5 * (s + t)
}

/// Subgradient of the 2×2 trace norm `max(s, t)` (see [`trace_norm_2x2`]).
fn trace_norm_2x2_subgradient(w: [f64; 4]) -> [f64; 4] {
    let [a, b, c, d] = w;
    let s = ((a + d).powi(2) + (b - c).powi(2)).sqrt();
    let t = ((a - d).powi(2) + (b + c).powi(2)).sqrt();
    if s >= t {
        if s == 0.0 {
            return [0.0; 4];
        }
        [(a + d) / s, (b - c) / s, -(b - c) / s, (a + d) / s]
    } else {
        [(a - d) / t, (b + c) / t, (b + c) / t, -(a - d) / t]
    }
}

/// Reference minimum of `Σ_k loss(w_k / scale, z_k)` over 2×2 matrices with
/// trace norm ≤ `radius` and entries in `[-bound, bound]`; `z` covers the
/// entries in row-major order (a prefix when shorter than 4).
///
/// Two stages: an exhaustive grid over the entry box at `grid_step`, then a
/// refinement by the central-cut ellipsoid method on the same convex problem
/// (closed-form trace norm and its subgradient as the constraint oracle).
/// Returns the smaller of the two feasible values.
pub fn grid_tracenorm_2x2(
    z: &[f64],
    loss: impl Fn(f64, f64) -> f64,
    loss_subgradient: impl Fn(f64, f64) -> f64,
    radius: f64,
    bound: f64,
    scale: f64,
    grid_step: f64,
) -> f64 {
    let feasible = |w: [f64; 4]| trace_norm_2x2(w) <= radius && w.iter().all(|x| x.abs() <= bound);
    let obj = |w: [f64; 4]| -> f64 { z.iter().zip(w.iter()).map(|(&y, &x)| loss(x / scale, y)).sum() };

    let n = (2.0 * bound / grid_step).round() as i64;
    let coord = |k: i64| -bound + 2.0 * bound * k as f64 / n as f64;
    let mut best = obj([0.0; 4]);
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                for l in 0..=n {
                    let w = [coord(i), coord(j), coord(k), coord(l)];
                    if feasible(w) {
                        best = best.min(obj(w));
                    }
                }
            }
        }
    }

    // ellipsoid {x : (x-c)ᵀ P⁻¹ (x-c) ≤ 1}, starting from the ball containing the box
    const N: f64 = 4.0;
    let mut c = [0.0f64; 4];
    let mut p = [[0.0f64; 4]; 4];
    for (i, row) in p.iter_mut().enumerate() {
        row[i] = 4.0 * bound * bound;
    }
    for _ in 0..3000 {
        let g: [f64; 4] = if trace_norm_2x2(c) > radius {
            trace_norm_2x2_subgradient(c)
        } else if let Some(i) = (0..4).find(|&i| c[i].abs() > bound) {
            let mut e = [0.0; 4];
            e[i] = c[i].signum();
            e
        } else {
            best = best.min(obj(c));
            let mut g = [0.0; 4];
            for (k, &y) in z.iter().enumerate() {
                g[k] = loss_subgradient(c[k] / scale, y) / scale;
            }
            g
        };
        let pg: [f64; 4] = std::array::from_fn(|i| (0..4).map(|j| p[i][j] * g[j]).sum());
        let gpg: f64 = (0..4).map(|i| g[i] * pg[i]).sum();
        if !(gpg > 1e-300) {
            break;
        }
        let norm = gpg.sqrt();
        for i in 0..4 {
            c[i] -= pg[i] / norm / (N + 1.0);
        }
        let f = N * N / (N * N - 1.0);
        for i in 0..4 {
            for j in 0..4 {
                p[i][j] = f * (p[i][j] - 2.0 / (N + 1.0) * pg[i] * pg[j] / gpg);
            }
        }
    }
    best
}

/// `E‖Σ‖_op` over all `2^(n²)` sign matrices, by enumeration; only for n ≤ 2
/// where the closed-form spectral norm applies.
pub fn exact_spectral_2x2() -> f64 {
    let mut total = 0.0;
    for mask in 0..16u32 {
        let w = [0, 1, 2, 3].map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 });
        total += spectral_norm_2x2(w);
    }
    total / 16.0
}

/// `E sup_f Σ σ_t f_t` by direct enumeration of sign vectors.
pub fn brute_rademacher(rows: &[Vec<f64>]) -> f64 {
    let t = rows[0].len();
    let mut total = 0.0;
    for mask in 0..(1u64 << t) {
        let sup = rows
            .iter()
            .map(|r| r.iter().enumerate().map(|(i, &f)| if mask >> i & 1 == 1 { f } else { -f }).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        total += sup;
    }
    total / (1u64 << t) as f64
}

/// `min_f Σ_t |f_t − y_t|` by scanning the rows.
fn best_abs_loss(rows: &[Vec<f64>], y: &[f64]) -> f64 {
    rows.iter().map(|r| r.iter().zip(y).map(|(f, o)| (f - o).abs()).sum::<f64>()).fold(f64::INFINITY, f64::min)
}

/// The exact minimax prediction after `prefix`, written out from its
/// definition: half the average over all sign completions `σ` of
/// `min L(prefix, −1, σ) − min L(prefix, +1, σ)` under absolute loss.
pub fn brute_mf_prediction(rows: &[Vec<f64>], prefix: &[f64]) -> f64 {
    let t = rows[0].len();
    let rest = t - prefix.len() - 1;
    let mut total = 0.0;
    let mut y = prefix.to_vec();
    y.resize(t, 0.0);
    for mask in 0..(1u64 << rest) {
        for k in 0..rest {
            y[prefix.len() + 1 + k] = if mask >> k & 1 == 1 { 1.0 } else { -1.0 };
        }
        y[prefix.len()] = -1.0;
        let minus = best_abs_loss(rows, &y);
        y[prefix.len()] = 1.0;
        let plus = best_abs_loss(rows, &y);
        total += minus - plus;
    }
    0.5 * total / (1u64 << rest) as f64
}

/// Largest regret of a deterministic rule over every `±1` outcome sequence.
pub fn brute_worst_case(rows: &[Vec<f64>], mut predict: impl FnMut(&[f64]) -> f64) -> f64 {
    let t = rows[0].len();
    let mut worst = f64::NEG_INFINITY;
    for mask in 0..(1u64 << t) {
        let y: Vec<f64> = (0..t).map(|k| if mask >> k & 1 == 1 { 1.0 } else { -1.0 }).collect();
        let cum: f64 = (0..t).map(|k| (predict(&y[..k]) - y[k]).abs()).sum();
        worst = worst.max(cum - best_abs_loss(rows, &y));
    }
    worst
}

/// Spectral norm of a square row-major matrix: power iteration on `AᵀA`
/// from the all-ones start plus a few fixed starts, keeping the largest
/// Rayleigh quotient.
pub fn spectral_norm_power(a: &[f64], n: usize) -> f64 {
    let ata = |v: &[f64]| -> Vec<f64> {
        let av: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum()).collect();
        (0..n).map(|j| (0..n).map(|i| a[i * n + j] * av[i]).sum()).collect()
    };
    let mut best: f64 = 0.0;
    for start in 0..n.min(3) + 1 {
        let mut v: Vec<f64> = (0..n).map(|j| if j == start { 2.0 } else { 1.0 + 0.1 * j as f64 }).collect();
        let mut lambda = 0.0;
        for _ in 0..500 {
            let w = ata(&v);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let next = v.iter().zip(&w).map(|(x, y)| x * y).sum::<f64>() / v.iter().map(|x| x * x).sum::<f64>();
            v = w.iter().map(|x| x / norm).collect();
            let settled = (next - lambda).abs() <= 1e-15 * next;
            lambda = next;
            if settled {
                break;
            }
        }
        best = best.max(lambda);
    }
    best.sqrt()
}

/// `E‖Σ‖_op` over uniform `n × n` sign matrices, by enumeration. Flipping a
/// row or column keeps the norm, so only matrices with an all-`+1` first row
/// and column are visited (`2^((n−1)²)` of them).
pub fn exact_spectral_enumerated(n: usize) -> f64 {
    let free = (n - 1) * (n - 1);
    let mut total = 0.0;
    let mut a = vec![1.0; n * n];
    for mask in 0..(1u64 << free) {
        for k in 0..free {
            let (i, j) = (1 + k / (n - 1), 1 + k % (n - 1));
            a[i * n + j] = if mask >> k & 1 == 1 { 1.0 } else { -1.0 };
        }
        total += spectral_norm_power(&a, n);
    }
    total / (1u64 << free) as f64
}
