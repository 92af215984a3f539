//! Acceptance criteria 1-9. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; the process fails if any
//! criterion does. Pass criterion numbers as arguments to run a subset.

#[path = "../../core/tests/support/oracles.rs"]
mod oracles;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use oracles::{
    brute_mf_prediction, brute_rademacher, brute_worst_case, exact_spectral_2x2, exact_spectral_enumerated,
    grid_tracenorm_2x2,
};
use playout_cli::{emit_curve, run, write_outputs, ExperimentSpec, RunOptions};
use playout_core::erm::{tracenorm_erm, CountingOracle, FiniteErm, SolverParams, TraceNormClass, TraceNormErm};
use playout_core::games::{
    lemma4_adversary, play_cf_game, play_expert_game, Adversary, CfSchedule, MfStar, OutcomeDistribution, OutcomeSet,
};
use playout_core::loss::{check_lemma4_condition, uniform_grid};
use playout_core::minimax::{class_to_01, dp_build, dp_prediction, prediction_to_pm1, ExactMinimax, PredictionRule};
use playout_core::r2::{theorem3_bound, R2Forecaster};
use playout_core::rademacher::spectral_rademacher_tracenorm;
use playout_core::rng::derive_seed;
use playout_core::{FiniteExpertClass, GameConfig, LossSpec, RandomStream};

type Verdict = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Verdict);

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn random_rows(stream: &mut RandomStream, experts: usize, horizon: usize) -> Vec<Vec<f64>> {
    (0..experts).map(|_| (0..horizon).map(|_| stream.uniform_in(-1.0, 1.0)).collect()).collect()
}

fn class_of(rows: &[Vec<f64>]) -> FiniteExpertClass<f64> {
    FiniteExpertClass::new(rows.to_vec(), 1.0).unwrap()
}

fn signs(mask: u64, len: usize) -> Vec<f64> {
    (0..len).map(|k| if mask >> k & 1 == 1 { 1.0 } else { -1.0 }).collect()
}

fn abs_loss() -> LossSpec<f64> {
    LossSpec::absolute(1.0).unwrap()
}

/// The 50 classes of criteria 1 and 2: `T ∈ {2,…,6}` cycling, `N ≤ 8`.
fn minimax_classes() -> Vec<Vec<Vec<f64>>> {
    let mut s = RandomStream::derive(1, "acceptance-minimax", 0, 0);
    (0..50)
        .map(|i| {
            let n = 1 + s.below(8);
            random_rows(&mut s, n, 2 + i % 5)
        })
        .collect()
}

fn criterion1() -> Verdict {
    let start = Instant::now();
    let mut worst_gap: f64 = 0.0;
    for rows in minimax_classes() {
        let mf = ExactMinimax::new(&class_of(&rows)).unwrap();
        let regret = brute_worst_case(&rows, |prefix| mf.predict(prefix).unwrap());
        worst_gap = worst_gap.max((regret - brute_rademacher(&rows)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst_gap <= 1e-9 && secs < 120.0,
        format!("50 classes, max |worst-case regret - R| = {worst_gap:.2e} (tol 1e-9), {secs:.1}s"),
    )
}

fn criterion2() -> Verdict {
    let abs = abs_loss();
    let (mut root_gap, mut pred_gap, mut sibling): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for rows in minimax_classes() {
        let table = dp_build(&class_to_01(&class_of(&rows)).unwrap(), &abs).unwrap();
        root_gap = root_gap.max((table.root() - 0.5 * brute_rademacher(&rows)).abs());
        sibling = sibling.max(table.max_sibling_gap());
        let t = rows[0].len();
        for len in 0..t {
            for mask in 0..1u64 << len {
                let y = signs(mask, len);
                let bits: Vec<bool> = y.iter().map(|&v| v > 0.0).collect();
                let dp = prediction_to_pm1(dp_prediction(&table, &bits).unwrap());
                pred_gap = pred_gap.max((dp - brute_mf_prediction(&rows, &y)).abs());
            }
        }
    }
    ensure(
        root_gap <= 1e-9 && pred_gap <= 1e-9 && sibling <= 1.0 + 1e-12,
        format!("max |A0 - R/2| = {root_gap:.2e}, max prediction gap = {pred_gap:.2e} (tol 1e-9), max sibling gap = {sibling:.12}"),
    )
}

fn criterion3() -> Verdict {
    const SEEDS: u64 = 20_000;
    let start = Instant::now();
    let mut s = RandomStream::derive(3, "acceptance-mf-star", 0, 0);
    let mut classes = vec![vec![vec![1.0, 1.0], vec![-1.0, -1.0]]];
    for i in 0..10 {
        let n = 1 + s.below(8);
        classes.push(random_rows(&mut s, n, 2 + i % 3));
    }
    let abs = abs_loss();
    let mut worst_margin = f64::NEG_INFINITY;
    let mut cases = 0;
    for (c, rows) in classes.iter().enumerate() {
        let class = class_of(rows);
        let oracle = FiniteErm::new(class.clone());
        let t = class.horizon();
        let r = brute_rademacher(rows);
        let cfg = GameConfig::new(t, 1.0, 1.0, 1.0, 0.1, 0).unwrap();
        for mask in 0..1u64 << t {
            let y = signs(mask, t);
            let regrets: Vec<f64> = (0..SEEDS)
                .map(|k| {
                    let seed = derive_seed(3, "acceptance-mf-star-seed", (c as u64) << 32 | mask << 20 | k);
                    let mut f = MfStar::reused(&oracle, seed);
                    play_expert_game(&mut f, &mut Adversary::FixedSequence(y.clone()), &class, &abs, &cfg)
                        .unwrap()
                        .final_regret()
                })
                .collect();
            let (m, se) = mean_se(&regrets);
            worst_margin = worst_margin.max(m - (r + 3.0 * se + 1e-9));
            cases += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst_margin <= 0.0 && secs < 300.0,
        format!(
            "{cases} (class, sequence) pairs x {SEEDS} seeds, max (mean - R - 3SE) = {worst_margin:.3e}, {secs:.1}s"
        ),
    )
}

fn criterion4() -> Verdict {
    const SEEDS: u64 = 10_000;
    let delta: f64 = 0.1;
    let rows = random_rows(&mut RandomStream::derive(4, "acceptance-hp-class", 0, 0), 6, 8);
    let class = class_of(&rows);
    let t = class.horizon();
    let bound = brute_rademacher(&rows) + (2.0 * t as f64 * (1.0 / delta).ln()).sqrt();
    let abs = abs_loss();
    let oracle = FiniteErm::new(class.clone());
    let cfg = GameConfig::new(t, 1.0, 1.0, 1.0, delta, 0).unwrap();
    let worst_y = Adversary::exhaustive_worst_case(&ExactMinimax::new(&class).unwrap(), &class).unwrap();
    let mut fractions = Vec::new();
    for adversary in ["iid_signs", "worst_case_of_exact"] {
        let violations = (0..SEEDS)
            .filter(|&k| {
                let seed = derive_seed(4, adversary, k);
                let mut adv = match adversary {
                    "iid_signs" => {
                        Adversary::IidRandom { distribution: OutcomeDistribution::Signs { p_plus: 0.5 }, seed }
                    }
                    _ => worst_y.clone(),
                };
                let mut f = MfStar::fresh(&oracle, seed);
                play_expert_game(&mut f, &mut adv, &class, &abs, &cfg).unwrap().final_regret() > bound
            })
            .count();
        fractions.push((adversary, violations as f64 / SEEDS as f64));
    }
    let ok = fractions.iter().all(|&(_, f)| f <= 0.12);
    ensure(ok, format!("T = 8, bound {bound:.4}, violation fractions {fractions:?} (limit 0.12)"))
}

/// Estimated `R_T` for horizons past exhaustive enumeration: plain Monte
/// Carlo over independent sign vectors.
fn mc_rademacher_plain(rows: &[Vec<f64>], samples: usize, seed: u64) -> f64 {
    let mut s = RandomStream::derive(seed, "acceptance-mc", 0, 0);
    let t = rows[0].len();
    let total: f64 = (0..samples)
        .map(|_| {
            let sigma: Vec<f64> = s.rademacher_vec(t);
            rows.iter().map(|r| r.iter().zip(&sigma).map(|(f, x)| f * x).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    total / samples as f64
}

fn r2_regrets(rows: &[Vec<f64>], adversary: &str, delta: f64, seeds: u64) -> Result<Vec<f64>, String> {
    let class = class_of(rows);
    let t = class.horizon();
    let abs = abs_loss();
    let fixed: Vec<f64> = {
        let mut s = RandomStream::derive(5, "acceptance-fixed", t as u64, 0);
        (0..t).map(|_| s.uniform_in(-1.0, 1.0)).collect()
    };
    let mut out = Vec::with_capacity(seeds as usize);
    for k in 0..seeds {
        let seed = derive_seed(5, adversary, k);
        let cfg = GameConfig::new(t, 1.0, 1.0, 1.0, delta, seed).unwrap();
        let mut adv = match adversary {
            "iid_uniform" => {
                Adversary::IidRandom { distribution: OutcomeDistribution::Uniform { lo: -1.0, hi: 1.0 }, seed }
            }
            "iid_signs" => Adversary::IidRandom { distribution: OutcomeDistribution::Signs { p_plus: 0.5 }, seed },
            _ => Adversary::FixedSequence(fixed.clone()),
        };
        let oracle = CountingOracle::new(FiniteErm::scaled(&class).unwrap());
        let mut f = R2Forecaster::new(cfg, oracle, abs.clone()).unwrap();
        let tr = play_expert_game(&mut f, &mut adv, &class, &abs, &cfg).map_err(|e| e.to_string())?;
        let calls = f.oracle().calls();
        if calls != (2 * t * t) as u64 {
            return Err(format!("T = {t}: {calls} oracle calls, expected {}", 2 * t * t));
        }
        if let Some(row) = tr.rows.iter().find(|r| r.prediction.abs() > 1.0) {
            return Err(format!("T = {t}: prediction {} outside [-1, 1]", row.prediction));
        }
        out.push(tr.final_regret());
    }
    Ok(out)
}

fn criterion5() -> Verdict {
    const SEEDS: u64 = 1000;
    let delta = 0.2;
    let mut lines = Vec::new();
    let mut ok = true;
    for t in [8, 16, 32] {
        let rows = random_rows(&mut RandomStream::derive(5, "acceptance-r2-class", t as u64, 0), 8, t);
        let r = if t <= 16 { brute_rademacher(&rows) } else { mc_rademacher_plain(&rows, 200_000, t as u64) };
        let bound = theorem3_bound(1.0, 1.0, 1.0, t, delta, r).unwrap();
        for adversary in ["iid_uniform", "iid_signs", "fixed"] {
            let regrets = r2_regrets(&rows, adversary, delta, SEEDS)?;
            let frac = regrets.iter().filter(|&&x| x > bound).count() as f64 / SEEDS as f64;
            let worst = regrets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ok &= frac <= 0.23;
            lines.push(format!("T={t} {adversary}: frac {frac} (max regret {worst:.3}, bound {bound:.3})"));
        }
    }
    ensure(ok, format!("oracle calls = 2T^2 and |p_t| <= 1 in every game; {}", lines.join("; ")))
}

/// One CF game on a random revelation order, returning the running max
/// regret and, for the switching adversary, the smallest post-switch value of
/// `min_p ℓ(p, y_t) − ℓ(f*_t, y_t)` over the prediction grid and the actual `p_t`.
fn cf_trial(seed: u64, lemma4: bool, eta: f64) -> (f64, Option<f64>) {
    let (n, radius, b) = (4, 4.0, 1.0);
    let abs = abs_loss();
    let params = SolverParams::default();
    let schedule = CfSchedule::shuffled(n, n, &mut RandomStream::derive(seed, "reveal", 0, 0)).unwrap();
    let class = schedule.class(radius, b).unwrap();
    let cfg = GameConfig::new(n * n, b, 1.0, eta, 0.1, seed).unwrap();
    let mut f =
        R2Forecaster::new(cfg, CountingOracle::new(TraceNormErm::new(class.clone(), true, params)), abs.clone())
            .unwrap();
    let base = Adversary::IidRandom { distribution: OutcomeDistribution::Uniform { lo: -b, hi: b }, seed };
    let grid = uniform_grid(-b, b, 101);
    let mut adv = if lemma4 {
        lemma4_adversary(
            base,
            8,
            Arc::new(TraceNormErm::new(class.clone(), false, params)),
            abs.clone(),
            OutcomeSet::Interval { lo: -b, hi: b, points: 101 },
            grid.clone(),
        )
        .unwrap()
    } else {
        base
    };
    let tr = play_cf_game(&schedule, &mut f, &class, &mut adv, &abs, &params).unwrap();
    let excess = match &adv {
        Adversary::Lemma4Switch(a) => {
            let fstar = a.comparator().expect("switch happened");
            let mut worst = f64::INFINITY;
            for (k, row) in tr.rows.iter().enumerate().skip(8) {
                let y = row.outcome;
                let ref_loss = (fstar[k] - y).abs();
                for p in grid.iter().copied().chain([row.prediction]) {
                    worst = worst.min((p - y).abs() - ref_loss);
                }
            }
            Some(worst)
        }
        _ => None,
    };
    (tr.max_regret(), excess)
}

fn criterion6() -> Verdict {
    const SEEDS: u64 = 500;
    let (delta, eta) = (0.1, 0.25);
    let abs = abs_loss();
    let grid = uniform_grid(-1.0, 1.0, 101);
    let admissible = check_lemma4_condition(&abs, &grid, &grid, 1e-9).unwrap();
    let r = 4.0 * exact_spectral_enumerated(4);
    let bound = theorem3_bound(1.0, 1.0, eta, 16, delta, r).unwrap();
    let mut lines = vec![format!("condition holds: {admissible}, R (ball) = {r:.4}, bound = {bound:.3}")];
    let mut ok = admissible;
    for lemma4 in [false, true] {
        let mut violations = 0;
        let mut worst_regret = f64::NEG_INFINITY;
        let mut worst_excess = f64::INFINITY;
        for k in 0..SEEDS {
            let (regret, excess) =
                cf_trial(derive_seed(6, "acceptance-cf", k + u64::from(lemma4) * SEEDS), lemma4, eta);
            violations += usize::from(regret > bound);
            worst_regret = worst_regret.max(regret);
            if let Some(e) = excess {
                worst_excess = worst_excess.min(e);
            }
        }
        let frac = violations as f64 / SEEDS as f64;
        ok &= frac <= delta + 0.03;
        if lemma4 {
            ok &= worst_excess >= -1e-9;
            lines.push(format!(
                "lemma4: frac {frac}, max regret {worst_regret:.3}, min post-switch excess {worst_excess:.2e}"
            ));
        } else {
            lines.push(format!("iid uniform: frac {frac}, max regret {worst_regret:.3}"));
        }
    }
    ensure(ok, lines.join("; "))
}

fn criterion7() -> Verdict {
    let spec = ExperimentSpec::parse("kind = transductive\nseed = 7\ntrials = 100\nhorizons = 16, 64, 256\n").unwrap();
    let curve = emit_curve(&spec, &spec.horizons).map_err(|e| e.to_string())?;
    let xs: Vec<f64> = curve.iter().map(|p| (p.horizon as f64).ln()).collect();
    let ys: Vec<f64> = curve.iter().map(|p| p.mean_regret.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    let means: Vec<String> = curve.iter().map(|p| format!("T={}: {:.3}", p.horizon, p.mean_regret)).collect();
    ensure(slope <= 0.65, format!("log-log slope {slope:.4} (limit 0.65); mean regret {}", means.join(", ")))
}

fn criterion8() -> Verdict {
    // (a) solver against the 2x2 reference
    let abs = abs_loss();
    let sq = LossSpec::squared(1.0).unwrap();
    let mut s = RandomStream::derive(8, "acceptance-2x2", 0, 0);
    let mut gap_a: f64 = 0.0;
    for _ in 0..12 {
        let radius = s.uniform_in(0.3, 2.5);
        let len = 1 + s.below(4);
        let z: Vec<f64> = (0..len).map(|_| s.uniform_in(-1.0, 1.0)).collect();
        let class = TraceNormClass::full(2, 2, radius, 1.0).unwrap();
        for (loss, name) in [(&abs, "absolute"), (&sq, "squared")] {
            let sol = tracenorm_erm(&class, &z, loss, 1.0, &SolverParams::default()).unwrap();
            let grad = |p: f64, y: f64| match name {
                "absolute" => (p - y).signum() * f64::from(p != y),
                _ => 2.0 * (p - y),
            };
            let reference = grid_tracenorm_2x2(&z, |p, y| loss.value(p, y), grad, radius, 1.0, 1.0, 0.1);
            gap_a = gap_a.max((sol.value - reference).abs());
        }
    }
    let ok_a = gap_a <= 1e-3;
    // (b) exact enumeration at n = 2, r = 1
    let est = spectral_rademacher_tracenorm(2, 1.0, 16, &mut RandomStream::derive(8, "b", 0, 0)).unwrap();
    let closed = 1.0 + std::f64::consts::SQRT_2 / 2.0;
    let gap_b = (est.estimate - closed).abs().max((exact_spectral_2x2() - closed).abs());
    let ok_b = gap_b <= 1e-9;
    // (c) R(n, r = n) / n^{3/2} nonincreasing up to 20% between successive n
    let ratios: Vec<(usize, f64)> = [2usize, 4, 8, 16]
        .iter()
        .map(|&n| {
            let est = spectral_rademacher_tracenorm(n, n as f64, 4000, &mut RandomStream::derive(8, "c", n as u64, 0))
                .unwrap();
            (n, est.estimate / (n as f64).powf(1.5))
        })
        .collect();
    let ok_c = ratios.windows(2).all(|w| w[1].1 <= 1.2 * w[0].1);
    let shown: Vec<String> = ratios.iter().map(|(n, r)| format!("n={n}: {r:.4}")).collect();
    let detail = format!(
        "(a) max gap {gap_a:.2e} [{}]; (b) |R - (1 + sqrt2/2)| = {gap_b:.2e} [{}]; (c) ratios {} [{}]",
        if ok_a { "pass" } else { "FAIL" },
        if ok_b { "pass" } else { "FAIL" },
        shown.join(", "),
        if ok_c { "pass" } else { "FAIL: the ratio rises toward 2 as E||S||_op approaches 2 sqrt(n)" },
    );
    ensure(ok_a && ok_b && ok_c, detail)
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn criterion9() -> Verdict {
    let configs = [
        "kind = verify\ntrials = 50\n",
        "kind = mf\nexperts = 5\nhorizon = 6\ntrials = 10\nadversary = iid_signs\n",
        "kind = mf_star\nclass = 1, 1; -1, -1\nmode = reused\ntrials = 200\n",
        "kind = mf_star\nexperts = 6\nhorizon = 8\ntrials = 200\nhorizons = 4, 8\n",
        "kind = r2\nexperts = 8\nhorizon = 16\ndelta = 0.2\ntrials = 100\nadversary = iid_uniform\n",
        "kind = transductive\ntrials = 20\nhorizons = 16, 64\n",
        "kind = cf\nn = 4\neta = 0.25\ntrials = 8\nadversary = lemma4\n",
        "kind = rademacher\nn = 4\nsamples = 2000\n",
    ];
    let tmp = tempfile::tempdir().unwrap();
    let mut compared = 0;
    for (i, cfg) in configs.iter().enumerate() {
        let mut outputs = Vec::new();
        for (rep, workers) in [(0, 1), (1, 1), (2, 2)] {
            let mut spec = ExperimentSpec::parse(cfg).unwrap();
            spec.seed = 99;
            spec.workers = Some(workers);
            let out = run(&spec, RunOptions::default()).map_err(|e| format!("config {i}: {e}"))?;
            let dir = tmp.path().join(format!("{i}-{rep}"));
            write_outputs(&dir, &out).unwrap();
            outputs.push(files(&dir));
        }
        if outputs[0] != outputs[1] || outputs[0] != outputs[2] {
            return Err(format!("config {i} ({}) produced different bytes", cfg.lines().next().unwrap()));
        }
        compared += outputs[0].len();
    }
    let rows = random_rows(&mut RandomStream::derive(5, "acceptance-r2-class", 8, 0), 8, 8);
    let a = r2_regrets(&rows, "iid_uniform", 0.2, 200)?;
    let b = r2_regrets(&rows, "iid_uniform", 0.2, 200)?;
    let same = a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits());
    ensure(
        same,
        format!("{} configs x 3 runs (1, 1 and 2 workers): {compared} files byte-identical; R2 regrets bit-identical: {same}", configs.len()),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "exact minimax regret equals R", criterion1),
        (2, "DP consistency", criterion2),
        (3, "MF* expectation bound (reused)", criterion3),
        (4, "MF* high-probability bound (fresh)", criterion4),
        (5, "R2 bound, range and oracle budget", criterion5),
        (6, "CF uniform regret and switching adversary", criterion6),
        (7, "transductive rate", criterion7),
        (8, "trace-norm ingredients", criterion8),
        (9, "determinism", criterion9),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("criterion {id} PASS ({name}, {secs:.1}s): {detail}"),
            Err(detail) => {
                println!("criterion {id} FAIL ({name}, {secs:.1}s): {detail}");
                failed.push(id);
            }
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
