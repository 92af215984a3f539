//! Turning a validated spec into trials, summaries and curves.

use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use playout_core::erm::{CountingOracle, FiniteErm, SolverParams, TraceNormErm};
use playout_core::games::{
    induced_class, lemma4_adversary, play_cf_game, play_expert_game, play_transductive, Adversary, CfSchedule, MfStar,
    OutcomeDistribution, OutcomeSet, TransductiveForecaster,
};
use playout_core::loss::uniform_grid;
use playout_core::minimax::{
    class_to_01, dp_build, dp_prediction, mf_exact_prediction, prediction_to_pm1, worst_case_regret_exhaustive,
    ExactMinimax,
};
use playout_core::r2::{theorem3_bound, R2Forecaster};
use playout_core::rademacher::{
    exact_rademacher, mc_rademacher, mean_stderr, spectral_rademacher_tracenorm, RademacherEstimate, MAX_EXACT_HORIZON,
};
use playout_core::rng::derive_seed;
use playout_core::{Error, FiniteExpertClass, GameConfig, LossSpec, RandomStream, Transcript};
use rayon::prelude::*;

use crate::output::{write_curve, write_transcript, CurvePoint, Summary};
use crate::spec::{AdversaryName, ClassSource, ExperimentSpec, Kind, LossName, Mode, Order};
use crate::CliError;

/// Slack on the exact-minimax guarantee `regret ≤ R`.
const EXACT_SLACK: f64 = 1e-9;
/// Defaults for keys the config leaves out.
const DEFAULT_FINITE_HORIZON: usize = 8;
const DEFAULT_TRANSDUCTIVE_HORIZON: usize = 16;
const DEFAULT_EXPERTS: usize = 4;
const DEFAULT_CF_SIDE: usize = 4;
const LEMMA4_GRID: usize = 101;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record `wall_time_s`; off by default so reruns are byte-identical.
    pub timing: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: Summary,
    /// Trial 0's transcript.
    pub transcript: Option<Transcript<f64>>,
    pub curve: Option<Vec<CurvePoint>>,
    /// Failed checks of a `verify` run; the files are still written.
    pub failures: Vec<String>,
}

impl RunOutput {
    pub fn status(&self) -> Result<(), CliError> {
        match self.failures.first() {
            None => Ok(()),
            Some(first) => Err(CliError::Verification(format!(
                "{} of {} checks failed, first: {first}",
                self.failures.len(),
                self.summary.trials
            ))),
        }
    }
}

struct Trial {
    transcript: Transcript<f64>,
    erm_calls: Option<u64>,
}

/// Per-run data shared by all trials.
struct Prepared {
    rademacher: RademacherEstimate<f64>,
    bound: f64,
    /// Exact per-trial oracle budget, when the kind has one.
    erm_budget: Option<u64>,
    use_max_regret: bool,
}

fn loss_of(spec: &ExperimentSpec) -> Result<LossSpec<f64>, CliError> {
    Ok(match spec.loss {
        LossName::Absolute => LossSpec::absolute(spec.bound_b)?,
        LossName::Squared => LossSpec::squared(spec.bound_b)?,
    })
}

fn finite_class(spec: &ExperimentSpec) -> Result<FiniteExpertClass<f64>, CliError> {
    let b = spec.bound_b;
    let source = spec.class.clone().unwrap_or(ClassSource::Random { experts: DEFAULT_EXPERTS });
    match source {
        ClassSource::Inline(rows) => {
            let class = FiniteExpertClass::new(rows, b).map_err(|e| spec.error("class", e.to_string()))?;
            if let Some(h) = spec.horizon {
                if h != class.horizon() {
                    return Err(spec
                        .error("horizon", format!("horizon {h} differs from the class's {} columns", class.horizon()))
                        .into());
                }
            }
            Ok(class)
        }
        ClassSource::Random { experts } => {
            let horizon = spec.horizon.unwrap_or(DEFAULT_FINITE_HORIZON);
            if horizon == 0 {
                return Err(spec.error("horizon", "horizon must be positive").into());
            }
            let mut s = RandomStream::derive(spec.seed, "class", 0, 0);
            let data = (0..experts * horizon).map(|_| s.uniform_in(-b, b)).collect();
            Ok(FiniteExpertClass::from_flat(experts, horizon, data, b)?)
        }
    }
}

/// Exact for short horizons, antithetic Monte Carlo otherwise.
fn finite_rademacher(
    class: &FiniteExpertClass<f64>,
    samples: usize,
    seed: u64,
) -> Result<RademacherEstimate<f64>, CliError> {
    if class.horizon() <= MAX_EXACT_HORIZON {
        return Ok(RademacherEstimate {
            estimate: exact_rademacher(class)?,
            stderr: 0.0,
            method: playout_core::rademacher::Method::Exact,
            samples: 0,
        });
    }
    let b = class.bound();
    let mut est =
        mc_rademacher(&FiniteErm::scaled(class)?, samples, &mut RandomStream::derive(seed, "rademacher", 0, 0))?;
    est.estimate *= b;
    est.stderr *= b;
    Ok(est)
}

fn check_sequence(spec: &ExperimentSpec, horizon: usize) -> Result<(), CliError> {
    if let Some(seq) = &spec.sequence {
        if seq.len() != horizon {
            return Err(spec
                .error("sequence", format!("sequence has {} outcomes, the horizon is {horizon}", seq.len()))
                .into());
        }
    }
    Ok(())
}

fn random_adversary(spec: &ExperimentSpec, name: AdversaryName, trial_seed: u64) -> Adversary<f64> {
    let b = spec.bound_b;
    match name {
        AdversaryName::Fixed => Adversary::FixedSequence(spec.sequence.clone().unwrap_or_default()),
        AdversaryName::IidSigns => {
            Adversary::IidRandom { distribution: OutcomeDistribution::Signs { p_plus: spec.p_plus }, seed: trial_seed }
        }
        _ => Adversary::IidRandom { distribution: OutcomeDistribution::Uniform { lo: -b, hi: b }, seed: trial_seed },
    }
}

fn trial_seed(spec: &ExperimentSpec, i: usize) -> u64 {
    derive_seed(spec.seed, "trial", i as u64)
}

fn deviation(horizon: usize, delta: f64) -> f64 {
    (2.0 * horizon as f64 * (1.0 / delta).ln()).sqrt()
}

/// Runs `trials` independent trials on `workers` threads, in index order.
fn run_trials<F>(spec: &ExperimentSpec, workers: usize, f: F) -> Result<Vec<Trial>, CliError>
where
    F: Fn(usize) -> Result<Trial, CliError> + Sync,
{
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| CliError::Pool(e.to_string()))?;
    pool.install(|| (0..spec.trials()).into_par_iter().map(&f).collect())
}

fn workers(spec: &ExperimentSpec) -> usize {
    spec.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs the experiment described by `spec`.
pub fn run(spec: &ExperimentSpec, opts: RunOptions) -> Result<RunOutput, CliError> {
    spec.validate()?;
    let kind = spec.kind()?;
    let start = Instant::now();
    let mut out = match kind {
        Kind::Verify => run_verify(spec)?,
        Kind::Rademacher => run_rademacher(spec)?,
        _ => run_game(spec, kind)?,
    };
    if !spec.horizons.is_empty() {
        out.curve = Some(emit_curve(spec, &spec.horizons)?);
    }
    if opts.timing {
        out.summary.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    Ok(out)
}

fn run_game(spec: &ExperimentSpec, kind: Kind) -> Result<RunOutput, CliError> {
    let adversary = spec.adversary()?;
    let (prep, trials) = match kind {
        Kind::Mf | Kind::MfStar | Kind::R2 => finite_game(spec, kind, adversary)?,
        Kind::Transductive => transductive_game(spec, adversary)?,
        Kind::Cf => cf_game(spec, adversary)?,
        Kind::Verify | Kind::Rademacher => unreachable!("not a game kind"),
    };
    if let Some(budget) = prep.erm_budget {
        for (i, t) in trials.iter().enumerate() {
            if t.erm_calls != Some(budget) {
                return Err(Error::InvariantViolation(format!(
                    "trial {i} made {:?} oracle calls, expected {budget}",
                    t.erm_calls
                ))
                .into());
            }
        }
    }
    let regrets: Vec<f64> = trials
        .iter()
        .map(|t| if prep.use_max_regret { t.transcript.max_regret() } else { t.transcript.final_regret() })
        .collect();
    let (mean, se) = mean_stderr(&regrets);
    let violations = regrets.iter().filter(|&&r| r > prep.bound).count();
    let mut summary = Summary::new(kind.as_str(), spec.seed, trials.len());
    summary.mean_regret = Some(mean);
    summary.regret_stderr = Some(se);
    summary.rademacher_estimate = Some(prep.rademacher.estimate);
    summary.bound_value = Some(prep.bound);
    summary.bound_violation_fraction = Some(violations as f64 / trials.len() as f64);
    summary.erm_calls = trials.iter().map(|t| t.erm_calls).max().flatten();
    summary.solver_tolerance = Some(trials.iter().map(|t| t.transcript.solver_tolerance).fold(0.0, f64::max));
    Ok(RunOutput {
        summary,
        transcript: trials.into_iter().next().map(|t| t.transcript),
        curve: None,
        failures: Vec::new(),
    })
}

fn finite_game(
    spec: &ExperimentSpec,
    kind: Kind,
    adversary: AdversaryName,
) -> Result<(Prepared, Vec<Trial>), CliError> {
    let class = finite_class(spec)?;
    let horizon = class.horizon();
    check_sequence(spec, horizon)?;
    let loss = loss_of(spec)?;
    let rademacher = finite_rademacher(&class, spec.samples, spec.seed)?;
    let r = rademacher.estimate;
    let config = GameConfig::new(horizon, spec.bound_b, loss.rho(), spec.eta, spec.delta, spec.seed)
        .map_err(|e| spec.error("eta", e.to_string()))?;
    let (bound, erm_budget) = match kind {
        Kind::Mf => (r + EXACT_SLACK, None),
        Kind::MfStar => (r + deviation(horizon, spec.delta), Some(2 * horizon as u64)),
        _ => (
            theorem3_bound(loss.rho(), spec.bound_b, spec.eta, horizon, spec.delta, r)?,
            Some((2 * horizon * config.inner_iterations()) as u64),
        ),
    };
    let exact = match kind {
        Kind::Mf => Some(ExactMinimax::new(&class)?),
        _ => None,
    };
    let worst = match (&exact, adversary) {
        (Some(mf), AdversaryName::WorstCase) => Some(Adversary::exhaustive_worst_case(mf, &class)?),
        _ => None,
    };
    let mode = spec.mode()?;
    let trials = run_trials(spec, workers(spec), |i| {
        let seed = trial_seed(spec, i);
        let mut adv = worst.clone().unwrap_or_else(|| random_adversary(spec, adversary, seed));
        let cfg = GameConfig { master_seed: seed, ..config };
        Ok(match kind {
            Kind::Mf => {
                let mut mf = exact.clone().expect("exact forecaster built for mf");
                Trial { transcript: play_expert_game(&mut mf, &mut adv, &class, &loss, &cfg)?, erm_calls: None }
            }
            Kind::MfStar => {
                let oracle = CountingOracle::new(FiniteErm::new(class.clone()));
                let mut f =
                    if mode == Mode::Reused { MfStar::reused(oracle, seed) } else { MfStar::fresh(oracle, seed) };
                let transcript = play_expert_game(&mut f, &mut adv, &class, &loss, &cfg)?;
                Trial { transcript, erm_calls: Some(f.oracle().calls()) }
            }
            _ => {
                let oracle = CountingOracle::new(FiniteErm::scaled(&class)?);
                let mut f = R2Forecaster::new(cfg, oracle, loss.clone())?;
                let transcript = play_expert_game(&mut f, &mut adv, &class, &loss, &cfg)?;
                Trial { transcript, erm_calls: Some(f.oracle().calls()) }
            }
        })
    })?;
    let prep = Prepared { rademacher, bound, erm_budget, use_max_regret: false };
    Ok((prep, trials))
}

fn transductive_instances(spec: &ExperimentSpec) -> Result<Vec<f64>, CliError> {
    match &spec.instances {
        Some(x) => {
            if let Some(h) = spec.horizon {
                if h != x.len() {
                    return Err(spec
                        .error("horizon", format!("horizon {h} differs from the {} instances", x.len()))
                        .into());
                }
            }
            Ok(x.clone())
        }
        None => {
            let t = spec.horizon.unwrap_or(DEFAULT_TRANSDUCTIVE_HORIZON);
            Ok((1..=t).map(|i| i as f64 / (t + 1) as f64).collect())
        }
    }
}

fn transductive_game(spec: &ExperimentSpec, adversary: AdversaryName) -> Result<(Prepared, Vec<Trial>), CliError> {
    let instances = transductive_instances(spec)?;
    let horizon = instances.len();
    check_sequence(spec, horizon)?;
    let loss = loss_of(spec)?;
    let identity: Vec<usize> = (0..horizon).collect();
    let class =
        induced_class(&instances, &identity, spec.polarity).map_err(|e| spec.error("instances", e.to_string()))?;
    let rademacher = finite_rademacher(&class, spec.samples, spec.seed)?;
    let bound = rademacher.estimate + deviation(horizon, spec.delta);
    let forecaster = match spec.mode()? {
        Mode::Fresh => TransductiveForecaster::MfStarFresh,
        Mode::Reused => TransductiveForecaster::MfStarReused,
        Mode::Exact => TransductiveForecaster::Exact,
    };
    let trials = run_trials(spec, workers(spec), |i| {
        let seed = trial_seed(spec, i);
        let mut order = identity.clone();
        if spec.order == Order::Random {
            RandomStream::derive(seed, "order", 0, 0).shuffle(&mut order);
        }
        let mut adv = random_adversary(spec, adversary, seed);
        let transcript = play_transductive(&instances, &order, forecaster, &mut adv, spec.polarity, &loss, seed)?;
        Ok(Trial { transcript, erm_calls: None })
    })?;
    let prep = Prepared { rademacher, bound, erm_budget: None, use_max_regret: false };
    Ok((prep, trials))
}

fn cf_game(spec: &ExperimentSpec, adversary: AdversaryName) -> Result<(Prepared, Vec<Trial>), CliError> {
    let n = spec.n.unwrap_or(DEFAULT_CF_SIDE);
    let radius = spec.radius.unwrap_or(n as f64);
    let horizon = n * n;
    let b = spec.bound_b;
    check_sequence(spec, horizon)?;
    let loss = loss_of(spec)?;
    let config = GameConfig::new(horizon, b, loss.rho(), spec.eta, spec.delta, spec.seed)
        .map_err(|e| spec.error("eta", e.to_string()))?;
    let params = SolverParams { tolerance: spec.solver_tolerance, ..SolverParams::default() };
    // the ball-only complexity, an upper bound for the box-intersected class
    let rademacher = spectral_rademacher_tracenorm(
        n,
        radius,
        spec.samples,
        &mut RandomStream::derive(spec.seed, "rademacher", 0, 0),
    )?;
    let bound = theorem3_bound(loss.rho(), b, spec.eta, horizon, spec.delta, rademacher.estimate)?;
    let switch = spec.switch.unwrap_or(horizon / 2);
    if switch > horizon {
        return Err(spec.error("switch", format!("switch round {switch} is beyond the horizon {horizon}")).into());
    }
    let trials = run_trials(spec, workers(spec), |i| {
        let seed = trial_seed(spec, i);
        let schedule = match spec.order {
            Order::Random => CfSchedule::shuffled(n, n, &mut RandomStream::derive(seed, "reveal", 0, 0))?,
            Order::Identity => CfSchedule::row_major(n, n)?,
        };
        let class = schedule.class(radius, b)?;
        let cfg = GameConfig { master_seed: seed, ..config };
        let oracle = CountingOracle::new(TraceNormErm::new(class.clone(), true, params));
        let mut f = R2Forecaster::new(cfg, oracle, loss.clone())?;
        let mut adv = match adversary {
            AdversaryName::Lemma4 => lemma4_adversary(
                random_adversary(spec, AdversaryName::IidUniform, seed),
                switch,
                Arc::new(TraceNormErm::new(class.clone(), false, params)),
                loss.clone(),
                OutcomeSet::Interval { lo: -b, hi: b, points: LEMMA4_GRID },
                uniform_grid(-b, b, LEMMA4_GRID),
            )?,
            other => random_adversary(spec, other, seed),
        };
        let transcript = play_cf_game(&schedule, &mut f, &class, &mut adv, &loss, &params)?;
        Ok(Trial { transcript, erm_calls: Some(f.oracle().calls()) })
    })?;
    let prep = Prepared {
        rademacher,
        bound,
        erm_budget: Some((2 * horizon * config.inner_iterations()) as u64),
        use_max_regret: true,
    };
    Ok((prep, trials))
}

fn run_rademacher(spec: &ExperimentSpec) -> Result<RunOutput, CliError> {
    let est = match spec.n {
        Some(n) => spectral_rademacher_tracenorm(
            n,
            spec.radius.unwrap_or(n as f64),
            spec.samples,
            &mut RandomStream::derive(spec.seed, "rademacher", 0, 0),
        )?,
        None => finite_rademacher(&finite_class(spec)?, spec.samples, spec.seed)?,
    };
    let mut summary = Summary::new(Kind::Rademacher.as_str(), spec.seed, spec.trials());
    summary.rademacher_estimate = Some(est.estimate);
    Ok(RunOutput { summary, transcript: None, curve: None, failures: Vec::new() })
}

/// One random class for `verify`: `T ∈ {2,…,6}`, up to 8 experts, entries
/// uniform in `[-1, 1]`.
pub fn verify_class(seed: u64, index: usize) -> Result<FiniteExpertClass<f64>, CliError> {
    let mut s = RandomStream::derive(seed, "verify-class", index as u64, 0);
    let horizon = 2 + s.below(5);
    let experts = 1 + s.below(8);
    let data = (0..experts * horizon).map(|_| s.uniform_in(-1.0, 1.0)).collect();
    Ok(FiniteExpertClass::from_flat(experts, horizon, data, 1.0)?)
}

struct Verified {
    worst: f64,
    rademacher: f64,
    failures: Vec<String>,
    transcript: Transcript<f64>,
}

/// Exact-minimax identities on one class: worst-case regret equals `R`, the
/// DP root equals `R/2`, DP predictions match suffix enumeration on every
/// prefix, and sibling values differ by at most one.
fn verify_one(class: &FiniteExpertClass<f64>, index: usize) -> Result<Verified, CliError> {
    let tol = 1e-9;
    let mut failures = Vec::new();
    let r = exact_rademacher(class)?;
    let mf = ExactMinimax::new(class)?;
    let (worst, y) = worst_case_regret_exhaustive(&mf, class)?;
    if (worst - r).abs() > tol {
        failures.push(format!("class {index}: worst-case regret {worst} vs R {r}"));
    }
    let abs = LossSpec::absolute(1.0)?;
    let table = dp_build(&class_to_01(class)?, &abs)?;
    if (table.root() - 0.5 * r).abs() > tol {
        failures.push(format!("class {index}: DP root {} vs R/2 {}", table.root(), 0.5 * r));
    }
    if table.max_sibling_gap() > 1.0 + 1e-12 {
        failures.push(format!("class {index}: sibling gap {}", table.max_sibling_gap()));
    }
    let oracle = FiniteErm::new(class.clone());
    let horizon = class.horizon();
    for len in 0..horizon {
        for bits in 0..1u32 << len {
            let prefix: Vec<bool> = (0..len).map(|t| bits >> t & 1 == 1).collect();
            let y_prefix: Vec<f64> = prefix.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
            let dp = prediction_to_pm1(dp_prediction(&table, &prefix)?);
            let enumerated = mf_exact_prediction(&oracle, &y_prefix)?;
            if (dp - enumerated).abs() > tol {
                failures.push(format!("class {index}, prefix {y_prefix:?}: DP {dp} vs enumeration {enumerated}"));
            }
        }
    }
    let cfg = GameConfig::new(horizon, 1.0, 1.0, 1.0, 0.1, 0)?;
    let transcript = play_expert_game(&mut mf.clone(), &mut Adversary::FixedSequence(y), class, &abs, &cfg)?;
    Ok(Verified { worst, rademacher: r, failures, transcript })
}

fn run_verify(spec: &ExperimentSpec) -> Result<RunOutput, CliError> {
    let n = spec.trials();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers(spec))
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    let results: Vec<Verified> = pool.install(|| {
        (0..n).into_par_iter().map(|i| verify_one(&verify_class(spec.seed, i)?, i)).collect::<Result<_, CliError>>()
    })?;
    let worst: Vec<f64> = results.iter().map(|v| v.worst).collect();
    let rs: Vec<f64> = results.iter().map(|v| v.rademacher).collect();
    let failed = results.iter().filter(|v| !v.failures.is_empty()).count();
    let (mean, se) = mean_stderr(&worst);
    let mut summary = Summary::new(Kind::Verify.as_str(), spec.seed, n);
    summary.mean_regret = Some(mean);
    summary.regret_stderr = Some(se);
    summary.rademacher_estimate = Some(mean_stderr(&rs).0);
    summary.bound_value = summary.rademacher_estimate;
    summary.bound_violation_fraction = Some(failed as f64 / n as f64);
    let mut results = results.into_iter();
    let first = results.next().expect("at least one trial");
    let mut failures = first.failures;
    failures.extend(results.flat_map(|v| v.failures));
    Ok(RunOutput { summary, transcript: Some(first.transcript), curve: None, failures })
}

/// Mean regret, its standard error and the high-probability bound at each
/// horizon, with the rest of `spec` unchanged.
pub fn emit_curve(spec: &ExperimentSpec, horizons: &[usize]) -> Result<Vec<CurvePoint>, CliError> {
    let kind = spec.kind()?;
    let mut points = Vec::with_capacity(horizons.len());
    for &t in horizons {
        let mut s = spec.at_horizon(t)?;
        s.horizons.clear();
        let out = run_game(&s, kind)?;
        let loss = loss_of(&s)?;
        let r = out.summary.rademacher_estimate.unwrap_or(0.0);
        points.push(CurvePoint {
            horizon: t,
            mean_regret: out.summary.mean_regret.unwrap_or(f64::NAN),
            stderr: out.summary.regret_stderr.unwrap_or(f64::NAN),
            bound: theorem3_bound(loss.rho(), s.bound_b, s.eta, t, s.delta, r)?,
        });
    }
    Ok(points)
}

/// Writes `transcript.csv`, `summary.json` and `curve.csv` (when present) into `dir`.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    if let Some(t) = &out.transcript {
        write_transcript(fs::File::create(dir.join("transcript.csv"))?, t)?;
    }
    fs::write(dir.join("summary.json"), out.summary.to_json())?;
    if let Some(c) = &out.curve {
        write_curve(fs::File::create(dir.join("curve.csv"))?, c)?;
    }
    Ok(())
}
