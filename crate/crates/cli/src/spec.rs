//! Experiment specifications: flat `key = value` files, `#` comments.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use playout_core::erm::PolaritySet;
use thiserror::Error;

/// A config problem, with the 1-based line it was found on when there is one.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl ConfigError {
    fn at(line: Option<usize>, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kind {
    Verify,
    Mf,
    MfStar,
    R2,
    Transductive,
    Cf,
    Rademacher,
}

impl Kind {
    pub const ALL: [Kind; 7] =
        [Kind::Verify, Kind::Mf, Kind::MfStar, Kind::R2, Kind::Transductive, Kind::Cf, Kind::Rademacher];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Verify => "verify",
            Kind::Mf => "mf",
            Kind::MfStar => "mf_star",
            Kind::R2 => "r2",
            Kind::Transductive => "transductive",
            Kind::Cf => "cf",
            Kind::Rademacher => "rademacher",
        }
    }

    fn is_game(self) -> bool {
        !matches!(self, Kind::Verify | Kind::Rademacher)
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown kind '{s}' (expected one of {})", names(&Kind::ALL.map(Kind::as_str))))
    }
}

fn names(v: &[&str]) -> String {
    v.join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossName {
    Absolute,
    Squared,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassSource {
    /// Rows given in the file.
    Inline(Vec<Vec<f64>>),
    /// `experts` rows drawn uniformly from `[-b, b]` with the run seed.
    Random { experts: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryName {
    WorstCase,
    Fixed,
    IidSigns,
    IidUniform,
    Lemma4,
}

impl AdversaryName {
    fn parse(s: &str) -> Result<Self, String> {
        Ok(match s {
            "worst_case" => Self::WorstCase,
            "fixed" => Self::Fixed,
            "iid_signs" => Self::IidSigns,
            "iid_uniform" => Self::IidUniform,
            "lemma4" => Self::Lemma4,
            _ => {
                return Err(format!(
                    "unknown adversary '{s}' (expected worst_case, fixed, iid_signs, iid_uniform or lemma4)"
                ))
            }
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::WorstCase => "worst_case",
            Self::Fixed => "fixed",
            Self::IidSigns => "iid_signs",
            Self::IidUniform => "iid_uniform",
            Self::Lemma4 => "lemma4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Fresh,
    Reused,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Random,
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: Option<Kind>,
    pub seed: u64,
    /// Defaults to 50 random classes for `verify` and 1 otherwise.
    pub trials: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub horizon: Option<usize>,
    pub bound_b: f64,
    pub eta: f64,
    pub delta: f64,
    pub loss: LossName,
    pub class: Option<ClassSource>,
    pub instances: Option<Vec<f64>>,
    pub polarity: PolaritySet,
    pub order: Order,
    pub n: Option<usize>,
    pub radius: Option<f64>,
    pub mode: Option<Mode>,
    pub adversary: Option<AdversaryName>,
    pub p_plus: f64,
    pub sequence: Option<Vec<f64>>,
    pub switch: Option<usize>,
    pub samples: usize,
    pub horizons: Vec<usize>,
    pub solver_tolerance: f64,
    /// Line of every key read from the file.
    lines: BTreeMap<String, usize>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            kind: None,
            seed: 0,
            trials: None,
            workers: None,
            out: None,
            horizon: None,
            bound_b: 1.0,
            eta: 1.0,
            delta: 0.1,
            loss: LossName::Absolute,
            class: None,
            instances: None,
            polarity: PolaritySet::Both,
            order: Order::Random,
            n: None,
            radius: None,
            mode: None,
            adversary: None,
            p_plus: 0.5,
            sequence: None,
            switch: None,
            samples: 10_000,
            horizons: Vec::new(),
            solver_tolerance: 1e-7,
            lines: BTreeMap::new(),
        }
    }
}

use Kind::*;

const GAMES: &[Kind] = &[Mf, MfStar, R2, Transductive, Cf];

/// Kinds each key applies to; `None` means every kind.
fn applies_to(key: &str) -> Option<&'static [Kind]> {
    match key {
        "kind" | "seed" | "trials" | "workers" | "out" => None,
        "horizon" => Some(&[Mf, MfStar, R2, Transductive, Rademacher]),
        "bound_b" => Some(&[Mf, MfStar, R2, Transductive, Cf, Rademacher]),
        "loss" | "adversary" | "horizons" => Some(GAMES),
        "eta" => Some(&[R2, Cf]),
        "delta" => Some(&[MfStar, R2, Transductive, Cf]),
        "class" | "experts" => Some(&[Mf, MfStar, R2, Rademacher]),
        "instances" | "polarity" => Some(&[Transductive]),
        "order" => Some(&[Transductive, Cf]),
        "n" | "radius" => Some(&[Cf, Rademacher]),
        "mode" => Some(&[MfStar, Transductive]),
        "p_plus" | "sequence" | "switch" => Some(GAMES),
        "samples" => Some(&[R2, Transductive, Cf, Rademacher]),
        "solver_tolerance" => Some(&[Cf]),
        _ => Some(&[]),
    }
}

fn parse_num<T: FromStr>(v: &str, what: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("'{v}' is not a valid {what}"))
}

fn parse_list<T: FromStr>(v: &str, what: &str) -> Result<Vec<T>, String> {
    v.split(',').map(|x| parse_num(x.trim(), what)).collect()
}

fn finite(x: f64, key: &str) -> Result<f64, String> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{key} must be finite"))
    }
}

impl ExperimentSpec {
    /// Parses a config file. Unknown keys, repeated keys and malformed
    /// values are errors; cross-key checks happen in [`Self::validate`].
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut spec = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::at(Some(line), format!("expected 'key = value', got '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(first) = spec.lines.get(key) {
                return Err(ConfigError::at(Some(line), format!("key '{key}' already set on line {first}")));
            }
            spec.set(key, value).map_err(|m| ConfigError::at(Some(line), m))?;
            spec.lines.insert(key.to_string(), line);
        }
        Ok(spec)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "kind" => self.kind = Some(v.parse()?),
            "seed" => self.seed = parse_num(v, "seed")?,
            "trials" => self.trials = Some(parse_num(v, "trial count")?),
            "workers" => self.workers = Some(parse_num(v, "worker count")?),
            "out" => self.out = Some(PathBuf::from(v)),
            "horizon" => self.horizon = Some(parse_num(v, "horizon")?),
            "bound_b" => self.bound_b = finite(parse_num(v, "number")?, key)?,
            "eta" => self.eta = finite(parse_num(v, "number")?, key)?,
            "delta" => self.delta = finite(parse_num(v, "number")?, key)?,
            "loss" => {
                self.loss = match v {
                    "absolute" => LossName::Absolute,
                    "squared" => LossName::Squared,
                    _ => return Err(format!("unknown loss '{v}' (expected absolute or squared)")),
                }
            }
            "class" => {
                let rows =
                    v.split(';').map(|row| parse_list::<f64>(row.trim(), "number")).collect::<Result<Vec<_>, _>>()?;
                self.class = Some(ClassSource::Inline(rows));
            }
            "experts" => {
                let experts = parse_num(v, "expert count")?;
                self.class = Some(ClassSource::Random { experts });
            }
            "instances" => self.instances = Some(parse_list(v, "number")?),
            "polarity" => {
                self.polarity = match v {
                    "both" => PolaritySet::Both,
                    "positive" => PolaritySet::Positive,
                    _ => return Err(format!("unknown polarity '{v}' (expected both or positive)")),
                }
            }
            "order" => {
                self.order = match v {
                    "random" => Order::Random,
                    "identity" => Order::Identity,
                    _ => return Err(format!("unknown order '{v}' (expected random or identity)")),
                }
            }
            "n" => self.n = Some(parse_num(v, "matrix side")?),
            "radius" => self.radius = Some(finite(parse_num(v, "number")?, key)?),
            "mode" => {
                self.mode = Some(match v {
                    "fresh" => Mode::Fresh,
                    "reused" => Mode::Reused,
                    "exact" => Mode::Exact,
                    _ => return Err(format!("unknown mode '{v}' (expected fresh, reused or exact)")),
                })
            }
            "adversary" => self.adversary = Some(AdversaryName::parse(v)?),
            "p_plus" => self.p_plus = finite(parse_num(v, "number")?, key)?,
            "sequence" => self.sequence = Some(parse_list(v, "number")?),
            "switch" => self.switch = Some(parse_num(v, "round")?),
            "samples" => self.samples = parse_num(v, "sample count")?,
            "horizons" => self.horizons = parse_list(v, "horizon")?,
            "solver_tolerance" => self.solver_tolerance = finite(parse_num(v, "number")?, key)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Line of `key` in the source file, if it came from one.
    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.lines.get(key).copied()
    }

    pub(crate) fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::at(self.line_of(key), message)
    }

    pub fn kind(&self) -> Result<Kind, ConfigError> {
        self.kind.ok_or_else(|| ConfigError::at(None, "no experiment kind given (config key 'kind' or --kind)"))
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(if self.kind == Some(Verify) { 50 } else { 1 })
    }

    pub fn adversary(&self) -> Result<AdversaryName, ConfigError> {
        let kind = self.kind()?;
        let allowed: &[AdversaryName] = match kind {
            Mf => &[AdversaryName::WorstCase, AdversaryName::Fixed, AdversaryName::IidSigns],
            MfStar | Transductive => &[AdversaryName::IidSigns, AdversaryName::Fixed],
            R2 => &[AdversaryName::IidSigns, AdversaryName::IidUniform, AdversaryName::Fixed],
            Cf => &[AdversaryName::IidUniform, AdversaryName::IidSigns, AdversaryName::Fixed, AdversaryName::Lemma4],
            Verify | Rademacher => &[],
        };
        let chosen = self.adversary.unwrap_or(allowed[0]);
        if !allowed.contains(&chosen) {
            return Err(self.error(
                "adversary",
                format!(
                    "adversary '{}' is not available for kind={} (expected {})",
                    chosen.as_str(),
                    kind.as_str(),
                    names(&allowed.iter().map(|a| a.as_str()).collect::<Vec<_>>())
                ),
            ));
        }
        Ok(chosen)
    }

    pub fn mode(&self) -> Result<Mode, ConfigError> {
        let mode = self.mode.unwrap_or(Mode::Fresh);
        if self.kind == Some(MfStar) && mode == Mode::Exact {
            return Err(
                self.error("mode", "mf_star plays fresh or reused playouts; use kind=mf for the exact forecaster")
            );
        }
        Ok(mode)
    }

    /// Cross-key checks that need no computation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let kind = self.kind()?;
        for key in self.lines.keys() {
            if let Some(kinds) = applies_to(key) {
                if !kinds.contains(&kind) {
                    return Err(self.error(key, format!("key '{key}' does not apply to kind={}", kind.as_str())));
                }
            }
        }
        if self.trials() == 0 {
            return Err(self.error("trials", "trials must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(self.error("workers", "workers must be at least 1"));
        }
        if !(self.bound_b > 0.0) {
            return Err(self.error("bound_b", "bound_b must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(self.error("delta", "delta must lie in (0, 1)"));
        }
        if !(self.eta > 0.0) {
            return Err(self.error("eta", "eta must be positive"));
        }
        if matches!(kind, Mf | MfStar | Transductive) {
            if self.bound_b != 1.0 {
                return Err(
                    self.error("bound_b", format!("kind={} plays ±1 outcomes and needs bound_b = 1", kind.as_str()))
                );
            }
            if self.loss != LossName::Absolute {
                return Err(self.error("loss", format!("kind={} is defined for absolute loss only", kind.as_str())));
            }
        }
        if kind.is_game() {
            let adversary = self.adversary()?;
            let needs = |key: &str, present: bool, wanted: AdversaryName| -> Result<(), ConfigError> {
                if present && adversary != wanted {
                    return Err(self.error(key, format!("key '{key}' needs adversary = {}", wanted.as_str())));
                }
                if !present && adversary == wanted && key == "sequence" {
                    return Err(self.error("adversary", "adversary 'fixed' needs a 'sequence'"));
                }
                Ok(())
            };
            needs("sequence", self.sequence.is_some(), AdversaryName::Fixed)?;
            needs("p_plus", self.line_of("p_plus").is_some(), AdversaryName::IidSigns)?;
            needs("switch", self.switch.is_some(), AdversaryName::Lemma4)?;
            if !(0.0..=1.0).contains(&self.p_plus) {
                return Err(self.error("p_plus", "p_plus must lie in [0, 1]"));
            }
            self.mode()?;
        }
        if kind == Rademacher && self.n.is_some() && self.class.is_some() {
            return Err(self.error("n", "give either a finite class or a matrix side n, not both"));
        }
        if self.radius.is_some_and(|r| !(r > 0.0)) {
            return Err(self.error("radius", "radius must be positive"));
        }
        if !(self.solver_tolerance > 0.0) {
            return Err(self.error("solver_tolerance", "solver_tolerance must be positive"));
        }
        if self.samples < 2 {
            return Err(self.error("samples", "samples must be at least 2"));
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) || self.horizons.contains(&0) {
            return Err(self.error("horizons", "horizons must be positive and strictly increasing"));
        }
        if let Some(ClassSource::Random { experts: 0 }) = self.class {
            return Err(self.error("experts", "experts must be at least 1"));
        }
        Ok(())
    }

    /// Copy at another horizon, for regret curves.
    pub fn at_horizon(&self, horizon: usize) -> Result<Self, ConfigError> {
        let kind = self.kind()?;
        let mut s = self.clone();
        match kind {
            Mf | MfStar | R2 => {
                if let Some(ClassSource::Inline(_)) = self.class {
                    return Err(
                        self.error("horizons", "regret curves need a generated class ('experts'), not an inline one")
                    );
                }
                s.horizon = Some(horizon);
            }
            Transductive => {
                if self.instances.is_some() {
                    return Err(self.error("horizons", "regret curves need generated instances; drop 'instances'"));
                }
                s.horizon = Some(horizon);
            }
            Cf => {
                let n = (horizon as f64).sqrt().round() as usize;
                if n * n != horizon {
                    return Err(self.error("horizons", format!("CF horizons must be square numbers, got {horizon}")));
                }
                s.n = Some(n);
                if self.line_of("radius").is_none() {
                    s.radius = None;
                }
            }
            Verify | Rademacher => return Err(self.error("horizons", "regret curves need a game kind")),
        }
        if s.sequence.is_some() {
            return Err(
                self.error("sequence", "a fixed sequence has a fixed horizon; use a random adversary for curves")
            );
        }
        Ok(s)
    }
}
