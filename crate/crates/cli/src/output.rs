//! CSV and JSON writers. Every real is printed like C's `%.12g`, so output
//! does not depend on locale or on the shortest-round-trip printer.

use std::fmt::Write as _;
use std::io::Write;

use playout_core::Transcript;

use crate::CliError;

pub const TRANSCRIPT_HEADER: [&str; 9] =
    ["round", "prediction", "outcome", "loss", "r_t", "z_t", "cum_loss", "cum_best", "regret"];

pub const CURVE_HEADER: [&str; 4] = ["T", "mean_regret", "stderr", "bound"];

/// `x` with 12 significant digits, trailing zeros removed, `%g` style.
pub fn fmt_g(x: f64) -> String {
    const P: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    // the exponent after rounding to P digits decides the style
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..P).contains(&exp) {
        let fixed = format!("{:.*}", (P - 1 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

pub fn write_transcript<W: Write>(out: W, transcript: &Transcript<f64>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRANSCRIPT_HEADER)?;
    for r in &transcript.rows {
        w.write_record([
            r.round.to_string(),
            fmt_g(r.prediction),
            fmt_g(r.outcome),
            fmt_g(r.loss),
            opt(r.r_t),
            opt(r.z_t),
            fmt_g(r.cum_loss),
            fmt_g(r.cum_best),
            fmt_g(r.regret),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub horizon: usize,
    pub mean_regret: f64,
    pub stderr: f64,
    pub bound: f64,
}

pub fn write_curve<W: Write>(out: W, points: &[CurvePoint]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_HEADER)?;
    for p in points {
        w.write_record([p.horizon.to_string(), fmt_g(p.mean_regret), fmt_g(p.stderr), fmt_g(p.bound)])?;
    }
    w.flush()?;
    Ok(())
}

/// Run summary; `None` fields are written as `null`.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub kind: String,
    pub seed: u64,
    pub trials: usize,
    pub mean_regret: Option<f64>,
    pub regret_stderr: Option<f64>,
    pub rademacher_estimate: Option<f64>,
    pub bound_value: Option<f64>,
    pub bound_violation_fraction: Option<f64>,
    /// Oracle calls per trial.
    pub erm_calls: Option<u64>,
    pub wall_time_s: Option<f64>,
    pub solver_tolerance: Option<f64>,
}

impl Summary {
    pub fn new(kind: &str, seed: u64, trials: usize) -> Self {
        Self {
            kind: kind.to_string(),
            seed,
            trials,
            mean_regret: None,
            regret_stderr: None,
            rademacher_estimate: None,
            bound_value: None,
            bound_violation_fraction: None,
            erm_calls: None,
            wall_time_s: None,
            solver_tolerance: None,
        }
    }

    /// Pretty-printed JSON with a fixed key order.
    pub fn to_json(&self) -> String {
        let num = |x: Option<f64>| match x {
            Some(v) if v.is_finite() => fmt_g(v),
            _ => "null".to_string(),
        };
        let fields = [
            ("kind", format!("\"{}\"", self.kind)),
            ("seed", self.seed.to_string()),
            ("trials", self.trials.to_string()),
            ("mean_regret", num(self.mean_regret)),
            ("regret_stderr", num(self.regret_stderr)),
            ("rademacher_estimate", num(self.rademacher_estimate)),
            ("bound_value", num(self.bound_value)),
            ("bound_violation_fraction", num(self.bound_violation_fraction)),
            ("erm_calls", self.erm_calls.map_or("null".to_string(), |c| c.to_string())),
            ("wall_time_s", num(self.wall_time_s)),
            ("solver_tolerance", num(self.solver_tolerance)),
        ];
        let mut s = String::from("{\n");
        for (i, (k, v)) in fields.iter().enumerate() {
            let comma = if i + 1 < fields.len() { "," } else { "" };
            writeln!(s, "  \"{k}\": {v}{comma}").expect("write to string");
        }
        s.push_str("}\n");
        s
    }
}
