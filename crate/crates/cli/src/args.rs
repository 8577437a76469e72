use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug, Clone)]
#[command(
    name = "leeyang",
    version,
    about = "Lee-Yang zeros of nonlinear collective-spin models and their detection with a probe qubit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads for grid sweeps (default: all cores).
    #[arg(long, global = true, env = "LEEYANG_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "command", content = "args", rename_all = "lowercase")]
pub enum Command {
    /// Zero distributions (and norm curves with --norms).
    #[command(allow_negative_numbers = true)]
    Zeros(RunArgs),
    /// Amplitude |Z~/Z| over lambda*t, or a (beta*h, lambda*t) heatmap.
    #[command(allow_negative_numbers = true)]
    Scan(RunArgs),
    /// Joint scan with refined hits matched against the solved zeros.
    #[command(allow_negative_numbers = true)]
    Detect(RunArgs),
    /// Quantum Fisher information sweeps or at-zero values.
    #[command(allow_negative_numbers = true)]
    Qfim(RunArgs),
    /// Bisection for the even-k unit-circle threshold in beta*gamma.
    #[command(allow_negative_numbers = true)]
    Critical(RunArgs),
    /// Oracle cross-checks and theorem suites.
    #[command(allow_negative_numbers = true)]
    Verify(RunArgs),
    /// Summary of one model: zeros, theorem checks and amplitude minimum.
    #[command(allow_negative_numbers = true)]
    Report(RunArgs),
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Zeros(a)
            | Command::Scan(a)
            | Command::Detect(a)
            | Command::Qfim(a)
            | Command::Critical(a)
            | Command::Verify(a)
            | Command::Report(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Time,
    BetaH,
    BetaGamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QfimMode {
    Exact,
    ApproxMixed,
    ApproxPure,
}

/// `START:END` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub start: f64,
    pub end: f64,
}

/// `START:END:STEP` (for `--beta-gamma-sweep`) or `START:END:POINTS`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sweep {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let h = (self.end - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.start + h * i as f64).collect()
    }
}

fn parse_fields(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let fields: Vec<&str> = s.split(':').collect();
    if fields.len() != n {
        return Err(format!("expected {n} ':'-separated numbers, got '{s}'"));
    }
    fields
        .iter()
        .map(|f| f.trim().parse::<f64>().map_err(|e| format!("'{f}': {e}")))
        .collect()
}

pub fn parse_range(s: &str) -> Result<Range, String> {
    let v = parse_fields(s, 2)?;
    if !(v[1] >= v[0]) {
        return Err(format!("range end must not be below start in '{s}'"));
    }
    Ok(Range {
        start: v[0],
        end: v[1],
    })
}

pub fn parse_step_sweep(s: &str) -> Result<Sweep, String> {
    let v = parse_fields(s, 3)?;
    let (start, end, step) = (v[0], v[1], v[2]);
    if !(step > 0.0) || !(end >= start) {
        return Err(format!("need START <= END and STEP > 0 in '{s}'"));
    }
    let count = ((end - start) / step).round() as usize + 1;
    Ok(Sweep { start, end, count })
}

pub fn parse_point_sweep(s: &str) -> Result<Sweep, String> {
    let v = parse_fields(s, 3)?;
    let count = v[2];
    if !(count >= 1.0) || count.fract() != 0.0 || !(v[1] >= v[0]) {
        return Err(format!("need START <= END and an integer POINTS >= 1 in '{s}'"));
    }
    Ok(Sweep {
        start: v[0],
        end: v[1],
        count: count as usize,
    })
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RunArgs {
    /// Number of spins N.
    #[arg(long, default_value_t = 4)]
    pub spins: usize,

    /// Nonlinearity k.
    #[arg(long, default_value_t = 4)]
    pub nonlinearity: u32,

    /// beta*gamma; repeatable (default 1.0).
    #[arg(long = "beta-gamma")]
    pub beta_gamma: Vec<f64>,

    /// Extra beta*gamma values as START:END:STEP.
    #[arg(long, value_parser = parse_step_sweep, allow_hyphen_values = true)]
    pub beta_gamma_sweep: Option<Sweep>,

    /// beta*h for time traces and single-point evaluations.
    #[arg(long, default_value_t = 0.0)]
    pub beta_h: f64,

    /// beta*h scan range as LOW:HIGH (detect defaults to -20:20).
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub beta_h_range: Option<Range>,

    #[arg(long, default_value_t = 801)]
    pub beta_h_points: usize,

    /// Grid points over lambda*t in [0, pi].
    #[arg(long, default_value_t = 2001)]
    pub lambda_t_points: usize,

    /// Amplitude threshold for hits.
    #[arg(long, default_value_t = 1e-3)]
    pub threshold: f64,

    /// Root-solver tolerance.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Seed for the root solver's restart schedule.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// qfim: closed forms at every zero.
    #[arg(long)]
    pub at_zeros: bool,

    /// zeros: per-zero norms versus beta*gamma.
    #[arg(long)]
    pub norms: bool,

    /// verify: run only the suite for theorem 1, 2, 3 or 4.
    #[arg(long)]
    pub theorem: Option<u8>,

    /// Interaction time t.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,

    /// Coupling lambda.
    #[arg(long, default_value_t = 0.7)]
    pub lambda: f64,

    /// Inverse temperature beta.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,

    /// Probe frequency omega0.
    #[arg(long, default_value_t = 0.0)]
    pub omega0: f64,

    /// qfim: swept parameter.
    #[arg(long, value_enum)]
    pub sweep: Option<SweepAxis>,

    /// qfim: sweep as START:END:POINTS.
    #[arg(long, value_parser = parse_point_sweep, allow_hyphen_values = true)]
    pub sweep_range: Option<Sweep>,

    /// qfim: exact expressions or small-beta*gamma forms.
    #[arg(long, value_enum, default_value_t = QfimMode::Exact)]
    pub branch: QfimMode,

    /// critical: beta*gamma bracket LOW:HIGH.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub bracket: Option<Range>,
}

impl RunArgs {
    /// `--beta-gamma` values followed by the sweep, or `[1.0]`.
    pub fn beta_gammas(&self) -> Vec<f64> {
        let mut v = self.beta_gamma.clone();
        if let Some(s) = &self.beta_gamma_sweep {
            v.extend(s.values());
        }
        if v.is_empty() {
            v.push(1.0);
        }
        v
    }
}
