//! Command-line front end for the reliability engine: unit-aware parameter
//! parsing, N/M sweeps, and plot-ready CSV on standard output.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use raidrel::{ModelKind, RaidConfig};

mod commands;
mod config_file;
mod sweep;
mod units;

use config_file::FileValues;
use sweep::parse_u32_sweep;
use units::{parse_duration_years, parse_rate_per_year};

/// Failures split by exit code: 2 for flag and validation problems, 3 for
/// numerical ones.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(raidrel::Error),
}

impl From<raidrel::Error> for CliError {
    fn from(e: raidrel::Error) -> Self {
        match e {
            raidrel::Error::InvalidConfig(_)
            | raidrel::Error::UnknownModel(_)
            | raidrel::Error::UnsupportedModel(_)
            | raidrel::Error::InsufficientCheckDrives => CliError::Usage(e.to_string()),
            other => CliError::Numeric(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numeric(raidrel::Error::InvalidConfig(format!("i/o error: {e}")))
    }
}

#[derive(Parser)]
#[command(
    name = "raidrel",
    about = "Reliability of N+M RAID arrays: probability of data loss and mean time to data loss",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Probability of data loss by time t over an N/M sweep
    Pdl(PdlArgs),
    /// Mean time to data loss and variance, by every applicable method
    Mttdl(MttdlArgs),
    /// Monte Carlo estimates of the same quantities
    Simulate(SimulateArgs),
    /// State-occupancy trace of the delayed-repair models
    DelayTrace(DelayTraceArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Model: no-repair, individual, simultaneous, imperfect, sector,
    /// sector-imperfect, delay-naive, delay-rebuild
    #[arg(long)]
    model: Option<String>,

    /// Data drives N: single value, inclusive range a..b, or comma list
    #[arg(long)]
    n: Option<String>,

    /// Check drives M: single value, inclusive range a..b, or comma list
    #[arg(long)]
    m: Option<String>,

    /// Drive failure rate, per year or 1/<duration> (e.g. 1/10y)
    #[arg(long)]
    lambda: Option<String>,

    /// Repair rate, per year or 1/<duration> (e.g. 1/6h)
    #[arg(long)]
    mu: Option<String>,

    /// Probability that a service event damages a working drive
    #[arg(long)]
    p: Option<String>,

    /// Sector-error rate per drive, per year or 1/<duration>
    #[arg(long)]
    lambda_s: Option<String>,

    /// Scrub rate, per year or 1/<duration>
    #[arg(long)]
    mu_s: Option<String>,

    /// Rebuild delay, duration with h/d/w/y suffix (e.g. 6h)
    #[arg(long = "h")]
    delay: Option<String>,

    /// Config file of key = value lines; explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,

    /// Take every number verbatim, without unit conversion
    #[arg(long)]
    raw_units: bool,

    /// Worker threads for sweep evaluation (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,

    /// Write CSV to this file instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PdlArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Evaluation time, duration (default 5y)
    #[arg(long)]
    t: Option<String>,
}

#[derive(Args)]
struct MttdlArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Also compute the reliability-integral method (slower)
    #[arg(long)]
    integral: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Evaluation time, duration (default 5y)
    #[arg(long)]
    t: Option<String>,

    /// Number of Monte Carlo trials
    #[arg(long, default_value_t = 100_000)]
    trials: u64,

    /// Random seed
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Run every trial to data loss and estimate the mean time to it
    /// (default: censor at t and estimate only the loss probability)
    #[arg(long)]
    ttdl: bool,
}

#[derive(Args)]
struct DelayTraceArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// End of the trace, duration (default 5y)
    #[arg(long)]
    t_end: Option<String>,

    /// Integration step, duration (default: delay/64)
    #[arg(long)]
    dt: Option<String>,

    /// Report the number of local extrema in q0 on standard error
    #[arg(long)]
    oscillation_check: bool,
}

/// Everything a command needs after flags, config file, and defaults have
/// been merged.
pub struct Resolved {
    pub kind: ModelKind,
    pub ns: Vec<u32>,
    pub ms: Vec<u32>,
    pub base: RaidConfig,
    pub raw: bool,
}

impl Resolved {
    /// The configuration at one sweep point.
    pub fn at(&self, n: u32, m: u32) -> RaidConfig {
        let mut cfg = self.base.clone();
        cfg.n_data = n;
        cfg.m_check = m;
        cfg
    }
}

fn pick(flag: &Option<String>, file: &Option<String>) -> Option<String> {
    flag.clone().or_else(|| file.clone())
}

fn resolve(
    common: &CommonArgs,
    default_model: Option<&str>,
    default_n: &str,
    default_m: &str,
) -> Result<Resolved, CliError> {
    let file = match &common.config {
        Some(path) => config_file::load_config(path).map_err(CliError::Usage)?,
        None => FileValues::default(),
    };
    let raw = common.raw_units;

    let model = pick(&common.model, &file.model)
        .or_else(|| default_model.map(str::to_string))
        .ok_or_else(|| CliError::Usage("missing --model".into()))?;
    let kind: ModelKind = model.parse().map_err(|e: raidrel::Error| CliError::Usage(e.to_string()))?;

    let ns = parse_u32_sweep(&pick(&common.n, &file.n).unwrap_or_else(|| default_n.to_string()))
        .map_err(CliError::Usage)?;
    let ms = parse_u32_sweep(&pick(&common.m, &file.m).unwrap_or_else(|| default_m.to_string()))
        .map_err(CliError::Usage)?;

    let mut base = RaidConfig::new(1, 1);
    if let Some(v) = pick(&common.lambda, &file.lambda) {
        base.lambda = parse_rate_per_year(&v, raw).map_err(CliError::Usage)?;
    }
    if let Some(v) = pick(&common.mu, &file.mu) {
        base.mu = parse_rate_per_year(&v, raw).map_err(CliError::Usage)?;
    }
    if let Some(v) = pick(&common.p, &file.p) {
        base.p = v
            .parse()
            .map_err(|_| CliError::Usage(format!("cannot parse p value '{v}'")))?;
    }
    if let Some(v) = pick(&common.lambda_s, &file.lambda_s) {
        base.lambda_s = parse_rate_per_year(&v, raw).map_err(CliError::Usage)?;
    }
    if let Some(v) = pick(&common.mu_s, &file.mu_s) {
        base.mu_s = parse_rate_per_year(&v, raw).map_err(CliError::Usage)?;
    }
    if let Some(v) = pick(&common.delay, &file.h) {
        base.h = parse_duration_years(&v, raw).map_err(CliError::Usage)?;
    }
    if let Some(v) = &file.horizon {
        base.horizon = parse_duration_years(v, raw).map_err(CliError::Usage)?;
    }

    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .ok();
    }

    Ok(Resolved {
        kind,
        ns,
        ms,
        base,
        raw,
    })
}

fn parse_time(
    flag: &Option<String>,
    raw: bool,
    fallback: f64,
) -> Result<f64, CliError> {
    match flag {
        Some(v) => {
            let t = parse_duration_years(v, raw).map_err(CliError::Usage)?;
            if !(t > 0.0) || !t.is_finite() {
                return Err(CliError::Usage(format!("time '{v}' must be positive")));
            }
            Ok(t)
        }
        None => Ok(fallback),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Pdl(args) => {
            let mut r = resolve(&args.common, None, "1..64", "1")?;
            r.base.horizon = parse_time(&args.t, r.raw, r.base.horizon)?;
            let mut out = commands::make_writer(&args.common.out)?;
            commands::run_pdl(&r, &mut out)
        }
        Cmd::Mttdl(args) => {
            let r = resolve(&args.common, None, "1..64", "1")?;
            let mut out = commands::make_writer(&args.common.out)?;
            commands::run_mttdl(&r, args.integral, &mut out)
        }
        Cmd::Simulate(args) => {
            let mut r = resolve(&args.common, None, "4", "1")?;
            r.base.horizon = parse_time(&args.t, r.raw, r.base.horizon)?;
            if args.trials < 1 {
                return Err(CliError::Usage("--trials must be at least 1".into()));
            }
            let mut out = commands::make_writer(&args.common.out)?;
            commands::run_simulate(&r, args.trials, args.seed, args.ttdl, &mut out)
        }
        Cmd::DelayTrace(args) => {
            let r = resolve(&args.common, Some("delay-naive"), "1", "1")?;
            let t_end = parse_time(&args.t_end, r.raw, r.base.horizon)?;
            let dt = match &args.dt {
                Some(v) => Some(parse_time(&Some(v.clone()), r.raw, 0.0)?),
                None => None,
            };
            let mut out = commands::make_writer(&args.common.out)?;
            commands::run_delay_trace(&r, t_end, dt, args.oscillation_check, &mut out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
