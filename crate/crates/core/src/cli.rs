//! Command-line front end: `validate`, `run`, `compare` and `report`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid config or arguments,
//! 3 trace file missing or unreadable.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::experiment::{self, ExperimentSpec, SweepAxis};
use crate::model::{PolicyName, SimConfig};
use crate::workload::{self, Trace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_TRACE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "brownout-sim", version, about = "Brownout energy-management simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a config file and list every violated rule.
    Validate(ConfigArgs),
    /// Simulate one config and write result.json and intervals.csv.
    Run(RunArgs),
    /// Sweep policies and parameters and write a comparison table.
    Compare(CompareArgs),
    /// Rebuild the comparison table of an earlier sweep.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Trace CSV, overriding the config's path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub base: ConfigArgs,
    #[arg(long, value_parser = parse_policy)]
    pub policy: Option<PolicyName>,
    #[arg(long = "u-threshold")]
    pub u_threshold: Option<f64>,
    #[arg(long = "optional-pct")]
    pub optional_pct: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub base: ConfigArgs,
    /// Policies to compare, comma separated.
    #[arg(long, value_parser = parse_policy, value_delimiter = ',')]
    pub policy: Vec<PolicyName>,
    #[arg(long = "u-threshold", value_delimiter = ',')]
    pub u_threshold: Vec<f64>,
    #[arg(long = "optional-pct", value_delimiter = ',')]
    pub optional_pct: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory of an earlier `compare`.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn parse_policy(s: &str) -> Result<PolicyName, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure carrying the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

fn invalid(err: Error) -> Failure {
    match err {
        Error::InvalidConfig(v) => Failure::new(
            EXIT_INVALID,
            v.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"),
        ),
        e => Failure::new(EXIT_INVALID, e.to_string()),
    }
}

fn failure(err: Error) -> Failure {
    match err {
        e @ Error::InvalidConfig(_) => invalid(e),
        e => Failure::new(EXIT_FAILURE, e.to_string()),
    }
}

fn load_config(args: &ConfigArgs) -> Result<SimConfig, Failure> {
    let mut config = SimConfig::load(&args.config).map_err(invalid)?;
    if let Some(trace) = &args.trace {
        config.trace.path = std::env::current_dir()
            .map(|d| d.join(trace))
            .unwrap_or_else(|_| trace.clone());
    }
    if let Some(scale) = args.scale {
        config.trace.scale = scale;
    }
    if let Some(seed) = args.seed {
        config.policy.seed = seed;
    }
    Ok(config)
}

fn check(config: &SimConfig) -> Result<(), Failure> {
    let violations = config.validate();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(invalid(Error::InvalidConfig(violations)))
    }
}

fn load_trace(config: &SimConfig) -> Result<Trace, Failure> {
    let path = config.trace_path();
    workload::load_trace(&path, config.trace.scale, config.trace.interval_seconds).map_err(|e| match e {
        Error::Io { .. } => Failure::new(EXIT_TRACE, e.to_string()),
        e => Failure::new(EXIT_TRACE, format!("{}: {e}", path.display())),
    })
}

fn validate(args: &ConfigArgs) -> Result<String, Failure> {
    let config = load_config(args)?;
    check(&config)?;
    Ok(format!("{}: ok", args.config.display()))
}

fn run(args: &RunArgs) -> Result<String, Failure> {
    let mut config = load_config(&args.base)?;
    if let Some(policy) = args.policy {
        config.policy_name = policy;
    }
    if let Some(u) = args.u_threshold {
        config.policy.overloaded_threshold = u;
    }
    check(&config)?;
    if let Some(pct) = args.optional_pct {
        if !(0.0..=0.5).contains(&pct) {
            return Err(Failure::new(EXIT_INVALID, "  policy.optional_util_pct: must lie in [0, 0.5]"));
        }
        config.set_optional_pct(pct).map_err(invalid)?;
    }
    let trace = load_trace(&config)?;
    let result = experiment::run_single(&config, &trace, &args.out).map_err(failure)?;
    let mut summary = format!(
        "{} on {} hosts: {:.3} kWh, OTR {:.1}%",
        result.policy,
        result.fleet_size,
        result.energy_kwh,
        result.otr_mean * 100.0
    );
    if let Some(avg) = result.avg_response_ms {
        summary += &format!(", avg response {avg:.1} ms");
    }
    if let Some(s) = result.slavr {
        summary += &format!(", SLA violations {:.3}%", s * 100.0);
    }
    summary += &format!("\nwrote {}", args.out.display());
    Ok(summary)
}

fn compare(args: &CompareArgs) -> Result<String, Failure> {
    let config = load_config(&args.base)?;
    check(&config)?;
    let mut axes = Vec::new();
    if !args.policy.is_empty() {
        axes.push(SweepAxis::PolicyName(args.policy.clone()));
    }
    if !args.u_threshold.is_empty() {
        axes.push(SweepAxis::OverloadedThreshold(args.u_threshold.clone()));
    }
    if !args.optional_pct.is_empty() {
        axes.push(SweepAxis::OptionalUtilPct(args.optional_pct.clone()));
    }
    let spec = ExperimentSpec {
        base_config: args.base.config.clone(),
        axes,
        repetitions: args.reps,
        out_dir: args.out.clone(),
    };
    let violations = spec.validate();
    if !violations.is_empty() {
        return Err(invalid(Error::InvalidConfig(violations)));
    }
    let trace = load_trace(&config)?;
    let rows = experiment::run_experiment(&spec, &config, &trace).map_err(failure)?;
    Ok(experiment::summary_table(&rows))
}

fn report(args: &ReportArgs) -> Result<String, Failure> {
    let rows = experiment::report(&args.out).map_err(failure)?;
    experiment::write_summary(&args.out, &rows).map_err(failure)?;
    Ok(experiment::summary_table(&rows))
}

/// Runs a parsed command, returning its stdout text.
pub fn execute(cli: &Cli) -> Result<String, Failure> {
    match &cli.command {
        Command::Validate(a) => validate(a),
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
        Command::Report(a) => report(a),
    }
}

/// Parses `args`, runs the command, prints its output and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            print!("{out}");
            if !out.ends_with('\n') {
                println!();
            }
            EXIT_OK
        }
        Err(f) => {
            eprintln!("error:\n{}", f.message);
            f.code
        }
    }
}
