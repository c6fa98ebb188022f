//! `giurn` command line: closed forms, oracle solves and seeded Monte Carlo
//! campaigns, all written as CSV.
//!
//! Every flag may also come from a `--config` file of `key = value` lines
//! (keys are long flag names without dashes); command-line flags win.

mod commands;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::{
    cmd_analytic, cmd_nonconformist, cmd_oracle, cmd_simulate, cmd_single_urn, cmd_sweep_p, cmd_sweep_rho, Table,
};

use crate::error::Error;
use crate::simulate::Horizon;
use crate::weights::{WeightSequence, WeightTerm};

pub const EXIT_INVALID: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "giurn", version, about = "Generalized interacting urn models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Base seed; replica i uses stream (seed, i)
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: u64,
    /// Output file (standard output when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// File of `key = value` lines mirroring the flags
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form quantities at one p
    Analytic(AnalyticArgs),
    /// Truncated linear-solve brackets on q and r
    Oracle(OracleArgs),
    /// Monte Carlo fixation estimate for one parameter set
    Simulate(SimulateArgs),
    /// Fixation probability over a grid of p at rho = inf
    SweepP(SweepPArgs),
    /// Fixation estimates and AI-draw rates over a list of finite rho
    SweepRho(SweepRhoArgs),
    /// Law of the number of non-conforming urns (odd number of urns)
    Nonconformist(NonconformistArgs),
    /// Law of the first draws of a single two-color urn
    SingleUrn(SingleUrnArgs),
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct AnalyticArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub ell_max: u32,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct OracleArgs {
    #[arg(long)]
    pub p: f64,
    /// Truncation level L
    #[arg(long, default_value_t = 400)]
    pub levels: usize,
    #[arg(long, default_value_t = 20)]
    pub ell_max: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMode {
    Bracket,
    Ruin,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct SimulateArgs {
    #[arg(long)]
    pub p: f64,
    /// `inf` or a finite rho > 1
    #[arg(long, default_value = "inf", value_parser = parse_rho)]
    pub rho: Rho,
    #[arg(long, default_value_t = 2)]
    pub urns: usize,
    #[arg(long, default_value_t = 2)]
    pub colors: usize,
    /// `auto` or a number of steps
    #[arg(long, default_value = "auto", value_parser = parse_horizon)]
    pub horizon: Horizon,
    #[arg(long, value_enum, default_value_t = SimMode::Bracket)]
    pub mode: SimMode,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct SweepPArgs {
    #[arg(long, default_value_t = 0.0)]
    pub p_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub p_max: f64,
    #[arg(long, default_value_t = 51)]
    pub points: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct SweepRhoArgs {
    #[arg(long)]
    pub p: f64,
    /// Comma-separated finite rho values, ascending
    #[arg(long, default_value = "2,8,32,128,1024")]
    pub rho_list: String,
    #[arg(long, default_value = "auto", value_parser = parse_horizon)]
    pub horizon: Horizon,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PmfMode {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct NonconformistArgs {
    #[arg(long)]
    pub urns: u32,
    #[arg(long)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = PmfMode::Exact)]
    pub mode: PmfMode,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sampler {
    Direct,
    Rubin,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct SingleUrnArgs {
    /// `inf`, a classical rho, or `table:u@v,u@v,...`
    #[arg(long, default_value = "inf", value_parser = parse_weights)]
    pub weights: WeightSequence,
    #[arg(long, value_enum, default_value_t = Sampler::Rubin)]
    pub sampler: Sampler,
    /// Number of draws per trajectory
    #[arg(long, default_value_t = 4)]
    pub horizon: usize,
    #[command(flatten)]
    pub common: Common,
}

/// A rho value as typed, so it can be echoed back verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct Rho {
    pub text: String,
    pub weights: WeightSequence,
}

pub fn parse_rho(s: &str) -> Result<Rho, String> {
    let s = s.trim();
    let weights = if s == "inf" {
        WeightSequence::GeneralizedPower
    } else {
        let rho: f64 = s.parse().map_err(|_| format!("rho must be `inf` or a number, got `{s}`"))?;
        WeightSequence::classical(rho).map_err(|e| e.to_string())?
    };
    Ok(Rho { text: s.to_string(), weights })
}

pub fn parse_horizon(s: &str) -> Result<Horizon, String> {
    match s.trim() {
        "auto" => Ok(Horizon::default()),
        n => match n.parse::<u64>() {
            Ok(0) | Err(_) => Err(format!("horizon must be `auto` or a positive integer, got `{n}`")),
            Ok(n) => Ok(Horizon::Fixed(n)),
        },
    }
}

pub fn parse_weights(s: &str) -> Result<WeightSequence, String> {
    let s = s.trim();
    if let Some(body) = s.strip_prefix("table:") {
        let terms = body
            .split(',')
            .map(|item| {
                let (u, v) = item.split_once('@').ok_or_else(|| format!("table entry `{item}` is not u@v"))?;
                let u: f64 = u.trim().parse().map_err(|_| format!("bad magnitude `{u}`"))?;
                let v: f64 = v.trim().parse().map_err(|_| format!("bad exponent `{v}`"))?;
                WeightTerm::from_magnitude(u, v).map_err(|e| e.to_string())
            })
            .collect::<Result<Vec<_>, _>>()?;
        WeightSequence::table(terms).map_err(|e| e.to_string())
    } else {
        parse_rho(s).map(|r| r.weights)
    }
}

/// Splices `--config` file entries in front of the command-line flags so
/// that later (command-line) occurrences override them.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            path = args.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let mut injected = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected `key = value`", n + 1))?;
        let key = key.trim().replace('_', "-");
        if key == "config" {
            continue;
        }
        injected.push(format!("--{key}"));
        injected.push(value.trim().to_string());
    }
    // program name and subcommand come first
    let split = args.len().min(2);
    let mut out = args[..split].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[split..]);
    Ok(out)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded(_) | Error::Singular(_) => EXIT_BUDGET,
        _ => EXIT_INVALID,
    }
}

/// Executes a parsed command and returns its CSV table.
pub fn execute(command: &Command) -> crate::Result<Table> {
    match command {
        Command::Analytic(a) => cmd_analytic(a.p, a.ell_max),
        Command::Oracle(a) => cmd_oracle(a.p, a.levels, a.ell_max),
        Command::Simulate(a) => cmd_simulate(a),
        Command::SweepP(a) => cmd_sweep_p(a.p_min, a.p_max, a.points, a.common.replicas, a.common.seed),
        Command::SweepRho(a) => cmd_sweep_rho(a.p, &a.rho_list, a.common.replicas, a.horizon, a.common.seed),
        Command::Nonconformist(a) => cmd_nonconformist(a.urns, a.p, a.mode, a.common.replicas, a.common.seed),
        Command::SingleUrn(a) => cmd_single_urn(&a.weights, a.sampler, a.horizon, a.common.replicas, a.common.seed),
    }
}

fn common(command: &Command) -> &Common {
    match command {
        Command::Analytic(a) => &a.common,
        Command::Oracle(a) => &a.common,
        Command::Simulate(a) => &a.common,
        Command::SweepP(a) => &a.common,
        Command::SweepRho(a) => &a.common,
        Command::Nonconformist(a) => &a.common,
        Command::SingleUrn(a) => &a.common,
    }
}

/// Entry point shared by the binary and tests.
pub fn main_with_args(args: Vec<String>) -> ExitCode {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let table = match execute(&cli.command) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let sink: io::Result<Box<dyn Write>> = match &common(&cli.command).out {
        Some(path) => fs::File::create(path).map(|f| Box::new(io::BufWriter::new(f)) as Box<dyn Write>),
        None => Ok(Box::new(io::stdout().lock())),
    };
    match sink.and_then(|w| table.write_csv(w)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
