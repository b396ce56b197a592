use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crowdsense::cli::{budget_from, cmd_generate, cmd_oracle, cmd_run, cmd_sweep, parse_config_file, InputFiles};
use crowdsense::error::{Error, Result};
use crowdsense::ingest::SynthParams;
use crowdsense::model::{BudgetSpec, SimConfig};
use crowdsense::sim::SweepGrid;

#[derive(Parser)]
#[command(name = "crowdsense", version, about = "Budget-constrained crowd-sensing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic trace and social profiles
    Generate(GenerateArgs),
    /// Run one experiment and write report.csv
    Run(RunArgs),
    /// Run a parameter sweep and write sweep_report.csv
    Sweep(SweepArgs),
    /// Compare selectors against the exhaustive hindsight oracle
    Oracle(RunArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    internal: u32,
    #[arg(long)]
    external: u32,
    #[arg(long)]
    groups: u32,
    #[arg(long)]
    steps: u32,
    #[arg(long, default_value_t = 60)]
    tau: i64,
    #[arg(long, default_value_t = 12)]
    locations: u32,
    #[arg(long, default_value_t = 0.8)]
    p_detect: f64,
    #[arg(long, default_value_t = 0.2)]
    p_move: f64,
    #[arg(long, default_value_t = 0.5)]
    friendship_prob: f64,
    #[arg(long, default_value_t = 2)]
    interests_per_device: u32,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    contacts: PathBuf,
    #[arg(long)]
    devices: PathBuf,
    #[arg(long)]
    friends: Option<PathBuf>,
    #[arg(long)]
    interests: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    inputs: InputArgs,
    /// Flat key=value config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    tau: Option<i64>,
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    bootstrap: Option<String>,
    /// Budget as an absolute device count
    #[arg(long)]
    n: Option<u32>,
    /// Budget as a percentage of the internal population
    #[arg(long)]
    n_percent: Option<f64>,
    #[arg(long)]
    k_fraction: Option<f64>,
    /// Sensing window length in seconds
    #[arg(long)]
    ts: Option<i64>,
    /// Decision window length in seconds (bookkeeping only)
    #[arg(long)]
    td: Option<i64>,
    #[arg(long)]
    rounds: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Epoch offset of round 0 in seconds
    #[arg(long)]
    start: Option<i64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated ts values to sweep
    #[arg(long, value_delimiter = ',')]
    ts_list: Vec<i64>,
    /// Comma-separated budget percentages to sweep
    #[arg(long, value_delimiter = ',')]
    n_percent_list: Vec<f64>,
    /// Comma-separated algorithms to sweep
    #[arg(long, value_delimiter = ',')]
    algorithm_list: Vec<String>,
    /// Comma-separated bootstraps to sweep
    #[arg(long, value_delimiter = ',')]
    bootstrap_list: Vec<String>,
    /// Comma-separated seeds to sweep
    #[arg(long, value_delimiter = ',')]
    seed_list: Vec<u64>,
}

fn get<T: std::str::FromStr>(
    file: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>> {
    match file.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidConfig(format!("bad value {v:?} for config key {key}"))),
    }
}

/// Merge flags over the optional config file into a SimConfig and tau.
fn resolve_run_args(args: &RunArgs) -> Result<(InputFiles, SimConfig)> {
    let file = match &args.config {
        Some(p) => parse_config_file(&std::fs::read_to_string(p)?)?,
        None => BTreeMap::new(),
    };
    let n = args.n.or(get(&file, "n")?);
    let n_percent = args.n_percent.or(get(&file, "n_percent")?);
    let budget = budget_from(n, n_percent)?;
    let tau = args.tau.or(get(&file, "tau")?).unwrap_or(60);
    let config = SimConfig {
        ts_seconds: args
            .ts
            .or(get(&file, "ts")?)
            .ok_or_else(|| Error::InvalidConfig("--ts is required".into()))?,
        td_seconds: args.td.or(get(&file, "td")?).unwrap_or(0),
        budget,
        k_fraction: args.k_fraction.or(get(&file, "k_fraction")?).unwrap_or(0.5),
        rounds: args
            .rounds
            .or(get(&file, "rounds")?)
            .ok_or_else(|| Error::InvalidConfig("--rounds is required".into()))?,
        algorithm: args
            .algorithm
            .clone()
            .or(file.get("algorithm").cloned())
            .unwrap_or_else(|| "hcontext".to_string()),
        bootstrap: args
            .bootstrap
            .clone()
            .or(file.get("bootstrap").cloned())
            .unwrap_or_else(|| "random".to_string()),
        seed: args.seed.or(get(&file, "seed")?).unwrap_or(0),
        start_time_s: args.start.or(get(&file, "start")?).unwrap_or(0),
    };
    let files = InputFiles {
        contacts: args.inputs.contacts.clone(),
        devices: args.inputs.devices.clone(),
        friends: args.inputs.friends.clone(),
        interests: args.inputs.interests.clone(),
        tau_s: tau,
    };
    Ok((files, config))
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => {
            let params = SynthParams {
                n_internal: a.internal,
                n_external: a.external,
                n_groups: a.groups,
                steps: a.steps,
                tau_s: a.tau,
                p_detect: a.p_detect,
                p_move: a.p_move,
                n_locations: a.locations,
                friendship_within_group: a.friendship_prob,
                interests_per_device: a.interests_per_device,
            };
            cmd_generate(&params, a.seed, &a.out)
        }
        Command::Run(a) => {
            let (files, config) = resolve_run_args(&a)?;
            cmd_run(&files, &config, &a.out).map(|_| ())
        }
        Command::Sweep(a) => {
            let (files, base) = resolve_run_args(&a.run)?;
            let grid = SweepGrid {
                ts_seconds: a.ts_list,
                budgets: a
                    .n_percent_list
                    .iter()
                    .map(|p| BudgetSpec::Fraction(p / 100.0))
                    .collect(),
                algorithms: a.algorithm_list,
                bootstraps: a.bootstrap_list,
                seeds: a.seed_list,
            };
            cmd_sweep(&files, &base, &grid, &a.run.out)
        }
        Command::Oracle(a) => {
            let (files, config) = resolve_run_args(&a)?;
            cmd_oracle(&files, &config, &a.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
