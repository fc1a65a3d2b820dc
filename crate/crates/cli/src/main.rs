//! `shelfqaoa`: batch driver for the shelf allocation QAOA toolkit.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 the instance is
//! too large to simulate or enumerate.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{EstimatorKind, RunConfig};
use shelfqaoa::strategies::{PrefixSource, Strategy};

#[derive(Parser, Debug)]
#[command(
    name = "shelfqaoa",
    version,
    about = "Warehouse shelf allocation with QAOA"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate every bitstring and report the ground states.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Scan the single-layer energy landscape on a grid.
    Landscape {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = std::f64::consts::TAU)]
        gamma_max: f64,
        #[arg(long, default_value_t = std::f64::consts::TAU)]
        beta_max: f64,
        #[arg(long, default_value_t = 201)]
        gamma_points: usize,
        #[arg(long, default_value_t = 201)]
        beta_points: usize,
    },
    /// Optimize QAOA angles with the configured strategy.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Qubit and gate counts for a uniform instance size.
    Estimate {
        #[arg(long)]
        shelves: usize,
        #[arg(long)]
        products: usize,
        /// Capacity of every shelf.
        #[arg(long)]
        capacity: u32,
        #[arg(long, default_value_t = 1)]
        layers: usize,
        /// Also write `estimate.json` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a top-k JSON report written by `spectrum`.
    Report {
        /// Path to `topk.json`.
        input: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Instance JSON file.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Use the per-product capacity penalty instead of the per-shelf one.
    #[arg(long)]
    fc_literal: bool,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<Strategy>,
    #[arg(long)]
    p_max: Option<usize>,
    /// Starts (multistart) or chains (recursive).
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long, value_enum)]
    estimator: Option<EstimatorKind>,
    #[arg(long)]
    shots: Option<usize>,
    /// Re-evaluate the best angles under depolarizing noise.
    #[arg(long)]
    noise: bool,
    #[arg(long)]
    p1: Option<f64>,
    #[arg(long)]
    p2: Option<f64>,
    #[arg(long)]
    trajectories: Option<usize>,
    /// Recursive chains freeze their own previous optimum instead of the best one.
    #[arg(long)]
    own_chain: bool,
    #[arg(long)]
    max_evals: Option<usize>,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    match s {
        "multistart" => Ok(Strategy::Multistart),
        "recursive" => Ok(Strategy::Recursive),
        "single" => Ok(Strategy::Single),
        _ => Err(format!(
            "unknown strategy {s:?} (multistart, recursive, single)"
        )),
    }
}

fn resolve(common: &Common) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(p) = &common.instance {
        cfg.instance = Some(p.clone());
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    cfg.fc_literal |= common.fc_literal;
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(cfg)
}

fn apply_solve(cfg: &mut RunConfig, a: &SolveArgs) {
    if let Some(s) = a.strategy {
        cfg.strategy = s;
    }
    if let Some(p) = a.p_max {
        cfg.p_max = p;
    }
    if let Some(r) = a.runs {
        cfg.runs = r;
    }
    if let Some(e) = a.estimator {
        cfg.estimator = e;
    }
    if let Some(s) = a.shots {
        cfg.shots = s;
    }
    cfg.noise |= a.noise;
    if let Some(p) = a.p1 {
        cfg.p1 = p;
    }
    if let Some(p) = a.p2 {
        cfg.p2 = p;
    }
    if let Some(t) = a.trajectories {
        cfg.trajectories = t;
    }
    if a.own_chain {
        cfg.prefix = PrefixSource::OwnChain;
    }
    if let Some(m) = a.max_evals {
        cfg.optimizer.max_evals = m;
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Spectrum { common } => commands::spectrum(&resolve(&common)?),
        Command::Landscape {
            common,
            gamma_max,
            beta_max,
            gamma_points,
            beta_points,
        } => {
            let grid = shelfqaoa::strategies::LandscapeConfig {
                gamma_max,
                beta_max,
                gamma_points,
                beta_points,
            };
            commands::landscape(&resolve(&common)?, &grid)
        }
        Command::Solve { common, solve } => {
            let mut cfg = resolve(&common)?;
            apply_solve(&mut cfg, &solve);
            commands::solve(&cfg)
        }
        Command::Estimate {
            shelves,
            products,
            capacity,
            layers,
            out,
        } => commands::estimate(shelves, products, capacity, layers, out.as_deref()),
        Command::Report { input } => commands::report(&input),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<shelfqaoa::Error>() {
        Some(
            shelfqaoa::Error::SpectrumTooLarge { .. } | shelfqaoa::Error::TooManyQubits { .. },
        ) => 2,
        _ => 1,
    }
}

/// Output piped into something like `head` that exits early.
fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
