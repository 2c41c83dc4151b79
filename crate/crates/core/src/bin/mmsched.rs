use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use mmsched::experiment::{cmd_run, cmd_sweep, cmd_verify, ExperimentConfig, Overrides};
use mmsched::ssp::SolverMode;
use mmsched::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Run,
    Verify,
    Sweep,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Solver {
    Exact,
    RmClassic,
    RmFixed,
}

/// Frame-based drift-plus-penalty scheduling on Markov-modulated networks.
///
/// Every flag can also be set through an environment variable with the
/// MMSCHED_ prefix, e.g. MMSCHED_SEED=3.
#[derive(Debug, Parser)]
#[command(name = "mmsched", version)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, env = "MMSCHED_CONFIG")]
    config: Option<PathBuf>,
    /// Instance file; overrides the one named in the configuration.
    #[arg(long, env = "MMSCHED_INSTANCE")]
    instance: Option<PathBuf>,
    #[arg(long, env = "MMSCHED_SEED")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "MMSCHED_OUT")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "run", env = "MMSCHED_MODE")]
    mode: Mode,
    #[arg(long, value_enum, env = "MMSCHED_SOLVER")]
    solver: Option<Solver>,
    /// Fixed step size for rm-fixed.
    #[arg(long, env = "MMSCHED_GAMMA")]
    gamma: Option<f64>,
    /// Samples per Robbins-Monro iteration.
    #[arg(long, env = "MMSCHED_BATCH")]
    batch: Option<usize>,
    /// Robbins-Monro iterations per frame.
    #[arg(long, env = "MMSCHED_ITERS")]
    iters: Option<usize>,
    /// History depth for delayed sampling.
    #[arg(long, env = "MMSCHED_HISTORY")]
    history: Option<usize>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3), env = "MMSCHED_RENEWAL")]
    renewal: Option<u8>,
    /// Visits to state 0 per frame for type-3 renewals.
    #[arg(long, env = "MMSCHED_RENEWAL_B")]
    renewal_b: Option<u32>,
    #[arg(long, env = "MMSCHED_SLOTS")]
    slots: Option<u64>,
    #[arg(long, env = "MMSCHED_REPS")]
    reps: Option<usize>,
    /// Comma-separated list of V values.
    #[arg(long, value_delimiter = ',', env = "MMSCHED_V")]
    v: Option<Vec<f64>>,
}

fn execute(cli: Cli) -> mmsched::Result<i32> {
    let mut cfg = match (&cli.config, &cli.instance) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(instance)) => ExperimentConfig::for_instance(instance.clone()),
        (None, None) => return Err(Error::config("config", "pass --config or --instance")),
    };
    Overrides {
        instance: cli.instance,
        seed: cli.seed,
        out: cli.out,
        solver: cli.solver.map(|s| match s {
            Solver::Exact => SolverMode::Exact,
            Solver::RmClassic => SolverMode::RmClassic,
            Solver::RmFixed => SolverMode::RmFixed,
        }),
        gamma: cli.gamma,
        batch: cli.batch,
        iters: cli.iters,
        history: cli.history,
        renewal: cli.renewal,
        renewal_b: cli.renewal_b,
        slots: cli.slots,
        reps: cli.reps,
        v: cli.v,
    }
    .apply(&mut cfg)?;
    match cli.mode {
        Mode::Run => cmd_run(cfg),
        Mode::Verify => cmd_verify(cfg),
        Mode::Sweep => cmd_sweep(cfg),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("mmsched: {} error: {e}", e.category());
            ExitCode::from(e.category().exit_code() as u8)
        }
    }
}
