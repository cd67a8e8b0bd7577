use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plaplab_cli::{parse_config, run, ExperimentKind};

/// Ground states, eigenpairs and experiments for sublinear p-Laplacian
/// problems with indefinite weights.
#[derive(Parser)]
#[command(name = "plaplab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Global minimizer of the energy.
    Solve(Common),
    /// Principal eigenpair of the weight.
    Eigen(Common),
    /// Seeded global solves and their pairwise agreement.
    Multistart(Common),
    /// Threshold q above which ground states are strictly positive.
    Q0(Common),
    /// Ground states along a list of q approaching p.
    Sweep(Common),
    /// Dead-core detection and the sign-flipped minimizer.
    Deadcore(Common),
    /// Constrained minimizer vanishing off the chosen components.
    Restricted(Common),
    /// The invariant suite on one problem.
    Check(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Solve(a) => (ExperimentKind::Solve, a),
        Command::Eigen(a) => (ExperimentKind::Eigen, a),
        Command::Multistart(a) => (ExperimentKind::Multistart, a),
        Command::Q0(a) => (ExperimentKind::Q0, a),
        Command::Sweep(a) => (ExperimentKind::Sweep, a),
        Command::Deadcore(a) => (ExperimentKind::Deadcore, a),
        Command::Restricted(a) => (ExperimentKind::Restricted, a),
        Command::Check(a) => (ExperimentKind::Check, a),
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match parse_config(&text, Some(kind)) {
        Ok(c) => c,
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed {
        cfg.solver.seed = seed;
    }
    match run(&cfg, &args.out) {
        Ok(report) => {
            if !args.quiet {
                for line in &report.summary {
                    println!("{line}");
                }
            }
            for f in &report.failures {
                eprintln!("FAILED: {f}");
            }
            if report.ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
