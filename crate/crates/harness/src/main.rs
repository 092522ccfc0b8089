use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spde_harness::{execute, ExperimentKind};

#[derive(Parser)]
#[command(
    name = "spde-weak",
    version,
    about = "Weak-error experiments for the exponential Euler / spectral Galerkin scheme"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one path and write the endpoint coefficients.
    Simulate(Common),
    /// Weak error against τ at fixed n.
    WeakRateTime(Common),
    /// Weak error against λ_N at fixed τ.
    WeakRateSpatial(Common),
    /// Check the weak-error representation identity.
    VerifyRepresentation(Common),
    /// Moment and increment bounds of the scheme.
    MomentDiagnostics(Common),
    /// Spot-check the growth conditions on the nonlinearity and the noise.
    CheckAssumptions(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `mc.seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output prefix; `.csv`, `.summary.json` and `.report.json` are appended.
    #[arg(long, default_value = "out/run")]
    out: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (kind, args) = match cli.command {
        Command::Simulate(a) => (ExperimentKind::Simulate, a),
        Command::WeakRateTime(a) => (ExperimentKind::WeakRateTime, a),
        Command::WeakRateSpatial(a) => (ExperimentKind::WeakRateSpatial, a),
        Command::VerifyRepresentation(a) => (ExperimentKind::RepresentationCheck, a),
        Command::MomentDiagnostics(a) => (ExperimentKind::MomentDiagnostics, a),
        Command::CheckAssumptions(a) => (ExperimentKind::AssumptionCheck, a),
    };
    match execute(&args.config, kind, args.seed, &args.out, args.threads as usize) {
        Ok((out, files)) => {
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            for f in &files {
                println!("wrote {}", f.display());
            }
            if out.passed {
                println!("{}: PASS", kind.name());
                ExitCode::SUCCESS
            } else {
                println!("{}: FAIL", kind.name());
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
