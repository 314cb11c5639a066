use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qsymplectic_cli::{load_scenario, run, Command, Overrides, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "qsym", version, about = "Quantum dynamics as Hamiltonian mechanics: checks and trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Scenario file (JSON).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Directory for reports and trajectories.
    #[arg(long, global = true, default_value = "./out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Multiplies every tolerance.
    #[arg(long = "tol-scale", global = true)]
    tol_scale: Option<f64>,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Check the quantum-function relations (and a bracket report if a second operator is given).
    Verify,
    /// Integrate the Schrödinger flow and compare with exact propagation.
    Evolve,
    /// Check i*hbar*{<A>,<B>} = <[A,B]> on sampled states.
    Bracket,
    /// Check the reconstruction map and the quantum-function equation.
    Reconstruct,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Sub::Verify => Command::Verify,
        Sub::Evolve => Command::Evolve,
        Sub::Bracket => Command::Bracket,
        Sub::Reconstruct => Command::Reconstruct,
    };
    let Some(path) = cli.scenario else {
        eprintln!("error: --scenario PATH is required");
        return ExitCode::from(EXIT_CONFIG as u8);
    };
    let overrides = Overrides { seed: cli.seed, tol_scale: cli.tol_scale };
    let outcome = load_scenario(&path, command.name(), overrides).and_then(|setup| run(command, &setup, &cli.out));
    match outcome {
        Ok(outcome) => {
            if !cli.quiet || !outcome.passed {
                for check in &outcome.checks {
                    let verdict = if check.passed { "ok  " } else { "FAIL" };
                    println!("{verdict} {:<42} {:.3e} <= {:.3e}", check.name, check.value, check.tolerance);
                }
                for file in &outcome.written {
                    println!("wrote {}", file.display());
                }
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
