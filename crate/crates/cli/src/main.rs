use catchup_cli::runner;
use catchup_cli::scenario::{parse_scenario, Scenario};
use catchup_cli::selftest::selftest;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "catchup",
    about = "Solvers for measure differential inclusions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario file and write trajectory artifacts.
    Solve {
        file: PathBuf,
        /// Override the scenario's Cauchy tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Override the coarsest refinement bound.
        #[arg(long)]
        eps0: Option<f64>,
        /// Override the refinement ratio.
        #[arg(long)]
        factor: Option<f64>,
        /// Output directory for the artifacts.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Empirical convergence table over fixed refinement levels.
    Study {
        file: PathBuf,
        /// Number of refinement levels beyond the coarsest grid.
        #[arg(long)]
        levels: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the randomized invariant suites and the scenario corpus.
    Selftest,
}

fn load(file: &PathBuf) -> Result<Scenario, String> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    parse_scenario(&text).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Solve {
            file,
            tol,
            eps0,
            factor,
            out,
        } => {
            let mut sc = match load(&file) {
                Ok(sc) => sc,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    return ExitCode::from(1);
                }
            };
            if let Some(t) = tol {
                sc.tol = t;
            }
            if let Some(e) = eps0 {
                sc.eps0 = e;
            }
            if let Some(f) = factor {
                sc.factor = f;
            }
            match runner::run(&sc, &out) {
                Ok(outcome) => {
                    print!("{}", outcome.summary);
                    if outcome.converged {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(2)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Study { file, levels, out } => match load(&file) {
            Ok(sc) => match runner::convergence_study(&sc, levels, &out) {
                Ok(table) => {
                    print!("{table}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            },
            Err(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(1)
            }
        },
        Command::Selftest => {
            if selftest() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
