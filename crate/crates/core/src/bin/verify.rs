//! Command-line driver: execute configured verification suites and write a
//! machine-readable report plus CSV tables.
//!
//! Exit codes: 0 when every check passes, 1 when any check fails its
//! tolerance, 2 for configuration or construction errors (unreadable or
//! invalid config, misplaced solution center, bad suite name).

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use finsler_liouville::report::{RunConfig, Suite};
use finsler_liouville::runner;

#[derive(Parser)]
#[command(
    name = "verify",
    version,
    about = "Numerical checks for anisotropic Liouville solutions on convex cones"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites a config requests; write report.json and tables/.
    Run {
        /// Path to a strict-JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Replace the config's suite list (repeat for several suites).
        #[arg(long = "suite", value_name = "NAME")]
        suites: Vec<String>,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the config's `output`, else `verify-out`).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Override the config's quadrature budget.
        #[arg(long)]
        budget: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, suites, seed, out, budget } => {
            run(config, suites, seed, out, budget)
        }
    }
}

fn run(
    path: PathBuf,
    suites: Vec<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    budget: Option<usize>,
) -> ExitCode {
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let mut config = match RunConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    if !suites.is_empty() {
        let mut parsed = Vec::with_capacity(suites.len());
        for name in &suites {
            match Suite::parse(name) {
                Ok(s) => parsed.push(s),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
        }
        config.suites = parsed;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(b) = budget {
        config.quadrature.budget = b;
    }

    let started = Instant::now();
    let outcome = match runner::execute(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let out_dir = out
        .or_else(|| config.output.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("verify-out"));
    if let Err(e) = runner::write_outputs(&outcome, &out_dir) {
        eprintln!("error: cannot write outputs to {}: {e}", out_dir.display());
        return ExitCode::from(2);
    }

    let mut passed = 0usize;
    for check in &outcome.report.checks {
        let verdict = if check.pass { "PASS" } else { "FAIL" };
        if check.pass {
            passed += 1;
        }
        if check.note.is_empty() {
            println!("{verdict} {} gap={:.3e} tol={:.3e}", check.name, check.gap, check.tolerance);
        } else {
            println!(
                "{verdict} {} gap={:.3e} tol={:.3e} ({})",
                check.name, check.gap, check.tolerance, check.note
            );
        }
    }
    println!(
        "{passed} of {} checks passed; report at {}",
        outcome.report.checks.len(),
        out_dir.join("report.json").display()
    );
    // Timing goes to stderr so stdout and the report stay byte-stable.
    eprintln!("wall time: {:?}", started.elapsed());

    if outcome.report.overall_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
