use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cansys_cli::pipeline::{run, Options, RunError};
use cansys_cli::scenario::{bundled, BUNDLED};

/// Runs cansys scenarios and writes a JSON report with CSV series.
#[derive(Parser, Debug)]
#[command(name = "cansys", version)]
struct Cli {
    /// Print the bundled scenario names and exit.
    #[arg(long)]
    list_scenarios: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(clap::Subcommand, Debug)]
enum Command {
    /// Run a bundled scenario (by name) or a scenario file (by path).
    Run {
        scenario: String,
        /// Output directory.
        #[arg(long, default_value = "cansys-out")]
        out: PathBuf,
        /// Override the number of grid nodes.
        #[arg(long)]
        nodes: Option<usize>,
        /// Multiply every absolute tolerance by this factor.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
        /// Comma-separated series to write as CSV.
        #[arg(long, value_delimiter = ',')]
        emit: Vec<String>,
    },
}

const EXIT_CHECK: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;
const WORKERS_ENV: &str = "CANSYS_WORKERS";

fn configure_workers() -> Result<(), String> {
    let Ok(v) = std::env::var(WORKERS_ENV) else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("{WORKERS_ENV} must be a positive integer, got '{v}'"))?;
    if n == 0 {
        return Err(format!("{WORKERS_ENV} must be positive"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.list_scenarios {
        for (name, _) in BUNDLED {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }
    let Some(Command::Run { scenario, out, nodes, tol_scale, emit }) = cli.command else {
        eprintln!("nothing to do: use `cansys run <scenario>` or `--list-scenarios`");
        return ExitCode::from(EXIT_PARSE);
    };
    if let Err(e) = configure_workers() {
        eprintln!("{e}");
        return ExitCode::from(EXIT_PARSE);
    }
    let text = match bundled(&scenario) {
        Some(t) => t.to_string(),
        None => match std::fs::read_to_string(&scenario) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("cannot read scenario '{scenario}': {e}");
                return ExitCode::from(EXIT_PARSE);
            }
        },
    };
    let emit: Vec<String> = emit.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    let outcome = match run(&text, &Options { nodes, tol_scale, emit }) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(match e {
                RunError::Parse(_) => EXIT_PARSE,
                RunError::Precondition(_) => EXIT_PRECONDITION,
            });
        }
    };
    let write = || -> std::io::Result<()> {
        std::fs::create_dir_all(&out)?;
        std::fs::write(out.join("report.json"), outcome.report.to_json())?;
        for s in &outcome.emitted {
            std::fs::write(out.join(format!("{}.csv", s.name)), s.to_csv())?;
        }
        Ok(())
    };
    if let Err(e) = write() {
        eprintln!("cannot write to {}: {e}", out.display());
        return ExitCode::from(EXIT_PARSE);
    }
    let failed: Vec<_> = outcome.report.checks.iter().filter(|c| !c.pass).collect();
    println!(
        "{}: {} checks, {} failed; report written to {}",
        outcome.report.scenario,
        outcome.report.checks.len(),
        failed.len(),
        out.join("report.json").display()
    );
    for c in &failed {
        println!("FAIL [{}] {}: {:e} (threshold {:e})", c.stage, c.name, c.value, c.threshold);
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK)
    }
}
