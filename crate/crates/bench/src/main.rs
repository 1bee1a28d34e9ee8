use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nano_bench::report::{load_trials, render_table, TrialRow};
use nano_bench::{emit_report, run_benchmark, BenchConfig, BenchError};
use nano_filter::models::SystemName;

const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "nano-bench", version, about = "Monte-Carlo filter benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark manifest and write its report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated filter names overriding the manifest.
        #[arg(long, value_delimiter = ',')]
        filters: Option<Vec<String>>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 3 if any trial diverged.
        #[arg(long)]
        strict: bool,
    },
    /// List the benchmark systems and their noise cases.
    ListSystems,
    /// Summarize a previously written report directory.
    Report {
        #[arg(long)]
        from: PathBuf,
    },
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = io::stdout().lock().write_all(text.as_bytes());
}

fn run(
    config: PathBuf,
    filters: Option<Vec<String>>,
    trials: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    strict: bool,
) -> Result<ExitCode, BenchError> {
    let mut cfg = BenchConfig::load(&config)?;
    if let Some(filters) = filters {
        cfg.filters = filters;
    }
    if let Some(trials) = trials {
        cfg.trials = trials;
    }
    if let Some(seed) = seed {
        cfg.base_seed = seed;
    }
    if out.is_some() {
        cfg.out_dir = out;
    }
    cfg.validate()?;
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("results"));
    let (summary, results) = run_benchmark(&cfg)?;
    emit_report(&summary, &results, &out_dir)?;
    let rows: Vec<TrialRow> = results
        .iter()
        .map(|r| TrialRow {
            seed: r.seed,
            filter: r.filter.clone(),
            rmse: r.rmse,
            mean_step_ms: r.mean_step_ms(),
            mean_iters: r.mean_iters,
            diverged: r.diverged,
        })
        .collect();
    emit(&render_table(&rows));
    emit(&format!("report written to {}\n", out_dir.display()));
    let diverged = results.iter().filter(|r| r.diverged).count();
    if strict && diverged > 0 {
        eprintln!("{diverged} trial(s) diverged");
        return Ok(ExitCode::from(EXIT_DIVERGED));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            filters,
            trials,
            seed,
            out,
            strict,
        } => run(config, filters, trials, seed, out, strict),
        Command::ListSystems => {
            for name in SystemName::ALL {
                let cases: Vec<&str> = name.noise_cases().iter().map(|c| c.as_str()).collect();
                emit(&format!("{:<20} {}\n", name.as_str(), cases.join(",")));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { from } => load_trials(&from).map(|rows| {
            emit(&render_table(&rows));
            ExitCode::SUCCESS
        }),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                BenchError::Config(_) => ExitCode::from(EXIT_CONFIG),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
