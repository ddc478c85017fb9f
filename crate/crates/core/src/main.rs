use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ubo::harness::{self, ExperimentConfig, ExperimentOutcome, ProblemConfig, Seeds};
use ubo::{Error, Method};

const EXIT_USAGE: u8 = 1;
const EXIT_PARTIAL: u8 = 2;

/// Bayesian optimization without a fixed bounding box.
#[derive(Debug, Parser)]
#[command(name = "ubo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment described by a JSON configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Use seeds 0..K instead of the configured ones.
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run built-in problems with default settings.
    Bench {
        /// One of hartmann3, hartmann6, hartmann3*, hartmann6*, gaussian1d, gaussian2d.
        #[arg(long)]
        problem: String,
        /// Comma-separated methods (EI, EI-V, EI-H, EI-Q).
        #[arg(long, value_delimiter = ',', default_value = "EI,EI-V,EI-H,EI-Q")]
        method: Vec<String>,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Aggregate the traces in a directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn execute(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Run { config, seeds, out, jobs } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(k) = seeds {
                cfg.seeds = Seeds::Count(k);
            }
            if let Some(dir) = out {
                cfg.out_dir = dir;
            }
            if jobs.is_some() {
                cfg.jobs = jobs;
            }
            run(&cfg)
        }
        Command::Bench { problem, method, seeds, out, budget, jobs } => {
            let methods = method.iter().map(|m| m.parse()).collect::<Result<Vec<Method>, _>>()?;
            let mut cfg = ExperimentConfig::new(ProblemConfig::named(problem), methods, Seeds::Count(seeds), out);
            cfg.overrides.budget = budget;
            cfg.jobs = jobs;
            let code = run(&cfg)?;
            if let Ok(summary) = harness::report(&cfg.out_dir) {
                print!("{}", summary.render());
            }
            Ok(code)
        }
        Command::Report { input, out } => {
            let summary = harness::report(&input)?;
            let rec = summary.write(&out)?;
            for (path, why) in &summary.skipped {
                eprintln!("skipped {}: {why}", path.display());
            }
            print!("{}", summary.render());
            eprintln!("wrote {} and {}", out.display(), rec.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run(cfg: &ExperimentConfig) -> Result<ExitCode, Error> {
    cfg.validate()?;
    let ExperimentOutcome { traces, failures } = harness::run_experiment(cfg)?;
    eprintln!("{} runs completed in {}", traces.len(), cfg.out_dir.display());
    for f in &failures {
        eprintln!("run {} seed {} failed: {}", f.method, f.seed, f.message);
    }
    Ok(if failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_PARTIAL) })
}
