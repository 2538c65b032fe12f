use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fairgame::config::{seed_override, EnvSpec, ExperimentConfig, SEED_ENV_VAR};
use fairgame::runner::run_sweep;
use fairgame::{analyze, eval, formats, plot, verify, Error, Result};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "fairgame", version, about = "Fair altruistic multi-agent learning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dilemma class, altruism level and Nash sets of a game file.
    Analyze {
        game: PathBuf,
        /// Altruism weights at which to list Nash equilibria.
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
    },
    /// Train every item of a sweep config.
    Train {
        config: PathBuf,
        /// Sweep items run in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Run a policy snapshot with frozen weights.
    Eval {
        snapshot: PathBuf,
        /// Environment spec as inline JSON or a path to a JSON file.
        #[arg(long)]
        env: String,
        #[arg(long)]
        episodes: usize,
        /// Defaults to FAIRGAME_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a fixed-seed oracle suite, or `all`.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(
            ["gradients", "bellman", "baseline", "estimator", "altruism", "gini", "all"]
        ))]
        suite: String,
    },
    /// Panel CSVs and SVG charts from one or more training logs.
    Plot {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Trailing window, in episodes.
        #[arg(long, default_value_t = plot::DEFAULT_WINDOW)]
        window: usize,
    },
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("reports serialise")
    );
}

fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV_VAR).ok()
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Analyze { game, alpha } => {
            let loaded = formats::load_game(&game)?;
            print_json(&analyze::analyze(&loaded, &alpha)?);
        }
        Command::Train { config, jobs } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.apply_seed_override(env_seed().as_deref())?;
            if jobs == 0 {
                return Err(Error::invalid("--jobs must be at least 1"));
            }
            let report = run_sweep(&cfg, jobs)?;
            print_json(&report);
            for run in report.runs.iter().filter(|r| r.error.is_some()) {
                eprintln!("run {} failed: {}", run.run_id, run.error.as_deref().unwrap_or(""));
            }
            if report.succeeded == 0 {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Eval {
            snapshot,
            env,
            episodes,
            seed,
        } => {
            let policies = formats::load_policy(&snapshot)?;
            let spec = EnvSpec::from_arg(&env)?;
            let seed = match seed {
                Some(s) => s,
                None => seed_override(env_seed().as_deref())?.unwrap_or(0),
            };
            print_json(&eval::eval_snapshot(&policies, &spec, episodes, seed)?);
        }
        Command::Verify { suite } => {
            let reports = verify::run_suites(&suite)?;
            if reports.len() == 1 {
                print_json(&reports[0]);
            } else {
                print_json(&reports);
            }
            let failed: Vec<_> = reports.iter().filter(|r| !r.passed).collect();
            for r in &failed {
                eprintln!("suite {} failed {} of {} checks:", r.suite, r.failed_checks, r.checks);
                for f in &r.failures {
                    eprintln!("  {f}");
                }
            }
            if !failed.is_empty() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Plot { logs, out, window } => {
            let paths: Vec<_> = logs.iter().map(PathBuf::as_path).collect();
            let written = plot::emit_plot_data(&paths, &out, window)?;
            print_json(&written);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
