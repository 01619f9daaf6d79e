mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{parse_gen, Command, Engine, ExperimentConfig, Problem, Source};

#[derive(Parser)]
#[command(name = "olocal", version, about = "Run orderless-local approximation pipelines on simulated networks")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Audit the weighted defective coloring of a graph
    Color(Flags),
    /// Run a pipeline over a sweep of seeds
    Run(Flags),
    /// Solve an instance exactly by enumeration
    Oracle(Flags),
    /// Sample the structural property suites
    Check(Flags),
}

#[derive(Args)]
struct Flags {
    #[arg(long, value_enum, required_unless_present = "config")]
    problem: Option<Problem>,
    /// Part count for kcut
    #[arg(long)]
    k: Option<usize>,
    /// Decimal or fraction, e.g. 0.1 or 1/10
    #[arg(long, default_value = "1/10")]
    epsilon: String,
    /// First seed; trial t uses seed + t
    #[arg(long, env = "OLOCAL_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Graph or clause file
    #[arg(long, conflicts_with = "gen")]
    input: Option<PathBuf>,
    /// Random instance n,p,wmax (for max2sat: n variables, about p·n(n-1)/2 clauses)
    #[arg(long, value_parser = parse_gen)]
    gen: Option<Source>,
    /// det (default for cuts) or rand (dicut and max2sat, default for max2sat)
    #[arg(long, value_enum)]
    engine: Option<Engine>,
    /// Compare against the brute-force optimum
    #[arg(long)]
    oracle: bool,
    /// Samples per property for check
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Replay a configuration saved in an earlier report (its "config" field)
    #[arg(long, conflicts_with_all = ["problem", "input", "gen"])]
    config: Option<PathBuf>,
    /// Report path; stdout when absent. Written only after a successful run.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Flags {
    fn into_config(self, command: Command) -> Result<(ExperimentConfig, Option<PathBuf>)> {
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("--config: cannot read {}", path.display()))?;
            let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("--config: {}", path.display()))?;
            // Accept a bare config as well as a whole report.
            let value = value.get("config").cloned().unwrap_or(value);
            let cfg: ExperimentConfig = serde_json::from_value(value).with_context(|| format!("--config: {}", path.display()))?;
            if cfg.command != command {
                bail!("--config: the saved configuration is for {:?}, not {:?}", cfg.command, command);
            }
            return Ok((cfg, self.out));
        }
        let problem = self.problem.expect("clap requires --problem");
        let source = match (self.input, self.gen) {
            (Some(path), None) => Source::File(path),
            (None, Some(gen)) => gen,
            _ => bail!("--input: give an instance file or --gen n,p,wmax"),
        };
        let k = match problem {
            Problem::Kcut => Some(self.k.unwrap_or(2)),
            _ => self.k,
        };
        let engine = self.engine.unwrap_or(match problem {
            Problem::Max2sat => Engine::Rand,
            _ => Engine::Det,
        });
        let cfg = ExperimentConfig {
            command,
            problem,
            k,
            epsilon: self.epsilon,
            seed: self.seed,
            trials: self.trials,
            engine,
            oracle: self.oracle,
            source,
            samples: self.samples,
        };
        Ok((cfg, self.out))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Sub::Color(f) => (Command::Color, f),
        Sub::Run(f) => (Command::Run, f),
        Sub::Oracle(f) => (Command::Oracle, f),
        Sub::Check(f) => (Command::Check, f),
    };
    match go(command, flags) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: the report records violations");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn go(command: Command, flags: Flags) -> Result<bool> {
    let (cfg, out) = flags.into_config(command)?;
    cfg.validate()?;
    let (json, ok) = commands::execute(&cfg)?;
    match out {
        Some(path) => std::fs::write(&path, json).with_context(|| format!("--out: cannot write {}", path.display()))?,
        None => print!("{json}"),
    }
    Ok(ok)
}
