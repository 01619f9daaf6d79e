use std::fmt;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use olocal::{
    generate_random_clauses, generate_random_graph, parse_clauses, parse_graph, parse_rational, ExactInstance, Flavor,
    ProblemInstance, Rational, Scalar,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Color,
    Run,
    Oracle,
    Check,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Kcut,
    Dicut,
    Corrclust,
    Max2sat,
}

impl Problem {
    fn flavor(self) -> Option<Flavor> {
        match self {
            Problem::Kcut => Some(Flavor::Undirected),
            Problem::Dicut => Some(Flavor::Directed),
            Problem::Corrclust => Some(Flavor::Signed),
            Problem::Max2sat => None,
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().unwrap().get_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Det,
    Rand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    File(PathBuf),
    Gen { n: usize, p: f64, wmax: u64 },
}

/// Parses `n,p,wmax`.
pub fn parse_gen(text: &str) -> std::result::Result<Source, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [n, p, wmax] = parts[..] else {
        return Err(format!("expected n,p,wmax, got {text:?}"));
    };
    let n: usize = n.parse().map_err(|e| format!("n: {e}"))?;
    let p: f64 = p.parse().map_err(|e| format!("p: {e}"))?;
    let wmax: u64 = wmax.parse().map_err(|e| format!("wmax: {e}"))?;
    if n == 0 || !(0.0..=1.0).contains(&p) || wmax == 0 {
        return Err(format!("need n >= 1, 0 <= p <= 1, wmax >= 1, got {text:?}"));
    }
    Ok(Source::Gen { n, p, wmax })
}

/// Everything a run depends on. The output path is deliberately absent so
/// that the same experiment written to two places serializes identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub problem: Problem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Exact, as written (`0.1` or `1/10`).
    pub epsilon: String,
    pub seed: u64,
    pub trials: usize,
    pub engine: Engine,
    pub oracle: bool,
    pub source: Source,
    pub samples: usize,
}

impl ExperimentConfig {
    /// Checks every field, naming the flag at fault.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            bail!("--trials: must be at least 1");
        }
        match (self.problem, self.k) {
            (Problem::Kcut, Some(k)) if k < 2 => bail!("--k: kcut needs k >= 2, got {k}"),
            (Problem::Kcut, None) => bail!("--k: kcut needs a part count"),
            (Problem::Kcut, _) => {}
            (p, Some(_)) => bail!("--k: only kcut takes a part count, not {p}"),
            _ => {}
        }
        let eps = self.epsilon()?;
        let upper = match (self.command, self.problem) {
            (Command::Color, _) => None,
            (_, Problem::Max2sat) => Some(Rational::from_ratio(1, 2)),
            _ => Some(Rational::from_ratio(1, 4)),
        };
        if eps <= Rational::from_ratio(0, 1) || upper.as_ref().is_some_and(|u| eps > *u) {
            let range = upper.map_or("(0, 1)".to_string(), |u| format!("(0, {u}]"));
            bail!("--epsilon: must lie in {range}, got {}", self.epsilon);
        }
        if self.command == Command::Color && eps >= Rational::from_ratio(1, 1) {
            bail!("--epsilon: must lie in (0, 1), got {}", self.epsilon);
        }
        match (self.problem, self.engine) {
            (Problem::Max2sat, Engine::Det) => bail!("--engine: max2sat has only the randomized engine"),
            (Problem::Kcut | Problem::Corrclust, Engine::Rand) => {
                bail!("--engine: the randomized engine solves dicut and max2sat, not {}", self.problem)
            }
            _ => {}
        }
        if self.command == Command::Color && self.problem == Problem::Max2sat {
            bail!("--problem: color audits graph instances, not max2sat");
        }
        if self.command == Command::Check && self.samples == 0 {
            bail!("--samples: must be at least 1");
        }
        Ok(())
    }

    pub fn epsilon(&self) -> Result<Rational> {
        parse_rational(&self.epsilon).with_context(|| format!("--epsilon: cannot parse {:?}", self.epsilon))
    }

    /// Loads or generates the instance; generated instances use `seed`.
    pub fn instance(&self) -> Result<ExactInstance> {
        let inst = match (&self.source, self.problem.flavor()) {
            (Source::File(path), flavor) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("--input: cannot read {}", path.display()))?;
                let parsed = match flavor {
                    None => parse_clauses(&text).map(ProblemInstance::max2sat),
                    Some(_) => parse_graph(&text).map(|g| self.graph_instance(g)),
                };
                parsed
                    .and_then(|r| r)
                    .with_context(|| format!("--input: {}", path.display()))?
            }
            (&Source::Gen { n, p, wmax }, None) => {
                let pairs = n * (n - 1) / 2;
                let m = ((p * pairs as f64).round() as usize).max(1);
                let unit = if n == 1 { 1.0 } else { 0.2 };
                let cs = generate_random_clauses(n, m, unit, wmax, self.seed).context("--gen")?;
                ProblemInstance::max2sat(cs).context("--gen")?
            }
            (&Source::Gen { n, p, wmax }, Some(flavor)) => {
                let g = generate_random_graph(n, p, wmax, flavor, self.seed).context("--gen")?;
                self.graph_instance(g).context("--gen")?
            }
        };
        Ok(inst)
    }

    fn graph_instance(&self, g: olocal::ExactGraph) -> olocal::Result<ExactInstance> {
        match self.problem {
            Problem::Kcut => ProblemInstance::kcut(g, self.k.unwrap_or(2)),
            Problem::Dicut => ProblemInstance::dicut(g),
            Problem::Corrclust => ProblemInstance::corrclust(g),
            Problem::Max2sat => unreachable!("clause instances are not graphs"),
        }
    }
}
