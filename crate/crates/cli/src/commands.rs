use anyhow::{Context, Result};
use num_traits::{ToPrimitive, Zero};
use olocal::coloring::{weighted_defect, DefectiveOverrides};
use olocal::oracle::{
    brute_force_opt, brute_force_partition_opt, check_local_delta, check_partial_delta, check_submodular_utility,
    DEFAULT_BUDGET,
};
use olocal::{
    approx_corrclust_det, approx_cut_det, approx_cut_rand, approx_max2sat, weighted_defective_coloring, ExactInstance,
    LocalUtility, PipelineReport, ProblemKind, Rational,
};
use serde::Serialize;

use crate::config::{Command, Engine, ExperimentConfig, Problem};

#[derive(Debug, Serialize)]
pub struct Report<T, A> {
    pub config: ExperimentConfig,
    pub per_trial: Vec<T>,
    pub aggregate: A,
}

fn approx(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// A value both as a float and exactly.
#[derive(Debug, Clone, Serialize)]
pub struct Value {
    pub value: f64,
    pub exact: String,
}

impl From<&Rational> for Value {
    fn from(x: &Rational) -> Self {
        Value {
            value: approx(x),
            exact: x.to_string(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Rounds {
    pub coloring: usize,
    pub engine: usize,
    pub total: usize,
}

#[derive(Debug, Serialize)]
pub struct RunTrial {
    pub seed: u64,
    pub objective: Value,
    pub reduced_objective: Value,
    pub total_weight: Value,
    pub dropped_weight: Value,
    pub palette_size: usize,
    pub rounds: Rounds,
    pub max_message_bits: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

/// The promised fraction of OPT, as `ratio·(1 − c·ε)` and as `ratio − ε`.
#[derive(Debug, Serialize)]
pub struct GuaranteeOut {
    pub ratio: Value,
    pub multiplicative: Value,
    pub additive: Value,
}

#[derive(Debug, Serialize)]
pub struct RunAggregate {
    pub trials: usize,
    pub guarantee: GuaranteeOut,
    pub mean_objective: f64,
    pub min_objective: Value,
    pub max_objective: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub opt: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_ratio: Option<f64>,
    pub max_rounds: usize,
    pub max_message_bits: u64,
}

fn pipeline(cfg: &ExperimentConfig, inst: &ExactInstance, eps: &Rational, seed: u64) -> olocal::Result<PipelineReport<Rational>> {
    let run = match (cfg.problem, cfg.engine) {
        (Problem::Max2sat, _) => approx_max2sat(inst.clauses().expect("clause instance"), eps, seed),
        (Problem::Dicut, Engine::Rand) => approx_cut_rand(inst, eps, seed),
        (Problem::Corrclust, _) => approx_corrclust_det(inst, eps),
        _ => approx_cut_det(inst, eps),
    };
    run.map(|(_, report)| report)
}

/// `objective / OPT`, with an empty instance counting as solved.
fn ratio(objective: &Rational, opt: &Rational) -> f64 {
    if opt.is_zero() {
        1.0
    } else {
        approx(&(objective / opt))
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report<RunTrial, RunAggregate>> {
    let inst = cfg.instance()?;
    let eps = cfg.epsilon()?;
    let opt = match cfg.oracle {
        true => Some(brute_force_opt(&inst).context("--oracle")?.opt_value),
        false => None,
    };
    let mut trials = Vec::with_capacity(cfg.trials);
    let mut objectives = Vec::with_capacity(cfg.trials);
    let mut guarantee = None;
    for t in 0..cfg.trials {
        let seed = cfg.seed.wrapping_add(t as u64);
        let rep = pipeline(cfg, &inst, &eps, seed).with_context(|| format!("trial with seed {seed}"))?;
        let stats = rep.stats();
        trials.push(RunTrial {
            seed,
            objective: (&rep.objective).into(),
            reduced_objective: (&rep.reduced_objective).into(),
            total_weight: (&rep.total_weight).into(),
            dropped_weight: (&rep.dropped_weight).into(),
            palette_size: rep.palette_size,
            rounds: Rounds {
                coloring: rep.coloring_stats.rounds_used,
                engine: rep.engine_stats.rounds_used,
                total: stats.rounds_used,
            },
            max_message_bits: stats.max_message_bits,
            ratio: opt.as_ref().map(|o| ratio(&rep.objective, o)),
        });
        objectives.push(rep.objective);
        guarantee = Some(rep.guarantee);
    }
    let min = objectives.iter().min().expect("at least one trial");
    let max = objectives.iter().max().expect("at least one trial");
    let ratios: Vec<f64> = trials.iter().filter_map(|t| t.ratio).collect();
    let g = guarantee.expect("at least one trial");
    let aggregate = RunAggregate {
        trials: trials.len(),
        guarantee: GuaranteeOut {
            ratio: (&g.ratio).into(),
            multiplicative: (&g.multiplicative).into(),
            additive: (&g.additive).into(),
        },
        mean_objective: objectives.iter().map(approx).sum::<f64>() / trials.len() as f64,
        min_objective: min.into(),
        max_objective: max.into(),
        opt: opt.as_ref().map(Value::from),
        mean_ratio: opt.as_ref().map(|_| ratios.iter().sum::<f64>() / ratios.len() as f64),
        min_ratio: opt.as_ref().map(|o| ratio(min, o)),
        max_rounds: trials.iter().map(|t| t.rounds.total).max().unwrap_or(0),
        max_message_bits: trials.iter().map(|t| t.max_message_bits).max().unwrap_or(0),
    };
    Ok(Report {
        config: cfg.clone(),
        per_trial: trials,
        aggregate,
    })
}

#[derive(Debug, Serialize)]
pub struct ColorTrial {
    pub iterations: usize,
    pub palette_size: usize,
    pub used_colors: usize,
    pub rounds: usize,
    pub max_message_bits: u64,
    /// Largest `defect(v) / w(v)` over nodes with incident weight.
    pub max_defect_fraction: f64,
    pub monochromatic_weight: Value,
    pub bound_violations: usize,
}

#[derive(Debug, Serialize)]
pub struct ColorAggregate {
    pub nodes: usize,
    pub edges: usize,
    pub within_bound: bool,
}

pub fn color(cfg: &ExperimentConfig) -> Result<Report<ColorTrial, ColorAggregate>> {
    let inst = cfg.instance()?;
    let eps = cfg.epsilon()?;
    let g = inst.graph();
    let d = weighted_defective_coloring(g, &eps, &DefectiveOverrides::default())?;
    let mut violations = 0;
    let mut worst = Rational::zero();
    let mut mono = Rational::zero();
    for v in 0..g.node_count() {
        let defect = weighted_defect(g, &d.coloring, v)?;
        let w = g.node_weight(v)?;
        if defect > eps.clone() * w.clone() {
            violations += 1;
        }
        if !w.is_zero() {
            worst = worst.max(defect.clone() / w);
        }
        mono += defect;
    }
    // Each monochromatic edge was counted at both ends.
    mono /= Rational::from_integer(2.into());
    let trial = ColorTrial {
        iterations: d.params.iterations(),
        palette_size: d.coloring.palette_size(),
        used_colors: d.coloring.used_colors().len(),
        rounds: d.stats.rounds_used,
        max_message_bits: d.stats.max_message_bits,
        max_defect_fraction: approx(&worst),
        monochromatic_weight: (&mono).into(),
        bound_violations: violations,
    };
    Ok(Report {
        config: cfg.clone(),
        per_trial: vec![trial],
        aggregate: ColorAggregate {
            nodes: g.node_count(),
            edges: g.edge_count(),
            within_bound: violations == 0,
        },
    })
}

#[derive(Debug, Serialize)]
pub struct OracleTrial {
    pub opt: Value,
    pub opt_assignment: Vec<usize>,
    pub search_space_size: u128,
}

#[derive(Debug, Serialize)]
pub struct OracleAggregate {
    pub opt: Value,
    /// Max-agree over all partitions, for correlation clustering.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition_opt: Option<Value>,
}

pub fn oracle(cfg: &ExperimentConfig) -> Result<Report<OracleTrial, OracleAggregate>> {
    let inst = cfg.instance()?;
    let res = brute_force_opt(&inst)?;
    let partition_opt = match inst.kind() {
        ProblemKind::CorrClust2 => Some(brute_force_partition_opt(&inst, DEFAULT_BUDGET)?.opt_value),
        _ => None,
    };
    Ok(Report {
        config: cfg.clone(),
        aggregate: OracleAggregate {
            opt: (&res.opt_value).into(),
            partition_opt: partition_opt.as_ref().map(Value::from),
        },
        per_trial: vec![OracleTrial {
            opt: (&res.opt_value).into(),
            opt_assignment: res.opt_assignment,
            search_space_size: res.search_space_size,
        }],
    })
}

#[derive(Debug, Serialize)]
pub struct CheckTrial {
    pub property: String,
    pub samples: usize,
    pub violations: usize,
}

#[derive(Debug, Serialize)]
pub struct CheckAggregate {
    pub properties: usize,
    pub violations: usize,
    pub passed: bool,
}

pub fn check(cfg: &ExperimentConfig) -> Result<Report<CheckTrial, CheckAggregate>> {
    let inst = cfg.instance()?;
    let (n, seed) = (cfg.samples, cfg.seed);
    let mut rows = Vec::new();
    let mut row = |property: &str, violations: usize| {
        rows.push(CheckTrial {
            property: property.into(),
            samples: n,
            violations,
        })
    };
    match inst.clauses() {
        Some(cs) => {
            let (ft, ff) = inst.sat_utilities()?;
            row("local_delta_f_t", check_local_delta(&ft, n, seed)?.mismatches);
            row("local_delta_f_f", check_local_delta(&ff, n, seed)?.mismatches);
            row("partial_delta_f_t", check_partial_delta(&ft, n, seed)?);
            row("partial_delta_f_f", check_partial_delta(&ff, n, seed)?);
            let total = cs.total_weight();
            let mut bad = 0;
            for i in 0..n {
                let x: Vec<usize> = (0..inst.node_count()).map(|v| (sample_bit(seed, i, v)) as usize).collect();
                if ft.eval_full(&x)? + ff.eval_full(&x)? != total {
                    bad += 1;
                }
            }
            row("clause_dichotomy", bad);
        }
        None => {
            let u = inst.cut_utility()?;
            row("local_delta", check_local_delta(&u, n, seed)?.mismatches);
            if inst.domain_size() == 2 && inst.kind() != ProblemKind::CorrClust2 {
                row("submodularity", check_submodular_utility(&u, n, seed)?.violations.len());
            }
        }
    }
    let violations = rows.iter().map(|r| r.violations).sum();
    Ok(Report {
        config: cfg.clone(),
        aggregate: CheckAggregate {
            properties: rows.len(),
            violations,
            passed: violations == 0,
        },
        per_trial: rows,
    })
}

/// A reproducible bit for sample `i`, node `v`.
fn sample_bit(seed: u64, i: usize, v: usize) -> bool {
    use rand::Rng;
    olocal::rng::node_stream(seed ^ (i as u64).rotate_left(32), v).gen()
}

pub fn execute(cfg: &ExperimentConfig) -> Result<(String, bool)> {
    let (json, ok) = match cfg.command {
        Command::Run => (serde_json::to_string_pretty(&run(cfg)?)?, true),
        Command::Color => {
            let r = color(cfg)?;
            let ok = r.aggregate.within_bound;
            (serde_json::to_string_pretty(&r)?, ok)
        }
        Command::Oracle => (serde_json::to_string_pretty(&oracle(cfg)?)?, true),
        Command::Check => {
            let r = check(cfg)?;
            let ok = r.aggregate.passed;
            (serde_json::to_string_pretty(&r)?, ok)
        }
    };
    Ok((json + "\n", ok))
}
