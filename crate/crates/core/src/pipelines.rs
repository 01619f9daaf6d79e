//! End-to-end approximation pipelines: color, drop the monochromatic edges,
//! then run an engine on the simulator with the coloring, which is now legal.

use num_traits::{One, Signed};

use crate::clause::ClauseSet;
use crate::coloring::{random_coloring, weighted_defective_coloring, Coloring, DefectiveOverrides};
use crate::congest::RoundStats;
use crate::engines::{cond_exp_spec, double_greedy_det_spec, double_greedy_rand_spec, first_coordinates, maxsat_spec};
use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeAttr, Graph};
use crate::ol::{run_distributed, Assignment};
use crate::rng::RandomTape;
use crate::scalar::{ceil_to_usize, Rational, Scalar};
use crate::utility::{LocalUtility, ProblemInstance, ProblemKind};

/// What one pipeline run did.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport<W> {
    pub kind: ProblemKind,
    pub epsilon: Rational,
    pub seed: u64,
    /// Objective on the original instance.
    pub objective: W,
    /// Objective on the instance left after dropping.
    pub reduced_objective: W,
    pub total_weight: W,
    pub reduced_weight: W,
    pub dropped_weight: W,
    pub palette_size: usize,
    pub coloring_stats: RoundStats,
    pub engine_stats: RoundStats,
    pub guarantee: Guarantee,
}

/// The promised approximation against OPT, as `ratio·(1 − c·ε)` and as
/// `ratio − ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct Guarantee {
    pub ratio: Rational,
    pub multiplicative: Rational,
    pub additive: Rational,
}

impl Guarantee {
    fn new(ratio: Rational, eps: &Rational, c: i64) -> Self {
        Guarantee {
            multiplicative: ratio.clone() * (Rational::one() - Rational::from_integer(c.into()) * eps),
            additive: ratio.clone() - eps,
            ratio,
        }
    }
}

impl<W: Scalar> PipelineReport<W> {
    /// Both phases back to back.
    pub fn stats(&self) -> RoundStats {
        self.coloring_stats.then(&self.engine_stats)
    }
}

fn check_epsilon(eps: &Rational, upper: Rational) -> Result<()> {
    if !eps.is_positive() || *eps > upper {
        return Err(Error::Precondition(format!("epsilon must lie in (0, {upper}], got {eps}")));
    }
    Ok(())
}

fn quarter() -> Rational {
    Rational::new(1.into(), 4.into())
}

/// Deterministic pipeline: weighted ε-defective coloring, then conditional
/// expectations (k-cut, correlation clustering) or det-usm (dicut).
pub fn approx_cut_det<W: Scalar>(inst: &ProblemInstance<W>, eps: &Rational) -> Result<(Assignment<usize>, PipelineReport<W>)> {
    approx_cut_det_with(inst, eps, &DefectiveOverrides::default())
}

pub fn approx_cut_det_with<W: Scalar>(
    inst: &ProblemInstance<W>,
    eps: &Rational,
    overrides: &DefectiveOverrides,
) -> Result<(Assignment<usize>, PipelineReport<W>)> {
    check_epsilon(eps, quarter())?;
    inst.cut_utility()?;
    let colored = weighted_defective_coloring(inst.graph(), eps, overrides)?;
    let phi = &colored.coloring;
    let reduced = inst.with_graph(inst.graph().filter_bichromatic(phi)?)?;
    let u = reduced.cut_utility()?;
    let tape = RandomTape::new(0);
    let (values, engine_stats) = match inst.kind() {
        ProblemKind::DiCut => {
            let (x, stats) = run_distributed(reduced.graph(), &double_greedy_det_spec(&u), phi, &tape)?;
            (first_coordinates(&x)?, stats)
        }
        _ => {
            let (x, stats) = run_distributed(reduced.graph(), &cond_exp_spec(&u), phi, &tape)?;
            (x.to_total()?, stats)
        }
    };
    let ratio = match inst.kind() {
        ProblemKind::KCut { k } => Rational::one() - Rational::new(1.into(), k.into()),
        ProblemKind::DiCut => Rational::new(1.into(), 3.into()),
        _ => Rational::new(1.into(), 2.into()),
    };
    let guarantee = Guarantee::new(ratio, eps, 4);
    let report = cut_report(inst, &reduced, &values, eps, 0, phi, colored.stats, engine_stats, guarantee)?;
    Ok((Assignment::from_total(values), report))
}

#[allow(clippy::too_many_arguments)]
fn cut_report<W: Scalar>(
    inst: &ProblemInstance<W>,
    reduced: &ProblemInstance<W>,
    values: &[usize],
    eps: &Rational,
    seed: u64,
    phi: &Coloring,
    coloring_stats: RoundStats,
    engine_stats: RoundStats,
    guarantee: Guarantee,
) -> Result<PipelineReport<W>> {
    let total_weight = inst.graph().total_weight();
    let reduced_weight = reduced.graph().total_weight();
    Ok(PipelineReport {
        kind: inst.kind(),
        epsilon: eps.clone(),
        seed,
        objective: inst.cut_utility()?.eval_full(values)?,
        reduced_objective: reduced.cut_utility()?.eval_full(values)?,
        dropped_weight: total_weight.clone() - reduced_weight.clone(),
        total_weight,
        reduced_weight,
        palette_size: phi.palette_size(),
        coloring_stats,
        engine_stats,
        guarantee,
    })
}

/// Randomized dicut pipeline: a uniformly random `⌈1/ε⌉`-coloring (no
/// communication), then rand-usm.
pub fn approx_cut_rand<W: Scalar>(
    inst: &ProblemInstance<W>,
    eps: &Rational,
    seed: u64,
) -> Result<(Assignment<usize>, PipelineReport<W>)> {
    check_epsilon(eps, quarter())?;
    if inst.kind() != ProblemKind::DiCut {
        return Err(Error::Precondition(format!("the randomized pipeline solves dicut, not {}", inst.kind())));
    }
    let c = palette_for(eps)?;
    let tape = RandomTape::new(seed);
    let phi = random_coloring(inst.graph(), c, tape.fork(1).seed())?;
    let reduced = inst.with_graph(inst.graph().filter_bichromatic(&phi)?)?;
    let u = reduced.cut_utility()?;
    let (x, engine_stats) = run_distributed(reduced.graph(), &double_greedy_rand_spec(&u), &phi, &tape.fork(2))?;
    let values = first_coordinates(&x)?;
    let guarantee = Guarantee::new(Rational::new(1.into(), 2.into()), eps, 4);
    let report = cut_report(inst, &reduced, &values, eps, seed, &phi, RoundStats::silent(), engine_stats, guarantee)?;
    Ok((Assignment::from_total(values), report))
}

fn palette_for(eps: &Rational) -> Result<usize> {
    ceil_to_usize(&(Rational::one() / eps)).ok_or_else(|| Error::Precondition(format!("palette 1/{eps} too large")))
}

/// Correlation clustering (max-agree, two clusters) through the
/// deterministic pipeline. Edge signs play no role in the coloring.
pub fn approx_corrclust_det<W: Scalar>(inst: &ProblemInstance<W>, eps: &Rational) -> Result<(Assignment<usize>, PipelineReport<W>)> {
    if inst.kind() != ProblemKind::CorrClust2 {
        return Err(Error::Precondition(format!("expected a signed instance, got {}", inst.kind())));
    }
    approx_cut_det(inst, eps)
}

/// Where a clause lives in the clause graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Carrier {
    Edge(usize),
    /// A unit clause of a node without edges.
    Node(usize),
}

#[derive(Debug, Clone)]
pub struct ClauseGraph<W> {
    pub graph: Graph<W>,
    /// Carrier of each clause, by clause id.
    pub carrier: Vec<Carrier>,
}

/// The clause graph `H`: an edge between two variables iff some clause
/// mentions both, weighted by the clauses it carries. A unit clause rides on
/// the edge toward its variable's smallest neighbor, or on the node itself
/// when the variable has no edges.
pub fn build_clause_graph<W: Scalar>(cs: &ClauseSet<W>) -> ClauseGraph<W> {
    let n = cs.variable_count();
    let mut edge_of = std::collections::HashMap::new();
    let mut ends: Vec<(usize, usize)> = Vec::new();
    let mut carrier = vec![Carrier::Node(usize::MAX); cs.len()];
    for (id, c) in cs.clauses().iter().enumerate() {
        if let [a, b] = c.literals() {
            let key = (a.var.min(b.var), a.var.max(b.var));
            let e = *edge_of.entry(key).or_insert_with(|| {
                ends.push(key);
                ends.len() - 1
            });
            carrier[id] = Carrier::Edge(e);
        }
    }
    // Smallest neighbor of every node, with the edge leading there.
    let mut toward: Vec<Option<(usize, usize)>> = vec![None; n];
    for (e, &(u, v)) in ends.iter().enumerate() {
        for (x, y) in [(u, v), (v, u)] {
            if toward[x].is_none_or(|(best, _)| y < best) {
                toward[x] = Some((y, e));
            }
        }
    }
    for (id, c) in cs.clauses().iter().enumerate() {
        if let [lit] = c.literals() {
            carrier[id] = match toward[lit.var] {
                Some((_, e)) => Carrier::Edge(e),
                None => Carrier::Node(lit.var),
            };
        }
    }
    let mut weights = vec![W::zero(); ends.len()];
    for (id, c) in cs.clauses().iter().enumerate() {
        if let Carrier::Edge(e) = carrier[id] {
            weights[e] = weights[e].clone() + c.weight.clone();
        }
    }
    let edges = ends
        .into_iter()
        .zip(weights)
        .map(|((u, v), weight)| Edge {
            u,
            v,
            weight,
            attr: EdgeAttr::PLAIN,
        })
        .collect();
    ClauseGraph {
        graph: Graph::new(n, edges).expect("clause graph edges are distinct and loop-free"),
        carrier,
    }
}

/// Weighted Max 2-SAT. Variables without clause-graph edges are set
/// greedily from their unit clauses, which is optimal for them. The rest
/// are colored with `⌈1/ε⌉` random colors; monochromatic edges are dropped
/// together with the clauses they carry, and the randomized greedy runs on
/// what is left.
pub fn approx_max2sat<W: Scalar>(cs: &ClauseSet<W>, eps: &Rational, seed: u64) -> Result<(Assignment<usize>, PipelineReport<W>)> {
    check_epsilon(eps, Rational::new(1.into(), 2.into()))?;
    let h = build_clause_graph(cs);
    let n = cs.variable_count();
    let c = palette_for(eps)?;
    let tape = RandomTape::new(seed);
    let phi = random_coloring(&h.graph, c, tape.fork(1).seed())?;

    let mut values = vec![0usize; n];
    let mut lean = vec![W::zero(); n];
    for cl in cs.clauses() {
        if let [lit] = cl.literals() {
            let w = cl.weight.clone();
            lean[lit.var] = lean[lit.var].clone() + if lit.positive { w } else { -w };
        }
    }
    let mut rest = Vec::new();
    for v in 0..n {
        if h.graph.degree(v) == 0 {
            values[v] = (!lean[v].is_negative()) as usize;
        } else {
            rest.push(v);
        }
    }

    let kept = cs.retain(|id, _| match h.carrier[id] {
        Carrier::Edge(e) => {
            let e = h.graph.edge(e);
            phi.color(e.u) != phi.color(e.v)
        }
        Carrier::Node(_) => true,
    });

    let engine_stats = if rest.is_empty() {
        RoundStats::silent()
    } else {
        let sub = ProblemInstance::max2sat(kept.induced(&rest)?)?;
        let sub_phi = Coloring::new(rest.iter().map(|&v| phi.color(v)).collect(), c)?;
        let (ft, ff) = sub.sat_utilities()?;
        let (x, stats) = run_distributed(sub.graph(), &maxsat_spec(&ft, &ff), &sub_phi, &tape.fork(2))?;
        for (i, x) in x.to_total()?.into_iter().enumerate() {
            values[rest[i]] = x;
        }
        stats
    };

    let full = ProblemInstance::max2sat(cs.clone())?;
    let reduced = ProblemInstance::max2sat(kept.clone())?;
    let total_weight = cs.total_weight();
    let reduced_weight = kept.total_weight();
    let report = PipelineReport {
        kind: ProblemKind::Max2Sat,
        epsilon: eps.clone(),
        seed,
        objective: full.sat_utilities()?.0.eval_full(&values)?,
        reduced_objective: reduced.sat_utilities()?.0.eval_full(&values)?,
        dropped_weight: total_weight.clone() - reduced_weight.clone(),
        total_weight,
        reduced_weight,
        palette_size: c,
        coloring_stats: RoundStats::silent(),
        engine_stats,
        guarantee: Guarantee::new(Rational::new(3.into(), 4.into()), eps, 2),
    };
    Ok((Assignment::from_total(values), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clause::{generate_random_clauses, Clause, Literal};
    use crate::graph::{generate_random_graph, Flavor};
    use crate::coloring::weighted_defect;
    use proptest::prelude::*;

    type G = Graph<Rational>;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn epsilon_guards() {
        let inst = ProblemInstance::kcut(G::from_triples(2, &[(0, 1, 1)], EdgeAttr::PLAIN).unwrap(), 2).unwrap();
        assert!(approx_cut_det(&inst, &r(0, 1)).is_err());
        assert!(approx_cut_det(&inst, &r(3, 10)).is_err());
        assert!(approx_cut_det(&inst, &r(1, 4)).is_ok());
        let d1 = ProblemInstance::dicut(G::from_triples(2, &[(0, 1, 1)], EdgeAttr::DIRECTED).unwrap()).unwrap();
        assert!(approx_cut_rand(&d1, &r(1, 1), 0).is_err());
        assert!(approx_cut_rand(&inst, &r(1, 10), 0).is_err());
        let cs = ClauseSet::new(1, vec![Clause::unit(Literal::pos(0), r(1, 1))]).unwrap();
        assert!(approx_max2sat(&cs, &r(1, 2), 0).is_ok());
        assert!(approx_max2sat(&cs, &r(3, 5), 0).is_err());
    }

    #[test]
    fn guarantees_in_both_forms() {
        let k3 = ProblemInstance::kcut(G::from_triples(2, &[(0, 1, 1)], EdgeAttr::PLAIN).unwrap(), 3).unwrap();
        let g = approx_cut_det(&k3, &r(1, 10)).unwrap().1.guarantee;
        assert_eq!((g.ratio, g.multiplicative, g.additive), (r(2, 3), r(2, 5), r(17, 30)));
        let d1 = ProblemInstance::dicut(G::from_triples(2, &[(0, 1, 1)], EdgeAttr::DIRECTED).unwrap()).unwrap();
        assert_eq!(approx_cut_det(&d1, &r(1, 10)).unwrap().1.guarantee.ratio, r(1, 3));
        assert_eq!(approx_cut_rand(&d1, &r(1, 10), 0).unwrap().1.guarantee.multiplicative, r(3, 10));
        let cs = ClauseSet::new(1, vec![Clause::unit(Literal::pos(0), r(1, 1))]).unwrap();
        assert_eq!(approx_max2sat(&cs, &r(1, 10), 0).unwrap().1.guarantee.multiplicative, r(3, 5));
    }

    #[test]
    fn single_edge_is_cut() {
        for eps in [r(1, 4), r(1, 10), r(1, 20)] {
            let inst = ProblemInstance::kcut(G::from_triples(2, &[(0, 1, 1)], EdgeAttr::PLAIN).unwrap(), 2).unwrap();
            let (_, rep) = approx_cut_det(&inst, &eps).unwrap();
            assert_eq!(rep.objective, r(1, 1));
            assert_eq!(rep.dropped_weight, r(0, 1));
        }
    }

    #[test]
    fn k3_det_pipeline() {
        let k3 = G::from_triples(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 1)], EdgeAttr::PLAIN).unwrap();
        let inst = ProblemInstance::kcut(k3, 2).unwrap();
        let (_, rep) = approx_cut_det(&inst, &r(1, 4)).unwrap();
        assert!(rep.reduced_objective.clone() * r(2, 1) >= rep.reduced_weight);
        assert_eq!(rep.stats().rounds_used, rep.coloring_stats.rounds_used + rep.engine_stats.rounds_used);
    }

    #[test]
    fn signed_single_edges() {
        for (attr, same) in [(EdgeAttr::POSITIVE, true), (EdgeAttr::NEGATIVE, false)] {
            let inst = ProblemInstance::corrclust(G::from_triples(2, &[(0, 1, 5)], attr).unwrap()).unwrap();
            let (x, rep) = approx_corrclust_det(&inst, &r(1, 10)).unwrap();
            let x = x.to_total().unwrap();
            assert_eq!(x[0] == x[1], same);
            assert_eq!(rep.objective, r(5, 1));
        }
        let plain = ProblemInstance::kcut(G::empty(2).unwrap(), 2).unwrap();
        assert!(approx_corrclust_det(&plain, &r(1, 10)).is_err());
    }

    #[test]
    fn random_pipeline_single_arc() {
        // Edge survives iff the two colors differ: 12 of the 16 color pairs.
        let d1 = ProblemInstance::dicut(G::from_triples(2, &[(0, 1, 1)], EdgeAttr::DIRECTED).unwrap()).unwrap();
        let mut survived = 0;
        for seed in 0..400 {
            let (_, rep) = approx_cut_rand(&d1, &r(1, 4), seed).unwrap();
            assert_eq!(rep.palette_size, 4);
            if rep.dropped_weight == r(0, 1) {
                survived += 1;
                assert_eq!(rep.objective, r(1, 1));
            }
        }
        let frac = survived as f64 / 400.0;
        assert!((frac - 0.75).abs() < 3.0 * (0.75f64 * 0.25 / 400.0).sqrt());
    }

    #[test]
    fn clause_graph_examples() {
        let two = ClauseSet::new(2, vec![Clause::new(vec![Literal::pos(0), Literal::neg(1)], r(3, 1)).unwrap()]).unwrap();
        let h = build_clause_graph(&two);
        assert_eq!(h.graph.edge_count(), 1);
        assert_eq!(h.graph.total_weight(), r(3, 1));

        let units = ClauseSet::new(3, vec![Clause::unit(Literal::pos(0), r(1, 1)), Clause::unit(Literal::neg(2), r(2, 1))]).unwrap();
        let h = build_clause_graph(&units);
        assert_eq!(h.graph.edge_count(), 0);
        assert_eq!(h.carrier, vec![Carrier::Node(0), Carrier::Node(2)]);

        let mixed = ClauseSet::new(
            3,
            vec![
                Clause::unit(Literal::pos(2), r(5, 1)),
                Clause::new(vec![Literal::pos(2), Literal::pos(1)], r(1, 1)).unwrap(),
                Clause::new(vec![Literal::pos(0), Literal::pos(2)], r(1, 1)).unwrap(),
            ],
        )
        .unwrap();
        let h = build_clause_graph(&mixed);
        // the unit clause of node 2 goes toward neighbor 0
        let Carrier::Edge(e) = h.carrier[0] else { panic!() };
        let e = h.graph.edge(e);
        assert_eq!((e.u, e.v), (0, 2));
        assert_eq!(h.graph.total_weight(), r(7, 1));
    }

    #[test]
    fn all_unit_instance_is_solved_exactly() {
        let cs = ClauseSet::new(
            3,
            vec![
                Clause::unit(Literal::pos(0), r(1, 1)),
                Clause::unit(Literal::neg(0), r(2, 1)),
                Clause::unit(Literal::pos(1), r(3, 1)),
                Clause::unit(Literal::neg(2), r(1, 1)),
                Clause::unit(Literal::pos(2), r(1, 1)),
            ],
        )
        .unwrap();
        let (x, rep) = approx_max2sat(&cs, &r(1, 10), 9).unwrap();
        assert_eq!(x.to_total().unwrap(), vec![0, 1, 1]);
        assert_eq!(rep.objective, r(6, 1));
        assert_eq!(rep.engine_stats.rounds_used, 0);
        assert_eq!(rep.dropped_weight, r(0, 1));
    }

    #[test]
    fn single_two_literal_clause() {
        let cs = ClauseSet::new(2, vec![Clause::new(vec![Literal::pos(0), Literal::pos(1)], r(1, 1)).unwrap()]).unwrap();
        for seed in 0..200 {
            let (_, rep) = approx_max2sat(&cs, &r(1, 10), seed).unwrap();
            if rep.dropped_weight == r(0, 1) {
                assert_eq!(rep.objective, r(1, 1));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn det_pipeline_drop_bound(seed in any::<u64>(), n in 2usize..60, kind in 0u8..3) {
            let eps = r(1, 10);
            let inst = match kind {
                0 => ProblemInstance::kcut(generate_random_graph::<Rational>(n, 0.3, 9, Flavor::Undirected, seed).unwrap(), 3).unwrap(),
                1 => ProblemInstance::dicut(generate_random_graph::<Rational>(n, 0.3, 9, Flavor::Directed, seed).unwrap()).unwrap(),
                _ => ProblemInstance::corrclust(generate_random_graph::<Rational>(n, 0.3, 9, Flavor::Signed, seed).unwrap()).unwrap(),
            };
            let (_, rep) = approx_cut_det(&inst, &eps).unwrap();
            prop_assert_eq!(rep.dropped_weight.clone() + rep.reduced_weight.clone(), rep.total_weight.clone());
            prop_assert!(rep.dropped_weight <= &eps * &rep.total_weight);
            prop_assert!(rep.objective >= rep.reduced_objective);
            let colored = weighted_defective_coloring(inst.graph(), &eps, &DefectiveOverrides::default()).unwrap();
            for v in 0..n {
                let d = weighted_defect(inst.graph(), &colored.coloring, v).unwrap();
                prop_assert!(d <= &eps * inst.graph().node_weight(v).unwrap());
            }
        }

        #[test]
        fn clause_graph_conserves_weight(seed in any::<u64>(), n in 1usize..12, m in 0usize..30) {
            let cs: ClauseSet<Rational> = generate_random_clauses(n, m, if n == 1 { 1.0 } else { 0.3 }, 9, seed).unwrap();
            let h = build_clause_graph(&cs);
            let isolated: Rational = cs.clauses().iter().enumerate()
                .filter(|(id, _)| matches!(h.carrier[*id], Carrier::Node(_)))
                .map(|(_, c)| c.weight.clone()).sum();
            prop_assert_eq!(h.graph.total_weight() + isolated, cs.total_weight());
            for c in cs.clauses() {
                if let [a, b] = c.literals() {
                    prop_assert!(h.graph.is_neighbor(a.var, b.var));
                }
            }
        }

        #[test]
        fn max2sat_pipeline_conservation(seed in any::<u64>()) {
            let cs: ClauseSet<Rational> = generate_random_clauses(10, 25, 0.3, 9, seed).unwrap();
            let (_, rep) = approx_max2sat(&cs, &r(1, 10), seed).unwrap();
            prop_assert_eq!(rep.dropped_weight.clone() + rep.reduced_weight.clone(), rep.total_weight.clone());
            prop_assert!(rep.objective >= rep.reduced_objective);
            prop_assert!(rep.engine_stats.rounds_used <= 10 + 1);
        }
    }
}
