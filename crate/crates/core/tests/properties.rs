use num_traits::{One, Zero};
use olocal::coloring::greedy_legal_coloring;
use olocal::engines::{cond_exp_spec, double_greedy_rand_spec, DoubleGreedySpec, MaxSatSpec};
use olocal::oracle::{brute_force_expectation, brute_force_opt};
use olocal::rng::node_stream;
use olocal::utility::{CutUtility, SatUtility};
use olocal::*;
use proptest::prelude::*;
use rand::Rng;

fn r(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn cut_instance(kind: u8, n: usize, p: f64, seed: u64) -> ExactInstance {
    let g = |flavor| generate_random_graph(n, p, 12, flavor, seed).unwrap();
    match kind {
        0 => ProblemInstance::kcut(g(Flavor::Undirected), 2),
        1 => ProblemInstance::kcut(g(Flavor::Undirected), 3),
        2 => ProblemInstance::dicut(g(Flavor::Directed)),
        _ => ProblemInstance::corrclust(g(Flavor::Signed)),
    }
    .unwrap()
}

fn clauses(n: usize, seed: u64) -> ExactClauseSet {
    let unit = if n == 1 { 1.0 } else { 0.3 };
    generate_random_clauses(n, 3 * n, unit, 12, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn local_delta_is_antisymmetric(kind in 0u8..4, n in 1usize..12, seed in any::<u64>()) {
        let inst = cut_instance(kind, n, 0.5, seed);
        let u = inst.cut_utility().unwrap();
        let d = inst.domain_size();
        let mut rng = node_stream(seed, 0);
        let x: Vec<usize> = (0..n).map(|_| rng.gen_range(0..d)).collect();
        for v in 0..n {
            let view = LocalView::gather(inst.graph(), v, |w| Some(x[w]));
            for a in 0..d {
                for b in 0..d {
                    prop_assert_eq!(u.local_delta(&view, a, b), -u.local_delta(&view, b, a));
                }
            }
        }
    }

    #[test]
    fn no_pipeline_beats_the_oracle(kind in 0u8..5, n in 1usize..10, seed in any::<u64>()) {
        let eps = r(1, 10);
        if kind == 4 {
            let cs = clauses(n, seed);
            let opt = brute_force_opt(&ProblemInstance::max2sat(cs.clone()).unwrap()).unwrap().opt_value;
            let (_, rep) = approx_max2sat(&cs, &eps, seed).unwrap();
            prop_assert!(rep.objective <= opt);
            return Ok(());
        }
        let inst = cut_instance(kind, n, 0.5, seed);
        let opt = brute_force_opt(&inst).unwrap().opt_value;
        prop_assert!(approx_cut_det(&inst, &eps).unwrap().1.objective <= opt.clone());
        if inst.kind() == ProblemKind::DiCut {
            prop_assert!(approx_cut_rand(&inst, &eps, seed).unwrap().1.objective <= opt);
        }
    }

    #[test]
    fn expectations_match_the_probabilistic_bounds(kind in 0u8..5, n in 1usize..9, seed in any::<u64>()) {
        let empty = Assignment::unassigned(n);
        if kind == 4 {
            let cs = clauses(n, seed);
            let inst = ProblemInstance::max2sat(cs.clone()).unwrap();
            let e = brute_force_expectation(&inst.sat_utilities().unwrap().0, &empty).unwrap();
            let exact: Rational = cs
                .clauses()
                .iter()
                .map(|c| c.weight.clone() * if c.is_unit() { r(1, 2) } else { r(3, 4) })
                .sum();
            prop_assert_eq!(&e, &exact);
            prop_assert!(e >= cs.total_weight() * r(1, 2));
            return Ok(());
        }
        let inst = cut_instance(kind, n, 0.5, seed);
        let w = inst.graph().total_weight();
        let factor = match inst.kind() {
            ProblemKind::KCut { k } => Rational::one() - r(1, k as i64),
            ProblemKind::DiCut => r(1, 4),
            _ => r(1, 2),
        };
        let e = brute_force_expectation(&inst.cut_utility().unwrap(), &empty).unwrap();
        prop_assert_eq!(e, factor * w);
    }

    #[test]
    fn cond_exp_dominates_the_expectation(kind in prop_oneof![Just(0u8), Just(1), Just(3)], n in 1usize..9, seed in any::<u64>()) {
        let inst = cut_instance(kind, n, 0.5, seed);
        let u = inst.cut_utility().unwrap();
        let e = brute_force_expectation(&u, &Assignment::unassigned(n)).unwrap();
        let x = run_sequential(inst.graph(), &cond_exp_spec(&u), &Order::random(n, seed), &RandomTape::new(seed)).unwrap();
        prop_assert!(u.eval_full(&x.to_total().unwrap()).unwrap() >= e);
    }

    #[test]
    fn pipeline_round_accounting(kind in 0u8..4, n in 1usize..40, seed in any::<u64>(), eps_den in 4i64..20) {
        let eps = r(1, eps_den);
        let inst = cut_instance(kind, n, 0.3, seed);
        let (_, rep) = approx_cut_det(&inst, &eps).unwrap();
        prop_assert!(rep.engine_stats.rounds_used <= rep.palette_size + 1);
        prop_assert_eq!(rep.stats().rounds_used, rep.coloring_stats.rounds_used + rep.engine_stats.rounds_used);
        prop_assert_eq!(&rep.dropped_weight + &rep.reduced_weight, rep.total_weight.clone());
        prop_assert!(rep.dropped_weight <= eps.clone() * rep.total_weight.clone());
        if inst.kind() == ProblemKind::DiCut {
            let (_, rep) = approx_cut_rand(&inst, &eps, seed).unwrap();
            prop_assert!(rep.engine_stats.rounds_used <= eps_den as usize + 1);
            prop_assert_eq!(rep.coloring_stats.rounds_used, 0);
        }
    }

    #[test]
    fn coin_biases_stay_in_range(a in -50i64..50, b in -50i64..50) {
        let p = DoubleGreedySpec::<Rational, CutUtility<'_, Rational>>::join_probability(r(a, 1), r(b, 1));
        prop_assert!(p >= Rational::zero() && p <= Rational::one());
        let q = MaxSatSpec::<Rational, SatUtility<'_, Rational>>::true_probability(r(a, 1), r(b, 1));
        prop_assert!(q >= Rational::zero() && q <= Rational::one());
    }

    #[test]
    fn rand_usm_equivalence_on_float_weights(n in 1usize..30, seed in any::<u64>()) {
        // The executors agree for the fast scalar too.
        let g: FloatGraph = generate_random_graph(n, 0.3, 9, Flavor::Directed, seed).unwrap();
        let inst = ProblemInstance::dicut(g).unwrap();
        let u = inst.cut_utility().unwrap();
        let phi = greedy_legal_coloring(inst.graph());
        let spec = double_greedy_rand_spec(&u);
        let tape = RandomTape::new(seed);
        let (dist, _) = run_distributed(inst.graph(), &spec, &phi, &tape).unwrap();
        let seq = run_sequential(inst.graph(), &spec, &induced_order(&phi, inst.graph()).unwrap(), &tape).unwrap();
        prop_assert_eq!(dist, seq);
    }
}

#[test]
fn text_formats_feed_the_pipelines() {
    let g: ExactGraph = parse_graph("# a directed path\n3 2\n0 1 2 D N\n1 2 3 D N\n").unwrap();
    let inst = ProblemInstance::dicut(g).unwrap();
    let (x, rep) = approx_cut_det(&inst, &r(1, 4)).unwrap();
    assert_eq!(x.len(), 3);
    assert_eq!(rep.total_weight, r(5, 1));
    assert_eq!(brute_force_opt(&inst).unwrap().opt_value, r(3, 1));
    assert!(rep.objective <= r(3, 1));
    assert_eq!(inst.cut_utility().unwrap().eval_full(&x.to_total().unwrap()).unwrap(), rep.objective);

    let cs: ExactClauseSet = parse_clauses("2 2\n1 0 +\n2 0 + 1 -\n").unwrap();
    assert_eq!(cs.total_weight(), r(3, 1));
    for seed in 0..10 {
        let (x, rep) = approx_max2sat(&cs, &r(1, 2), seed).unwrap();
        assert!(x.is_total());
        assert!(rep.objective <= r(3, 1));
    }
}
