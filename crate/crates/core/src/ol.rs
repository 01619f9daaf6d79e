//! Orderless-local algorithms.
//!
//! A spec is an `(init, decide)` pair. [`run_sequential`] initializes every
//! node and then visits nodes in an arbitrary order, setting each value from
//! its 1-hop view and its private random stream. [`run_distributed`] runs the
//! same spec on the simulator: one round broadcasts the initial values, then
//! one round per non-empty color class of a legal coloring lets that class
//! decide and broadcast. With the order sorting nodes by `(color, id)` the two
//! executors produce identical assignments.

use std::fmt::Debug;

use rand::seq::SliceRandom;

use crate::coloring::{first_conflict, Coloring};
use crate::congest::{decode_varints, encode_varints, run_rounds, Message, NodeContext, NodeProgram, Outbox, RoundStats, Status};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::rng::{node_stream, NodeRng, RandomTape};
use crate::scalar::Scalar;

/// A partial map from nodes to values; `None` is the unassigned state ⊥.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment<V> {
    values: Vec<Option<V>>,
}

impl<V: Clone> Assignment<V> {
    pub fn unassigned(n: usize) -> Self {
        Self { values: vec![None; n] }
    }

    pub fn from_total(values: Vec<V>) -> Self {
        Self {
            values: values.into_iter().map(Some).collect(),
        }
    }

    pub fn from_partial(values: Vec<Option<V>>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, v: usize) -> Option<&V> {
        self.values[v].as_ref()
    }

    /// Assigns `v`, replacing any previous value.
    pub fn set(&mut self, v: usize, x: V) {
        self.values[v] = Some(x);
    }

    pub fn unset(&mut self, v: usize) {
        self.values[v] = None;
    }

    pub fn values(&self) -> &[Option<V>] {
        &self.values
    }

    pub fn is_total(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn unassigned_nodes(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&v| self.values[v].is_none()).collect()
    }

    pub fn to_total(&self) -> Result<Vec<V>> {
        self.values
            .iter()
            .enumerate()
            .map(|(node, x)| x.clone().ok_or(Error::PartialAssignment { node }))
            .collect()
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&V) -> U) -> Assignment<U> {
        Assignment {
            values: self.values.iter().map(|x| x.as_ref().map(&f)).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Neighbor<'a, W, V> {
    pub node: usize,
    pub edge: &'a Edge<W>,
    pub value: Option<V>,
}

/// `L_v[X]`: the center, its incident edges and the current values of its
/// neighbors, sorted by neighbor id.
#[derive(Debug, Clone)]
pub struct LocalView<'a, W, V> {
    center: usize,
    neighbors: Vec<Neighbor<'a, W, V>>,
}

impl<'a, W: Scalar, V: Clone> LocalView<'a, W, V> {
    pub fn gather(g: &'a Graph<W>, center: usize, value_of: impl Fn(usize) -> Option<V>) -> Self {
        let mut neighbors: Vec<Neighbor<'a, W, V>> = g
            .neighbors(center)
            .map(|(e, u)| Neighbor {
                node: u,
                edge: g.edge(e),
                value: value_of(u),
            })
            .collect();
        neighbors.sort_by_key(|n| n.node);
        Self { center, neighbors }
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn neighbors(&self) -> &[Neighbor<'a, W, V>] {
        &self.neighbors
    }

    pub fn degree(&self) -> usize {
        self.neighbors.len()
    }

    /// Index of neighbor `u` in [`Self::neighbors`].
    pub fn position(&self, u: usize) -> Option<usize> {
        self.neighbors.binary_search_by_key(&u, |n| n.node).ok()
    }

    pub fn value_of(&self, u: usize) -> Option<&V> {
        self.position(u).and_then(|i| self.neighbors[i].value.as_ref())
    }

    pub fn set_value(&mut self, i: usize, value: Option<V>) {
        self.neighbors[i].value = value;
    }

    pub fn map_values<U: Clone>(&self, f: impl Fn(&V) -> U) -> LocalView<'a, W, U> {
        LocalView {
            center: self.center,
            neighbors: self
                .neighbors
                .iter()
                .map(|n| Neighbor {
                    node: n.node,
                    edge: n.edge,
                    value: n.value.as_ref().map(&f),
                })
                .collect(),
        }
    }
}

/// The `(init, decide)` pair run by both executors.
pub trait OrderlessLocalSpec<W: Scalar> {
    type Value: Clone + PartialEq + Debug;

    /// Membership in the value domain `A`.
    fn contains(&self, x: &Self::Value) -> bool;

    fn init(&self, view: &LocalView<'_, W, Self::Value>) -> Option<Self::Value>;

    /// Must draw randomness only from `rng`.
    fn decide(&self, view: &LocalView<'_, W, Self::Value>, rng: &mut NodeRng) -> Self::Value;

    /// Wire code of a value; codes must be below `u64::MAX`.
    fn encode(&self, x: &Self::Value) -> u64;

    fn decode(&self, code: u64) -> Option<Self::Value>;
}

/// A permutation of the nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Order(Vec<usize>);

impl Order {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &v in &perm {
            match seen.get_mut(v) {
                Some(s @ false) => *s = true,
                _ => return Err(Error::Precondition(format!("order is not a permutation (node {v})"))),
            }
        }
        Ok(Self(perm))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// A uniformly random order.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut node_stream(seed, usize::MAX - 2));
        Self(perm)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Nodes sorted by `(color, id)`.
pub fn induced_order<W: Scalar>(phi: &Coloring, g: &Graph<W>) -> Result<Order> {
    phi.check_covers(g.node_count())?;
    let mut perm: Vec<usize> = (0..g.node_count()).collect();
    perm.sort_by_key(|&v| (phi.color(v), v));
    Ok(Order(perm))
}

fn initial_values<W: Scalar, S: OrderlessLocalSpec<W>>(g: &Graph<W>, spec: &S) -> Result<Vec<Option<S::Value>>> {
    (0..g.node_count())
        .map(|v| {
            let x = spec.init(&LocalView::gather(g, v, |_| None));
            match &x {
                Some(x) if !spec.contains(x) => Err(Error::OutOfDomain { node: v }),
                _ => Ok(x),
            }
        })
        .collect()
}

/// Visits the nodes in order `pi`, each deciding from its current view.
pub fn run_sequential<W: Scalar, S: OrderlessLocalSpec<W>>(
    g: &Graph<W>,
    spec: &S,
    pi: &Order,
    tape: &RandomTape,
) -> Result<Assignment<S::Value>> {
    run_sequential_traced(g, spec, pi, tape, |_, _| {})
}

/// [`run_sequential`], calling `observe(v, X)` after each decision.
pub fn run_sequential_traced<W: Scalar, S: OrderlessLocalSpec<W>>(
    g: &Graph<W>,
    spec: &S,
    pi: &Order,
    tape: &RandomTape,
    mut observe: impl FnMut(usize, &Assignment<S::Value>),
) -> Result<Assignment<S::Value>> {
    if pi.len() != g.node_count() {
        return Err(Error::DomainMismatch {
            expected: g.node_count(),
            got: pi.len(),
        });
    }
    let mut x = Assignment {
        values: initial_values(g, spec)?,
    };
    for &v in pi.as_slice() {
        let view = LocalView::gather(g, v, |u| x.values[u].clone());
        let value = spec.decide(&view, &mut tape.stream(v));
        if !spec.contains(&value) {
            return Err(Error::OutOfDomain { node: v });
        }
        x.set(v, value);
        observe(v, &x);
    }
    Ok(x)
}

#[derive(Debug, Clone)]
struct OlState<V> {
    color: usize,
    value: Option<V>,
    /// Last value heard from each neighbor, keyed by neighbor id.
    known: Vec<(usize, Option<V>)>,
    decided_round: Option<usize>,
    fault: Option<Error>,
}

impl<V: Clone> OlState<V> {
    fn lookup(&self, u: usize) -> Option<V> {
        self.known
            .binary_search_by_key(&u, |(n, _)| *n)
            .ok()
            .and_then(|i| self.known[i].1.clone())
    }
}

/// Round 1 runs `init` and broadcasts; round `j + 2` lets class `schedule[j]`
/// decide and broadcast. Everyone halts after the last class.
struct OlProgram<'s, S> {
    spec: &'s S,
    schedule: Vec<usize>,
}

/// ⊥ travels as 0 and a value as its code plus one.
fn payload<W: Scalar, S: OrderlessLocalSpec<W>>(spec: &S, x: &Option<S::Value>) -> Vec<u8> {
    let code = x.as_ref().map_or(0, |x| spec.encode(x) + 1);
    encode_varints(&[code])
}

impl<W: Scalar, S: OrderlessLocalSpec<W>> NodeProgram<W> for OlProgram<'_, S> {
    type State = OlState<S::Value>;

    fn step(
        &self,
        ctx: &NodeContext<'_, W>,
        state: &mut Self::State,
        inbox: &[Message],
        rng: &mut NodeRng,
        out: &mut Outbox,
    ) -> Status {
        let round = ctx.round();
        let last = self.schedule.len() + 1;
        if round == 1 {
            let mut known: Vec<(usize, Option<S::Value>)> = ctx.neighbors().map(|(_, u)| (u, None)).collect();
            known.sort_by_key(|(u, _)| *u);
            state.known = known;
            let view = LocalView::gather(ctx.graph(), ctx.id(), |_| None);
            state.value = self.spec.init(&view);
            if matches!(&state.value, Some(x) if !self.spec.contains(x)) {
                state.fault.get_or_insert(Error::OutOfDomain { node: ctx.id() });
            }
            let payload = payload(self.spec, &state.value);
            for (_, u) in ctx.neighbors() {
                out.send(u, payload.clone());
            }
            return Status::Running;
        }

        for m in inbox {
            if state.decided_round == Some(round - 1) {
                state.fault.get_or_insert(Error::IllegalColoring { u: ctx.id(), v: m.src });
            }
            let value = match decode_varints(&m.payload) {
                Ok(words) if words.len() == 1 => match words[0] {
                    0 => Ok(None),
                    code => self
                        .spec
                        .decode(code - 1)
                        .map(Some)
                        .ok_or_else(|| Error::Decode(format!("unknown value code {}", code - 1))),
                },
                Ok(_) => Err(Error::Decode("expected exactly one value".into())),
                Err(e) => Err(e),
            };
            match value {
                Ok(value) => {
                    if let Ok(i) = state.known.binary_search_by_key(&m.src, |(n, _)| *n) {
                        state.known[i].1 = value;
                    }
                }
                Err(e) => {
                    state.fault.get_or_insert(e);
                }
            }
        }

        let my_round = self.schedule.binary_search(&state.color).map(|j| j + 2);
        if my_round == Ok(round) {
            let view = LocalView::gather(ctx.graph(), ctx.id(), |u| state.lookup(u));
            let x = self.spec.decide(&view, rng);
            if !self.spec.contains(&x) {
                state.fault.get_or_insert(Error::OutOfDomain { node: ctx.id() });
            }
            state.value = Some(x);
            state.decided_round = Some(round);
            let payload = payload(self.spec, &state.value);
            for (_, u) in ctx.neighbors() {
                out.send(u, payload.clone());
            }
        }
        if round >= last {
            Status::Halted
        } else {
            Status::Running
        }
    }
}

/// Runs on the simulator one color class per round. `phi` must be legal; the result equals
/// `run_sequential(g, spec, induced_order(phi, g), tape)`.
pub fn run_distributed<W: Scalar, S: OrderlessLocalSpec<W>>(
    g: &Graph<W>,
    spec: &S,
    phi: &Coloring,
    tape: &RandomTape,
) -> Result<(Assignment<S::Value>, RoundStats)> {
    if let Some((u, v)) = first_conflict(g, phi)? {
        return Err(Error::IllegalColoring { u, v });
    }
    let program = OlProgram {
        spec,
        schedule: phi.used_colors(),
    };
    let initial = (0..g.node_count())
        .map(|v| OlState {
            color: phi.color(v),
            value: None,
            known: Vec::new(),
            decided_round: None,
            fault: None,
        })
        .collect();
    let rounds = program.schedule.len() + 1;
    let (states, stats) = run_rounds(g, &program, initial, rounds, tape.seed())?;
    if let Some(e) = states.iter().find_map(|s| s.fault.clone()) {
        return Err(e);
    }
    debug_assert!(stats.halted);
    Ok((
        Assignment {
            values: states.into_iter().map(|s| s.value).collect(),
        },
        stats,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::{greedy_legal_coloring, id_coloring, random_coloring};
    use crate::graph::{generate_random_graph, EdgeAttr, Flavor};
    use crate::scalar::Rational;
    use proptest::prelude::*;
    use rand::Rng;

    type G = Graph<Rational>;

    /// Init ⊥, decide a fixed value.
    struct Constant(usize);

    impl<W: Scalar> OrderlessLocalSpec<W> for Constant {
        type Value = usize;
        fn contains(&self, x: &usize) -> bool {
            *x < 4
        }
        fn init(&self, _: &LocalView<'_, W, usize>) -> Option<usize> {
            None
        }
        fn decide(&self, _: &LocalView<'_, W, usize>, _: &mut NodeRng) -> usize {
            self.0
        }
        fn encode(&self, x: &usize) -> u64 {
            *x as u64
        }
        fn decode(&self, code: u64) -> Option<usize> {
            Some(code as usize)
        }
    }

    /// Order- and randomness-sensitive: one random bit, plus the smallest
    /// value not used by an already decided neighbor, plus its own init.
    struct Sensitive;

    impl<W: Scalar> OrderlessLocalSpec<W> for Sensitive {
        type Value = u64;
        fn contains(&self, _: &u64) -> bool {
            true
        }
        fn init(&self, view: &LocalView<'_, W, u64>) -> Option<u64> {
            view.center().is_multiple_of(3).then_some(1000 + view.center() as u64)
        }
        fn decide(&self, view: &LocalView<'_, W, u64>, rng: &mut NodeRng) -> u64 {
            let taken: Vec<u64> = view.neighbors().iter().filter_map(|n| n.value).collect();
            let free = (0..).find(|x| !taken.contains(x)).unwrap();
            free * 2 + rng.gen_range(0..2)
        }
        fn encode(&self, x: &u64) -> u64 {
            *x
        }
        fn decode(&self, code: u64) -> Option<u64> {
            Some(code)
        }
    }

    #[test]
    fn constant_decide() {
        let g: G = generate_random_graph(10, 0.3, 3, Flavor::Undirected, 1).unwrap();
        let x = run_sequential(&g, &Constant(0), &Order::identity(10), &RandomTape::new(0)).unwrap();
        assert_eq!(x.to_total().unwrap(), vec![0; 10]);
        let one = G::empty(1).unwrap();
        let x = run_sequential(&one, &Constant(1), &Order::identity(1), &RandomTape::new(0)).unwrap();
        assert_eq!(x.to_total().unwrap(), vec![1]);
    }

    #[test]
    fn out_of_domain_is_a_fault() {
        let g = G::empty(2).unwrap();
        let err = run_sequential(&g, &Constant(9), &Order::identity(2), &RandomTape::new(0)).unwrap_err();
        assert_eq!(err, Error::OutOfDomain { node: 0 });
        let err = run_distributed(&g, &Constant(9), &id_coloring(&g), &RandomTape::new(0)).unwrap_err();
        assert_eq!(err, Error::OutOfDomain { node: 0 });
    }

    #[test]
    fn single_node_takes_two_rounds() {
        let one = G::empty(1).unwrap();
        let (x, stats) = run_distributed(&one, &Constant(1), &id_coloring(&one), &RandomTape::new(0)).unwrap();
        assert_eq!(x.to_total().unwrap(), vec![1]);
        assert_eq!(stats.rounds_used, 2);
        assert_eq!(stats.total_messages, 0);
    }

    #[test]
    fn empty_classes_are_skipped() {
        let g = G::from_triples(3, &[(0, 1, 1), (1, 2, 1)], EdgeAttr::PLAIN).unwrap();
        let phi = Coloring::new(vec![0, 5, 9], 10).unwrap();
        let (_, stats) = run_distributed(&g, &Sensitive, &phi, &RandomTape::new(3)).unwrap();
        assert_eq!(stats.rounds_used, 4);
        // init broadcast on both edges both ways, then one broadcast per decider
        assert_eq!(stats.total_messages, 4 + 1 + 2 + 1);
    }

    #[test]
    fn illegal_coloring_rejected() {
        let g = G::from_triples(2, &[(0, 1, 1)], EdgeAttr::PLAIN).unwrap();
        let phi = Coloring::new(vec![0, 0], 1).unwrap();
        assert!(matches!(
            run_distributed(&g, &Constant(0), &phi, &RandomTape::new(0)),
            Err(Error::IllegalColoring { .. })
        ));
    }

    #[test]
    fn induced_order_examples() {
        let g = G::empty(3).unwrap();
        assert_eq!(induced_order(&id_coloring(&g), &g).unwrap(), Order::identity(3));
        let mono = Coloring::new(vec![0, 0, 0], 1).unwrap();
        assert_eq!(induced_order(&mono, &g).unwrap(), Order::identity(3));
        let phi = Coloring::new(vec![1, 0, 0], 2).unwrap();
        assert_eq!(induced_order(&phi, &g).unwrap().as_slice(), &[1, 2, 0]);
        assert!(induced_order(&phi, &G::empty(4).unwrap()).is_err());
    }

    #[test]
    fn order_validation() {
        assert!(Order::new(vec![2, 0, 1]).is_ok());
        assert!(Order::new(vec![0, 0, 1]).is_err());
        assert!(Order::new(vec![0, 3]).is_err());
        let r = Order::random(50, 4);
        assert!(Order::new(r.as_slice().to_vec()).is_ok());
        assert_eq!(r, Order::random(50, 4));
    }

    #[test]
    fn assignment_basics() {
        let mut x: Assignment<usize> = Assignment::unassigned(3);
        assert_eq!(x.unassigned_nodes(), vec![0, 1, 2]);
        x.set(1, 4);
        x.set(1, 2);
        assert_eq!(x.get(1), Some(&2));
        assert_eq!(x.to_total(), Err(Error::PartialAssignment { node: 0 }));
        x.unset(1);
        assert!(x.get(1).is_none());
        assert!(Assignment::from_total(vec![1, 2]).is_total());
    }

    #[test]
    fn views_are_sorted_and_mappable() {
        let g = G::from_triples(4, &[(0, 3, 1), (0, 1, 2), (2, 0, 3)], EdgeAttr::PLAIN).unwrap();
        let values = [None, Some(7usize), None, Some(9)];
        let view = LocalView::gather(&g, 0, |u| values[u]);
        let ids: Vec<usize> = view.neighbors().iter().map(|n| n.node).collect();
        assert_eq!(ids, vec![1, 2, 3]);
        assert_eq!(view.value_of(3), Some(&9));
        assert_eq!(view.value_of(2), None);
        assert_eq!(view.position(0), None);
        let doubled = view.map_values(|x| x * 2);
        assert_eq!(doubled.value_of(1), Some(&14));
    }

    #[test]
    fn randomness_is_isolated_per_node() {
        // A node's draws depend only on its own stream, so any order in which
        // its decided neighbors are the same gives the same value.
        let g = G::empty(6).unwrap();
        let tape = RandomTape::new(11);
        let a = run_sequential(&g, &Sensitive, &Order::identity(6), &tape).unwrap();
        let b = run_sequential(&g, &Sensitive, &Order::new(vec![5, 3, 1, 0, 2, 4]).unwrap(), &tape).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn distributed_equals_sequential_under_induced_order(
            n in 1usize..30, p in 0.0f64..0.8, seed in any::<u64>(), c in 1usize..6, which in 0u8..3
        ) {
            let g: G = generate_random_graph(n, p, 5, Flavor::Undirected, seed).unwrap();
            let phi = match which {
                0 => id_coloring(&g),
                1 => greedy_legal_coloring(&g),
                _ => {
                    let r = random_coloring(&g, c, seed).unwrap();
                    let g2 = g.filter_bichromatic(&r).unwrap();
                    let tape = RandomTape::new(seed ^ 1);
                    let (x, stats) = run_distributed(&g2, &Sensitive, &r, &tape).unwrap();
                    let y = run_sequential(&g2, &Sensitive, &induced_order(&r, &g2).unwrap(), &tape).unwrap();
                    prop_assert_eq!(x, y);
                    prop_assert_eq!(stats.rounds_used, r.used_colors().len() + 1);
                    return Ok(());
                }
            };
            let tape = RandomTape::new(seed);
            let (x, stats) = run_distributed(&g, &Sensitive, &phi, &tape).unwrap();
            let y = run_sequential(&g, &Sensitive, &induced_order(&phi, &g).unwrap(), &tape).unwrap();
            prop_assert_eq!(x, y);
            prop_assert_eq!(stats.rounds_used, phi.used_colors().len() + 1);
            prop_assert!(stats.halted);
        }
    }
}
