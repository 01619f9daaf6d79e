//! Round-synchronous message passing over a graph, with CONGEST accounting.
//!
//! In every round each node that has not halted receives the messages sent
//! to it in the previous round, runs its transition, and may send at most one
//! message to each neighbor. Messages become readable at the next round
//! boundary. Nodes are stepped in ascending id order; since a transition
//! only sees its own state, inbox, topology and random stream, the order is
//! unobservable.
//!
//! `rounds_used` counts executed rounds, i.e. rounds in which at least one
//! node had not yet halted. A program whose nodes all halt on their first
//! transition therefore uses one round. Message counters and the bit-size
//! audit cover every message handed to the network.

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::rng::{node_stream, NodeRng};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub src: usize,
    pub dst: usize,
    pub payload: Vec<u8>,
}

impl Message {
    pub fn bits(&self) -> u64 {
        message_bits(self)
    }
}

/// Exact payload size in bits.
pub fn message_bits(m: &Message) -> u64 {
    8 * m.payload.len() as u64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RoundStats {
    pub rounds_used: usize,
    pub max_message_bits: u64,
    pub total_messages: u64,
    /// False when the round budget ran out before every node halted.
    pub halted: bool,
}

impl RoundStats {
    /// Stats of two phases run back to back.
    pub fn then(&self, next: &RoundStats) -> RoundStats {
        RoundStats {
            rounds_used: self.rounds_used + next.rounds_used,
            max_message_bits: self.max_message_bits.max(next.max_message_bits),
            total_messages: self.total_messages + next.total_messages,
            halted: self.halted && next.halted,
        }
    }

    /// Stats of a phase that needs no communication.
    pub fn silent() -> RoundStats {
        RoundStats {
            halted: true,
            ..Default::default()
        }
    }
}

/// What a node sees of the world during a transition.
pub struct NodeContext<'a, W> {
    id: usize,
    round: usize,
    graph: &'a Graph<W>,
}

impl<'a, W: Scalar> NodeContext<'a, W> {
    pub fn id(&self) -> usize {
        self.id
    }

    /// 1-based index of the current round (the global clock).
    pub fn round(&self) -> usize {
        self.round
    }

    /// Incident edges with the neighbor on the other side.
    pub fn neighbors(&self) -> impl Iterator<Item = (&'a Edge<W>, usize)> + 'a {
        let g = self.graph;
        let id = self.id;
        g.incident(id).iter().map(move |&e| {
            let edge = g.edge(e);
            (edge, edge.other(id))
        })
    }

    pub fn degree(&self) -> usize {
        self.graph.degree(self.id)
    }

    /// The topology handle for building local views. Programs must only read
    /// the center's incident edges through it.
    pub fn graph(&self) -> &'a Graph<W> {
        self.graph
    }
}

/// Messages a node queues during one transition.
#[derive(Debug, Default)]
pub struct Outbox {
    pending: Vec<(usize, Vec<u8>)>,
}

impl Outbox {
    pub fn send(&mut self, dst: usize, payload: Vec<u8>) {
        self.pending.push((dst, payload));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Running,
    Halted,
}

/// Node-local transition.
pub trait NodeProgram<W: Scalar> {
    type State: Clone;

    fn step(
        &self,
        ctx: &NodeContext<'_, W>,
        state: &mut Self::State,
        inbox: &[Message],
        rng: &mut NodeRng,
        outbox: &mut Outbox,
    ) -> Status;
}

/// Runs `program` until every node halts or `max_rounds` rounds have run.
pub fn run_rounds<W: Scalar, P: NodeProgram<W>>(
    graph: &Graph<W>,
    program: &P,
    initial: Vec<P::State>,
    max_rounds: usize,
    seed: u64,
) -> Result<(Vec<P::State>, RoundStats)> {
    let n = graph.node_count();
    if initial.len() != n {
        return Err(Error::DomainMismatch {
            expected: n,
            got: initial.len(),
        });
    }
    let mut states = initial;
    let mut rngs: Vec<NodeRng> = (0..n).map(|v| node_stream(seed, v)).collect();
    let mut halted = vec![false; n];
    let mut inboxes: Vec<Vec<Message>> = vec![Vec::new(); n];
    let mut stats = RoundStats::default();
    let mut round = 0;

    while halted.iter().any(|h| !h) {
        if round == max_rounds {
            stats.halted = false;
            return Ok((states, stats));
        }
        round += 1;
        let mut next: Vec<Vec<Message>> = vec![Vec::new(); n];
        for v in 0..n {
            let inbox = std::mem::take(&mut inboxes[v]);
            if halted[v] {
                continue;
            }
            let ctx = NodeContext {
                id: v,
                round,
                graph,
            };
            let mut outbox = Outbox::default();
            let status = program.step(&ctx, &mut states[v], &inbox, &mut rngs[v], &mut outbox);
            let mut sent_to = Vec::with_capacity(outbox.pending.len());
            for (dst, payload) in outbox.pending {
                if !graph.is_neighbor(v, dst) {
                    return Err(Error::NotANeighbor { src: v, dst, round });
                }
                if sent_to.contains(&dst) {
                    return Err(Error::DuplicateMessage { src: v, dst, round });
                }
                sent_to.push(dst);
                let m = Message { src: v, dst, payload };
                stats.total_messages += 1;
                stats.max_message_bits = stats.max_message_bits.max(m.bits());
                next[dst].push(m);
            }
            if status == Status::Halted {
                halted[v] = true;
            }
        }
        inboxes = next;
        stats.rounds_used = round;
    }
    stats.halted = true;
    Ok((states, stats))
}

/// Length-prefixed sequence of LEB128 unsigned varints.
pub fn encode_varints(values: &[u64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(1 + values.len());
    push_varint(&mut out, values.len() as u64);
    for &v in values {
        push_varint(&mut out, v);
    }
    out
}

fn push_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

pub fn decode_varints(bytes: &[u8]) -> Result<Vec<u64>> {
    let mut pos = 0;
    let len = read_varint(bytes, &mut pos)?;
    let mut values = Vec::with_capacity(len.min(64) as usize);
    for _ in 0..len {
        values.push(read_varint(bytes, &mut pos)?);
    }
    if pos != bytes.len() {
        return Err(Error::Decode(format!("{} trailing bytes", bytes.len() - pos)));
    }
    Ok(values)
}

fn read_varint(bytes: &[u8], pos: &mut usize) -> Result<u64> {
    let mut value = 0u64;
    for shift in (0..64).step_by(7) {
        let byte = *bytes
            .get(*pos)
            .ok_or_else(|| Error::Decode("truncated varint".into()))?;
        *pos += 1;
        value |= u64::from(byte & 0x7f) << shift;
        if byte & 0x80 == 0 {
            return Ok(value);
        }
    }
    Err(Error::Decode("varint longer than 64 bits".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeAttr;
    use crate::scalar::Rational;
    use proptest::prelude::*;
    use rand::Rng;

    fn k3() -> Graph<Rational> {
        Graph::from_triples(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 1)], EdgeAttr::PLAIN).unwrap()
    }

    struct HaltNow;
    impl NodeProgram<Rational> for HaltNow {
        type State = ();
        fn step(&self, _: &NodeContext<'_, Rational>, _: &mut (), _: &[Message], _: &mut NodeRng, _: &mut Outbox) -> Status {
            Status::Halted
        }
    }

    /// Round 1: send own id to every neighbor. Round 2: record and halt.
    struct Echo;
    impl NodeProgram<Rational> for Echo {
        type State = Vec<u64>;
        fn step(
            &self,
            ctx: &NodeContext<'_, Rational>,
            heard: &mut Vec<u64>,
            inbox: &[Message],
            _: &mut NodeRng,
            out: &mut Outbox,
        ) -> Status {
            if ctx.round() == 1 {
                for (_, u) in ctx.neighbors() {
                    out.send(u, encode_varints(&[ctx.id() as u64]));
                }
                Status::Running
            } else {
                for m in inbox {
                    heard.extend(decode_varints(&m.payload).unwrap());
                }
                heard.sort();
                Status::Halted
            }
        }
    }

    struct SendTo(usize);
    impl NodeProgram<Rational> for SendTo {
        type State = ();
        fn step(&self, ctx: &NodeContext<'_, Rational>, _: &mut (), _: &[Message], _: &mut NodeRng, out: &mut Outbox) -> Status {
            if ctx.id() == 0 {
                out.send(self.0, vec![1]);
            }
            Status::Halted
        }
    }

    struct Forever;
    impl NodeProgram<Rational> for Forever {
        type State = u64;
        fn step(&self, _: &NodeContext<'_, Rational>, s: &mut u64, _: &[Message], rng: &mut NodeRng, _: &mut Outbox) -> Status {
            *s = s.wrapping_add(rng.gen::<u64>());
            Status::Running
        }
    }

    #[test]
    fn halting_immediately_uses_one_round_and_no_messages() {
        let (_, stats) = run_rounds(&k3(), &HaltNow, vec![(); 3], 10, 0).unwrap();
        assert_eq!(stats.rounds_used, 1);
        assert_eq!(stats.total_messages, 0);
        assert!(stats.halted);
    }

    #[test]
    fn echo_on_triangle() {
        let (states, stats) = run_rounds(&k3(), &Echo, vec![Vec::new(); 3], 10, 0).unwrap();
        assert_eq!(stats.total_messages, 6);
        assert_eq!(stats.rounds_used, 2);
        assert_eq!(stats.max_message_bits, 16);
        assert_eq!(states, vec![vec![1, 2], vec![0, 2], vec![0, 1]]);
    }

    #[test]
    fn sending_to_non_neighbor_faults() {
        let path = Graph::<Rational>::from_triples(3, &[(0, 1, 1), (1, 2, 1)], EdgeAttr::PLAIN).unwrap();
        assert_eq!(
            run_rounds(&path, &SendTo(2), vec![(); 3], 5, 0).unwrap_err(),
            Error::NotANeighbor { src: 0, dst: 2, round: 1 }
        );
        assert!(run_rounds(&path, &SendTo(1), vec![(); 3], 5, 0).is_ok());
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let (_, stats) = run_rounds(&k3(), &Forever, vec![0; 3], 4, 0).unwrap();
        assert!(!stats.halted);
        assert_eq!(stats.rounds_used, 4);
        let (_, zero) = run_rounds(&k3(), &Forever, vec![0; 3], 0, 0).unwrap();
        assert_eq!(zero.rounds_used, 0);
        assert!(!zero.halted);
    }

    #[test]
    fn seeded_runs_are_deterministic() {
        let a = run_rounds(&k3(), &Forever, vec![0; 3], 7, 99).unwrap();
        let b = run_rounds(&k3(), &Forever, vec![0; 3], 7, 99).unwrap();
        assert_eq!(a, b);
        let c = run_rounds(&k3(), &Forever, vec![0; 3], 7, 100).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn message_sizes() {
        let empty = Message { src: 0, dst: 1, payload: vec![] };
        assert_eq!(message_bits(&empty), 0);
        let one = Message { src: 0, dst: 1, payload: vec![7] };
        assert_eq!(message_bits(&one), 8);
        // length 2, then 12 and 1: one byte each.
        let pair = Message { src: 0, dst: 1, payload: encode_varints(&[12, 1]) };
        assert_eq!(pair.payload, vec![2, 12, 1]);
        assert_eq!(message_bits(&pair), 24);
        // 300 needs two varint bytes.
        assert_eq!(encode_varints(&[300]), vec![1, 0xac, 0x02]);
    }

    #[test]
    fn decode_rejects_garbage() {
        assert!(decode_varints(&[]).is_err());
        assert!(decode_varints(&[2, 1]).is_err());
        assert!(decode_varints(&[1, 1, 9]).is_err());
        assert!(decode_varints(&[1, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff]).is_err());
    }

    proptest! {
        #[test]
        fn varint_round_trip(values in proptest::collection::vec(any::<u64>(), 0..20)) {
            prop_assert_eq!(decode_varints(&encode_varints(&values)).unwrap(), values);
        }
    }
}
