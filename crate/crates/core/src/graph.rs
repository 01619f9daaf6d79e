//! Weighted graphs with per-edge direction and sign.
//!
//! Text format: a header `n m`, then `m` lines `u v w D S` with
//! `D` in `{U, D}` (undirected / directed `u -> v`), `S` in `{N, +, -}` and an
//! integer weight `w >= 0`. Lines starting with `#` and blank lines are
//! ignored.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::Rng;

use crate::coloring::Coloring;
use crate::error::{Error, Result};
use crate::rng::node_stream;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Undirected,
    /// Directed from the edge's `u` endpoint to its `v` endpoint.
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Positive,
    Negative,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeAttr {
    pub direction: Direction,
    pub sign: Sign,
}

impl EdgeAttr {
    pub const PLAIN: EdgeAttr = EdgeAttr {
        direction: Direction::Undirected,
        sign: Sign::None,
    };
    pub const DIRECTED: EdgeAttr = EdgeAttr {
        direction: Direction::Forward,
        sign: Sign::None,
    };
    pub const POSITIVE: EdgeAttr = EdgeAttr {
        direction: Direction::Undirected,
        sign: Sign::Positive,
    };
    pub const NEGATIVE: EdgeAttr = EdgeAttr {
        direction: Direction::Undirected,
        sign: Sign::Negative,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge<W> {
    pub u: usize,
    pub v: usize,
    pub weight: W,
    pub attr: EdgeAttr,
}

impl<W> Edge<W> {
    /// The endpoint opposite to `x`.
    pub fn other(&self, x: usize) -> usize {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

/// An immutable weighted graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph<W> {
    node_count: usize,
    edges: Vec<Edge<W>>,
    adjacency: Vec<Vec<usize>>,
}

impl<W: Scalar> Graph<W> {
    /// Validates and indexes an edge list.
    pub fn new(node_count: usize, edges: Vec<Edge<W>>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidInstance("graph needs at least one node".into()));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); node_count];
        for (id, e) in edges.iter().enumerate() {
            for x in [e.u, e.v] {
                if x >= node_count {
                    return Err(Error::InvalidNode {
                        node: x,
                        count: node_count,
                    });
                }
            }
            if e.u == e.v {
                return Err(Error::SelfLoop { node: e.u });
            }
            if e.weight.is_negative() {
                return Err(Error::InvalidInstance(format!("edge {id} has negative weight")));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::ParallelEdge { u: e.u, v: e.v });
            }
            adjacency[e.u].push(id);
            adjacency[e.v].push(id);
        }
        Ok(Self {
            node_count,
            edges,
            adjacency,
        })
    }

    /// `n` isolated nodes.
    pub fn empty(node_count: usize) -> Result<Self> {
        Self::new(node_count, Vec::new())
    }

    /// Convenience constructor for unit-free test instances.
    pub fn from_triples(node_count: usize, triples: &[(usize, usize, u64)], attr: EdgeAttr) -> Result<Self> {
        let edges = triples
            .iter()
            .map(|&(u, v, w)| Edge {
                u,
                v,
                weight: W::from_u64(w),
                attr,
            })
            .collect();
        Self::new(node_count, edges)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge<W>] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge<W> {
        &self.edges[id]
    }

    /// Ids of the edges incident to `v`.
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// `(edge id, neighbor)` pairs around `v`.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency[v].iter().map(move |&id| (id, self.edges[id].other(v)))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_neighbor(&self, v: usize, u: usize) -> bool {
        self.neighbors(v).any(|(_, x)| x == u)
    }

    /// Sum of all edge weights.
    pub fn total_weight(&self) -> W {
        self.edges.iter().map(|e| e.weight.clone()).sum()
    }

    /// Sum of the weights of edges incident to `v`.
    pub fn node_weight(&self, v: usize) -> Result<W> {
        self.check_node(v)?;
        Ok(self.adjacency[v]
            .iter()
            .map(|&id| self.edges[id].weight.clone())
            .sum())
    }

    pub fn check_node(&self, v: usize) -> Result<()> {
        if v >= self.node_count {
            Err(Error::InvalidNode {
                node: v,
                count: self.node_count,
            })
        } else {
            Ok(())
        }
    }

    /// Keeps the edges accepted by `keep`, returning the new graph and the
    /// original ids of the kept edges (in order).
    pub fn retain_edges(&self, mut keep: impl FnMut(usize, &Edge<W>) -> bool) -> (Graph<W>, Vec<usize>) {
        let mut ids = Vec::new();
        let mut edges = Vec::new();
        for (id, e) in self.edges.iter().enumerate() {
            if keep(id, e) {
                ids.push(id);
                edges.push(e.clone());
            }
        }
        let g = Graph::new(self.node_count, edges).expect("subgraph of a valid graph");
        (g, ids)
    }

    /// The subgraph of bichromatic edges under `phi`; `phi` is legal on it.
    pub fn filter_bichromatic(&self, phi: &Coloring) -> Result<Graph<W>> {
        phi.check_covers(self.node_count)?;
        Ok(self
            .retain_edges(|_, e| phi.color(e.u) != phi.color(e.v))
            .0)
    }

    /// The subgraph induced by `nodes`, relabelled `0..nodes.len()` in the
    /// given order.
    pub fn induced(&self, nodes: &[usize]) -> Result<Graph<W>> {
        let mut index = vec![usize::MAX; self.node_count];
        for (i, &v) in nodes.iter().enumerate() {
            self.check_node(v)?;
            index[v] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| index[e.u] != usize::MAX && index[e.v] != usize::MAX)
            .map(|e| Edge {
                u: index[e.u],
                v: index[e.v],
                weight: e.weight.clone(),
                attr: e.attr,
            })
            .collect();
        Graph::new(nodes.len(), edges)
    }

    /// Serializes in the text format. Fails on non-integer weights.
    pub fn to_text(&self) -> Result<String> {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.node_count, self.edges.len());
        for (id, e) in self.edges.iter().enumerate() {
            let w = e
                .weight
                .to_integer()
                .ok_or_else(|| Error::InvalidInstance(format!("edge {id} has a non-integer weight")))?;
            let d = match e.attr.direction {
                Direction::Undirected => 'U',
                Direction::Forward => 'D',
            };
            let s = match e.attr.sign {
                Sign::None => 'N',
                Sign::Positive => '+',
                Sign::Negative => '-',
            };
            let _ = writeln!(out, "{} {} {} {} {}", e.u, e.v, w, d, s);
        }
        Ok(out)
    }
}

/// Non-comment, non-blank lines with their 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub(crate) fn parse_header(lines: &mut dyn Iterator<Item = (usize, &str)>) -> Result<(usize, usize, usize)> {
    let (line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(Error::Parse {
            line,
            message: "header must be `n m`".into(),
        });
    }
    let n = parse_field(fields[0], line, "node count")?;
    let m = parse_field(fields[1], line, "record count")?;
    Ok((line, n, m))
}

pub(crate) fn parse_field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad {what}: {s:?}"),
    })
}

/// Parses an integer weight, distinguishing negative values.
pub(crate) fn parse_weight<W: Scalar>(s: &str, line: usize) -> Result<W> {
    match s.parse::<i128>() {
        Ok(w) if w < 0 => Err(Error::NegativeWeight { line }),
        Ok(_) => Ok(W::from_u64(parse_field::<u64>(s, line, "weight")?)),
        Err(_) => Err(Error::Parse {
            line,
            message: format!("bad weight: {s:?}"),
        }),
    }
}

/// Parses the graph text format.
pub fn parse_graph<W: Scalar>(text: &str) -> Result<Graph<W>> {
    let mut lines = content_lines(text);
    let (header_line, n, m) = parse_header(&mut lines)?;
    let mut edges = Vec::with_capacity(m);
    let mut seen = HashSet::with_capacity(m);
    for (line, content) in lines.by_ref().take(m) {
        let f: Vec<&str> = content.split_whitespace().collect();
        if f.len() != 5 {
            return Err(Error::Parse {
                line,
                message: "edge line must be `u v w D S`".into(),
            });
        }
        let u: usize = parse_field(f[0], line, "endpoint")?;
        let v: usize = parse_field(f[1], line, "endpoint")?;
        let weight = parse_weight(f[2], line)?;
        let direction = match f[3] {
            "U" => Direction::Undirected,
            "D" => Direction::Forward,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("bad direction {other:?}"),
                })
            }
        };
        let sign = match f[4] {
            "N" => Sign::None,
            "+" => Sign::Positive,
            "-" => Sign::Negative,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("bad sign {other:?}"),
                })
            }
        };
        if u == v {
            return Err(Error::SelfLoop { node: u });
        }
        if u >= n || v >= n {
            return Err(Error::Parse {
                line,
                message: format!("endpoint out of range (n = {n})"),
            });
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(Error::ParallelEdge { u, v });
        }
        edges.push(Edge {
            u,
            v,
            weight,
            attr: EdgeAttr { direction, sign },
        });
    }
    if edges.len() != m {
        return Err(Error::Parse {
            line: header_line,
            message: format!("header promises {m} edges, found {}", edges.len()),
        });
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::Parse {
            line,
            message: "trailing content after the last edge".into(),
        });
    }
    Graph::new(n, edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    Undirected,
    Directed,
    Signed,
}

/// Erdős–Rényi graph with uniform integer weights in `[1, w_max]`.
///
/// Each unordered pair `u < v` (lexicographic) is kept with probability `p`.
/// Directed edges get a uniformly random orientation; signed edges a uniformly
/// random sign.
pub fn generate_random_graph<W: Scalar>(
    n: usize,
    p: f64,
    w_max: u64,
    flavor: Flavor,
    seed: u64,
) -> Result<Graph<W>> {
    if n == 0 || !(0.0..=1.0).contains(&p) || w_max == 0 {
        return Err(Error::Precondition(format!(
            "generator needs n >= 1, 0 <= p <= 1, w_max >= 1 (got n={n}, p={p}, w_max={w_max})"
        )));
    }
    let mut rng = node_stream(seed, usize::MAX);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if !rng.gen_bool(p) {
                continue;
            }
            let weight = W::from_u64(rng.gen_range(1..=w_max));
            let edge = match flavor {
                Flavor::Undirected => Edge {
                    u,
                    v,
                    weight,
                    attr: EdgeAttr::PLAIN,
                },
                Flavor::Directed => {
                    let (a, b) = if rng.gen_bool(0.5) { (u, v) } else { (v, u) };
                    Edge {
                        u: a,
                        v: b,
                        weight,
                        attr: EdgeAttr::DIRECTED,
                    }
                }
                Flavor::Signed => Edge {
                    u,
                    v,
                    weight,
                    attr: if rng.gen_bool(0.5) {
                        EdgeAttr::POSITIVE
                    } else {
                        EdgeAttr::NEGATIVE
                    },
                },
            };
            edges.push(edge);
        }
    }
    Graph::new(n, edges)
}
