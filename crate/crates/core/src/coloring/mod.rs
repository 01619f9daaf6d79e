//! Vertex colorings and their audits.

mod defective;

pub use defective::{
    build_schedule, choose_step_params, kuhn_refine_step, newly_monochromatic_weight, poly_eval,
    weighted_defective_coloring, DefectiveColoring, DefectiveColoringParams, DefectiveOverrides,
    StepParams,
};

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{content_lines, parse_field, Graph};
use crate::rng::RandomTape;
use crate::scalar::Scalar;

/// A total coloring `node -> 0..palette_size`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coloring {
    colors: Vec<usize>,
    palette_size: usize,
}

impl Coloring {
    pub fn new(colors: Vec<usize>, palette_size: usize) -> Result<Self> {
        if let Some(v) = colors.iter().position(|&c| c >= palette_size) {
            return Err(Error::InvalidInstance(format!(
                "node {v} has color {} outside palette {palette_size}",
                colors[v]
            )));
        }
        Ok(Self { colors, palette_size })
    }

    pub fn color(&self, v: usize) -> usize {
        self.colors[v]
    }

    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    pub fn palette_size(&self) -> usize {
        self.palette_size
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    /// Distinct colors actually used, ascending.
    pub fn used_colors(&self) -> Vec<usize> {
        let mut used = self.colors.clone();
        used.sort_unstable();
        used.dedup();
        used
    }

    pub(crate) fn check_covers(&self, n: usize) -> Result<()> {
        if self.colors.len() != n {
            Err(Error::DomainMismatch {
                expected: n,
                got: self.colors.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Header `n palette_size`, then one `v color` line per node.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.colors.len(), self.palette_size);
        for (v, c) in self.colors.iter().enumerate() {
            let _ = writeln!(out, "{v} {c}");
        }
        out
    }
}

pub fn parse_coloring(text: &str) -> Result<Coloring> {
    let mut lines = content_lines(text);
    let (line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 2 {
        return Err(Error::Parse {
            line,
            message: "header must be `n palette_size`".into(),
        });
    }
    let n: usize = parse_field(h[0], line, "node count")?;
    let palette: usize = parse_field(h[1], line, "palette size")?;
    let mut colors = vec![None; n];
    for (line, content) in lines {
        let f: Vec<&str> = content.split_whitespace().collect();
        if f.len() != 2 {
            return Err(Error::Parse {
                line,
                message: "expected `v color`".into(),
            });
        }
        let v: usize = parse_field(f[0], line, "node")?;
        let c: usize = parse_field(f[1], line, "color")?;
        match colors.get_mut(v) {
            Some(slot @ None) => *slot = Some(c),
            _ => {
                return Err(Error::Parse {
                    line,
                    message: format!("node {v} out of range or repeated"),
                })
            }
        }
    }
    let colors = colors
        .into_iter()
        .enumerate()
        .map(|(v, c)| {
            c.ok_or(Error::Parse {
                line: 0,
                message: format!("node {v} has no color"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Coloring::new(colors, palette)
}

/// Node `v` gets color `v`.
pub fn id_coloring<W: Scalar>(g: &Graph<W>) -> Coloring {
    let n = g.node_count();
    Coloring {
        colors: (0..n).collect(),
        palette_size: n,
    }
}

/// True iff no edge is monochromatic.
pub fn is_legal<W: Scalar>(g: &Graph<W>, phi: &Coloring) -> Result<bool> {
    Ok(first_conflict(g, phi)?.is_none())
}

pub(crate) fn first_conflict<W: Scalar>(g: &Graph<W>, phi: &Coloring) -> Result<Option<(usize, usize)>> {
    phi.check_covers(g.node_count())?;
    Ok(g
        .edges()
        .iter()
        .find(|e| phi.color(e.u) == phi.color(e.v))
        .map(|e| (e.u, e.v)))
}

/// Weight of monochromatic edges incident to `v`.
pub fn weighted_defect<W: Scalar>(g: &Graph<W>, phi: &Coloring, v: usize) -> Result<W> {
    phi.check_covers(g.node_count())?;
    g.check_node(v)?;
    Ok(g
        .neighbors(v)
        .filter(|&(_, u)| phi.color(u) == phi.color(v))
        .map(|(e, _)| g.edge(e).weight.clone())
        .sum())
}

/// Each node draws its color uniformly from `0..c` on its own stream.
pub fn random_coloring<W: Scalar>(g: &Graph<W>, c: usize, seed: u64) -> Result<Coloring> {
    if c == 0 {
        return Err(Error::Precondition("palette size must be at least 1".into()));
    }
    let tape = RandomTape::new(seed);
    let colors = (0..g.node_count())
        .map(|v| tape.stream(v).gen_range(0..c as u64) as usize)
        .collect();
    Ok(Coloring {
        colors,
        palette_size: c,
    })
}

/// First-fit greedy in id order; at most `max_degree + 1` colors.
pub fn greedy_legal_coloring<W: Scalar>(g: &Graph<W>) -> Coloring {
    let n = g.node_count();
    let mut colors: Vec<Option<usize>> = vec![None; n];
    let mut taken = Vec::new();
    for v in 0..n {
        taken.clear();
        taken.resize(g.degree(v) + 1, false);
        for (_, u) in g.neighbors(v) {
            if let Some(c) = colors[u] {
                if c < taken.len() {
                    taken[c] = true;
                }
            }
        }
        colors[v] = taken.iter().position(|t| !t);
    }
    let colors: Vec<usize> = colors.into_iter().map(|c| c.unwrap_or(0)).collect();
    let palette_size = colors.iter().max().map_or(1, |m| m + 1);
    Coloring { colors, palette_size }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_random_graph, EdgeAttr, Flavor};
    use crate::scalar::Rational;

    type G = Graph<Rational>;

    fn k3() -> G {
        Graph::from_triples(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 1)], EdgeAttr::PLAIN).unwrap()
    }

    #[test]
    fn id_coloring_is_legal() {
        let one = G::empty(1).unwrap();
        assert_eq!(id_coloring(&one).colors(), &[0]);
        assert_eq!(id_coloring(&k3()).colors(), &[0, 1, 2]);
        assert_eq!(id_coloring(&k3()).palette_size(), 3);
        let g: G = generate_random_graph(40, 0.4, 5, Flavor::Undirected, 3).unwrap();
        assert!(is_legal(&g, &id_coloring(&g)).unwrap());
    }

    #[test]
    fn legality() {
        assert!(is_legal(&k3(), &Coloring::new(vec![0, 1, 2], 3).unwrap()).unwrap());
        let edge = G::from_triples(2, &[(0, 1, 5)], EdgeAttr::PLAIN).unwrap();
        let mono = Coloring::new(vec![0, 0], 1).unwrap();
        assert!(!is_legal(&edge, &mono).unwrap());
        assert_eq!(weighted_defect(&edge, &mono, 0).unwrap(), Rational::from_ratio(5, 1));
        assert_eq!(weighted_defect(&edge, &mono, 1).unwrap(), Rational::from_ratio(5, 1));
        assert!(is_legal(&k3(), &mono).is_err());
        assert!(weighted_defect(&edge, &mono, 2).is_err());
    }

    #[test]
    fn defect_matches_recount() {
        for seed in 0..20 {
            let g: G = generate_random_graph(30, 0.3, 9, Flavor::Undirected, seed).unwrap();
            let phi = random_coloring(&g, 3, seed).unwrap();
            for v in 0..30 {
                let mut recount = Rational::from_ratio(0, 1);
                for e in g.edges() {
                    if (e.u == v || e.v == v) && phi.color(e.u) == phi.color(e.v) {
                        recount += e.weight.clone();
                    }
                }
                assert_eq!(weighted_defect(&g, &phi, v).unwrap(), recount);
            }
            let legal = id_coloring(&g);
            assert!((0..30).all(|v| weighted_defect(&g, &legal, v).unwrap() == Rational::from_ratio(0, 1)));
        }
    }

    #[test]
    fn random_coloring_basics() {
        let g: G = generate_random_graph(50, 0.1, 3, Flavor::Undirected, 1).unwrap();
        assert!(random_coloring(&g, 1, 5).unwrap().colors().iter().all(|&c| c == 0));
        assert_eq!(random_coloring(&g, 4, 5).unwrap(), random_coloring(&g, 4, 5).unwrap());
        assert_ne!(random_coloring(&g, 4, 5).unwrap(), random_coloring(&g, 4, 6).unwrap());
        assert!(random_coloring(&g, 0, 5).is_err());
    }

    #[test]
    fn random_coloring_is_uniform() {
        let n = 10_000;
        let g = G::empty(n).unwrap();
        let phi = random_coloring(&g, 4, 2024).unwrap();
        let mut counts = [0usize; 4];
        for &c in phi.colors() {
            counts[c] += 1;
        }
        // Binomial(n, 1/4): mean 2500, sd ~43.3.
        let sd = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - 2500.0).abs() <= 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn greedy_coloring() {
        let phi = greedy_legal_coloring(&k3());
        assert_eq!(phi.palette_size(), 3);
        let p3 = G::from_triples(3, &[(0, 1, 1), (1, 2, 1)], EdgeAttr::PLAIN).unwrap();
        assert!(greedy_legal_coloring(&p3).palette_size() <= 2);
        for seed in 0..10 {
            let g: G = generate_random_graph(100, 0.1, 3, Flavor::Undirected, seed).unwrap();
            let phi = greedy_legal_coloring(&g);
            assert!(is_legal(&g, &phi).unwrap());
            assert!(phi.palette_size() <= g.max_degree() + 1);
        }
    }

    #[test]
    fn coloring_text_round_trip() {
        let phi = Coloring::new(vec![3, 0, 2, 2], 5).unwrap();
        assert_eq!(parse_coloring(&phi.to_text()).unwrap(), phi);
        assert!(parse_coloring("2 3\n0 1\n").is_err());
        assert!(parse_coloring("2 3\n0 1\n0 2\n").is_err());
        assert!(parse_coloring("1 3\n0 7\n").is_err());
        assert!(Coloring::new(vec![1], 1).is_err());
    }
}
