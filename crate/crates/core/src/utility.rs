//! Problem instances and their local utility functions.
//!
//! A local utility `f` comes with `g_v(L_v[X], α, α′)`, the change of `f`
//! when the center switches from `α′` to `α`, computable from the 1-hop view.
//! All utilities here are sums of terms each touching the center and at most
//! one neighbor, so `g_v` splits into a center term plus one term per
//! neighbor. The engines rely on that split to take expectations over
//! unassigned neighbors one at a time.

use std::fmt;

use crate::clause::{ClauseSet, ClauseStatus};
use crate::error::{Error, Result};
use crate::graph::{Direction, Edge, Graph, Sign};
use crate::ol::LocalView;
use crate::pipelines::build_clause_graph;
use crate::scalar::Scalar;

pub trait LocalUtility<W: Scalar> {
    /// The graph whose 1-hop views feed `g_v`.
    fn graph(&self) -> &Graph<W>;

    /// `|A|`; values are `0..domain_size`.
    fn domain_size(&self) -> usize;

    /// `f` on a total assignment.
    fn eval_full(&self, x: &[usize]) -> Result<W>;

    /// Part of `g_v(·, a, a2)` not involving any neighbor.
    fn center_delta(&self, view: &LocalView<'_, W, usize>, a: usize, a2: usize) -> W {
        let _ = (view, a, a2);
        W::zero()
    }

    /// Part of `g_v(·, a, a2)` involving the `i`-th neighbor of the view,
    /// assuming that neighbor holds `value`.
    fn neighbor_delta(&self, view: &LocalView<'_, W, usize>, i: usize, value: usize, a: usize, a2: usize) -> W;

    /// `g_v(L_v[X], a, a2)`. Terms with an unassigned neighbor count as zero.
    fn local_delta(&self, view: &LocalView<'_, W, usize>, a: usize, a2: usize) -> W {
        let mut total = self.center_delta(view, a, a2);
        for (i, n) in view.neighbors().iter().enumerate() {
            if let Some(&x) = n.value.as_ref() {
                total = total + self.neighbor_delta(view, i, x, a, a2);
            }
        }
        total
    }

    fn node_count(&self) -> usize {
        self.graph().node_count()
    }
}

/// Utilities that are also defined on partial assignments.
pub trait PartialLocalUtility<W: Scalar>: LocalUtility<W> {
    fn eval_partial(&self, x: &[Option<usize>]) -> Result<W>;

    /// `f(X ∪ {v = a}) − f(X ∪ {v = a2})` where `None` leaves `v` unassigned.
    fn partial_delta(&self, view: &LocalView<'_, W, usize>, a: Option<usize>, a2: Option<usize>) -> W;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    KCut { k: usize },
    DiCut,
    CorrClust2,
    Max2Sat,
}

impl ProblemKind {
    pub fn domain_size(&self) -> usize {
        match self {
            ProblemKind::KCut { k } => *k,
            _ => 2,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemKind::KCut { k } => write!(f, "kcut(k={k})"),
            ProblemKind::DiCut => f.write_str("dicut"),
            ProblemKind::CorrClust2 => f.write_str("corrclust2"),
            ProblemKind::Max2Sat => f.write_str("max2sat"),
        }
    }
}

/// A graph (and, for 2-SAT, a clause set) tagged with the problem to solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance<W> {
    kind: ProblemKind,
    graph: Graph<W>,
    clauses: Option<ClauseSet<W>>,
}

impl<W: Scalar> ProblemInstance<W> {
    pub fn kcut(graph: Graph<W>, k: usize) -> Result<Self> {
        Self::new(ProblemKind::KCut { k }, graph, None)
    }

    pub fn dicut(graph: Graph<W>) -> Result<Self> {
        Self::new(ProblemKind::DiCut, graph, None)
    }

    pub fn corrclust(graph: Graph<W>) -> Result<Self> {
        Self::new(ProblemKind::CorrClust2, graph, None)
    }

    /// The graph is the clause graph: one node per variable, an edge per
    /// pair of variables sharing a clause.
    pub fn max2sat(clauses: ClauseSet<W>) -> Result<Self> {
        let graph = build_clause_graph(&clauses).graph;
        Self::new(ProblemKind::Max2Sat, graph, Some(clauses))
    }

    pub fn new(kind: ProblemKind, graph: Graph<W>, clauses: Option<ClauseSet<W>>) -> Result<Self> {
        let bad = |e: &Edge<W>, what: &str| {
            Err(Error::AttributeMismatch(format!(
                "{kind} needs {what} edges, edge ({}, {}) is {:?}",
                e.u, e.v, e.attr
            )))
        };
        match kind {
            ProblemKind::KCut { k } if k < 2 => {
                return Err(Error::InvalidInstance(format!("k-cut needs k >= 2, got {k}")));
            }
            ProblemKind::KCut { .. } | ProblemKind::Max2Sat => {
                if let Some(e) = graph
                    .edges()
                    .iter()
                    .find(|e| e.attr.direction != Direction::Undirected || e.attr.sign != Sign::None)
                {
                    return bad(e, "undirected unsigned");
                }
            }
            ProblemKind::DiCut => {
                if let Some(e) = graph
                    .edges()
                    .iter()
                    .find(|e| e.attr.direction != Direction::Forward || e.attr.sign != Sign::None)
                {
                    return bad(e, "directed unsigned");
                }
            }
            ProblemKind::CorrClust2 => {
                if let Some(e) = graph
                    .edges()
                    .iter()
                    .find(|e| e.attr.direction != Direction::Undirected || e.attr.sign == Sign::None)
                {
                    return bad(e, "undirected signed");
                }
            }
        }
        match (&kind, &clauses) {
            (ProblemKind::Max2Sat, Some(cs)) => {
                if cs.variable_count() != graph.node_count() {
                    return Err(Error::DomainMismatch {
                        expected: cs.variable_count(),
                        got: graph.node_count(),
                    });
                }
                for c in cs.clauses() {
                    if let [a, b] = c.literals() {
                        if !graph.is_neighbor(a.var, b.var) {
                            return Err(Error::InvalidInstance(format!(
                                "clause over ({}, {}) has no edge in the clause graph",
                                a.var, b.var
                            )));
                        }
                    }
                }
            }
            (ProblemKind::Max2Sat, None) => {
                return Err(Error::InvalidInstance("max2sat needs a clause set".into()));
            }
            (_, Some(_)) => {
                return Err(Error::InvalidInstance(format!("{kind} takes no clause set")));
            }
            _ => {}
        }
        Ok(Self { kind, graph, clauses })
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn graph(&self) -> &Graph<W> {
        &self.graph
    }

    pub fn clauses(&self) -> Option<&ClauseSet<W>> {
        self.clauses.as_ref()
    }

    pub fn domain_size(&self) -> usize {
        self.kind.domain_size()
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Same problem on another graph over the same nodes (cut problems only).
    pub fn with_graph(&self, graph: Graph<W>) -> Result<Self> {
        Self::new(self.kind, graph, None)
    }

    /// The cut utility of a graph problem.
    pub fn cut_utility(&self) -> Result<CutUtility<'_, W>> {
        let kind = match self.kind {
            ProblemKind::KCut { k } => CutKind::KCut(k),
            ProblemKind::DiCut => CutKind::DiCut,
            ProblemKind::CorrClust2 => CutKind::CorrClust,
            ProblemKind::Max2Sat => {
                return Err(Error::InvalidInstance("max2sat has no cut utility".into()));
            }
        };
        Ok(CutUtility {
            kind,
            graph: &self.graph,
        })
    }

    /// `(f_T, f_F)` of a 2-SAT instance.
    pub fn sat_utilities(&self) -> Result<(SatUtility<'_, W>, SatUtility<'_, W>)> {
        let clauses = self
            .clauses
            .as_ref()
            .ok_or_else(|| Error::InvalidInstance(format!("{} has no clauses", self.kind)))?;
        let index = clauses.index_by_variable();
        let make = |side| SatUtility {
            side,
            graph: &self.graph,
            clauses,
            index: index.clone(),
        };
        Ok((make(SatSide::Satisfied), make(SatSide::Falsified)))
    }

    /// The maximized objective: the cut utility, or `f_T` for 2-SAT.
    pub fn objective(&self) -> Result<Box<dyn LocalUtility<W> + '_>> {
        match self.kind {
            ProblemKind::Max2Sat => Ok(Box::new(self.sat_utilities()?.0)),
            _ => Ok(Box::new(self.cut_utility()?)),
        }
    }
}

pub enum Utility<'a, W> {
    Cut(CutUtility<'a, W>),
    Sat {
        satisfied: SatUtility<'a, W>,
        falsified: SatUtility<'a, W>,
    },
}

pub fn make_utility<W: Scalar>(inst: &ProblemInstance<W>) -> Result<Utility<'_, W>> {
    match inst.kind() {
        ProblemKind::Max2Sat => {
            let (satisfied, falsified) = inst.sat_utilities()?;
            Ok(Utility::Sat { satisfied, falsified })
        }
        _ => Ok(Utility::Cut(inst.cut_utility()?)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutKind {
    KCut(usize),
    DiCut,
    CorrClust,
}

/// Sum over edges of `w(e)·[edge is good]`.
#[derive(Debug, Clone, Copy)]
pub struct CutUtility<'a, W> {
    kind: CutKind,
    graph: &'a Graph<W>,
}

impl<'a, W: Scalar> CutUtility<'a, W> {
    pub fn new(kind: CutKind, graph: &'a Graph<W>) -> Self {
        Self { kind, graph }
    }

    pub fn kind(&self) -> CutKind {
        self.kind
    }

    fn good(&self, e: &Edge<W>, xu: usize, xv: usize) -> bool {
        match self.kind {
            CutKind::KCut(_) => xu != xv,
            CutKind::DiCut => xu == 1 && xv == 0,
            CutKind::CorrClust => match e.attr.sign {
                Sign::Negative => xu != xv,
                _ => xu == xv,
            },
        }
    }

    /// Whether `e` counts with the center at `xc` and its other end at `xo`.
    fn good_from(&self, e: &Edge<W>, center: usize, xc: usize, xo: usize) -> bool {
        if e.u == center {
            self.good(e, xc, xo)
        } else {
            self.good(e, xo, xc)
        }
    }
}

impl<W: Scalar> LocalUtility<W> for CutUtility<'_, W> {
    fn graph(&self) -> &Graph<W> {
        self.graph
    }

    fn domain_size(&self) -> usize {
        match self.kind {
            CutKind::KCut(k) => k,
            _ => 2,
        }
    }

    fn eval_full(&self, x: &[usize]) -> Result<W> {
        check_total(x, self.graph.node_count(), self.domain_size())?;
        Ok(self
            .graph
            .edges()
            .iter()
            .filter(|e| self.good(e, x[e.u], x[e.v]))
            .map(|e| e.weight.clone())
            .sum())
    }

    fn neighbor_delta(&self, view: &LocalView<'_, W, usize>, i: usize, value: usize, a: usize, a2: usize) -> W {
        let e = view.neighbors()[i].edge;
        let c = view.center();
        match (self.good_from(e, c, a, value), self.good_from(e, c, a2, value)) {
            (true, false) => e.weight.clone(),
            (false, true) => -e.weight.clone(),
            _ => W::zero(),
        }
    }
}

fn check_total(x: &[usize], n: usize, d: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::DomainMismatch {
            expected: n,
            got: x.len(),
        });
    }
    match x.iter().position(|&a| a >= d) {
        Some(node) => Err(Error::OutOfDomain { node }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatSide {
    /// `f_T`: weight of satisfied clauses.
    Satisfied,
    /// `f_F`: weight of falsified clauses.
    Falsified,
}

#[derive(Debug, Clone)]
pub struct SatUtility<'a, W> {
    side: SatSide,
    graph: &'a Graph<W>,
    clauses: &'a ClauseSet<W>,
    index: Vec<Vec<usize>>,
}

impl<W: Scalar> SatUtility<'_, W> {
    pub fn side(&self) -> SatSide {
        self.side
    }

    fn counts(&self, status: ClauseStatus) -> bool {
        match self.side {
            SatSide::Satisfied => status == ClauseStatus::Satisfied,
            SatSide::Falsified => status == ClauseStatus::Falsified,
        }
    }

    /// Contribution of clause `id` with the center at `xc` and its partner
    /// (if any) at `xo`.
    fn term(&self, id: usize, center: usize, xc: Option<usize>, xo: Option<usize>) -> bool {
        let status = self.clauses.clause(id).status(|var| if var == center { xc } else { xo });
        self.counts(status)
    }

    fn diff(&self, id: usize, center: usize, a: Option<usize>, a2: Option<usize>, xo: Option<usize>) -> W {
        match (self.term(id, center, a, xo), self.term(id, center, a2, xo)) {
            (true, false) => self.clauses.clause(id).weight.clone(),
            (false, true) => -self.clauses.clause(id).weight.clone(),
            _ => W::zero(),
        }
    }
}

impl<W: Scalar> LocalUtility<W> for SatUtility<'_, W> {
    fn graph(&self) -> &Graph<W> {
        self.graph
    }

    fn domain_size(&self) -> usize {
        2
    }

    fn eval_full(&self, x: &[usize]) -> Result<W> {
        check_total(x, self.graph.node_count(), 2)?;
        Ok(self
            .clauses
            .clauses()
            .iter()
            .filter(|c| self.counts(c.status(|var| Some(x[var]))))
            .map(|c| c.weight.clone())
            .sum())
    }

    fn center_delta(&self, view: &LocalView<'_, W, usize>, a: usize, a2: usize) -> W {
        let v = view.center();
        self.index[v]
            .iter()
            .filter(|&&id| self.clauses.clause(id).is_unit())
            .map(|&id| self.diff(id, v, Some(a), Some(a2), None))
            .sum()
    }

    fn neighbor_delta(&self, view: &LocalView<'_, W, usize>, i: usize, value: usize, a: usize, a2: usize) -> W {
        let v = view.center();
        let u = view.neighbors()[i].node;
        self.index[v]
            .iter()
            .filter(|&&id| self.clauses.clause(id).partner(v) == Some(u))
            .map(|&id| self.diff(id, v, Some(a), Some(a2), Some(value)))
            .sum()
    }
}

impl<W: Scalar> PartialLocalUtility<W> for SatUtility<'_, W> {
    fn eval_partial(&self, x: &[Option<usize>]) -> Result<W> {
        if x.len() != self.graph.node_count() {
            return Err(Error::DomainMismatch {
                expected: self.graph.node_count(),
                got: x.len(),
            });
        }
        if let Some(node) = x.iter().position(|a| matches!(a, Some(a) if *a >= 2)) {
            return Err(Error::OutOfDomain { node });
        }
        Ok(self
            .clauses
            .clauses()
            .iter()
            .filter(|c| self.counts(c.status(|var| x[var])))
            .map(|c| c.weight.clone())
            .sum())
    }

    fn partial_delta(&self, view: &LocalView<'_, W, usize>, a: Option<usize>, a2: Option<usize>) -> W {
        let v = view.center();
        self.index[v]
            .iter()
            .map(|&id| {
                let xo = self.clauses.clause(id).partner(v).and_then(|u| {
                    debug_assert!(view.position(u).is_some(), "clause partner {u} outside the view");
                    view.value_of(u).copied()
                });
                self.diff(id, v, a, a2, xo)
            })
            .sum()
    }
}
