//! Orderless-local algorithms: sequential and distributed executors for
//! local decision rules, the cut and 2-SAT utilities they optimize, and the
//! coloring pipelines that turn them into CONGEST approximation algorithms.
//!
//! Everything numeric is generic over [`Scalar`]; [`Rational`] gives exact
//! arithmetic and `f64` a fast approximation.

pub mod clause;
pub mod coloring;
pub mod congest;
pub mod engines;
pub mod error;
pub mod graph;
pub mod ol;
pub mod oracle;
pub mod pipelines;
pub mod rng;
pub mod scalar;
pub mod utility;

pub use clause::{generate_random_clauses, parse_clauses, Clause, ClauseSet, Literal};
pub use coloring::{weighted_defective_coloring, Coloring, DefectiveColoring};
pub use congest::{run_rounds, RoundStats};
pub use error::{Error, Result};
pub use graph::{generate_random_graph, parse_graph, Edge, EdgeAttr, Flavor, Graph};
pub use ol::{induced_order, run_distributed, run_sequential, Assignment, LocalView, Order, OrderlessLocalSpec};
pub use pipelines::{approx_corrclust_det, approx_cut_det, approx_cut_rand, approx_max2sat, Guarantee, PipelineReport};
pub use rng::RandomTape;
pub use scalar::{parse_rational, Rational, Scalar};
pub use utility::{LocalUtility, PartialLocalUtility, ProblemInstance, ProblemKind};

pub type ExactGraph = Graph<Rational>;
pub type FloatGraph = Graph<f64>;
pub type ExactClauseSet = ClauseSet<Rational>;
pub type FloatClauseSet = ClauseSet<f64>;
pub type ExactInstance = ProblemInstance<Rational>;
pub type FloatInstance = ProblemInstance<f64>;
