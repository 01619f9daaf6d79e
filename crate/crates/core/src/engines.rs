//! Decide functions packaged as orderless-local specs: conditional
//! expectations, deterministic and randomized double greedy, and the
//! randomized greedy for Max 2-SAT.

use std::marker::PhantomData;

use crate::error::{Error, Result};
use crate::ol::{Assignment, LocalView, OrderlessLocalSpec};
use crate::rng::{flip, NodeRng};
use crate::scalar::{from_usize, Scalar};
use crate::utility::{LocalUtility, PartialLocalUtility};

/// `Σ_{α′} Pr[α′]·E_{Z_v}[g_v(L_v[X ∪ Z_v], alpha, α′)]`, the change of the
/// conditional expectation of `f` when the center is fixed to `alpha`.
/// Unassigned neighbors are uniform over `A` and independent.
///
/// Because `g_v` is a center term plus one term per neighbor, the
/// expectation over `Z_v` is taken neighbor by neighbor.
pub fn conditional_gain<W: Scalar, U: LocalUtility<W> + ?Sized>(u: &U, view: &LocalView<'_, W, usize>, alpha: usize) -> W {
    let d = u.domain_size();
    let mut total = W::zero();
    for a2 in 0..d {
        // Everything below is scaled by d (the expectation over one unassigned
        // neighbor is a sum over its d values).
        let mut scaled = u.center_delta(view, alpha, a2) * from_usize::<W>(d);
        for (i, n) in view.neighbors().iter().enumerate() {
            match n.value {
                Some(x) => scaled = scaled + u.neighbor_delta(view, i, x, alpha, a2) * from_usize::<W>(d),
                None => {
                    for beta in 0..d {
                        scaled = scaled + u.neighbor_delta(view, i, beta, alpha, a2);
                    }
                }
            }
        }
        total = total + scaled;
    }
    total / from_usize::<W>(d * d)
}

/// Conditional gains of every candidate value.
pub fn gain_table<W: Scalar, U: LocalUtility<W> + ?Sized>(u: &U, view: &LocalView<'_, W, usize>) -> Vec<W> {
    (0..u.domain_size()).map(|a| conditional_gain(u, view, a)).collect()
}

/// First index of a maximum.
fn argmax<W: Scalar>(values: &[W]) -> usize {
    let mut best = 0;
    for (a, g) in values.iter().enumerate().skip(1) {
        if *g > values[best] {
            best = a;
        }
    }
    best
}

/// Method of conditional expectations: init ⊥, decide the value with the
/// largest conditional gain (smallest on ties). Ignores its random stream.
pub struct CondExpSpec<'u, W, U: ?Sized> {
    utility: &'u U,
    _w: PhantomData<W>,
}

pub fn cond_exp_spec<W: Scalar, U: LocalUtility<W> + ?Sized>(u: &U) -> CondExpSpec<'_, W, U> {
    CondExpSpec {
        utility: u,
        _w: PhantomData,
    }
}

impl<W: Scalar, U: LocalUtility<W> + ?Sized> OrderlessLocalSpec<W> for CondExpSpec<'_, W, U> {
    type Value = usize;

    fn contains(&self, x: &usize) -> bool {
        *x < self.utility.domain_size()
    }

    fn init(&self, _: &LocalView<'_, W, usize>) -> Option<usize> {
        None
    }

    fn decide(&self, view: &LocalView<'_, W, usize>, _: &mut NodeRng) -> usize {
        argmax(&gain_table(self.utility, view))
    }

    fn encode(&self, x: &usize) -> u64 {
        *x as u64
    }

    fn decode(&self, code: u64) -> Option<usize> {
        usize::try_from(code).ok().filter(|x| *x < self.utility.domain_size())
    }
}

/// The tuple `(z, y)` carried by double greedy: membership in the lower
/// solution `Z` and in the upper solution `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DoubleGreedyValue {
    pub z: bool,
    pub y: bool,
}

impl DoubleGreedyValue {
    pub const INITIAL: Self = Self { z: false, y: true };
    pub const IN: Self = Self { z: true, y: true };
    pub const OUT: Self = Self { z: false, y: false };
}

/// Double greedy over a binary utility, deterministic (det-usm) or
/// randomized (rand-usm).
pub struct DoubleGreedySpec<'u, W, U: ?Sized> {
    utility: &'u U,
    randomized: bool,
    _w: PhantomData<W>,
}

pub fn double_greedy_det_spec<W: Scalar, U: LocalUtility<W> + ?Sized>(u: &U) -> DoubleGreedySpec<'_, W, U> {
    DoubleGreedySpec {
        utility: u,
        randomized: false,
        _w: PhantomData,
    }
}

pub fn double_greedy_rand_spec<W: Scalar, U: LocalUtility<W> + ?Sized>(u: &U) -> DoubleGreedySpec<'_, W, U> {
    DoubleGreedySpec {
        utility: u,
        randomized: true,
        _w: PhantomData,
    }
}

impl<W: Scalar, U: LocalUtility<W> + ?Sized> DoubleGreedySpec<'_, W, U> {
    /// `a = g_v(Z-view, 1, 0)` and `b = g_v(Y-view, 0, 1)`: the gain of adding
    /// the center to `Z` and of removing it from `Y`.
    pub fn margins(&self, view: &LocalView<'_, W, DoubleGreedyValue>) -> (W, W) {
        let z = view.map_values(|t| t.z as usize);
        let y = view.map_values(|t| t.y as usize);
        (self.utility.local_delta(&z, 1, 0), self.utility.local_delta(&y, 0, 1))
    }

    /// Probability of joining: `a⁺ / (a⁺ + b⁺)`, or 1 when both are zero.
    pub fn join_probability(a: W, b: W) -> W {
        let a = W::max_of(a, W::zero());
        let b = W::max_of(b, W::zero());
        let s = a.clone() + b;
        if s.is_zero() {
            W::one()
        } else {
            a / s
        }
    }
}

impl<W: Scalar, U: LocalUtility<W> + ?Sized> OrderlessLocalSpec<W> for DoubleGreedySpec<'_, W, U> {
    type Value = DoubleGreedyValue;

    fn contains(&self, _: &DoubleGreedyValue) -> bool {
        true
    }

    fn init(&self, _: &LocalView<'_, W, DoubleGreedyValue>) -> Option<DoubleGreedyValue> {
        Some(DoubleGreedyValue::INITIAL)
    }

    fn decide(&self, view: &LocalView<'_, W, DoubleGreedyValue>, rng: &mut NodeRng) -> DoubleGreedyValue {
        let (a, b) = self.margins(view);
        let join = if self.randomized {
            flip(&Self::join_probability(a, b), rng)
        } else {
            a >= b
        };
        if join {
            DoubleGreedyValue::IN
        } else {
            DoubleGreedyValue::OUT
        }
    }

    fn encode(&self, x: &DoubleGreedyValue) -> u64 {
        (x.z as u64) << 1 | x.y as u64
    }

    fn decode(&self, code: u64) -> Option<DoubleGreedyValue> {
        (code < 4).then_some(DoubleGreedyValue {
            z: code & 2 != 0,
            y: code & 1 != 0,
        })
    }
}

/// Reads the final solution off a double-greedy run, checking `z = y`
/// everywhere.
pub fn first_coordinates(x: &Assignment<DoubleGreedyValue>) -> Result<Vec<usize>> {
    x.to_total()?
        .iter()
        .enumerate()
        .map(|(node, t)| {
            if t.z == t.y {
                Ok(t.z as usize)
            } else {
                Err(Error::TupleDisagreement { node })
            }
        })
        .collect()
}

/// Randomized greedy for weighted Max 2-SAT: init ⊥; set the center to 1
/// with probability `t / (t + f)`.
pub struct MaxSatSpec<'u, W, P: ?Sized> {
    satisfied: &'u P,
    falsified: &'u P,
    _w: PhantomData<W>,
}

pub fn maxsat_spec<'u, W: Scalar, P: PartialLocalUtility<W> + ?Sized>(f_t: &'u P, f_f: &'u P) -> MaxSatSpec<'u, W, P> {
    MaxSatSpec {
        satisfied: f_t,
        falsified: f_f,
        _w: PhantomData,
    }
}

impl<W: Scalar, P: PartialLocalUtility<W> + ?Sized> MaxSatSpec<'_, W, P> {
    /// `t = Δf_T(⊥→1) − Δf_F(⊥→1)` and `f = Δf_T(⊥→0) − Δf_F(⊥→0)`.
    pub fn margins(&self, view: &LocalView<'_, W, usize>) -> (W, W) {
        let side = |a| self.satisfied.partial_delta(view, Some(a), None) - self.falsified.partial_delta(view, Some(a), None);
        (side(1), side(0))
    }

    /// 1 if `f ≤ 0`, else 0 if `t ≤ 0`, else `t / (t + f)`.
    pub fn true_probability(t: W, f: W) -> W {
        if !f.is_positive() {
            W::one()
        } else if !t.is_positive() {
            W::zero()
        } else {
            t.clone() / (t + f)
        }
    }
}

impl<W: Scalar, P: PartialLocalUtility<W> + ?Sized> OrderlessLocalSpec<W> for MaxSatSpec<'_, W, P> {
    type Value = usize;

    fn contains(&self, x: &usize) -> bool {
        *x < 2
    }

    fn init(&self, _: &LocalView<'_, W, usize>) -> Option<usize> {
        None
    }

    fn decide(&self, view: &LocalView<'_, W, usize>, rng: &mut NodeRng) -> usize {
        let (t, f) = self.margins(view);
        flip(&Self::true_probability(t, f), rng) as usize
    }

    fn encode(&self, x: &usize) -> u64 {
        *x as u64
    }

    fn decode(&self, code: u64) -> Option<usize> {
        (code < 2).then_some(code as usize)
    }
}
