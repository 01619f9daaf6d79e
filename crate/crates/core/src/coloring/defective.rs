//! Weighted ε-defective coloring by iterated polynomial refinement.
//!
//! One refinement step maps every current color `x` to the polynomial over
//! GF(q) of degree at most `k` whose coefficients are the base-`q` digits of
//! `x`. Two distinct colors give distinct polynomials, which agree on at most
//! `k` points. Each node then picks the evaluation point `α` minimizing the
//! weight of its currently bichromatic edges whose polynomials agree at `α`,
//! and takes the new color `α·q + φ_v(α)`. With `q > k/ε_i` some `α` costs
//! at most `ε_i` times the bichromatic weight, which bounds the per-step
//! defect increase.
//!
//! The schedule starts from the id coloring (`M = n` colors), sets
//! `ε_0 = ε/2` and `ε_i = ε_0 / 2^(T-i)` for `i = 1..=T`, where `T` is the
//! smallest positive integer with `ln^(T) M <= 8·sqrt(C_D)/ε_0`. The
//! increments sum to less than `ε`.

use num_traits::{One, Signed, ToPrimitive};

use crate::coloring::{id_coloring, Coloring};
use crate::congest::{decode_varints, encode_varints, run_rounds, Message, NodeContext, NodeProgram, Outbox, RoundStats, Status};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::NodeRng;
use crate::scalar::{f64_of, Rational, Scalar};

/// Field order and polynomial degree for one refinement step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepParams {
    pub epsilon: Rational,
    pub q: u64,
    pub k: u32,
    /// Palette size going into the step.
    pub palette_in: usize,
}

impl StepParams {
    pub fn palette_out(&self) -> usize {
        (self.q * self.q) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectiveColoringParams {
    pub epsilon: Rational,
    pub c_d: Rational,
    pub steps: Vec<StepParams>,
}

impl DefectiveColoringParams {
    /// Number of refinement steps `T`.
    pub fn iterations(&self) -> usize {
        self.steps.len()
    }

    pub fn final_palette(&self) -> usize {
        self.steps.last().map_or(0, StepParams::palette_out)
    }

    /// Plans every step for a graph on `n` nodes.
    pub fn plan(n: usize, epsilon: &Rational, overrides: &DefectiveOverrides) -> Result<Self> {
        if !epsilon.is_positive() || *epsilon >= Rational::one() {
            return Err(Error::Precondition(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        let c_d = overrides.c_d.clone().unwrap_or_else(Rational::one);
        if !c_d.is_positive() {
            return Err(Error::Schedule("C_D must be positive".into()));
        }
        let schedule = match overrides.iterations {
            Some(t) => schedule_with_length(epsilon, t.max(1)),
            None => build_schedule(epsilon, n, &c_d)?,
        };
        let mut palette = n;
        let mut steps = Vec::with_capacity(schedule.len());
        for eps_i in schedule {
            let step = choose_step_params(&eps_i, palette)?;
            palette = step.palette_out();
            steps.push(step);
        }
        Ok(Self {
            epsilon: epsilon.clone(),
            c_d,
            steps,
        })
    }
}

/// Knobs for the schedule; the defaults follow the stopping rule with `C_D = 1`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DefectiveOverrides {
    pub c_d: Option<Rational>,
    /// Forces `T` instead of deriving it from the stopping rule.
    pub iterations: Option<usize>,
}

const MAX_ITERATIONS: usize = 64;

/// `[ε_1, ..., ε_T]` for an initial palette of size `m`.
pub fn build_schedule(epsilon: &Rational, m: usize, c_d: &Rational) -> Result<Vec<Rational>> {
    let eps0 = epsilon / Rational::from_integer(2.into());
    let threshold = 8.0 * f64_of(c_d).sqrt() / f64_of(&eps0);
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(Error::Schedule(format!("degenerate stopping threshold {threshold}")));
    }
    let mut value = m.max(1) as f64;
    let mut t = 0;
    loop {
        t += 1;
        value = value.ln();
        if value <= threshold {
            break;
        }
        if t == MAX_ITERATIONS {
            return Err(Error::Schedule(format!(
                "stopping rule not met within {MAX_ITERATIONS} iterations"
            )));
        }
    }
    Ok(schedule_with_length(epsilon, t))
}

fn schedule_with_length(epsilon: &Rational, t: usize) -> Vec<Rational> {
    let eps0 = epsilon / Rational::from_integer(2.into());
    (1..=t)
        .map(|i| {
            let denom = num_bigint::BigInt::one() << (t - i);
            &eps0 / Rational::from_integer(denom)
        })
        .collect()
}

fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= q {
        if q.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn next_prime(mut q: u64) -> u64 {
    while !is_prime(q) {
        q += 1;
    }
    q
}

/// `q^(k+1) >= m`, saturating.
fn enough_polynomials(q: u64, k: u32, m: usize) -> bool {
    let mut acc: u128 = 1;
    for _ in 0..=k {
        acc = acc.saturating_mul(q as u128);
        if acc >= m as u128 {
            return true;
        }
    }
    acc >= m as u128
}

/// Smallest prime strictly above `k/ε`.
fn smallest_prime_above(k: u32, eps: &Rational) -> u64 {
    let bound = Rational::from_integer(k.into()) / eps;
    let floor = bound.floor().to_integer().to_u64().unwrap_or(u64::MAX - 1);
    next_prime(floor + 1)
}

/// Picks `(q, k)` minimizing the new palette `q²` subject to `q > k/ε_i` and
/// `q^(k+1) >= M`; ties go to the smaller `k`.
pub fn choose_step_params(eps_i: &Rational, palette_in: usize) -> Result<StepParams> {
    if !eps_i.is_positive() {
        return Err(Error::Schedule(format!("step epsilon must be positive, got {eps_i}")));
    }
    let mut best: Option<(u64, u32)> = None;
    for k in 1u32.. {
        let q_low = smallest_prime_above(k, eps_i);
        if let Some((bq, _)) = best {
            if q_low >= bq {
                break;
            }
        }
        let mut q = q_low;
        while !enough_polynomials(q, k, palette_in) {
            q = next_prime(q + 1);
        }
        if best.is_none_or(|(bq, _)| q < bq) {
            best = Some((q, k));
        }
        if k > 64 {
            break;
        }
    }
    let (q, k) = best.ok_or_else(|| Error::Schedule("no field order found".into()))?;
    if q.checked_mul(q).and_then(|x| usize::try_from(x).ok()).is_none() {
        return Err(Error::Schedule(format!("palette q² overflows for q = {q}")));
    }
    Ok(StepParams {
        epsilon: eps_i.clone(),
        q,
        k,
        palette_in,
    })
}

/// Evaluates the polynomial of color `x` (base-`q` digits as coefficients,
/// lowest first, `k + 1` of them) at `alpha`.
pub fn poly_eval(x: usize, q: u64, k: u32, alpha: u64) -> u64 {
    let q128 = q as u128;
    let mut digits = [0u128; 66];
    let mut rest = x as u128;
    for d in digits.iter_mut().take(k as usize + 1) {
        *d = rest % q128;
        rest /= q128;
    }
    let mut acc = 0u128;
    for j in (0..=k as usize).rev() {
        acc = (acc * alpha as u128 + digits[j]) % q128;
    }
    acc as u64
}

/// New color of a node given its color and its bichromatic neighbors'
/// `(edge weight, color)` pairs. Smallest minimizing `α` wins.
fn refine_color<W: Scalar>(own: usize, bichromatic: &[(W, usize)], step: &StepParams) -> usize {
    let (q, k) = (step.q, step.k);
    let mine: Vec<u64> = (0..q).map(|a| poly_eval(own, q, k, a)).collect();
    let mut cost = vec![W::zero(); q as usize];
    for (w, color) in bichromatic {
        for a in 0..q {
            if poly_eval(*color, q, k, a) == mine[a as usize] {
                cost[a as usize] = cost[a as usize].clone() + w.clone();
            }
        }
    }
    let mut best = 0usize;
    for a in 1..q as usize {
        if cost[a] < cost[best] {
            best = a;
        }
    }
    best * q as usize + mine[best] as usize
}

fn check_step(step: &StepParams, palette: usize) -> Result<()> {
    if !is_prime(step.q) {
        return Err(Error::Precondition(format!("q = {} is not prime", step.q)));
    }
    if Rational::from_integer(step.q.into()) * &step.epsilon <= Rational::from_integer(step.k.into()) {
        return Err(Error::Precondition(format!(
            "q = {} must exceed k/eps = {}/{}",
            step.q, step.k, step.epsilon
        )));
    }
    if !enough_polynomials(step.q, step.k, palette) {
        return Err(Error::Precondition(format!(
            "q^(k+1) = {}^{} is below the palette size {palette}",
            step.q,
            step.k + 1
        )));
    }
    Ok(())
}

/// One refinement step, computed centrally.
pub fn kuhn_refine_step<W: Scalar>(g: &Graph<W>, phi: &Coloring, eps_i: &Rational, q: u64, k: u32) -> Result<Coloring> {
    phi.check_covers(g.node_count())?;
    let step = StepParams {
        epsilon: eps_i.clone(),
        q,
        k,
        palette_in: phi.palette_size(),
    };
    check_step(&step, phi.palette_size())?;
    let colors = (0..g.node_count())
        .map(|v| {
            let own = phi.color(v);
            let bichromatic: Vec<(W, usize)> = g
                .neighbors(v)
                .filter(|&(_, u)| phi.color(u) != own)
                .map(|(e, u)| (g.edge(e).weight.clone(), phi.color(u)))
                .collect();
            refine_color(own, &bichromatic, &step)
        })
        .collect();
    Coloring::new(colors, step.palette_out())
}

/// Weight of `v`'s edges that were bichromatic under `before` and are
/// monochromatic under `after`, together with the bichromatic weight under
/// `before`.
pub fn newly_monochromatic_weight<W: Scalar>(g: &Graph<W>, before: &Coloring, after: &Coloring, v: usize) -> (W, W) {
    let mut increase = W::zero();
    let mut bichromatic = W::zero();
    for (e, u) in g.neighbors(v) {
        if before.color(u) == before.color(v) {
            continue;
        }
        let w = g.edge(e).weight.clone();
        if after.color(u) == after.color(v) {
            increase = increase + w.clone();
        }
        bichromatic = bichromatic + w;
    }
    (increase, bichromatic)
}

#[derive(Debug, Clone)]
pub struct DefectiveColoring {
    pub coloring: Coloring,
    pub stats: RoundStats,
    pub params: DefectiveColoringParams,
}

#[derive(Debug, Clone)]
struct RefineState {
    color: usize,
}

/// Round 1 announces the id color; round `i + 1` refines with step `i` and
/// announces the result. The last announcement is what neighbors use to
/// detect monochromatic edges.
struct RefineProgram<'p> {
    steps: &'p [StepParams],
}

impl<W: Scalar> NodeProgram<W> for RefineProgram<'_> {
    type State = RefineState;

    fn step(
        &self,
        ctx: &NodeContext<'_, W>,
        state: &mut RefineState,
        inbox: &[Message],
        _rng: &mut NodeRng,
        out: &mut Outbox,
    ) -> Status {
        let round = ctx.round();
        if round >= 2 {
            let mut bichromatic = Vec::with_capacity(inbox.len());
            for m in inbox {
                let color = decode_varints(&m.payload)
                    .ok()
                    .and_then(|v| v.first().copied())
                    .expect("refinement payload is a single varint") as usize;
                if color == state.color {
                    continue;
                }
                let w = ctx
                    .neighbors()
                    .find(|&(_, u)| u == m.src)
                    .map(|(e, _)| e.weight.clone())
                    .expect("messages only arrive over edges");
                bichromatic.push((w, color));
            }
            state.color = refine_color(state.color, &bichromatic, &self.steps[round - 2]);
        }
        let payload = encode_varints(&[state.color as u64]);
        for (_, u) in ctx.neighbors() {
            out.send(u, payload.clone());
        }
        if round > self.steps.len() {
            Status::Halted
        } else {
            Status::Running
        }
    }
}

/// Computes a coloring with `defect_w(v) <= ε·w(v)` for every node, running
/// the refinement steps on the simulator.
pub fn weighted_defective_coloring<W: Scalar>(
    g: &Graph<W>,
    epsilon: &Rational,
    overrides: &DefectiveOverrides,
) -> Result<DefectiveColoring> {
    let params = DefectiveColoringParams::plan(g.node_count(), epsilon, overrides)?;
    let mut palette = g.node_count();
    for step in &params.steps {
        check_step(step, palette)?;
        palette = step.palette_out();
    }
    let program = RefineProgram { steps: &params.steps };
    let initial = id_coloring(g)
        .colors()
        .iter()
        .map(|&color| RefineState { color })
        .collect();
    let (states, stats) = run_rounds(g, &program, initial, params.steps.len() + 1, 0)?;
    if !stats.halted {
        return Err(Error::Schedule("refinement did not finish within its round budget".into()));
    }
    let coloring = Coloring::new(states.into_iter().map(|s| s.color).collect(), params.final_palette())?;
    Ok(DefectiveColoring {
        coloring,
        stats,
        params,
    })
}
