//! Brute-force ground truth: exact optima and expectations, and checkers for
//! the structural properties the algorithms rely on.
//!
//! The optimum searches evaluate instances through their own factor list
//! rather than through the utility code they are used to check.

use rand::Rng;

use crate::clause::Literal;
use crate::error::{Error, Result};
use crate::graph::Sign;
use crate::ol::{Assignment, LocalView};
use crate::rng::{node_stream, NodeRng};
use crate::scalar::{from_usize, Scalar};
use crate::utility::{LocalUtility, PartialLocalUtility, ProblemInstance, ProblemKind};

pub const DEFAULT_BUDGET: u128 = 1 << 24;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<W> {
    pub opt_value: W,
    /// The lexicographically first maximizer.
    pub opt_assignment: Vec<usize>,
    pub search_space_size: u128,
}

#[derive(Debug, Clone)]
enum Test {
    Differ,
    Agree,
    /// First scope variable 1, second 0.
    Leaves,
    Clause(Vec<Literal>),
}

#[derive(Debug, Clone)]
struct Factor<W> {
    scope: Vec<usize>,
    weight: W,
    test: Test,
}

impl<W> Factor<W> {
    fn holds(&self, x: &[usize]) -> bool {
        match &self.test {
            Test::Differ => x[self.scope[0]] != x[self.scope[1]],
            Test::Agree => x[self.scope[0]] == x[self.scope[1]],
            Test::Leaves => x[self.scope[0]] == 1 && x[self.scope[1]] == 0,
            Test::Clause(lits) => lits.iter().any(|l| (x[l.var] == 1) == l.positive),
        }
    }

    fn last(&self) -> usize {
        *self.scope.iter().max().expect("non-empty scope")
    }
}

fn factors<W: Scalar>(inst: &ProblemInstance<W>) -> Vec<Factor<W>> {
    if let Some(cs) = inst.clauses() {
        return cs
            .clauses()
            .iter()
            .map(|c| Factor {
                scope: c.literals().iter().map(|l| l.var).collect(),
                weight: c.weight.clone(),
                test: Test::Clause(c.literals().to_vec()),
            })
            .collect();
    }
    inst.graph()
        .edges()
        .iter()
        .map(|e| Factor {
            scope: vec![e.u, e.v],
            weight: e.weight.clone(),
            test: match (inst.kind(), e.attr.sign) {
                (ProblemKind::DiCut, _) => Test::Leaves,
                (ProblemKind::CorrClust2, Sign::Positive) => Test::Agree,
                _ => Test::Differ,
            },
        })
        .collect()
}

fn power(d: usize, n: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..n {
        acc = acc.saturating_mul(d as u128);
    }
    acc
}

/// Bell number `B(n)`, saturating.
fn bell(n: usize) -> u128 {
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &x in &row {
            let prev = *next.last().unwrap();
            next.push(prev.saturating_add(x));
        }
        row = next;
    }
    row[0]
}

fn within_budget(size: u128, budget: u128) -> Result<()> {
    if size > budget {
        Err(Error::BudgetExceeded { size, budget })
    } else {
        Ok(())
    }
}

/// Depth-first search over assignments in lexicographic order. A factor is
/// scored once its last variable is set; branches that cannot beat the best
/// value so far are cut, so the first maximizer is the one reported.
struct Search<'f, W> {
    by_last: Vec<Vec<&'f Factor<W>>>,
    /// Weight of factors not yet scored when variable `i` is about to be set.
    remaining: Vec<W>,
    domain: usize,
    /// Restricted growth strings (set partitions) instead of `A^n`.
    partitions: bool,
    x: Vec<usize>,
    best: Option<(W, Vec<usize>)>,
}

impl<'f, W: Scalar> Search<'f, W> {
    fn new(n: usize, factors: &'f [Factor<W>], domain: usize, partitions: bool) -> Self {
        let mut by_last = vec![Vec::new(); n];
        for f in factors {
            by_last[f.last()].push(f);
        }
        let mut remaining = vec![W::zero(); n + 1];
        for i in (0..n).rev() {
            let here: W = by_last[i].iter().map(|f| f.weight.clone()).sum();
            remaining[i] = remaining[i + 1].clone() + here;
        }
        Self {
            by_last,
            remaining,
            domain,
            partitions,
            x: vec![0; n],
            best: None,
        }
    }

    fn run(mut self) -> (W, Vec<usize>) {
        self.go(0, W::zero(), 0);
        self.best.expect("at least one assignment")
    }

    fn go(&mut self, i: usize, current: W, labels: usize) {
        let n = self.x.len();
        if i == n {
            if self.best.as_ref().is_none_or(|(b, _)| current > *b) {
                self.best = Some((current, self.x.clone()));
            }
            return;
        }
        if let Some((b, _)) = &self.best {
            if current.clone() + self.remaining[i].clone() <= *b {
                return;
            }
        }
        let choices = if self.partitions { labels + 1 } else { self.domain };
        for a in 0..choices {
            self.x[i] = a;
            let gained: W = self.by_last[i]
                .iter()
                .filter(|f| f.holds(&self.x))
                .map(|f| f.weight.clone())
                .sum();
            self.go(i + 1, current.clone() + gained, labels.max(a + 1));
        }
    }
}

/// Exact optimum over all `|A|^n` assignments (satisfied weight for 2-SAT).
pub fn brute_force_opt<W: Scalar>(inst: &ProblemInstance<W>) -> Result<OracleResult<W>> {
    brute_force_opt_with_budget(inst, DEFAULT_BUDGET)
}

pub fn brute_force_opt_with_budget<W: Scalar>(inst: &ProblemInstance<W>, budget: u128) -> Result<OracleResult<W>> {
    let n = inst.node_count();
    let d = inst.domain_size();
    let size = power(d, n);
    within_budget(size, budget)?;
    let fs = factors(inst);
    let (opt_value, opt_assignment) = Search::new(n, &fs, d, false).run();
    Ok(OracleResult {
        opt_value,
        opt_assignment,
        search_space_size: size,
    })
}

/// Max-agree over every partition of the nodes into any number of clusters.
/// Assignments are cluster labels in restricted growth form.
pub fn brute_force_partition_opt<W: Scalar>(inst: &ProblemInstance<W>, budget: u128) -> Result<OracleResult<W>> {
    if inst.kind() != ProblemKind::CorrClust2 {
        return Err(Error::Precondition(format!("partition oracle needs a signed instance, got {}", inst.kind())));
    }
    let n = inst.node_count();
    let size = bell(n);
    within_budget(size, budget)?;
    let fs = factors(inst);
    let (opt_value, opt_assignment) = Search::new(n, &fs, n, true).run();
    Ok(OracleResult {
        opt_value,
        opt_assignment,
        search_space_size: size,
    })
}

/// Calls `visit` on every completion of `x` over `0..d`, lexicographically.
fn for_each_completion(x: &mut [usize], free: &[usize], d: usize, visit: &mut dyn FnMut(&[usize]) -> Result<()>) -> Result<()> {
    for &v in free {
        x[v] = 0;
    }
    loop {
        visit(x)?;
        let mut i = free.len();
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            let v = free[i];
            if x[v] + 1 < d {
                x[v] += 1;
                break;
            }
            x[v] = 0;
        }
    }
}

/// `E[f | partial]` with the unassigned variables uniform and independent.
pub fn brute_force_expectation<W: Scalar, U: LocalUtility<W> + ?Sized>(u: &U, partial: &Assignment<usize>) -> Result<W> {
    brute_force_expectation_with_budget(u, partial, DEFAULT_BUDGET)
}

pub fn brute_force_expectation_with_budget<W: Scalar, U: LocalUtility<W> + ?Sized>(
    u: &U,
    partial: &Assignment<usize>,
    budget: u128,
) -> Result<W> {
    let n = u.node_count();
    if partial.len() != n {
        return Err(Error::DomainMismatch {
            expected: n,
            got: partial.len(),
        });
    }
    let d = u.domain_size();
    let free = partial.unassigned_nodes();
    let size = power(d, free.len());
    within_budget(size, budget)?;
    let mut x: Vec<usize> = partial.values().iter().map(|a| a.unwrap_or(0)).collect();
    let mut total = W::zero();
    for_each_completion(&mut x, &free, d, &mut |x| {
        total = total.clone() + u.eval_full(x)?;
        Ok(())
    })?;
    Ok(total / W::from_u64(size as u64))
}

/// `E[f | Y, X_v = alpha] − E[f | Y]`, where `Y` is `partial` without `v`.
pub fn brute_force_conditional_gain<W: Scalar, U: LocalUtility<W> + ?Sized>(
    u: &U,
    partial: &Assignment<usize>,
    v: usize,
    alpha: usize,
) -> Result<W> {
    let mut y = partial.clone();
    y.unset(v);
    let before = brute_force_expectation(u, &y)?;
    y.set(v, alpha);
    Ok(brute_force_expectation(u, &y)? - before)
}

/// The conditional gain by enumerating every completion `Z_v` of the
/// unassigned neighbors and applying `g_v` to each completed view.
pub fn enumerated_local_gain<W: Scalar, U: LocalUtility<W> + ?Sized>(
    u: &U,
    view: &LocalView<'_, W, usize>,
    alpha: usize,
) -> Result<W> {
    let d = u.domain_size();
    let free: Vec<usize> = (0..view.degree()).filter(|&i| view.neighbors()[i].value.is_none()).collect();
    let size = power(d, free.len());
    within_budget(size, DEFAULT_BUDGET)?;
    let mut completed = view.clone();
    let mut z = vec![0usize; view.degree()];
    let mut total = W::zero();
    for_each_completion(&mut z, &free, d, &mut |z| {
        for &i in &free {
            completed.set_value(i, Some(z[i]));
        }
        for a2 in 0..d {
            total = total.clone() + u.local_delta(&completed, alpha, a2);
        }
        Ok(())
    })?;
    Ok(total / (W::from_u64(size as u64) * from_usize::<W>(d)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubmodularReport {
    pub samples: usize,
    /// Violating `(S, T)` pairs as membership vectors.
    pub violations: Vec<(Vec<bool>, Vec<bool>)>,
}

/// Samples `(S, T)` and checks `f(S) + f(T) ≥ f(S ∪ T) + f(S ∩ T)` exactly.
pub fn check_submodular<W: Scalar>(
    n: usize,
    f: impl Fn(&[bool]) -> Result<W>,
    samples: usize,
    seed: u64,
) -> Result<SubmodularReport> {
    let mut rng = checker_rng(seed);
    let mut violations = Vec::new();
    for _ in 0..samples {
        let s: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let t: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let union: Vec<bool> = s.iter().zip(&t).map(|(a, b)| *a || *b).collect();
        let inter: Vec<bool> = s.iter().zip(&t).map(|(a, b)| *a && *b).collect();
        if f(&s)? + f(&t)? < f(&union)? + f(&inter)? {
            violations.push((s, t));
        }
    }
    Ok(SubmodularReport { samples, violations })
}

/// [`check_submodular`] for a binary utility, with `S = {v : x_v = 1}`.
pub fn check_submodular_utility<W: Scalar, U: LocalUtility<W> + ?Sized>(u: &U, samples: usize, seed: u64) -> Result<SubmodularReport> {
    if u.domain_size() != 2 {
        return Err(Error::Precondition("submodularity is checked on binary domains".into()));
    }
    check_submodular(
        u.node_count(),
        |s| u.eval_full(&s.iter().map(|&b| b as usize).collect::<Vec<_>>()),
        samples,
        seed,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalDeltaReport<W> {
    pub samples: usize,
    pub mismatches: usize,
    /// `(v, α, α′, f-difference, g_v)` of the first mismatch.
    pub first_mismatch: Option<(usize, usize, usize, W, W)>,
}

fn checker_rng(seed: u64) -> NodeRng {
    node_stream(seed, usize::MAX - 3)
}

/// Samples total `X`, `v`, `α`, `α′` and compares
/// `f(X ∪ {v=α}) − f(X ∪ {v=α′})` against `g_v(L_v[X], α, α′)`.
pub fn check_local_delta<W: Scalar, U: LocalUtility<W> + ?Sized>(u: &U, samples: usize, seed: u64) -> Result<LocalDeltaReport<W>> {
    let n = u.node_count();
    let d = u.domain_size();
    let mut rng = checker_rng(seed);
    let mut report = LocalDeltaReport {
        samples,
        mismatches: 0,
        first_mismatch: None,
    };
    for _ in 0..samples {
        let mut x: Vec<usize> = (0..n).map(|_| rng.gen_range(0..d)).collect();
        let v = rng.gen_range(0..n);
        let (a, a2) = (rng.gen_range(0..d), rng.gen_range(0..d));
        let g = u.local_delta(&LocalView::gather(u.graph(), v, |w| Some(x[w])), a, a2);
        x[v] = a;
        let fa = u.eval_full(&x)?;
        x[v] = a2;
        let diff = fa - u.eval_full(&x)?;
        if diff != g {
            report.mismatches += 1;
            report.first_mismatch.get_or_insert((v, a, a2, diff, g));
        }
    }
    Ok(report)
}

/// [`check_local_delta`] on partial assignments, with `⊥` among the
/// sampled values of `X`, `α` and `α′`.
pub fn check_partial_delta<W: Scalar, U: PartialLocalUtility<W> + ?Sized>(u: &U, samples: usize, seed: u64) -> Result<usize> {
    let n = u.node_count();
    let mut rng = checker_rng(seed);
    let pick = |rng: &mut NodeRng| match rng.gen_range(0..3) {
        0 => None,
        b => Some(b - 1),
    };
    let mut mismatches = 0;
    for _ in 0..samples {
        let mut x: Vec<Option<usize>> = (0..n).map(|_| pick(&mut rng)).collect();
        let v = rng.gen_range(0..n);
        let (a, a2) = (pick(&mut rng), pick(&mut rng));
        let g = u.partial_delta(&LocalView::gather(u.graph(), v, |w| x[w]), a, a2);
        x[v] = a;
        let fa = u.eval_partial(&x)?;
        x[v] = a2;
        if fa - u.eval_partial(&x)? != g {
            mismatches += 1;
        }
    }
    Ok(mismatches)
}
