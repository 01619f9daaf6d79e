//! Weighted 2-SAT clause sets.
//!
//! Text format: a header `n m`, then `m` lines `w v1 p1 [v2 p2]` where
//! `p` is `+` for a positive literal and `-` for a negated one.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{content_lines, parse_field, parse_header, parse_weight};
use crate::rng::node_stream;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Self { var, positive: true }
    }

    pub fn neg(var: usize) -> Self {
        Self { var, positive: false }
    }

    /// Truth value under an assignment of its variable (`1` is true).
    pub fn holds(&self, value: usize) -> bool {
        (value == 1) == self.positive
    }
}

/// Satisfaction state of a clause under a partial assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClauseStatus {
    /// Some literal is true.
    Satisfied,
    /// Every literal is assigned and false.
    Falsified,
    Open,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clause<W> {
    literals: Vec<Literal>,
    pub weight: W,
}

impl<W: Scalar> Clause<W> {
    pub fn new(literals: Vec<Literal>, weight: W) -> Result<Self> {
        match literals.as_slice() {
            [_] => {}
            [a, b] if a.var != b.var => {}
            [_, _] => {
                return Err(Error::InvalidInstance(
                    "a two-literal clause must use two distinct variables".into(),
                ))
            }
            _ => return Err(Error::InvalidInstance("a clause has one or two literals".into())),
        }
        if weight.is_negative() {
            return Err(Error::InvalidInstance("negative clause weight".into()));
        }
        Ok(Self { literals, weight })
    }

    pub fn unit(lit: Literal, weight: W) -> Self {
        Self {
            literals: vec![lit],
            weight,
        }
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn is_unit(&self) -> bool {
        self.literals.len() == 1
    }

    pub fn mentions(&self, var: usize) -> bool {
        self.literals.iter().any(|l| l.var == var)
    }

    /// The variable sharing this clause with `var`, if any.
    pub fn partner(&self, var: usize) -> Option<usize> {
        self.literals.iter().map(|l| l.var).find(|&x| x != var)
    }

    /// Status given a lookup of variable values (`None` = unassigned).
    pub fn status(&self, value_of: impl Fn(usize) -> Option<usize>) -> ClauseStatus {
        let mut open = false;
        for lit in &self.literals {
            match value_of(lit.var) {
                Some(x) if lit.holds(x) => return ClauseStatus::Satisfied,
                Some(_) => {}
                None => open = true,
            }
        }
        if open {
            ClauseStatus::Open
        } else {
            ClauseStatus::Falsified
        }
    }

    fn key(&self) -> Vec<Literal> {
        let mut k = self.literals.clone();
        k.sort();
        k
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClauseSet<W> {
    variable_count: usize,
    clauses: Vec<Clause<W>>,
}

impl<W: Scalar> ClauseSet<W> {
    pub fn new(variable_count: usize, clauses: Vec<Clause<W>>) -> Result<Self> {
        if variable_count == 0 {
            return Err(Error::InvalidInstance("a clause set needs at least one variable".into()));
        }
        let mut keys = HashSet::with_capacity(clauses.len());
        for c in &clauses {
            Clause::new(c.literals.clone(), c.weight.clone())?;
            for lit in &c.literals {
                if lit.var >= variable_count {
                    return Err(Error::InvalidNode {
                        node: lit.var,
                        count: variable_count,
                    });
                }
            }
            if !keys.insert(c.key()) {
                return Err(Error::InvalidInstance(format!(
                    "duplicate clause {:?}",
                    c.literals
                )));
            }
        }
        Ok(Self {
            variable_count,
            clauses,
        })
    }

    pub fn variable_count(&self) -> usize {
        self.variable_count
    }

    pub fn clauses(&self) -> &[Clause<W>] {
        &self.clauses
    }

    pub fn clause(&self, id: usize) -> &Clause<W> {
        &self.clauses[id]
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// `w(C)`, the total clause weight.
    pub fn total_weight(&self) -> W {
        self.clauses.iter().map(|c| c.weight.clone()).sum()
    }

    /// Clause ids per variable.
    pub fn index_by_variable(&self) -> Vec<Vec<usize>> {
        let mut index = vec![Vec::new(); self.variable_count];
        for (id, c) in self.clauses.iter().enumerate() {
            for lit in &c.literals {
                index[lit.var].push(id);
            }
        }
        index
    }

    /// Keeps the clauses accepted by `keep`.
    pub fn retain(&self, mut keep: impl FnMut(usize, &Clause<W>) -> bool) -> ClauseSet<W> {
        let clauses = self
            .clauses
            .iter()
            .enumerate()
            .filter(|(id, c)| keep(*id, c))
            .map(|(_, c)| c.clone())
            .collect();
        ClauseSet {
            variable_count: self.variable_count,
            clauses,
        }
    }

    /// Restricts to clauses over `vars`, relabelling variables to
    /// `0..vars.len()`. Clauses touching other variables are dropped.
    pub fn induced(&self, vars: &[usize]) -> Result<ClauseSet<W>> {
        let mut index = vec![usize::MAX; self.variable_count];
        for (i, &v) in vars.iter().enumerate() {
            index[v] = i;
        }
        let clauses = self
            .clauses
            .iter()
            .filter(|c| c.literals.iter().all(|l| index[l.var] != usize::MAX))
            .map(|c| Clause {
                literals: c
                    .literals
                    .iter()
                    .map(|l| Literal {
                        var: index[l.var],
                        positive: l.positive,
                    })
                    .collect(),
                weight: c.weight.clone(),
            })
            .collect();
        ClauseSet::new(vars.len(), clauses)
    }

    pub fn to_text(&self) -> Result<String> {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.variable_count, self.clauses.len());
        for (id, c) in self.clauses.iter().enumerate() {
            let w = c
                .weight
                .to_integer()
                .ok_or_else(|| Error::InvalidInstance(format!("clause {id} has a non-integer weight")))?;
            let _ = write!(out, "{w}");
            for lit in &c.literals {
                let _ = write!(out, " {} {}", lit.var, if lit.positive { '+' } else { '-' });
            }
            out.push('\n');
        }
        Ok(out)
    }
}

pub fn parse_clauses<W: Scalar>(text: &str) -> Result<ClauseSet<W>> {
    let mut lines = content_lines(text);
    let (header_line, n, m) = parse_header(&mut lines)?;
    let mut clauses = Vec::with_capacity(m);
    for (line, content) in lines.by_ref().take(m) {
        let f: Vec<&str> = content.split_whitespace().collect();
        if f.len() != 3 && f.len() != 5 {
            return Err(Error::Parse {
                line,
                message: "clause line must be `w v1 p1 [v2 p2]`".into(),
            });
        }
        let weight = parse_weight(f[0], line)?;
        let mut literals = Vec::with_capacity(2);
        for pair in f[1..].chunks(2) {
            let var: usize = parse_field(pair[0], line, "variable")?;
            if var >= n {
                return Err(Error::Parse {
                    line,
                    message: format!("variable {var} out of range (n = {n})"),
                });
            }
            let positive = match pair[1] {
                "+" => true,
                "-" => false,
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("bad polarity {other:?}"),
                    })
                }
            };
            literals.push(Literal { var, positive });
        }
        clauses.push(Clause::new(literals, weight).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?);
    }
    if clauses.len() != m {
        return Err(Error::Parse {
            line: header_line,
            message: format!("header promises {m} clauses, found {}", clauses.len()),
        });
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::Parse {
            line,
            message: "trailing content after the last clause".into(),
        });
    }
    ClauseSet::new(n, clauses)
}

/// Random clause set: up to `m` distinct clauses, each a unit clause with
/// probability `unit_fraction`, weights uniform in `[1, w_max]`.
pub fn generate_random_clauses<W: Scalar>(
    n: usize,
    m: usize,
    unit_fraction: f64,
    w_max: u64,
    seed: u64,
) -> Result<ClauseSet<W>> {
    if n == 0 || w_max == 0 || !(0.0..=1.0).contains(&unit_fraction) {
        return Err(Error::Precondition("clause generator needs n >= 1, w_max >= 1".into()));
    }
    if n == 1 && unit_fraction < 1.0 {
        return Err(Error::Precondition("two-literal clauses need n >= 2".into()));
    }
    let mut rng = node_stream(seed, usize::MAX - 1);
    let mut keys = HashSet::new();
    let mut clauses = Vec::with_capacity(m);
    // Bounded retries keep the generator total when m exceeds the number of
    // distinct clauses.
    for _ in 0..m.saturating_mul(20) {
        if clauses.len() == m {
            break;
        }
        let lit = |rng: &mut crate::rng::NodeRng, var| Literal {
            var,
            positive: rng.gen_bool(0.5),
        };
        let a = rng.gen_range(0..n);
        let literals = if rng.gen_bool(unit_fraction) {
            vec![lit(&mut rng, a)]
        } else {
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            vec![lit(&mut rng, a), lit(&mut rng, b)]
        };
        let weight = W::from_u64(rng.gen_range(1..=w_max));
        let c = Clause::new(literals, weight)?;
        if keys.insert(c.key()) {
            clauses.push(c);
        }
    }
    ClauseSet::new(n, clauses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use proptest::prelude::*;

    type Cs = ClauseSet<Rational>;

    #[test]
    fn parse_and_status() {
        let cs: Cs = parse_clauses("2 2\n1 0 + 1 +\n2 0 -\n").unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs.total_weight(), Rational::from_ratio(3, 1));
        let x = [Some(0usize), Some(1)];
        assert_eq!(cs.clause(0).status(|v| x[v]), ClauseStatus::Satisfied);
        assert_eq!(cs.clause(1).status(|v| x[v]), ClauseStatus::Satisfied);
        let y = [Some(1usize), None];
        assert_eq!(cs.clause(0).status(|v| y[v]), ClauseStatus::Satisfied);
        assert_eq!(cs.clause(1).status(|v| y[v]), ClauseStatus::Falsified);
        let z = [Some(0usize), None];
        assert_eq!(cs.clause(0).status(|v| z[v]), ClauseStatus::Open);
        assert_eq!(cs.index_by_variable(), vec![vec![0, 1], vec![0]]);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_clauses::<Rational>("2 1\n1 0 + 0 -").is_err());
        assert!(parse_clauses::<Rational>("2 1\n1 0 + 5 -").is_err());
        assert!(parse_clauses::<Rational>("2 1\n1 0 *").is_err());
        assert!(matches!(
            parse_clauses::<Rational>("2 1\n-1 0 +"),
            Err(Error::NegativeWeight { line: 2 })
        ));
        // same literal set in the other order
        assert!(parse_clauses::<Rational>("2 2\n1 0 + 1 -\n3 1 - 0 +").is_err());
        assert!(parse_clauses::<Rational>("2 1\n1 0 + 1 + 1 +").is_err());
    }

    #[test]
    fn generator_is_deterministic() {
        let a: Cs = generate_random_clauses(8, 20, 0.3, 5, 11).unwrap();
        let b: Cs = generate_random_clauses(8, 20, 0.3, 5, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        let units: Cs = generate_random_clauses(3, 50, 1.0, 5, 1).unwrap();
        assert!(units.clauses().iter().all(Clause::is_unit));
        assert!(units.len() <= 6);
    }

    proptest! {
        #[test]
        fn text_round_trip(n in 2usize..10, m in 0usize..30, seed: u64) {
            let cs: Cs = generate_random_clauses(n, m, 0.3, 9, seed).unwrap();
            let back: Cs = parse_clauses(&cs.to_text().unwrap()).unwrap();
            prop_assert_eq!(back, cs);
        }
    }
}
