use std::collections::BTreeSet;

use crate::formula::{CmpOp, Formula, Operand, ParseError, Span, Term, Vocabulary};
use crate::world::{Domain, StateVar};

/// Most valuations a single comparison may range over.
const COMPARISON_BOUND: usize = 1 << 16;

/// Resolves names against declared variables and actions. Comparisons are
/// expanded over the finite domains of the variables they mention.
pub struct DomainVocabulary {
    pub vars: Vec<StateVar>,
    pub actions: BTreeSet<String>,
}

enum Resolved {
    Var(usize),
    Int(i64),
}

impl DomainVocabulary {
    pub fn new(vars: Vec<StateVar>, actions: impl IntoIterator<Item = String>) -> Self {
        DomainVocabulary { vars, actions: actions.into_iter().collect() }
    }

    fn var(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// A symbolic value is read as its position in the domain of a variable
    /// it is compared with.
    fn literal(&self, name: &str, context: &[usize]) -> Option<i64> {
        let owner = context.iter().copied().chain(0..self.vars.len()).find_map(|v| {
            let var = &self.vars[v];
            match var.domain {
                Domain::Range(..) => None,
                _ => var.index_of(name),
            }
        });
        owner.map(|i| i as i64)
    }

    fn resolve(&self, t: &Term, context: &[usize]) -> Result<Vec<(bool, Resolved)>, ParseError> {
        t.parts
            .iter()
            .map(|(pos, op)| {
                let r = match op {
                    Operand::Int(v) => Resolved::Int(*v),
                    Operand::Name(n) => match self.var(n) {
                        Some(v) => Resolved::Var(v),
                        None => Resolved::Int(self.literal(n, context).ok_or_else(|| {
                            ParseError::new(t.span, format!("unknown variable or value `{n}`"))
                        })?),
                    },
                };
                Ok((*pos, r))
            })
            .collect()
    }

    fn term_vars(t: &[&Term], vars: &dyn Fn(&str) -> Option<usize>) -> Vec<usize> {
        let mut out: Vec<usize> = t
            .iter()
            .flat_map(|t| t.parts.iter())
            .filter_map(|(_, op)| match op {
                Operand::Name(n) => vars(n),
                Operand::Int(_) => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn value_of(parts: &[(bool, Resolved)], vars: &[StateVar], vals: &[usize], order: &[usize]) -> i64 {
    parts
        .iter()
        .map(|(pos, r)| {
            let v = match r {
                Resolved::Int(i) => *i,
                Resolved::Var(v) => {
                    let k = order.iter().position(|x| x == v).expect("collected");
                    vars[*v].numeric(vals[k])
                }
            };
            if *pos { v } else { -v }
        })
        .sum()
}

impl Vocabulary for DomainVocabulary {
    fn name(&self, name: &str, span: Span) -> Result<Formula, ParseError> {
        if let Some(v) = self.var(name) {
            let var = &self.vars[v];
            return match var.domain {
                Domain::Bool => Ok(Formula::atom(var.atom(1))),
                _ => Err(ParseError::new(span, format!("`{name}` is not boolean; compare it with a value"))),
            };
        }
        if self.actions.contains(name) {
            return Ok(Formula::atom(name));
        }
        Err(ParseError::new(span, format!("unknown name `{name}`")))
    }

    fn compare(&self, op: CmpOp, lhs: &Term, rhs: &Term, span: Span) -> Result<Formula, ParseError> {
        let order = Self::term_vars(&[lhs, rhs], &|n| self.var(n));
        let l = self.resolve(lhs, &order)?;
        let r = self.resolve(rhs, &order)?;
        let sizes: Vec<usize> = order.iter().map(|&v| self.vars[v].size()).collect();
        let total = sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s).filter(|&n| n <= COMPARISON_BOUND));
        let Some(total) = total else {
            return Err(ParseError::new(span, "comparison ranges over too many valuations"));
        };
        let mut holding = Vec::new();
        let mut failing = Vec::new();
        let mut vals = vec![0usize; order.len()];
        for _ in 0..total {
            let ok = op.holds(value_of(&l, &self.vars, &vals, &order), value_of(&r, &self.vars, &vals, &order));
            if ok { &mut holding } else { &mut failing }.push(vals.clone());
            for (k, x) in vals.iter_mut().enumerate() {
                *x += 1;
                if *x < sizes[k] {
                    break;
                }
                *x = 0;
            }
        }
        let cube = |vals: &Vec<usize>| {
            Formula::conj(order.iter().zip(vals).map(|(&v, &x)| Formula::atom(self.vars[v].atom(x))).collect::<Vec<_>>())
        };
        Ok(if failing.is_empty() {
            Formula::Top
        } else if holding.is_empty() {
            Formula::Bottom
        } else if holding.len() <= failing.len() {
            Formula::disj(holding.iter().map(cube).collect::<Vec<_>>())
        } else {
            Formula::not(Formula::disj(failing.iter().map(cube).collect::<Vec<_>>()))
        })
    }
}
