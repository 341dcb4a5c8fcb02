use std::collections::{BTreeSet, HashMap};

use super::{Formula, FormulaError};
use Formula as F;

/// A finite run: the set of true atoms at each position.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Run {
    pub states: Vec<BTreeSet<String>>,
}

impl Run {
    pub fn new(states: Vec<BTreeSet<String>>) -> Self {
        Run { states }
    }

    pub fn from_slices(states: &[&[&str]]) -> Self {
        Run {
            states: states
                .iter()
                .map(|s| s.iter().map(|a| a.to_string()).collect())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Truth of `atom` at `t`, reading the last state for positions past the end.
    pub fn holds(&self, atom: &str, t: usize) -> bool {
        self.states[t.min(self.states.len() - 1)].contains(atom)
    }
}

/// Truth value of a belief-free formula on `run` at position `t < run.len()`.
pub fn eval(f: &Formula, run: &Run, t: usize) -> Result<bool, FormulaError> {
    if t >= run.len() {
        return Err(FormulaError::PositionOutOfRange { t, len: run.len() });
    }
    if let Some(b) = f.first_belief() {
        return Err(FormulaError::UnsupportedBelief(b));
    }
    let mut ev = Evaluator { run, tables: HashMap::new() };
    Ok(ev.value(f, t))
}

struct Evaluator<'a> {
    run: &'a Run,
    // Keyed by node address; every node is borrowed from the same root for
    // the evaluator's lifetime.
    tables: HashMap<*const Formula, Vec<bool>>,
}

impl Evaluator<'_> {
    fn stable(&self, f: &Formula) -> usize {
        self.run.len() - 1 + f.past_depth()
    }

    fn value(&mut self, f: &Formula, t: usize) -> bool {
        let key = f as *const Formula;
        if !self.tables.contains_key(&key) {
            let table = self.build(f);
            self.tables.insert(key, table);
        }
        let table = &self.tables[&key];
        table[t.min(table.len() - 1)]
    }

    fn build(&mut self, f: &Formula) -> Vec<bool> {
        let last = self.stable(f);
        let n = last + 1;
        let mut v = vec![false; n];
        match f {
            F::Bottom => {}
            F::Top => v.fill(true),
            F::Atom(a) => {
                for (q, slot) in v.iter_mut().enumerate() {
                    *slot = self.run.holds(&a.name, q);
                }
            }
            F::Not(a) => {
                for q in 0..n {
                    v[q] = !self.value(a, q);
                }
            }
            F::And(a, b) | F::Or(a, b) | F::Implies(a, b) | F::Iff(a, b) => {
                for q in 0..n {
                    let (x, y) = (self.value(a, q), self.value(b, q));
                    v[q] = match f {
                        F::And(..) => x && y,
                        F::Or(..) => x || y,
                        F::Implies(..) => !x || y,
                        _ => x == y,
                    };
                }
            }
            F::Believes(..) => unreachable!("rejected before evaluation"),
            F::Next(a) => {
                for q in 0..n {
                    v[q] = self.value(a, q + 1);
                }
            }
            F::Prev(a) => {
                for q in 1..n {
                    v[q] = self.value(a, q - 1);
                }
            }
            F::Until(a, b) => {
                v[last] = self.value(b, last);
                for q in (0..last).rev() {
                    v[q] = self.value(b, q) || (self.value(a, q) && v[q + 1]);
                }
            }
            F::Finally(a) | F::Globally(a) => {
                let any = matches!(f, F::Finally(_));
                v[last] = self.value(a, last);
                for q in (0..last).rev() {
                    let here = self.value(a, q);
                    v[q] = if any { here || v[q + 1] } else { here && v[q + 1] };
                }
            }
            F::Since(a, b) => {
                v[0] = self.value(b, 0);
                for q in 1..n {
                    v[q] = self.value(b, q) || (self.value(a, q) && v[q - 1]);
                }
            }
            F::Historically(a) => {
                v[0] = self.value(a, 0);
                for q in 1..n {
                    v[q] = self.value(a, q) && v[q - 1];
                }
            }
            F::GloballyWithin(k, a) | F::FinallyWithin(k, a) => {
                let all = matches!(f, F::GloballyWithin(..));
                for q in 0..n {
                    let mut acc = all;
                    for i in 0..=*k as usize {
                        let x = self.value(a, q + i);
                        acc = if all { acc && x } else { acc || x };
                    }
                    v[q] = acc;
                }
            }
        }
        v
    }
}
