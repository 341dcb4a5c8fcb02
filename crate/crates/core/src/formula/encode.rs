use std::collections::{BTreeMap, HashMap};

use super::{Formula, FormulaError};
use crate::sat::{ClauseSink, CnfFormula};
use Formula as F;

/// Supplies the literal standing for an atom at a run position.
pub trait AtomSource<S: ClauseSink> {
    /// `t` is always below the run length the encoder was built with.
    fn atom_lit(&mut self, sink: &mut S, atom: &str, t: usize) -> Result<i32, FormulaError>;
}

/// Tseitin encoder for belief-free formulas over a run of fixed length.
/// Each (subformula, position) pair gets one defined literal.
#[derive(Clone, Debug)]
pub struct TraceEncoder {
    len: usize,
    truth: Option<i32>,
    memo: HashMap<(Formula, usize), i32>,
    past: HashMap<Formula, usize>,
}

impl TraceEncoder {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "runs have at least one state");
        TraceEncoder { len, truth: None, memo: HashMap::new(), past: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn top<S: ClauseSink>(&mut self, sink: &mut S) -> i32 {
        *self.truth.get_or_insert_with(|| {
            let v = sink.fresh_var();
            sink.push_clause(&[v]);
            v
        })
    }

    fn stable(&mut self, f: &Formula) -> usize {
        let pd = match self.past.get(f) {
            Some(&d) => d,
            None => {
                let d = f.past_depth();
                self.past.insert(f.clone(), d);
                d
            }
        };
        self.len - 1 + pd
    }

    /// Literal equivalent to `f` holding at position `t`.
    pub fn encode<S: ClauseSink, A: AtomSource<S>>(
        &mut self,
        sink: &mut S,
        atoms: &mut A,
        f: &Formula,
        t: usize,
    ) -> Result<i32, FormulaError> {
        if let Some(b) = f.first_belief() {
            return Err(FormulaError::UnsupportedBelief(b));
        }
        self.lit(sink, atoms, f, t)
    }

    fn lit<S: ClauseSink, A: AtomSource<S>>(
        &mut self,
        sink: &mut S,
        atoms: &mut A,
        f: &Formula,
        t: usize,
    ) -> Result<i32, FormulaError> {
        let last = self.stable(f);
        let q = t.min(last);
        if let Some(&l) = self.memo.get(&(f.clone(), q)) {
            return Ok(l);
        }
        let l = match f {
            F::Bottom => -self.top(sink),
            F::Top => self.top(sink),
            F::Atom(a) => atoms.atom_lit(sink, &a.name, q.min(self.len - 1))?,
            F::Not(a) => -self.lit(sink, atoms, a, q)?,
            F::And(a, b) => {
                let (x, y) = (self.lit(sink, atoms, a, q)?, self.lit(sink, atoms, b, q)?);
                and_gate(sink, &[x, y])
            }
            F::Or(a, b) => {
                let (x, y) = (self.lit(sink, atoms, a, q)?, self.lit(sink, atoms, b, q)?);
                or_gate(sink, &[x, y])
            }
            F::Implies(a, b) => {
                let (x, y) = (self.lit(sink, atoms, a, q)?, self.lit(sink, atoms, b, q)?);
                or_gate(sink, &[-x, y])
            }
            F::Iff(a, b) => {
                let (x, y) = (self.lit(sink, atoms, a, q)?, self.lit(sink, atoms, b, q)?);
                let o = sink.fresh_var();
                sink.push_clause(&[-o, -x, y]);
                sink.push_clause(&[-o, x, -y]);
                sink.push_clause(&[o, x, y]);
                sink.push_clause(&[o, -x, -y]);
                o
            }
            F::Believes(..) => unreachable!("rejected in encode"),
            F::Next(a) => self.lit(sink, atoms, a, q + 1)?,
            F::Prev(a) => {
                if q == 0 {
                    -self.top(sink)
                } else {
                    self.lit(sink, atoms, a, q - 1)?
                }
            }
            F::Until(a, b) => self.unroll_future(sink, atoms, f, a, b, q, last)?,
            F::Finally(a) | F::Globally(a) => self.unroll_future(sink, atoms, f, a, a, q, last)?,
            F::Since(a, b) => {
                let y = self.lit(sink, atoms, b, q)?;
                if q == 0 {
                    y
                } else {
                    let x = self.lit(sink, atoms, a, q)?;
                    let before = self.lit(sink, atoms, f, q - 1)?;
                    let mid = and_gate(sink, &[x, before]);
                    or_gate(sink, &[y, mid])
                }
            }
            F::Historically(a) => {
                let x = self.lit(sink, atoms, a, q)?;
                if q == 0 {
                    x
                } else {
                    let before = self.lit(sink, atoms, f, q - 1)?;
                    and_gate(sink, &[x, before])
                }
            }
            F::GloballyWithin(k, a) | F::FinallyWithin(k, a) => {
                let mut parts = Vec::with_capacity(*k as usize + 1);
                for i in 0..=*k as usize {
                    parts.push(self.lit(sink, atoms, a, q + i)?);
                }
                if matches!(f, F::GloballyWithin(..)) {
                    and_gate(sink, &parts)
                } else {
                    or_gate(sink, &parts)
                }
            }
        };
        self.memo.insert((f.clone(), q), l);
        Ok(l)
    }

    // Until, F and G share the backward recurrence; the stable position
    // takes the value of the right-hand side (or the operand for F/G).
    #[allow(clippy::too_many_arguments)]
    fn unroll_future<S: ClauseSink, A: AtomSource<S>>(
        &mut self,
        sink: &mut S,
        atoms: &mut A,
        f: &Formula,
        a: &Formula,
        b: &Formula,
        q: usize,
        last: usize,
    ) -> Result<i32, FormulaError> {
        // Fill from the stable end so recursion depth stays at one step.
        for r in (q + 1..=last).rev() {
            if !self.memo.contains_key(&(f.clone(), r)) {
                let l = self.future_step(sink, atoms, f, a, b, r, last)?;
                self.memo.insert((f.clone(), r), l);
            }
        }
        self.future_step(sink, atoms, f, a, b, q, last)
    }

    #[allow(clippy::too_many_arguments)]
    fn future_step<S: ClauseSink, A: AtomSource<S>>(
        &mut self,
        sink: &mut S,
        atoms: &mut A,
        f: &Formula,
        a: &Formula,
        b: &Formula,
        q: usize,
        last: usize,
    ) -> Result<i32, FormulaError> {
        let y = self.lit(sink, atoms, b, q)?;
        if q == last {
            return Ok(y);
        }
        let after = self.memo[&(f.clone(), q + 1)];
        Ok(match f {
            F::Until(..) => {
                let x = self.lit(sink, atoms, a, q)?;
                let mid = and_gate(sink, &[x, after]);
                or_gate(sink, &[y, mid])
            }
            F::Finally(_) => or_gate(sink, &[y, after]),
            _ => and_gate(sink, &[y, after]),
        })
    }
}

fn and_gate<S: ClauseSink>(sink: &mut S, xs: &[i32]) -> i32 {
    if xs.len() == 1 {
        return xs[0];
    }
    let o = sink.fresh_var();
    for &x in xs {
        sink.push_clause(&[-o, x]);
    }
    let mut big: Vec<i32> = xs.iter().map(|&x| -x).collect();
    big.push(o);
    sink.push_clause(&big);
    o
}

fn or_gate<S: ClauseSink>(sink: &mut S, xs: &[i32]) -> i32 {
    let negated: Vec<i32> = xs.iter().map(|&x| -x).collect();
    -and_gate(sink, &negated)
}

/// A standalone encoding of one formula at position 0 of a run of
/// `horizon + 1` states, with one fresh variable per atom and position.
#[derive(Clone, Debug)]
pub struct Encoded {
    pub cnf: CnfFormula,
    /// DIMACS variable for `(atom, t)`.
    pub atom_vars: BTreeMap<(String, usize), i32>,
    pub root: i32,
}

/// Allocates one variable per `(atom, position)` on first use.
#[derive(Clone, Debug, Default)]
pub struct AtomTable {
    pub vars: BTreeMap<(String, usize), i32>,
}

impl<S: ClauseSink> AtomSource<S> for AtomTable {
    fn atom_lit(&mut self, sink: &mut S, atom: &str, t: usize) -> Result<i32, FormulaError> {
        Ok(*self.vars.entry((atom.to_string(), t)).or_insert_with(|| sink.fresh_var()))
    }
}

/// Clauses satisfiable exactly by runs (read off `atom_vars`) on which `f`
/// holds at position 0. The root literal is asserted as a unit clause.
pub fn encode(f: &Formula, horizon: usize) -> Result<Encoded, FormulaError> {
    if let Some(b) = f.first_belief() {
        return Err(FormulaError::UnsupportedBelief(b));
    }
    let depth = f.future_depth();
    if depth > horizon {
        return Err(FormulaError::HorizonOverflow { depth, horizon });
    }
    let mut cnf = CnfFormula::new();
    let mut table = AtomTable::default();
    for name in f.atoms() {
        for t in 0..=horizon {
            table.vars.insert((name.clone(), t), cnf.new_var());
        }
    }
    let mut enc = TraceEncoder::new(horizon + 1);
    let root = enc.encode(&mut cnf, &mut table, f, 0)?;
    cnf.add_clause([root]);
    Ok(Encoded { cnf, atom_vars: table.vars, root })
}
