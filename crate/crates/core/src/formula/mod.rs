//! The formula language: propositional core, belief groups `E:φ`, and the
//! temporal operators next, previous, until and since, with derived forms.
//!
//! Runs are finite; positions past the end repeat the last state forever.
//! Past operators only ever see the genuine prefix.

mod encode;
mod eval;
pub(crate) mod parse;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use encode::{encode, AtomSource, AtomTable, Encoded, TraceEncoder};
pub use eval::{eval, Run};
pub use parse::{
    parse_expr, parse_formula, CmpOp, Expr, ExprKind, FreeVocabulary, Operand, ParseError, Span,
    Term, Vocabulary,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("position {t} is outside the run (length {len})")]
    PositionOutOfRange { t: usize, len: usize },
    #[error("belief operator `{0}` is outside the non-epistemic fragment")]
    UnsupportedBelief(String),
    #[error("formula looks {depth} steps ahead but the horizon is {horizon}")]
    HorizonOverflow { depth: usize, horizon: usize },
    #[error("belief group must name at least one entity")]
    EmptyEntitySet,
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A propositional variable, optionally pinned to a time step.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub name: String,
    pub time_index: Option<u32>,
}

impl Atom {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "atom names are nonempty");
        Atom { name, time_index: None }
    }

    pub fn at(name: impl Into<String>, t: u32) -> Self {
        Atom { time_index: Some(t), ..Atom::new(name) }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.time_index {
            Some(t) => write!(f, "{}@{t}", self.name),
            None => f.write_str(&self.name),
        }
    }
}

/// Formula tree. The core constructors are `Bottom`, `Atom`, `Implies`,
/// `Believes`, `Next`, `Prev`, `Until` and `Since`; everything else is
/// derived and removed by [`Formula::expand`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Bottom,
    Top,
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Believes(BTreeSet<String>, Box<Formula>),
    Next(Box<Formula>),
    Prev(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Since(Box<Formula>, Box<Formula>),
    Globally(Box<Formula>),
    Finally(Box<Formula>),
    Historically(Box<Formula>),
    /// Holds at every one of the next `k+1` positions, starting now.
    GloballyWithin(u32, Box<Formula>),
    /// Holds at some of the next `k+1` positions, starting now.
    FinallyWithin(u32, Box<Formula>),
}

use Formula as F;

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        F::Atom(Atom::new(name))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        F::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        F::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        F::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        F::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        F::Iff(Box::new(a), Box::new(b))
    }

    pub fn believes<I, S>(entities: I, f: Formula) -> Result<Self, FormulaError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = entities.into_iter().map(Into::into).collect();
        if set.is_empty() {
            return Err(FormulaError::EmptyEntitySet);
        }
        Ok(F::Believes(set, Box::new(f)))
    }

    pub fn next(f: Formula) -> Self {
        F::Next(Box::new(f))
    }

    pub fn prev(f: Formula) -> Self {
        F::Prev(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        F::Until(Box::new(a), Box::new(b))
    }

    pub fn since(a: Formula, b: Formula) -> Self {
        F::Since(Box::new(a), Box::new(b))
    }

    pub fn globally(f: Formula) -> Self {
        F::Globally(Box::new(f))
    }

    pub fn finally(f: Formula) -> Self {
        F::Finally(Box::new(f))
    }

    pub fn historically(f: Formula) -> Self {
        F::Historically(Box::new(f))
    }

    pub fn globally_within(k: u32, f: Formula) -> Self {
        F::GloballyWithin(k, Box::new(f))
    }

    pub fn finally_within(k: u32, f: Formula) -> Self {
        F::FinallyWithin(k, Box::new(f))
    }

    /// Conjunction of all items; `Top` when empty.
    pub fn conj<I: IntoIterator<Item = Formula>>(items: I) -> Self {
        items.into_iter().reduce(Formula::and).unwrap_or(F::Top)
    }

    /// Disjunction of all items; `Bottom` when empty.
    pub fn disj<I: IntoIterator<Item = Formula>>(items: I) -> Self {
        items.into_iter().reduce(Formula::or).unwrap_or(F::Bottom)
    }

    fn children(&self) -> Vec<&Formula> {
        match self {
            F::Bottom | F::Top | F::Atom(_) => vec![],
            F::Not(a)
            | F::Believes(_, a)
            | F::Next(a)
            | F::Prev(a)
            | F::Globally(a)
            | F::Finally(a)
            | F::Historically(a)
            | F::GloballyWithin(_, a)
            | F::FinallyWithin(_, a) => vec![a],
            F::And(a, b)
            | F::Or(a, b)
            | F::Implies(a, b)
            | F::Iff(a, b)
            | F::Until(a, b)
            | F::Since(a, b) => vec![a, b],
        }
    }

    pub fn is_core(&self) -> bool {
        let here = matches!(
            self,
            F::Bottom
                | F::Atom(_)
                | F::Implies(..)
                | F::Believes(..)
                | F::Next(_)
                | F::Prev(_)
                | F::Until(..)
                | F::Since(..)
        );
        here && self.children().into_iter().all(Formula::is_core)
    }

    pub fn has_believes(&self) -> bool {
        matches!(self, F::Believes(..)) || self.children().into_iter().any(Formula::has_believes)
    }

    /// The first belief operator in the tree, rendered, if any.
    pub(crate) fn first_belief(&self) -> Option<String> {
        if let F::Believes(..) = self {
            return Some(self.to_string());
        }
        self.children().into_iter().find_map(Formula::first_belief)
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        if let F::Atom(a) = self {
            out.insert(a.name.clone());
        }
        for c in self.children() {
            c.collect_atoms(out);
        }
    }

    /// Number of steps past "now" the formula can inspect through `X` and
    /// the bounded operators. Unbounded `U`, `G`, `F` add nothing: stuttering
    /// makes their unrolling finite at any horizon.
    pub fn future_depth(&self) -> usize {
        let sub = self.children().into_iter().map(Formula::future_depth).max().unwrap_or(0);
        match self {
            F::Next(_) => sub + 1,
            F::GloballyWithin(k, _) | F::FinallyWithin(k, _) => sub + *k as usize,
            _ => sub,
        }
    }

    /// Nesting depth of past operators. A formula's truth value is constant
    /// from position `len - 1 + past_depth` onwards on a stuttered run.
    pub fn past_depth(&self) -> usize {
        let sub = self.children().into_iter().map(Formula::past_depth).max().unwrap_or(0);
        match self {
            F::Prev(_) | F::Since(..) | F::Historically(_) => sub + 1,
            _ => sub,
        }
    }

    /// Rewrites into the core constructors only.
    pub fn expand(&self) -> Formula {
        let bottom = || F::Bottom;
        let neg = |f: Formula| F::implies(f, F::Bottom);
        match self {
            F::Bottom => F::Bottom,
            F::Top => neg(bottom()),
            F::Atom(a) => F::Atom(a.clone()),
            F::Not(a) => neg(a.expand()),
            F::Implies(a, b) => F::implies(a.expand(), b.expand()),
            F::Or(a, b) => F::implies(neg(a.expand()), b.expand()),
            F::And(a, b) => neg(F::implies(a.expand(), neg(b.expand()))),
            F::Iff(a, b) => {
                let (a, b) = (a.expand(), b.expand());
                neg(F::implies(F::implies(a.clone(), b.clone()), neg(F::implies(b, a))))
            }
            F::Believes(e, a) => F::Believes(e.clone(), Box::new(a.expand())),
            F::Next(a) => F::next(a.expand()),
            F::Prev(a) => F::prev(a.expand()),
            F::Until(a, b) => F::until(a.expand(), b.expand()),
            F::Since(a, b) => F::since(a.expand(), b.expand()),
            F::Finally(a) => F::until(F::Top.expand(), a.expand()),
            F::Globally(a) => neg(F::until(F::Top.expand(), neg(a.expand()))),
            F::Historically(a) => neg(F::since(F::Top.expand(), neg(a.expand()))),
            F::FinallyWithin(k, a) => {
                F::disj((0..=*k).map(|i| shifted(a, i as usize))).expand()
            }
            F::GloballyWithin(k, a) => {
                F::conj((0..=*k).map(|i| shifted(a, i as usize))).expand()
            }
        }
    }
}

fn shifted(f: &Formula, steps: usize) -> Formula {
    (0..steps).fold(f.clone(), |acc, _| F::next(acc))
}

// Binding strength, loosest first: <->, ->, |, &, U/S, unary.
fn precedence(f: &Formula) -> u8 {
    match f {
        F::Iff(..) => 1,
        F::Implies(..) => 2,
        F::Or(..) => 3,
        F::And(..) => 4,
        F::Until(..) | F::Since(..) => 5,
        _ => 6,
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, child: &Formula, min: u8) -> fmt::Result {
    if precedence(child) < min {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            F::Bottom => f.write_str("false"),
            F::Top => f.write_str("true"),
            F::Atom(a) => write!(f, "{a}"),
            F::Not(a) => {
                f.write_str("!")?;
                write_operand(f, a, 6)
            }
            F::Believes(es, a) => {
                if es.len() == 1 {
                    write!(f, "{}:", es.iter().next().unwrap())?;
                } else {
                    let names: Vec<&str> = es.iter().map(String::as_str).collect();
                    write!(f, "{{{}}}:", names.join(","))?;
                }
                write_operand(f, a, 6)
            }
            F::Next(a) | F::Prev(a) | F::Globally(a) | F::Finally(a) | F::Historically(a) => {
                let kw = match self {
                    F::Next(_) => "X",
                    F::Prev(_) => "P",
                    F::Globally(_) => "G",
                    F::Finally(_) => "F",
                    _ => "H",
                };
                write!(f, "{kw} ")?;
                write_operand(f, a, 6)
            }
            F::GloballyWithin(k, a) | F::FinallyWithin(k, a) => {
                let kw = if matches!(self, F::GloballyWithin(..)) { "G" } else { "F" };
                write!(f, "{kw}<={k} ")?;
                write_operand(f, a, 6)
            }
            F::And(a, b) | F::Or(a, b) => {
                let (op, p) = if matches!(self, F::And(..)) { ("&", 4) } else { ("|", 3) };
                write_operand(f, a, p)?;
                write!(f, " {op} ")?;
                write_operand(f, b, p + 1)
            }
            F::Implies(a, b) => {
                write_operand(f, a, 3)?;
                f.write_str(" -> ")?;
                write_operand(f, b, 2)
            }
            F::Iff(a, b) => {
                write_operand(f, a, 1)?;
                f.write_str(" <-> ")?;
                write_operand(f, b, 2)
            }
            F::Until(a, b) | F::Since(a, b) => {
                let op = if matches!(self, F::Until(..)) { "U" } else { "S" };
                write_operand(f, a, 6)?;
                write!(f, " {op} ")?;
                write_operand(f, b, 5)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Formula {
        F::atom("p")
    }

    #[test]
    fn bounded_finally_unfolds_to_shifted_disjunction() {
        let expected = F::or(p(), F::next(p())).expand();
        assert_eq!(F::finally_within(1, p()).expand(), expected);
    }

    #[test]
    fn bounded_globally_unfolds_to_shifted_conjunction() {
        let expected =
            F::and(F::and(p(), F::next(p())), F::next(F::next(p()))).expand();
        assert_eq!(F::globally_within(2, p()).expand(), expected);
    }

    #[test]
    fn double_negation_is_double_implication_to_bottom() {
        let e = F::not(F::not(p())).expand();
        assert_eq!(e, F::implies(F::implies(p(), F::Bottom), F::Bottom));
        assert!(e.is_core());
    }

    #[test]
    fn empty_belief_group_is_rejected() {
        assert_eq!(F::believes(Vec::<String>::new(), p()), Err(FormulaError::EmptyEntitySet));
        assert!(F::believes(["radar"], p()).is_ok());
    }

    #[test]
    fn depths() {
        let f = F::globally_within(3, F::next(p()));
        assert_eq!(f.future_depth(), 4);
        assert_eq!(f.past_depth(), 0);
        assert_eq!(F::since(p(), F::prev(p())).past_depth(), 2);
        assert_eq!(F::until(p(), p()).future_depth(), 0);
    }

    #[test]
    fn display_reparses() {
        let f = F::implies(
            F::not(F::globally_within(3, F::atom("s_B=fast"))),
            F::and(F::until(F::atom("ge"), F::atom("change")), F::finally_within(3, F::atom("change"))),
        );
        let text = f.to_string();
        assert_eq!(parse_formula(&text).unwrap(), f, "{text}");
    }
}
