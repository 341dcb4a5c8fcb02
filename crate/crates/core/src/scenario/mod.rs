//! The `.cfl` scenario language: a sectioned text format describing the
//! world model, A's evidence and goals, the goals A believes B pursues, and
//! what B is willing to disclose at each resolution level.

mod fixtures;
mod lower;
mod parse;
mod print;
mod validate;
mod vocab;

use std::fmt;

use thiserror::Error;

use crate::conflict::ConflictError;
use crate::formula::{Expr, ParseError, Span, Term};
use crate::jgraph::JGraphError;
use crate::strategy::StrategyError;
use crate::world::{Agent, WorldError};

pub use fixtures::{fixture, FIXTURES};
pub use lower::Compiled;
pub use parse::parse;
pub use validate::validate;
pub use vocab::DomainVocabulary;

/// Section keywords in canonical order.
pub const SECTIONS: [&str; 16] = [
    "HORIZON",
    "VARS",
    "OBSERVABLE",
    "ACTIONS",
    "TRANS",
    "INIT",
    "HISTORY",
    "EVIDENCE",
    "GOALS_A",
    "WEIGHTS_A",
    "GOALS_B",
    "WEIGHTS_B",
    "B_KNOWS",
    "B_COMMITS",
    "B_ADOPTS",
    "JOINT_WEIGHTS",
];

/// Tag of evidence declared without one.
pub const DEFAULT_TAG: &str = "A";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{}", render_invalid(.0))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    JGraph(#[from] JGraphError),
    #[error(transparent)]
    Conflict(#[from] ConflictError),
}

fn render_invalid(ds: &[Diagnostic]) -> String {
    let lines: Vec<String> = ds.iter().map(ToString::to_string).collect();
    lines.join("\n")
}

/// A value with its source position. Equality ignores the position.
#[derive(Clone, Debug)]
pub struct At<T> {
    pub node: T,
    pub span: Span,
}

impl<T> At<T> {
    pub fn new(node: T, span: Span) -> Self {
        At { node, span }
    }
}

impl<T: PartialEq> PartialEq for At<T> {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

impl<T: Eq> Eq for At<T> {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DomainDecl {
    Range(i64, i64),
    Enum(Vec<At<String>>),
    Bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: At<String>,
    pub domain: DomainDecl,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionDecl {
    pub agent: At<Agent>,
    pub names: Vec<At<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignDecl {
    pub var: At<String>,
    pub rhs: Term,
}

/// `head : x' = e, ... [if guard]`; a `*` head fires whatever the agents do.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransDecl {
    pub action: At<Option<String>>,
    pub assigns: Vec<AssignDecl>,
    pub guard: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvidenceDecl {
    pub id: At<String>,
    pub tag: Option<At<String>>,
    pub body: Expr,
}

/// A named formula: goals, B's observations and B's commitments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedFormula {
    pub name: At<String>,
    pub body: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightDecl {
    pub goals: Vec<At<String>>,
    pub weight: At<i64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Scenario {
    pub horizon: Option<At<i64>>,
    pub vars: Vec<VarDecl>,
    pub observable: Vec<At<String>>,
    pub actions: Vec<ActionDecl>,
    pub trans: Vec<TransDecl>,
    pub init: Vec<Expr>,
    pub history: Vec<Expr>,
    pub evidence: Vec<EvidenceDecl>,
    pub goals_a: Vec<NamedFormula>,
    pub weights_a: Vec<WeightDecl>,
    pub goals_b: Vec<NamedFormula>,
    pub weights_b: Vec<WeightDecl>,
    pub b_knows: Vec<NamedFormula>,
    pub b_commits: Vec<NamedFormula>,
    pub b_adopts: Vec<At<String>>,
    /// `Some` when the section is present, even if empty.
    pub joint_weights: Option<Vec<WeightDecl>>,
}

impl Scenario {
    /// Parses and validates; warnings are dropped, errors fail.
    pub fn load(text: &str) -> Result<Scenario, ScenarioError> {
        let s = parse(text)?;
        let errors: Vec<Diagnostic> =
            validate(&s).into_iter().filter(|d| d.severity == Severity::Error).collect();
        if errors.is_empty() {
            Ok(s)
        } else {
            Err(ScenarioError::Invalid(errors))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: Span,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev} at {}: {}", self.span, self.message)
    }
}
