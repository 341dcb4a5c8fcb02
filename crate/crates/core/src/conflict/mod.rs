//! Believed conflicts between A and B and their staged resolution.
//!
//! A round builds the possible worlds for the information base, collects A's
//! strategies that reach a maximal goal set with B's help, and keeps those
//! that still reach it together with every goal set B is believed to pursue
//! in every world group. If none remain, resolution levels C1 to C4 add
//! information and the round is repeated.

mod analysis;
mod explain;
mod resolve;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::formula::{Formula, FormulaError};
use crate::jgraph::{EvidenceBase, JGraphError};
use crate::strategy::{GoalSet, Strategy, StrategyError, View, DEFAULT_STRATEGY_BOUND};
use crate::world::{WorldError, WorldModel};

pub use analysis::{detect_conflict, test, Round};
pub use explain::{explain, Explanation};
pub use resolve::{find_strategy, fix, FixOutcome};

/// Justification reported when A cannot reach any valued goal set.
pub const NO_COOPERATIVE_WIN: &str = "no cooperative winning strategy";

/// Tag of evidence items that B reported.
pub const B_TAG: &str = "B";

#[derive(Debug, thiserror::Error)]
pub enum ConflictError {
    #[error("unknown goal `{0}`")]
    UnknownGoal(String),
    #[error("goal `{0}` is declared for both agents")]
    DuplicateGoal(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    JGraph(#[from] JGraphError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ResolutionLevel {
    C1,
    C2,
    C3,
    C4,
}

impl ResolutionLevel {
    pub const ALL: [ResolutionLevel; 4] =
        [ResolutionLevel::C1, ResolutionLevel::C2, ResolutionLevel::C3, ResolutionLevel::C4];

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "C1" => Some(Self::C1),
            "C2" => Some(Self::C2),
            "C3" => Some(Self::C3),
            "C4" => Some(Self::C4),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::C1 => "C1",
            Self::C2 => "C2",
            Self::C3 => "C3",
            Self::C4 => "C4",
        }
    }
}

impl fmt::Display for ResolutionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What B is willing to share, level by level.
#[derive(Clone, Debug, Default)]
pub struct Disclosures {
    /// C1: B's own observations, as evidence bodies.
    pub knows: Vec<(String, Formula)>,
    /// C2: constraints B commits to on its future actions.
    pub commits: Vec<(String, Formula)>,
    /// C3: names of A's goals that B agrees to pursue.
    pub adopts: Vec<String>,
    /// C4: weights of subsets of both agents' goals.
    pub joint_weights: Option<BTreeMap<BTreeSet<String>, u64>>,
}

/// Everything fixed for one analysis: the model, A's view, both goal sets
/// and B's disclosures.
#[derive(Clone, Debug)]
pub struct Problem {
    pub model: WorldModel,
    pub view: View,
    pub goals_a: GoalSet,
    pub goals_b: GoalSet,
    pub disclosures: Disclosures,
}

impl Problem {
    /// Goal names with A's first; this order indexes arena goals.
    pub fn universe(&self) -> Vec<String> {
        self.goals_a.names().into_iter().chain(self.goals_b.names()).map(str::to_string).collect()
    }

    pub fn goal(&self, name: &str) -> Option<&Formula> {
        self.goals_a.get(name).or_else(|| self.goals_b.get(name))
    }

    pub fn check(&self) -> Result<(), ConflictError> {
        let a: BTreeSet<&str> = self.goals_a.names().into_iter().collect();
        for n in self.goals_b.names() {
            if a.contains(n) {
                return Err(ConflictError::DuplicateGoal(n.to_string()));
            }
        }
        for n in &self.disclosures.adopts {
            if !a.contains(n.as_str()) {
                return Err(ConflictError::UnknownGoal(n.clone()));
            }
        }
        if let Some(w) = &self.disclosures.joint_weights {
            for n in w.keys().flatten() {
                if self.goal(n).is_none() {
                    return Err(ConflictError::UnknownGoal(n.clone()));
                }
            }
        }
        Ok(())
    }
}

/// One applied resolution step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LogEntry {
    pub level: ResolutionLevel,
    pub action: String,
}

/// A's information: evidence, facts shared by B about its actions, A's goals
/// B adopted, and the log of resolution steps.
#[derive(Clone, Debug)]
pub struct InformationBase {
    pub evidence: EvidenceBase,
    pub shared_strategy_facts: Vec<(String, Formula)>,
    pub adopted_goals: BTreeSet<String>,
    /// Goals both agents agreed on at C4.
    pub negotiated: Option<BTreeSet<String>>,
    pub level_log: Vec<LogEntry>,
}

impl InformationBase {
    pub fn new(evidence: EvidenceBase) -> Self {
        InformationBase {
            evidence,
            shared_strategy_facts: Vec::new(),
            adopted_goals: BTreeSet::new(),
            negotiated: None,
            level_log: Vec::new(),
        }
    }

    /// Number of entries; removals at C1 are logged, so this never shrinks.
    pub fn size(&self) -> usize {
        self.evidence.len()
            + self.shared_strategy_facts.len()
            + self.adopted_goals.len()
            + self.negotiated.iter().map(|n| n.len()).sum::<usize>()
            + self.level_log.len()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AnalysisConfig {
    pub strategy_bound: usize,
    pub group_bound: usize,
    /// Deepest level resolution may use; `None` only detects.
    pub max_level: Option<ResolutionLevel>,
    /// Strategies listed in a report; the count is always complete.
    pub report_limit: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            strategy_bound: DEFAULT_STRATEGY_BOUND,
            group_bound: 16,
            max_level: Some(ResolutionLevel::C4),
            report_limit: 8,
        }
    }
}

/// Why one A strategy fails against one believed B strategy in one group.
#[derive(Clone, Debug)]
pub struct ConflictCause {
    /// Evidence atoms and facts behind the failure, never empty.
    pub justification: BTreeSet<String>,
    pub goals_a: BTreeSet<String>,
    pub goals_b: BTreeSet<String>,
    pub group: usize,
    pub group_id: String,
    pub group_atoms: BTreeSet<String>,
    pub a_strategy: Strategy,
    pub b_strategy: Strategy,
    /// Per justification atom, the other evidence it contradicts.
    pub contradicts: BTreeMap<String, BTreeSet<String>>,
}

impl ConflictCause {
    fn key(&self) -> (BTreeSet<String>, BTreeSet<String>, BTreeSet<String>, String) {
        (self.justification.clone(), self.goals_a.clone(), self.goals_b.clone(), self.group_id.clone())
    }
}

/// An A strategy that wins `goals` whatever believed strategy B follows.
#[derive(Clone, Debug)]
pub struct Survivor {
    pub strategy: Strategy,
    pub goals: BTreeSet<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    NoConflict,
    ResolvedAt(ResolutionLevel),
    Unresolved,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::NoConflict => f.write_str("no-conflict"),
            Verdict::ResolvedAt(l) => write!(f, "resolved-at({l})"),
            Verdict::Unresolved => f.write_str("unresolved"),
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecisionDoc {
    pub history: String,
    pub action: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrategyDoc {
    pub name: String,
    pub owner: String,
    pub decisions: Vec<DecisionDoc>,
}

impl StrategyDoc {
    pub fn new(s: &Strategy, model: &WorldModel, view: &View) -> Self {
        let acts = &model.actions[s.owner.index()];
        StrategyDoc {
            name: s.name.clone(),
            owner: s.owner.to_string(),
            decisions: s
                .decisions
                .iter()
                .map(|(h, &a)| DecisionDoc { history: view.describe_history(model, h), action: acts[a].clone() })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SurvivorDoc {
    pub strategy: StrategyDoc,
    pub goals: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockingDoc {
    pub a_strategy: StrategyDoc,
    pub b_strategy: StrategyDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CauseDoc {
    /// Analysis round that found the cause, 0 for the initial one.
    pub round: usize,
    pub justification: Vec<String>,
    pub contradicts: BTreeMap<String, Vec<String>>,
    #[serde(rename = "goals_A")]
    pub goals_a: Vec<String>,
    #[serde(rename = "goals_B")]
    pub goals_b: Vec<String>,
    pub group: String,
    pub group_atoms: Vec<String>,
    pub blocking: BlockingDoc,
    pub discharged_at: Option<ResolutionLevel>,
}

/// One step of the resolution trace. The first entry, with no level, is the
/// initial analysis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub level: Option<ResolutionLevel>,
    pub applied: bool,
    pub delta: Vec<String>,
    pub info_base_size: usize,
    pub group_count: usize,
    pub candidates: usize,
    pub survivors: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConflictReport {
    pub verdict: Verdict,
    pub level: Option<ResolutionLevel>,
    pub strategy_count: usize,
    pub strategies: Vec<SurvivorDoc>,
    pub causes: Vec<CauseDoc>,
    pub trace: Vec<TraceEntry>,
    pub negotiated_goals: Option<Vec<String>>,
    #[serde(skip)]
    pub survivors: Vec<Survivor>,
    /// Causes of every round, aligned with `causes`.
    #[serde(skip)]
    pub cause_details: Vec<ConflictCause>,
    #[serde(skip)]
    pub final_base: Option<InformationBase>,
}

impl ConflictReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
