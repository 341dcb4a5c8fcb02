//! Observation-keyed strategies, goal sets with weights, and winning checks.
//!
//! A strategy maps the observation history since the current position to an
//! action. Winning is decided by SAT: the group constraint, the strategy's
//! action clauses and the negated goal must have no common model.

mod arena;
mod search;
#[cfg(test)]
mod tests;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::formula::{Formula, FormulaError};
use crate::sat::{self, ClauseSink, CnfFormula, Lit, SolverConfig, Status, Var};
use crate::world::{Agent, DecodedRun, PossibleWorldSet, Unrolling, WorldError, WorldGroup, WorldModel};

pub use arena::{all_groups, Arena, ArenaStats, Move, Node};
pub use search::{
    believed_paths, blocking_strategy, coop_wins, first_blocked_leaf, max_achievable, wins_alone, Achieved,
    Blocker, Class, ClassTree, Choice, Forced, GoalMask, Rule, Solve,
};

/// Default cap on the number of strategies an enumeration may produce.
pub const DEFAULT_STRATEGY_BOUND: usize = 1 << 16;

#[derive(Debug, thiserror::Error)]
pub enum StrategyError {
    #[error("strategy is not total: no action for history {0}")]
    Totality(String),
    #[error("{count} strategies exceed the bound {bound}")]
    Capacity { count: String, bound: usize },
    #[error("agent {0} has no actions")]
    NoActions(Agent),
    #[error("at most 64 goals are supported, got {0}")]
    TooManyGoals(usize),
    #[error("unknown goal `{0}`")]
    UnknownGoal(String),
    #[error("unknown observable `{0}`")]
    UnknownObservable(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Values of the observable variables at one position, in view order.
pub type Obs = Vec<usize>;
/// Observations from the current position up to the decision step.
pub type History = Vec<Obs>;

/// The observable variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct View {
    pub vars: Vec<usize>,
}

impl View {
    pub fn new(model: &WorldModel, names: &[&str]) -> Result<Self, StrategyError> {
        let vars = names
            .iter()
            .map(|n| model.var_index(n).ok_or_else(|| StrategyError::UnknownObservable(n.to_string())))
            .collect::<Result<_, _>>()?;
        Ok(View { vars })
    }

    pub fn everything(model: &WorldModel) -> Self {
        View { vars: (0..model.vars.len()).collect() }
    }

    /// Literals fixing the observation at position `t`.
    pub fn lits(&self, u: &Unrolling, t: usize, obs: &Obs) -> Vec<i32> {
        self.vars.iter().zip(obs).map(|(&v, &x)| u.map.value_lit(t, v, x)).collect()
    }

    /// All one-hot variables of the observables at position `t`.
    pub fn projection(&self, u: &Unrolling, t: usize) -> Vec<Var> {
        self.vars
            .iter()
            .flat_map(|&v| u.map.value_lits(t, v).iter().map(|&l| Lit::from_dimacs(l).var()))
            .collect()
    }

    /// Reads an observation back from a projected valuation.
    pub fn decode(&self, model: &WorldModel, vals: &[bool]) -> Obs {
        let mut it = vals.iter();
        self.vars
            .iter()
            .map(|&v| {
                let bits: Vec<bool> = it.by_ref().take(model.vars[v].size()).copied().collect();
                bits.iter().position(|&b| b).unwrap_or(0)
            })
            .collect()
    }

    pub fn of_state(&self, s: &[usize]) -> Obs {
        self.vars.iter().map(|&v| s[v]).collect()
    }

    pub fn describe(&self, model: &WorldModel, obs: &Obs) -> String {
        let parts: Vec<String> = self
            .vars
            .iter()
            .zip(obs)
            .map(|(&v, &x)| format!("{}={}", model.vars[v].name, model.vars[v].value_name(x)))
            .collect();
        parts.join(",")
    }

    pub fn describe_history(&self, model: &WorldModel, h: &[Obs]) -> String {
        if h.is_empty() {
            return "<>".into();
        }
        let steps: Vec<String> = h.iter().map(|o| format!("[{}]", self.describe(model, o))).collect();
        steps.join(" ")
    }
}

/// Deterministic map from observation histories to one agent's actions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Strategy {
    pub owner: Agent,
    pub name: String,
    pub decisions: BTreeMap<History, usize>,
}

impl Strategy {
    pub fn new(owner: Agent, name: impl Into<String>) -> Self {
        Strategy { owner, name: name.into(), decisions: BTreeMap::new() }
    }

    /// Plays `action` on every history.
    pub fn constant(owner: Agent, name: impl Into<String>, action: usize) -> ConstantStrategy {
        ConstantStrategy { owner, name: name.into(), action }
    }

    pub fn action(&self, h: &[Obs]) -> Option<usize> {
        self.decisions.get(h).copied()
    }

    /// Actions chosen along the run, by step.
    pub fn actions_taken(&self, observed: &[Obs]) -> Vec<Option<usize>> {
        (1..=observed.len()).map(|k| self.action(&observed[..k])).collect()
    }

    pub fn render(&self, model: &WorldModel, view: &View) -> Vec<String> {
        let acts = &model.actions[self.owner.index()];
        self.decisions
            .iter()
            .map(|(h, &a)| format!("{} -> {}", view.describe_history(model, h), acts[a]))
            .collect()
    }
}

/// A strategy that ignores observations; turned into a [`Strategy`] on the
/// histories it reaches with [`complete`].
#[derive(Clone, Debug)]
pub struct ConstantStrategy {
    pub owner: Agent,
    pub name: String,
    pub action: usize,
}

/// A pair of strategies for A and B.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointStrategy {
    pub a_part: Strategy,
    pub b_part: Strategy,
}

impl JointStrategy {
    pub fn new(a_part: Strategy, b_part: Strategy) -> Self {
        assert_eq!(a_part.owner, Agent::A);
        assert_eq!(b_part.owner, Agent::B);
        JointStrategy { a_part, b_part }
    }

    pub fn parts(&self) -> [&Strategy; 2] {
        [&self.a_part, &self.b_part]
    }
}

/// Named goals plus a sparse weight table over goal subsets; unlisted subsets
/// weigh 0, and the empty subset is always achievable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GoalSet {
    pub goals: Vec<(String, Formula)>,
    pub weights: BTreeMap<BTreeSet<String>, u64>,
}

impl GoalSet {
    pub fn new(goals: Vec<(String, Formula)>) -> Self {
        GoalSet { goals, weights: BTreeMap::new() }
    }

    pub fn with_weight(mut self, subset: &[&str], w: u64) -> Self {
        self.weights.insert(subset.iter().map(|s| s.to_string()).collect(), w);
        self
    }

    pub fn names(&self) -> Vec<&str> {
        self.goals.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Formula> {
        self.goals.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn weight(&self, subset: &BTreeSet<String>) -> u64 {
        self.weights.get(subset).copied().unwrap_or(0)
    }

    /// Conjunction of the named goals.
    pub fn conjunction(&self, subset: &BTreeSet<String>) -> Result<Formula, StrategyError> {
        let parts = subset
            .iter()
            .map(|n| self.get(n).cloned().ok_or_else(|| StrategyError::UnknownGoal(n.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Formula::conj(parts))
    }
}

/// Outcome of a winning check.
#[derive(Clone, Debug)]
pub enum WinCheck {
    Winning,
    /// A run that follows the strategies and falsifies the goal, with the
    /// index of the group it lives in.
    Losing { group: usize, witness: DecodedRun },
}

impl WinCheck {
    pub fn is_winning(&self) -> bool {
        matches!(self, WinCheck::Winning)
    }
}

fn and_gate(cnf: &mut CnfFormula, truth: i32, lits: &[i32]) -> i32 {
    match lits {
        [] => truth,
        [l] => *l,
        _ => {
            let o = cnf.fresh_var();
            for &l in lits {
                cnf.push_clause(&[-o, l]);
            }
            let mut back: Vec<i32> = lits.iter().map(|l| -l).collect();
            back.push(o);
            cnf.push_clause(&back);
            o
        }
    }
}

/// Histories the strategies reach in a group when every other agent is free,
/// by SAT successor queries. Fails on the first reached history a strategy
/// has no action for.
pub fn reached_histories(
    u: &Unrolling,
    group: &WorldGroup,
    view: &View,
    parts: &[&Strategy],
) -> Result<Vec<History>, StrategyError> {
    let c = u.current();
    let h = u.model.horizon;
    let mut solver = group.definitions.to_solver(SolverConfig::default()).expect("well formed");
    let base: Vec<Lit> = group.assumptions().into_iter().map(Lit::from_dimacs).collect();
    let mut out = Vec::new();
    let mut queue: VecDeque<History> = VecDeque::new();
    for vals in sat::enumerate_projected(&mut solver, &base, &view.projection(u, c), usize::MAX) {
        queue.push_back(vec![view.decode(&u.model, &vals)]);
    }
    while let Some(hist) = queue.pop_front() {
        let k = hist.len() - 1;
        let mut assumps = base.clone();
        for (i, o) in hist.iter().enumerate() {
            assumps.extend(view.lits(u, c + i, o).into_iter().map(Lit::from_dimacs));
        }
        for s in parts {
            let acts = s.actions_taken(&hist);
            if k < h && acts[k].is_none() {
                return Err(StrategyError::Totality(view.describe_history(&u.model, &hist)));
            }
            for (i, a) in acts.iter().enumerate().take(h) {
                if let Some(a) = a {
                    assumps.push(Lit::from_dimacs(u.map.action_lit(c + i, s.owner, *a)));
                }
            }
        }
        out.push(hist.clone());
        if k == h {
            continue;
        }
        for vals in sat::enumerate_projected(&mut solver, &assumps, &view.projection(u, c + k + 1), usize::MAX) {
            let mut next = hist.clone();
            next.push(view.decode(&u.model, &vals));
            queue.push_back(next);
        }
    }
    Ok(out)
}

/// The group constraint conjoined with clauses forcing, at every step, the
/// action each strategy picks for the observed history.
pub fn encode_strategy(
    u: &Unrolling,
    group: &WorldGroup,
    view: &View,
    parts: &[&Strategy],
) -> Result<CnfFormula, StrategyError> {
    reached_histories(u, group, view, parts)?;
    let mut cnf = group.constraint();
    strategy_clauses(&mut cnf, u, view, parts);
    Ok(cnf)
}

/// Clauses forcing, at every step, the action each strategy picks for the
/// observed history. Histories a strategy has no entry for stay free.
pub fn strategy_clauses(cnf: &mut CnfFormula, u: &Unrolling, view: &View, parts: &[&Strategy]) {
    let c = u.current();
    let truth = u.map.truth();
    let mut matched: BTreeMap<History, i32> = BTreeMap::new();
    for s in parts {
        for (hist, &a) in &s.decisions {
            let k = hist.len() - 1;
            if k >= u.model.horizon {
                continue;
            }
            let m = prefix_literal(cnf, u, view, truth, &mut matched, hist, c);
            cnf.push_clause(&[-m, u.map.action_lit(c + k, s.owner, a)]);
        }
    }
}

fn prefix_literal(
    cnf: &mut CnfFormula,
    u: &Unrolling,
    view: &View,
    truth: i32,
    matched: &mut BTreeMap<History, i32>,
    hist: &[Obs],
    c: usize,
) -> i32 {
    if hist.is_empty() {
        return truth;
    }
    if let Some(&m) = matched.get(hist) {
        return m;
    }
    let parent = prefix_literal(cnf, u, view, truth, matched, &hist[..hist.len() - 1], c);
    let mut lits = view.lits(u, c + hist.len() - 1, hist.last().unwrap());
    lits.push(parent);
    let m = and_gate(cnf, truth, &lits);
    matched.insert(hist.to_vec(), m);
    m
}

/// Whether every run following the strategies satisfies `goal` (evaluated
/// at the current position) in each of the listed groups.
pub fn is_winning(
    ws: &PossibleWorldSet,
    groups: &[usize],
    view: &View,
    parts: &[&Strategy],
    goal: &Formula,
) -> Result<WinCheck, StrategyError> {
    let u = &ws.unrolling;
    for &gi in groups {
        let g = &ws.groups[gi];
        let mut cnf = encode_strategy(u, g, view, parts)?;
        let mut enc = g.encoder.clone();
        let lit = u.encode_formula(&mut enc, &mut cnf, goal, u.current())?;
        cnf.push_clause(&[-lit]);
        let mut solver = cnf.to_solver(SolverConfig::default()).expect("well formed");
        if solver.solve(&[]) == Status::Sat {
            let witness = u.decode(|l| solver.lit_model_value(Lit::from_dimacs(l)));
            return Ok(WinCheck::Losing { group: gi, witness });
        }
    }
    Ok(WinCheck::Winning)
}

/// Observations of a decoded run from the current position on.
pub fn observed(u: &Unrolling, view: &View, run: &DecodedRun) -> History {
    run.states[u.current()..].iter().map(|s| view.of_state(s)).collect()
}

/// Expands a constant strategy to the histories it reaches in the groups.
pub fn complete(
    ws: &PossibleWorldSet,
    view: &View,
    s: &ConstantStrategy,
) -> Result<Strategy, StrategyError> {
    let u = &ws.unrolling;
    let mut out = Strategy::new(s.owner, s.name.clone());
    for g in &ws.groups {
        // A constant strategy is total on any prefix, so fill as we go.
        let mut frontier: Vec<History> = Vec::new();
        let mut solver = g.definitions.to_solver(SolverConfig::default()).expect("well formed");
        let base: Vec<Lit> = g.assumptions().into_iter().map(Lit::from_dimacs).collect();
        let c = u.current();
        for vals in sat::enumerate_projected(&mut solver, &base, &view.projection(u, c), usize::MAX) {
            frontier.push(vec![view.decode(&u.model, &vals)]);
        }
        while let Some(hist) = frontier.pop() {
            let k = hist.len() - 1;
            if k >= u.model.horizon {
                continue;
            }
            out.decisions.insert(hist.clone(), s.action);
            let mut assumps = base.clone();
            for (i, o) in hist.iter().enumerate() {
                assumps.extend(view.lits(u, c + i, o).into_iter().map(Lit::from_dimacs));
                assumps.push(Lit::from_dimacs(u.map.action_lit(c + i, s.owner, s.action)));
            }
            for vals in sat::enumerate_projected(&mut solver, &assumps, &view.projection(u, c + k + 1), usize::MAX)
            {
                let mut next = hist.clone();
                next.push(view.decode(&u.model, &vals));
                frontier.push(next);
            }
        }
    }
    Ok(out)
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{} ({} decisions)", self.owner, self.name, self.decisions.len())
    }
}
