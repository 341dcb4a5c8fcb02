//! Finite transition systems over one-hot encoded state variables, their
//! bounded unrolling, and possible-world sets grouped by evidence.

mod unroll;
mod worlds;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::formula::{eval, Formula, FormulaError, Run};
use crate::jgraph::JGraphError;

pub use unroll::{AtomMap, AtomRef, DecodedRun, Unrolling};
pub use worlds::{build_possible_worlds, histories, PossibleWorldSet, WorldGroup, MODEL_ATOM};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorldError {
    #[error("transition rules conflict in state {state}: {detail}")]
    Integrity { state: String, detail: String },
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("{0}")]
    Declaration(String),
    #[error("evidence group {group} is incompatible with the world rules (core: {})", core.join(", "))]
    IncompatibleEvidence { group: String, core: Vec<String> },
    #[error("no run of the model satisfies the initial state and history")]
    NoRun,
    #[error("state space too large for explicit exploration ({0} states)")]
    Capacity(usize),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    JGraph(#[from] JGraphError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Domain {
    /// Inclusive integer range.
    Range(i64, i64),
    /// Ordered symbolic values; arithmetic uses the position in the list.
    Enum(Vec<String>),
    Bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateVar {
    pub name: String,
    pub domain: Domain,
}

impl StateVar {
    pub fn new(name: impl Into<String>, domain: Domain) -> Result<Self, WorldError> {
        let name = name.into();
        match &domain {
            Domain::Range(lo, hi) if lo > hi => {
                return Err(WorldError::Declaration(format!("`{name}` has empty range {lo}..{hi}")))
            }
            Domain::Enum(vs) => {
                if vs.is_empty() {
                    return Err(WorldError::Declaration(format!("`{name}` has no values")));
                }
                let unique: HashSet<&String> = vs.iter().collect();
                if unique.len() != vs.len() {
                    return Err(WorldError::Declaration(format!("`{name}` repeats a value")));
                }
            }
            _ => {}
        }
        Ok(StateVar { name, domain })
    }

    pub fn size(&self) -> usize {
        match &self.domain {
            Domain::Range(lo, hi) => (hi - lo + 1) as usize,
            Domain::Enum(vs) => vs.len(),
            Domain::Bool => 2,
        }
    }

    pub fn value_name(&self, idx: usize) -> String {
        match &self.domain {
            Domain::Range(lo, _) => (lo + idx as i64).to_string(),
            Domain::Enum(vs) => vs[idx].clone(),
            Domain::Bool => if idx == 1 { "true" } else { "false" }.to_string(),
        }
    }

    pub fn values(&self) -> Vec<String> {
        (0..self.size()).map(|i| self.value_name(i)).collect()
    }

    pub fn index_of(&self, value: &str) -> Option<usize> {
        (0..self.size()).find(|&i| self.value_name(i) == value)
    }

    /// Numeric reading of a value: the integer itself for ranges, the
    /// position for enums and booleans.
    pub fn numeric(&self, idx: usize) -> i64 {
        match &self.domain {
            Domain::Range(lo, _) => lo + idx as i64,
            _ => idx as i64,
        }
    }

    /// The value index whose numeric reading is `n`, clamped into the domain.
    pub fn clamp(&self, n: i64) -> usize {
        let (lo, hi) = (self.numeric(0), self.numeric(self.size() - 1));
        (n.clamp(lo, hi) - lo) as usize
    }

    pub fn atom(&self, idx: usize) -> String {
        value_atom(&self.name, &self.value_name(idx))
    }
}

pub fn value_atom(var: &str, value: &str) -> String {
    format!("{var}={value}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Agent {
    A,
    B,
    Env,
}

impl Agent {
    pub const ALL: [Agent; 3] = [Agent::A, Agent::B, Agent::Env];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Agent::A => "A",
            Agent::B => "B",
            Agent::Env => "Env",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Operand {
    Var(usize),
    Int(i64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rhs {
    /// A value of the assigned variable's domain, by index.
    Value(usize),
    /// Signed sum over current values, clamped into the target domain.
    Sum(Vec<(bool, Operand)>),
}

impl Rhs {
    fn vars(&self) -> Vec<usize> {
        let mut out = match self {
            Rhs::Value(_) => vec![],
            Rhs::Sum(parts) => parts
                .iter()
                .filter_map(|(_, o)| if let Operand::Var(v) = o { Some(*v) } else { None })
                .collect(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assign {
    pub var: usize,
    pub rhs: Rhs,
}

/// Effect of an agent's action: when the agent picks `action` (any action if
/// `None`) and the guard holds in the current state, the assignments apply.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub agent: Agent,
    pub action: Option<usize>,
    pub guard: Formula,
    pub assigns: Vec<Assign>,
}

pub type State = Vec<usize>;
/// Action index per agent, in `Agent::ALL` order.
pub type JointAction = [usize; 3];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorldModel {
    pub vars: Vec<StateVar>,
    pub actions: [Vec<String>; 3],
    pub rules: Vec<Rule>,
    pub init: Formula,
    /// Constraints on the states after the initial one, up to the current state.
    pub history: Vec<Formula>,
    /// Future steps unrolled after the current state.
    pub horizon: usize,
}

impl WorldModel {
    pub fn new(
        vars: Vec<StateVar>,
        actions: [Vec<String>; 3],
        rules: Vec<Rule>,
        init: Formula,
        history: Vec<Formula>,
        horizon: usize,
    ) -> Result<Self, WorldError> {
        let m = WorldModel { vars, actions, rules, init, history, horizon };
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<(), WorldError> {
        if self.horizon == 0 {
            return Err(WorldError::ZeroHorizon);
        }
        let mut seen = HashSet::new();
        for v in &self.vars {
            if !seen.insert(v.name.as_str()) {
                return Err(WorldError::Declaration(format!("variable `{}` declared twice", v.name)));
            }
        }
        let mut acts = HashSet::new();
        for (agent, list) in Agent::ALL.iter().zip(&self.actions) {
            if list.is_empty() {
                return Err(WorldError::Declaration(format!("agent {agent} has no actions")));
            }
            for a in list {
                if !acts.insert(a.as_str()) || seen.contains(a.as_str()) {
                    return Err(WorldError::Declaration(format!("action `{a}` is not unique")));
                }
            }
        }
        for r in &self.rules {
            if let Some(a) = r.action {
                if a >= self.actions[r.agent.index()].len() {
                    return Err(WorldError::Declaration(format!("rule names missing action of {}", r.agent)));
                }
            }
            if r.guard.future_depth() > 0 || r.guard.past_depth() > 0 || has_temporal(&r.guard) {
                return Err(WorldError::Declaration(format!("guard `{}` must be a state formula", r.guard)));
            }
            for asg in &r.assigns {
                if asg.var >= self.vars.len() || asg.rhs.vars().iter().any(|&v| v >= self.vars.len()) {
                    return Err(WorldError::Declaration("assignment names a missing variable".into()));
                }
                if let Rhs::Value(x) = asg.rhs {
                    if x >= self.vars[asg.var].size() {
                        return Err(WorldError::Declaration("assignment value outside domain".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn action_index(&self, agent: Agent, name: &str) -> Option<usize> {
        self.actions[agent.index()].iter().position(|a| a == name)
    }

    /// Agent owning an action name.
    pub fn action_owner(&self, name: &str) -> Option<(Agent, usize)> {
        Agent::ALL.iter().find_map(|&ag| self.action_index(ag, name).map(|i| (ag, i)))
    }

    /// Position of the current state in every run.
    pub fn current(&self) -> usize {
        self.history.len()
    }

    pub fn run_len(&self) -> usize {
        self.current() + self.horizon + 1
    }

    pub fn joint_actions(&self) -> Vec<JointAction> {
        let mut out = Vec::new();
        for a in 0..self.actions[0].len() {
            for b in 0..self.actions[1].len() {
                for e in 0..self.actions[2].len() {
                    out.push([a, b, e]);
                }
            }
        }
        out
    }

    pub fn state_atoms(&self, s: &State) -> BTreeSet<String> {
        s.iter().enumerate().map(|(v, &x)| self.vars[v].atom(x)).collect()
    }

    pub fn describe(&self, s: &State) -> String {
        let parts: Vec<String> = s
            .iter()
            .enumerate()
            .map(|(v, &x)| format!("{}={}", self.vars[v].name, self.vars[v].value_name(x)))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }

    fn holds_in(&self, f: &Formula, s: &State) -> Result<bool, WorldError> {
        Ok(eval(f, &Run::new(vec![self.state_atoms(s)]), 0)?)
    }

    fn rhs_value(&self, target: usize, rhs: &Rhs, s: &State) -> usize {
        match rhs {
            Rhs::Value(x) => *x,
            Rhs::Sum(parts) => {
                let n: i64 = parts
                    .iter()
                    .map(|(pos, o)| {
                        let v = match o {
                            Operand::Var(v) => self.vars[*v].numeric(s[*v]),
                            Operand::Int(i) => *i,
                        };
                        if *pos { v } else { -v }
                    })
                    .sum();
                self.vars[target].clamp(n)
            }
        }
    }

    /// Explicit successor. Variables no firing rule assigns keep their value.
    pub fn step(&self, s: &State, joint: &JointAction) -> Result<State, WorldError> {
        let mut next = s.clone();
        let mut assigned: Vec<Option<(usize, String)>> = vec![None; self.vars.len()];
        for r in &self.rules {
            let chosen = joint[r.agent.index()];
            if r.action.is_some_and(|a| a != chosen) || !self.holds_in(&r.guard, s)? {
                continue;
            }
            let who = format!("{}.{}", r.agent, self.actions[r.agent.index()][chosen]);
            for asg in &r.assigns {
                let x = self.rhs_value(asg.var, &asg.rhs, s);
                if let Some((prev, by)) = &assigned[asg.var] {
                    if *prev != x {
                        return Err(WorldError::Integrity {
                            state: self.describe(s),
                            detail: format!(
                                "{by} and {who} assign different values to `{}`",
                                self.vars[asg.var].name
                            ),
                        });
                    }
                }
                assigned[asg.var] = Some((x, who.clone()));
                next[asg.var] = x;
            }
        }
        Ok(next)
    }

    /// Number of valuations of all variables.
    pub fn state_space(&self) -> usize {
        self.vars.iter().fold(1usize, |acc, v| acc.saturating_mul(v.size()))
    }

    fn all_states(&self, limit: usize) -> Result<Vec<State>, WorldError> {
        let n = self.state_space();
        if n > limit {
            return Err(WorldError::Capacity(n));
        }
        let mut out = vec![vec![]];
        for v in &self.vars {
            out = out
                .into_iter()
                .flat_map(|s| {
                    (0..v.size()).map(move |x| {
                        let mut t = s.clone();
                        t.push(x);
                        t
                    })
                })
                .collect();
        }
        Ok(out)
    }

    /// Initial states satisfying `init`, by exhaustive valuation (bounded).
    pub fn initial_states(&self, limit: usize) -> Result<Vec<State>, WorldError> {
        let mut out = Vec::new();
        for s in self.all_states(limit)? {
            if self.holds_in(&self.init, &s)? {
                out.push(s);
            }
        }
        Ok(out)
    }

    /// Sets of states reachable at each position `0..run_len()`, respecting the
    /// history constraints. Fails on the first rule conflict found.
    pub fn reachable_layers(&self, init: Vec<State>) -> Result<Vec<Vec<State>>, WorldError> {
        let mut layers = vec![dedup(init)];
        let joints = self.joint_actions();
        for k in 1..self.run_len() {
            let mut next = Vec::new();
            for s in &layers[k - 1] {
                for j in &joints {
                    let t = self.step(s, j)?;
                    let ok = match self.history.get(k - 1) {
                        Some(h) if k <= self.current() => self.holds_in(h, &t)?,
                        _ => true,
                    };
                    if ok {
                        next.push(t);
                    }
                }
            }
            layers.push(dedup(next));
        }
        Ok(layers)
    }

    /// Every run of full length, explicitly. Intended for small models.
    pub fn explicit_runs(&self, limit: usize) -> Result<Vec<(Vec<State>, Vec<JointAction>)>, WorldError> {
        let joints = self.joint_actions();
        let mut runs: Vec<(Vec<State>, Vec<JointAction>)> = self
            .initial_states(1 << 20)?
            .into_iter()
            .map(|s| (vec![s], vec![]))
            .collect();
        for k in 1..self.run_len() {
            let mut next = Vec::new();
            for (states, acts) in &runs {
                for j in &joints {
                    let t = self.step(states.last().unwrap(), j)?;
                    if k <= self.current() && !self.holds_in(&self.history[k - 1], &t)? {
                        continue;
                    }
                    let mut s2 = states.clone();
                    s2.push(t);
                    let mut a2 = acts.clone();
                    a2.push(*j);
                    next.push((s2, a2));
                    if next.len() > limit {
                        return Err(WorldError::Capacity(next.len()));
                    }
                }
            }
            runs = next;
        }
        Ok(runs)
    }

    /// Formula-level view of an explicit run: state atoms plus the action
    /// names taken at each step.
    pub fn run_atoms(&self, states: &[State], actions: &[JointAction]) -> Run {
        Run::new(
            states
                .iter()
                .enumerate()
                .map(|(t, s)| {
                    let mut atoms = self.state_atoms(s);
                    if let Some(j) = actions.get(t) {
                        for ag in Agent::ALL {
                            atoms.insert(self.actions[ag.index()][j[ag.index()]].clone());
                        }
                    }
                    atoms
                })
                .collect(),
        )
    }

    /// Domain constraints (exactly one value per variable, always) as formulas.
    pub fn domain_background(&self) -> Vec<Formula> {
        self.vars
            .iter()
            .map(|v| {
                let atoms: Vec<Formula> = (0..v.size()).map(|x| Formula::atom(v.atom(x))).collect();
                let mut parts = vec![Formula::disj(atoms.clone())];
                for i in 0..atoms.len() {
                    for j in i + 1..atoms.len() {
                        parts.push(Formula::not(Formula::and(atoms[i].clone(), atoms[j].clone())));
                    }
                }
                Formula::globally(Formula::conj(parts))
            })
            .collect()
    }
}

fn has_temporal(f: &Formula) -> bool {
    use Formula as F;
    match f {
        F::Bottom | F::Top | F::Atom(_) => false,
        F::Not(a) => has_temporal(a),
        F::And(a, b) | F::Or(a, b) | F::Implies(a, b) | F::Iff(a, b) => {
            has_temporal(a) || has_temporal(b)
        }
        _ => true,
    }
}

fn dedup(mut v: Vec<State>) -> Vec<State> {
    v.sort();
    v.dedup();
    v
}
