use std::collections::{BTreeMap, BTreeSet};

use crate::conflict::{Disclosures, InformationBase, Problem};
use crate::formula::{Expr, Formula, Operand, ParseError, Term};
use crate::jgraph::EvidenceBase;
use crate::strategy::{GoalSet, View};
use crate::world::{self, Agent, Assign, Domain, Rhs, Rule, StateVar, WorldModel};

use super::{validate, DomainDecl, DomainVocabulary, NamedFormula, Scenario, ScenarioError, Severity, WeightDecl, DEFAULT_TAG};

/// A scenario ready for analysis.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub problem: Problem,
    pub base: InformationBase,
}

/// Declared variables that form valid domains, in order.
pub(super) fn state_vars(s: &Scenario) -> Vec<StateVar> {
    s.vars
        .iter()
        .filter_map(|v| {
            let d = match &v.domain {
                DomainDecl::Range(lo, hi) => Domain::Range(*lo, *hi),
                DomainDecl::Enum(vs) => Domain::Enum(vs.iter().map(|x| x.node.clone()).collect()),
                DomainDecl::Bool => Domain::Bool,
            };
            StateVar::new(v.name.node.clone(), d).ok()
        })
        .collect()
}

pub(super) fn action_names(s: &Scenario) -> Vec<String> {
    s.actions.iter().flat_map(|a| a.names.iter().map(|n| n.node.clone())).collect()
}

pub(super) fn vocabulary(s: &Scenario) -> DomainVocabulary {
    DomainVocabulary::new(state_vars(s), action_names(s))
}

/// Right-hand side of `var' = term`: a domain value, or a clamped sum of
/// variables and integers.
pub(super) fn rhs(vars: &[StateVar], target: usize, t: &Term) -> Result<Rhs, ParseError> {
    let tv = &vars[target];
    let var = |n: &str| vars.iter().position(|v| v.name == n);
    match t.parts.as_slice() {
        [(true, Operand::Name(n))] if var(n).is_none() => {
            return tv.index_of(n).map(Rhs::Value).ok_or_else(|| {
                ParseError::new(t.span, format!("`{n}` is neither a variable nor a value of `{}`", tv.name))
            });
        }
        [(pos, Operand::Int(v))] => {
            let v = if *pos { *v } else { -v };
            let idx = (0..tv.size()).find(|&i| matches!(tv.domain, Domain::Range(..)) && tv.numeric(i) == v);
            return idx.map(Rhs::Value).ok_or_else(|| {
                ParseError::new(t.span, format!("{v} is outside the domain of `{}`", tv.name))
            });
        }
        _ => {}
    }
    let parts = t
        .parts
        .iter()
        .map(|(pos, op)| {
            let o = match op {
                Operand::Int(v) => world::Operand::Int(*v),
                Operand::Name(n) => world::Operand::Var(var(n).ok_or_else(|| {
                    ParseError::new(t.span, format!("`{n}` is not a variable; sums range over variables and integers"))
                })?),
            };
            Ok((*pos, o))
        })
        .collect::<Result<Vec<_>, ParseError>>()?;
    Ok(Rhs::Sum(parts))
}

fn formulas(items: &[NamedFormula], vocab: &DomainVocabulary) -> Result<Vec<(String, Formula)>, ParseError> {
    items.iter().map(|n| Ok((n.name.node.clone(), n.body.lower(vocab)?))).collect()
}

fn weight_table(ws: &[WeightDecl]) -> BTreeMap<BTreeSet<String>, u64> {
    ws.iter()
        .map(|w| (w.goals.iter().map(|g| g.node.clone()).collect(), w.weight.node.max(0) as u64))
        .collect()
}

fn conj(es: &[Expr], vocab: &DomainVocabulary) -> Result<Formula, ParseError> {
    Ok(Formula::conj(es.iter().map(|e| e.lower(vocab)).collect::<Result<Vec<_>, _>>()?))
}

impl Scenario {
    /// Builds the analysis inputs. `horizon` overrides the declared one.
    pub fn compile(&self, horizon: Option<usize>) -> Result<Compiled, ScenarioError> {
        let errors: Vec<_> = validate(self).into_iter().filter(|d| d.severity == Severity::Error).collect();
        if !errors.is_empty() {
            return Err(ScenarioError::Invalid(errors));
        }
        let horizon = horizon.unwrap_or_else(|| self.horizon.as_ref().map_or(1, |h| h.node as usize));
        let vocab = vocabulary(self);
        let vars = vocab.vars.clone();

        let mut actions: [Vec<String>; 3] = Default::default();
        for a in &self.actions {
            actions[a.agent.node.index()].extend(a.names.iter().map(|n| n.node.clone()));
        }
        let mut rules = Vec::new();
        for t in &self.trans {
            let (agent, action) = match &t.action.node {
                None => (Agent::Env, None),
                Some(name) => {
                    let (ag, i) = Agent::ALL
                        .iter()
                        .find_map(|&ag| actions[ag.index()].iter().position(|a| a == name).map(|i| (ag, i)))
                        .expect("validated");
                    (ag, Some(i))
                }
            };
            let guard = match &t.guard {
                Some(g) => g.lower(&vocab)?,
                None => Formula::Top,
            };
            let assigns = t
                .assigns
                .iter()
                .map(|a| {
                    let v = vars.iter().position(|x| x.name == a.var.node).expect("validated");
                    Ok(Assign { var: v, rhs: rhs(&vars, v, &a.rhs)? })
                })
                .collect::<Result<Vec<_>, ParseError>>()?;
            rules.push(Rule { agent, action, guard, assigns });
        }
        let init = conj(&self.init, &vocab)?;
        let history = self.history.iter().map(|e| e.lower(&vocab)).collect::<Result<Vec<_>, _>>()?;
        let model = WorldModel::new(vars, actions, rules, init, history, horizon)?;
        let names: Vec<&str> = self.observable.iter().map(|n| n.node.as_str()).collect();
        let view = View::new(&model, &names)?;

        for g in self.goals_a.iter().chain(&self.goals_b) {
            let depth = g.body.lower(&vocab)?.future_depth();
            if depth > horizon {
                return Err(ScenarioError::Invalid(vec![super::Diagnostic {
                    severity: Severity::Error,
                    span: g.name.span,
                    message: format!("goal `{}` looks {depth} steps ahead but the horizon is {horizon}", g.name.node),
                }]));
            }
        }
        let mut goals_a = GoalSet::new(formulas(&self.goals_a, &vocab)?);
        goals_a.weights = weight_table(&self.weights_a);
        let mut goals_b = GoalSet::new(formulas(&self.goals_b, &vocab)?);
        goals_b.weights = weight_table(&self.weights_b);
        let disclosures = Disclosures {
            knows: formulas(&self.b_knows, &vocab)?,
            commits: formulas(&self.b_commits, &vocab)?,
            adopts: self.b_adopts.iter().map(|n| n.node.clone()).collect(),
            joint_weights: self.joint_weights.as_deref().map(weight_table),
        };

        let mut evidence = EvidenceBase::new();
        evidence.set_anchor(model.current());
        for e in &self.evidence {
            let tag = e.tag.as_ref().map_or(DEFAULT_TAG, |t| t.node.as_str());
            evidence.push(e.id.node.clone(), e.body.lower(&vocab)?, tag)?;
        }
        let problem = Problem { model, view, goals_a, goals_b, disclosures };
        problem.check()?;
        Ok(Compiled { problem, base: InformationBase::new(evidence) })
    }
}
