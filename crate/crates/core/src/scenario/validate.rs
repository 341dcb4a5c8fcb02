use std::collections::{BTreeMap, BTreeSet};

use crate::formula::parse::is_keyword;
use crate::formula::{Expr, ExprKind, Span};
use crate::world::Agent;

use super::lower::{rhs, state_vars, vocabulary};
use super::{Diagnostic, DomainDecl, Scenario, Severity, WeightDecl, SECTIONS};

const RESERVED: [&str; 2] = ["if", "bool"];

struct Diags(Vec<Diagnostic>);

impl Diags {
    fn error(&mut self, span: Span, message: impl Into<String>) {
        self.0.push(Diagnostic { severity: Severity::Error, span, message: message.into() });
    }

    fn warn(&mut self, span: Span, message: impl Into<String>) {
        self.0.push(Diagnostic { severity: Severity::Warning, span, message: message.into() });
    }
}

fn reserved(name: &str) -> bool {
    is_keyword(name) || SECTIONS.contains(&name) || RESERVED.contains(&name)
}

fn beliefs(e: &Expr, out: &mut Vec<(String, Span)>) {
    use ExprKind as K;
    match &e.kind {
        K::Bool(_) | K::Name(_) | K::Cmp(..) => {}
        K::Believes(es, a) => {
            out.extend(es.iter().map(|x| (x.clone(), e.span)));
            beliefs(a, out);
        }
        K::Not(a)
        | K::Next(a)
        | K::Prev(a)
        | K::Globally(a)
        | K::Finally(a)
        | K::Historically(a)
        | K::GloballyWithin(_, a)
        | K::FinallyWithin(_, a) => beliefs(a, out),
        K::And(a, b) | K::Or(a, b) | K::Implies(a, b) | K::Iff(a, b) | K::Until(a, b) | K::Since(a, b) => {
            beliefs(a, out);
            beliefs(b, out);
        }
    }
}

fn temporal(e: &Expr) -> bool {
    use ExprKind as K;
    match &e.kind {
        K::Bool(_) | K::Name(_) | K::Cmp(..) => false,
        K::Not(a) => temporal(a),
        K::And(a, b) | K::Or(a, b) | K::Implies(a, b) | K::Iff(a, b) => temporal(a) || temporal(b),
        _ => true,
    }
}

/// Checks every invariant of a parsed scenario. The result is empty exactly
/// when the scenario is well formed and warning free.
pub fn validate(s: &Scenario) -> Vec<Diagnostic> {
    let mut d = Diags(Vec::new());
    let origin = Span { line: 1, col: 1 };

    match &s.horizon {
        None => d.error(origin, "HORIZON is missing"),
        Some(h) if h.node < 1 => d.error(h.span, format!("horizon must be at least 1, got {}", h.node)),
        _ => {}
    }

    // Variables.
    if s.vars.is_empty() {
        d.error(origin, "VARS declares no variables");
    }
    let mut var_names: BTreeSet<&str> = BTreeSet::new();
    let mut values: BTreeMap<&str, &str> = BTreeMap::new();
    for v in &s.vars {
        let name = v.name.node.as_str();
        if reserved(name) {
            d.error(v.name.span, format!("`{name}` is reserved"));
        }
        if !var_names.insert(name) {
            d.error(v.name.span, format!("variable `{name}` is declared twice"));
        }
        match &v.domain {
            DomainDecl::Range(lo, hi) if lo > hi => {
                d.error(v.name.span, format!("`{name}` has the empty range {lo}..{hi}"))
            }
            DomainDecl::Enum(vs) => {
                let mut seen = BTreeSet::new();
                for x in vs {
                    if !seen.insert(x.node.as_str()) {
                        d.error(x.span, format!("`{name}` lists `{}` twice", x.node));
                    }
                    if reserved(&x.node) {
                        d.error(x.span, format!("`{}` is reserved", x.node));
                    }
                    values.entry(x.node.as_str()).or_insert(name);
                }
            }
            _ => {}
        }
    }
    for v in &s.vars {
        if let DomainDecl::Enum(vs) = &v.domain {
            for x in vs {
                if var_names.contains(x.node.as_str()) {
                    d.error(x.span, format!("value `{}` of `{}` is also a variable", x.node, v.name.node));
                }
            }
        }
    }

    // Actions.
    let mut owners: BTreeMap<&str, Agent> = BTreeMap::new();
    let mut declared: BTreeSet<Agent> = BTreeSet::new();
    for a in &s.actions {
        if !declared.insert(a.agent.node) {
            d.error(a.agent.span, format!("actions of {} are declared twice", a.agent.node));
        }
        for n in &a.names {
            let name = n.node.as_str();
            if reserved(name) {
                d.error(n.span, format!("`{name}` is reserved"));
            }
            if var_names.contains(name) || values.contains_key(name) {
                d.error(n.span, format!("action `{name}` clashes with a variable or value"));
            }
            match owners.get(name) {
                Some(&o) if o == a.agent.node => d.error(n.span, format!("action `{name}` is listed twice")),
                Some(&o) => d.error(n.span, format!("action `{name}` is declared for both {o} and {}", a.agent.node)),
                None => {
                    owners.insert(name, a.agent.node);
                }
            }
        }
    }
    for ag in Agent::ALL {
        if !declared.contains(&ag) {
            d.error(origin, format!("ACTIONS declares nothing for {ag}"));
        }
    }

    let mut seen = BTreeSet::new();
    for o in &s.observable {
        if !var_names.contains(o.node.as_str()) {
            d.error(o.span, format!("observable `{}` is not a variable", o.node));
        } else if !seen.insert(o.node.as_str()) {
            d.warn(o.span, format!("observable `{}` is listed twice", o.node));
        }
    }

    // Every formula, lowered against the declared domains.
    let vocab = vocabulary(s);
    let vars = state_vars(s);
    let mut atom_ids: BTreeSet<&str> = BTreeSet::new();
    for e in &s.evidence {
        if !atom_ids.insert(e.id.node.as_str()) {
            d.error(e.id.span, format!("evidence `{}` is declared twice", e.id.node));
        }
    }
    for k in &s.b_knows {
        if !atom_ids.insert(k.name.node.as_str()) {
            d.error(k.name.span, format!("B's observation `{}` reuses an evidence name", k.name.node));
        }
    }
    let check = |d: &mut Diags, e: &Expr, what: &str, state_only: bool, believes: bool| {
        if let Err(err) = e.lower(&vocab) {
            d.error(err.span, err.message);
        }
        if state_only && temporal(e) {
            d.error(e.span, format!("{what} must be a state formula"));
        }
        let mut bs = Vec::new();
        beliefs(e, &mut bs);
        for (b, span) in bs {
            if !believes {
                d.error(span, format!("{what} cannot use belief operators"));
                break;
            }
            if !atom_ids.contains(b.as_str()) {
                d.error(span, format!("`{b}` is not an evidence atom"));
            }
        }
    };

    let mut referenced: BTreeSet<String> = s.observable.iter().map(|o| o.node.clone()).collect();
    for t in &s.trans {
        if let Some(a) = &t.action.node {
            if !owners.contains_key(a.as_str()) {
                d.error(t.action.span, format!("rule names the undeclared action `{a}`"));
            }
        }
        let mut targets = BTreeSet::new();
        for a in &t.assigns {
            referenced.insert(a.var.node.clone());
            referenced.extend(a.rhs.parts.iter().filter_map(|(_, o)| match o {
                crate::formula::Operand::Name(n) => Some(n.clone()),
                _ => None,
            }));
            match vars.iter().position(|v| v.name == a.var.node) {
                None => d.error(a.var.span, format!("assignment to the undeclared variable `{}`", a.var.node)),
                Some(v) => {
                    if let Err(err) = rhs(&vars, v, &a.rhs) {
                        d.error(err.span, err.message);
                    }
                }
            }
            if !targets.insert(a.var.node.as_str()) {
                d.error(a.var.span, format!("`{}` is assigned twice in one rule", a.var.node));
            }
        }
        if let Some(g) = &t.guard {
            check(&mut d, g, "a guard", true, false);
            if g.names().iter().any(|(n, _)| owners.contains_key(n.as_str())) {
                d.error(g.span, "a guard cannot mention actions");
            }
            referenced.extend(g.names().into_iter().map(|(n, _)| n));
        }
    }
    for e in &s.init {
        check(&mut d, e, "INIT", true, false);
    }
    for e in &s.history {
        check(&mut d, e, "a HISTORY step", true, false);
    }
    for e in &s.evidence {
        check(&mut d, &e.body, "evidence", false, false);
    }
    for k in &s.b_knows {
        check(&mut d, &k.body, "B's observation", false, false);
    }
    let mut commit_ids = BTreeSet::new();
    for k in &s.b_commits {
        if !commit_ids.insert(k.name.node.as_str()) {
            d.error(k.name.span, format!("commitment `{}` is declared twice", k.name.node));
        }
        check(&mut d, &k.body, "a commitment", false, false);
    }

    // Goals.
    let horizon = s.horizon.as_ref().map(|h| h.node.max(0) as usize);
    let mut goal_owner: BTreeMap<&str, Agent> = BTreeMap::new();
    for (agent, goals) in [(Agent::A, &s.goals_a), (Agent::B, &s.goals_b)] {
        for g in goals {
            if goal_owner.insert(g.name.node.as_str(), agent).is_some() {
                d.error(g.name.span, format!("goal `{}` is declared twice", g.name.node));
            }
            check(&mut d, &g.body, "a goal", false, true);
            referenced.extend(g.body.names().into_iter().map(|(n, _)| n));
            if let (Ok(f), Some(h)) = (g.body.lower(&vocab), horizon) {
                let depth = f.future_depth();
                if depth > h {
                    d.error(
                        g.name.span,
                        format!("goal `{}` looks {depth} steps ahead but the horizon is {h}", g.name.node),
                    );
                }
            }
        }
    }
    if s.goals_a.is_empty() {
        d.warn(origin, "A has no goals");
    }
    let goals_of = |agent: Option<Agent>| -> BTreeSet<&str> {
        goal_owner.iter().filter(|(_, &o)| agent.is_none_or(|a| a == o)).map(|(&n, _)| n).collect()
    };
    weights(&mut d, &s.weights_a, &goals_of(Some(Agent::A)), "WEIGHTS_A");
    weights(&mut d, &s.weights_b, &goals_of(Some(Agent::B)), "WEIGHTS_B");
    if let Some(j) = &s.joint_weights {
        weights(&mut d, j, &goals_of(None), "JOINT_WEIGHTS");
    }
    let a_goals = goals_of(Some(Agent::A));
    let mut adopted = BTreeSet::new();
    for n in &s.b_adopts {
        if !a_goals.contains(n.node.as_str()) {
            d.error(n.span, format!("B_ADOPTS names `{}`, which is not a goal of A", n.node));
        } else if !adopted.insert(n.node.as_str()) {
            d.warn(n.span, format!("`{}` is adopted twice", n.node));
        }
    }

    for e in &s.evidence {
        let mine: BTreeSet<String> = e.body.names().into_iter().map(|(n, _)| n).collect();
        if mine.iter().all(|n| !referenced.contains(n)) {
            d.warn(e.id.span, format!("evidence `{}` constrains nothing that goals, rules or observations use", e.id.node));
        }
    }
    d.0.sort_by_key(|x| (x.span, x.severity));
    d.0
}

fn weights(d: &mut Diags, ws: &[WeightDecl], goals: &BTreeSet<&str>, section: &str) {
    let mut seen: BTreeSet<BTreeSet<&str>> = BTreeSet::new();
    for w in ws {
        if w.weight.node < 0 {
            d.error(w.weight.span, format!("weights are natural numbers, got {}", w.weight.node));
        }
        let mut set = BTreeSet::new();
        for g in &w.goals {
            if !goals.contains(g.node.as_str()) {
                d.error(g.span, format!("{section} names the unknown goal `{}`", g.node));
            }
            if !set.insert(g.node.as_str()) {
                d.warn(g.span, format!("`{}` is repeated in a weighted subset", g.node));
            }
        }
        if !seen.insert(set) {
            d.error(w.weight.span, format!("{section} weighs the same subset twice"));
        }
    }
}
