use std::fmt;

use super::{At, DomainDecl, NamedFormula, Scenario, WeightDecl};

fn names(xs: &[At<String>]) -> String {
    xs.iter().map(|x| x.node.as_str()).collect::<Vec<_>>().join(", ")
}

fn header(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    writeln!(f, "\n{name}")
}

fn named(f: &mut fmt::Formatter<'_>, name: &str, items: &[NamedFormula]) -> fmt::Result {
    if items.is_empty() {
        return Ok(());
    }
    header(f, name)?;
    for n in items {
        writeln!(f, "  {} : {}", n.name.node, n.body)?;
    }
    Ok(())
}

fn weights(f: &mut fmt::Formatter<'_>, name: &str, items: &[WeightDecl], always: bool) -> fmt::Result {
    if items.is_empty() && !always {
        return Ok(());
    }
    header(f, name)?;
    for w in items {
        writeln!(f, "  {{{}}} = {}", names(&w.goals), w.weight.node)?;
    }
    Ok(())
}

/// Canonical text; parsing it gives back an equal scenario.
impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(h) = &self.horizon {
            writeln!(f, "HORIZON {}", h.node)?;
        }
        if !self.vars.is_empty() {
            header(f, "VARS")?;
            for v in &self.vars {
                let d = match &v.domain {
                    DomainDecl::Range(lo, hi) => format!("{lo}..{hi}"),
                    DomainDecl::Enum(vs) => format!("{{{}}}", names(vs)),
                    DomainDecl::Bool => "bool".to_string(),
                };
                writeln!(f, "  {} : {d}", v.name.node)?;
            }
        }
        if !self.observable.is_empty() {
            header(f, "OBSERVABLE")?;
            writeln!(f, "  {}", names(&self.observable))?;
        }
        if !self.actions.is_empty() {
            header(f, "ACTIONS")?;
            for a in &self.actions {
                writeln!(f, "  {} : {}", a.agent.node, names(&a.names))?;
            }
        }
        if !self.trans.is_empty() {
            header(f, "TRANS")?;
            for t in &self.trans {
                let head = t.action.node.as_deref().unwrap_or("*");
                let asg: Vec<String> = t.assigns.iter().map(|a| format!("{}' = {}", a.var.node, a.rhs)).collect();
                write!(f, "  {head} : {}", asg.join(", "))?;
                if let Some(g) = &t.guard {
                    write!(f, " if {g}")?;
                }
                writeln!(f)?;
            }
        }
        for (name, list) in [("INIT", &self.init), ("HISTORY", &self.history)] {
            if !list.is_empty() {
                header(f, name)?;
                for e in list {
                    writeln!(f, "  {e}")?;
                }
            }
        }
        if !self.evidence.is_empty() {
            header(f, "EVIDENCE")?;
            for e in &self.evidence {
                match &e.tag {
                    Some(t) => writeln!(f, "  {} [{}] : {}", e.id.node, t.node, e.body)?,
                    None => writeln!(f, "  {} : {}", e.id.node, e.body)?,
                }
            }
        }
        named(f, "GOALS_A", &self.goals_a)?;
        weights(f, "WEIGHTS_A", &self.weights_a, false)?;
        named(f, "GOALS_B", &self.goals_b)?;
        weights(f, "WEIGHTS_B", &self.weights_b, false)?;
        named(f, "B_KNOWS", &self.b_knows)?;
        named(f, "B_COMMITS", &self.b_commits)?;
        if !self.b_adopts.is_empty() {
            header(f, "B_ADOPTS")?;
            writeln!(f, "  {}", names(&self.b_adopts))?;
        }
        if let Some(j) = &self.joint_weights {
            weights(f, "JOINT_WEIGHTS", j, true)?;
        }
        Ok(())
    }
}
