use std::fmt::Write as _;

use serde::Serialize;

use super::{ConflictReport, ResolutionLevel, StrategyDoc, TraceEntry, Verdict};

#[derive(Clone, Debug, Serialize)]
pub struct JustificationLink {
    pub atom: String,
    pub contradicts: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainLink {
    pub round: usize,
    pub group: String,
    pub group_atoms: Vec<String>,
    pub evidence: Vec<JustificationLink>,
    #[serde(rename = "goals_A")]
    pub goals_a: Vec<String>,
    #[serde(rename = "goals_B")]
    pub goals_b: Vec<String>,
    pub a_strategy: String,
    pub b_strategy: String,
    pub discharged: String,
}

/// The justification chain of a report, as text and as JSON.
#[derive(Clone, Debug, Serialize)]
pub struct Explanation {
    pub verdict: Verdict,
    pub chain: Vec<ChainLink>,
    pub trace: Vec<TraceEntry>,
    #[serde(skip)]
    pub text: String,
}

impl Explanation {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("explanation serializes")
    }
}

fn discharge_name(d: Option<ResolutionLevel>) -> String {
    d.map_or_else(|| "undischarged".to_string(), |l| l.to_string())
}

fn set(items: &[String]) -> String {
    format!("{{{}}}", items.join(", "))
}

fn strategy_lines(out: &mut String, indent: &str, s: &StrategyDoc) {
    let _ = writeln!(out, "{indent}{} ({})", s.name, s.owner);
    for d in &s.decisions {
        let _ = writeln!(out, "{indent}  {} -> {}", d.history, d.action);
    }
}

pub fn explain(report: &ConflictReport) -> Explanation {
    let mut chain = Vec::new();
    let mut text = String::new();
    let _ = writeln!(text, "verdict: {}", report.verdict);
    if let Some(n) = &report.negotiated_goals {
        let _ = writeln!(text, "negotiated goals: {}", set(n));
    }
    for (i, c) in report.causes.iter().enumerate() {
        let evidence: Vec<JustificationLink> = c
            .justification
            .iter()
            .map(|a| JustificationLink {
                atom: a.clone(),
                contradicts: c.contradicts.get(a).cloned().unwrap_or_default(),
            })
            .collect();
        let discharged = discharge_name(c.discharged_at);
        let _ = writeln!(
            text,
            "cause {} (round {}, group {} {}) discharged: {}",
            i + 1,
            c.round,
            c.group,
            set(&c.group_atoms),
            discharged
        );
        let _ = writeln!(text, "  goals A {}  goals B {}", set(&c.goals_a), set(&c.goals_b));
        let _ = writeln!(text, "  justification");
        for e in &evidence {
            if e.contradicts.is_empty() {
                let _ = writeln!(text, "    {}", e.atom);
            } else {
                let _ = writeln!(text, "    {}  contradicts {}", e.atom, set(&e.contradicts));
            }
        }
        let _ = writeln!(text, "  blocking pair");
        strategy_lines(&mut text, "    ", &c.blocking.a_strategy);
        strategy_lines(&mut text, "    ", &c.blocking.b_strategy);
        chain.push(ChainLink {
            round: c.round,
            group: c.group.clone(),
            group_atoms: c.group_atoms.clone(),
            evidence,
            goals_a: c.goals_a.clone(),
            goals_b: c.goals_b.clone(),
            a_strategy: c.blocking.a_strategy.name.clone(),
            b_strategy: c.blocking.b_strategy.name.clone(),
            discharged,
        });
    }
    let _ = writeln!(text, "trace");
    for t in &report.trace {
        let level = t.level.map_or_else(|| "initial".to_string(), |l| l.to_string());
        let state = if t.applied { "applied" } else { "nothing to offer" };
        let _ = writeln!(
            text,
            "  {level} {state}: {} groups, information base {}, {} survivors of {} candidates",
            t.group_count, t.info_base_size, t.survivors, t.candidates
        );
        for d in &t.delta {
            let _ = writeln!(text, "    {d}");
        }
    }
    if !report.strategies.is_empty() {
        let _ = writeln!(text, "strategies ({} total)", report.strategy_count);
        for s in &report.strategies {
            let _ = writeln!(text, "  goals {}", set(&s.goals));
            strategy_lines(&mut text, "    ", &s.strategy);
        }
    }
    Explanation { verdict: report.verdict, chain, trace: report.trace.clone(), text }
}
