use std::collections::{BTreeMap, BTreeSet};

use super::analysis::{domain_base, Round};
use super::{
    AnalysisConfig, BlockingDoc, CauseDoc, ConflictCause, ConflictError, ConflictReport, InformationBase, LogEntry,
    Problem, ResolutionLevel, StrategyDoc, SurvivorDoc, TraceEntry, Verdict, B_TAG,
};
use crate::jgraph::Checker;
use crate::strategy::{all_groups, Arena, Rule, Solve};
use crate::world::build_possible_worlds;

/// Result of one resolution attempt; `changed` is false when the level had
/// nothing to offer.
#[derive(Clone, Debug)]
pub struct FixOutcome {
    pub base: InformationBase,
    pub delta: Vec<String>,
    pub changed: bool,
}

/// Tries to resolve the causes with the information of one level.
pub fn fix(
    causes: &[ConflictCause],
    level: ResolutionLevel,
    ib: &InformationBase,
    problem: &Problem,
    cfg: &AnalysisConfig,
) -> Result<FixOutcome, ConflictError> {
    let mut base = ib.clone();
    let mut delta = Vec::new();
    let d = &problem.disclosures;
    match level {
        ResolutionLevel::C1 => share_observations(causes, &mut base, &mut delta, problem)?,
        ResolutionLevel::C2 => {
            for (name, f) in &d.commits {
                if base.shared_strategy_facts.iter().all(|(n, _)| n != name) {
                    base.shared_strategy_facts.push((name.clone(), f.clone()));
                    delta.push(format!("B commits to {name}: {f}"));
                }
            }
        }
        ResolutionLevel::C3 => {
            for name in &d.adopts {
                if base.adopted_goals.insert(name.clone()) {
                    delta.push(format!("B adopts goal {name}"));
                }
            }
        }
        ResolutionLevel::C4 => {
            if base.negotiated.is_none() {
                if let Some(s) = negotiate(&base, problem, cfg)? {
                    let names: Vec<&str> = s.iter().map(String::as_str).collect();
                    delta.push(format!("agreed on goals {{{}}}", names.join(",")));
                    base.negotiated = Some(s);
                }
            }
        }
    }
    for action in &delta {
        base.level_log.push(LogEntry { level, action: action.clone() });
    }
    let changed = !delta.is_empty();
    Ok(FixOutcome { base, delta, changed })
}

/// C1: A evidence that a cause rests on, that other evidence contradicts,
/// and that B's own observation contradicts, gives way to B's observation.
fn share_observations(
    causes: &[ConflictCause],
    base: &mut InformationBase,
    delta: &mut Vec<String>,
    problem: &Problem,
) -> Result<(), ConflictError> {
    let knows = &problem.disclosures.knows;
    if knows.is_empty() {
        return Ok(());
    }
    let mut domain = domain_base(&base.evidence, &problem.model)?;
    let mut known_ids = Vec::new();
    for (name, f) in knows {
        if domain.get(name).is_none() {
            domain.push(name.clone(), f.clone(), B_TAG)?;
            known_ids.push(name.clone());
        }
    }
    let mut checker = Checker::new(&domain, problem.model.horizon)?;
    let ids: Vec<String> = base.evidence.items().iter().map(|i| i.atom.id.clone()).collect();
    let mut suspects: BTreeSet<String> = BTreeSet::new();
    for c in causes {
        suspects.extend(c.justification.iter().cloned());
    }
    for atom in suspects {
        let Some(item) = base.evidence.get(&atom) else { continue };
        if item.tag == B_TAG {
            continue;
        }
        let mut contested = false;
        for other in &ids {
            if other != &atom && !consistent_pair(&mut checker, &atom, other)? {
                contested = true;
                break;
            }
        }
        if !contested {
            continue;
        }
        let mut replaced = false;
        for k in &known_ids {
            if !consistent_pair(&mut checker, &atom, k)? {
                if base.evidence.get(k).is_none() {
                    let f = &knows.iter().find(|(n, _)| n == k).expect("declared").1;
                    base.evidence.push(k.clone(), f.clone(), B_TAG)?;
                    delta.push(format!("B reports {k}: {f}"));
                }
                if !replaced {
                    base.evidence.remove(&atom);
                    delta.push(format!("dismissed {atom} in favour of {k}"));
                    replaced = true;
                }
            }
        }
    }
    Ok(())
}

fn consistent_pair(ch: &mut Checker, a: &str, b: &str) -> Result<bool, ConflictError> {
    Ok(ch.is_consistent(&BTreeSet::from([a.to_string(), b.to_string()]))?)
}

/// C4: the heaviest subset of both agents' goals that a joint strategy wins
/// in every group, ties broken by the sorted goal names.
fn negotiate(
    ib: &InformationBase,
    problem: &Problem,
    cfg: &AnalysisConfig,
) -> Result<Option<BTreeSet<String>>, ConflictError> {
    let Some(table) = problem.disclosures.joint_weights.as_ref() else {
        return Ok(None);
    };
    let ws = build_possible_worlds(&ib.evidence, &problem.model, &ib.shared_strategy_facts, cfg.group_bound)?;
    let universe = problem.universe();
    let formulas: Vec<_> = universe.iter().map(|n| problem.goal(n).expect("universe").clone()).collect();
    let arena = Arena::build(&ws, &problem.view, &formulas)?;
    let all = all_groups(ws.len());
    let mut ranked: Vec<(&BTreeSet<String>, u64)> = table.iter().filter(|(_, &w)| w > 0).map(|(k, &w)| (k, w)).collect();
    ranked.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(y.0)));
    for (subset, w) in ranked {
        let mask = subset.iter().map(|n| 1u64 << universe.iter().position(|u| u == n).expect("checked")).sum();
        if Solve::new(&arena, mask, all, Rule::Free, Rule::Free).wins() {
            log::info!("negotiated {subset:?} with weight {w}");
            return Ok(Some(subset.clone()));
        }
    }
    Ok(None)
}

/// Searches for A strategies winning a maximal goal set against every
/// believed B strategy, resolving conflicts level by level up to
/// `cfg.max_level`. Each applied level restarts the analysis with the
/// enlarged information base.
pub fn find_strategy(
    problem: &Problem,
    initial: &InformationBase,
    cfg: &AnalysisConfig,
) -> Result<ConflictReport, ConflictError> {
    let mut ib = initial.clone();
    let mut round = Round::run(problem, &ib, cfg)?;
    let mut trace = vec![entry(None, true, Vec::new(), &ib, &round)];
    let mut rounds: Vec<Vec<ConflictCause>> = Vec::new();
    let mut next_level: Vec<Option<ResolutionLevel>> = Vec::new();
    let mut applied: Vec<ResolutionLevel> = Vec::new();
    'outer: while round.has_conflict() {
        rounds.push(round.causes.clone());
        for level in ResolutionLevel::ALL.into_iter().filter(|&l| Some(l) <= cfg.max_level) {
            let out = fix(&round.causes, level, &ib, problem, cfg)?;
            if !out.changed {
                trace.push(TraceEntry {
                    level: Some(level),
                    applied: false,
                    delta: Vec::new(),
                    info_base_size: ib.size(),
                    group_count: round.ws.len(),
                    candidates: 0,
                    survivors: 0,
                });
                continue;
            }
            log::info!("applied {level}: {:?}", out.delta);
            ib = out.base;
            round = Round::run(problem, &ib, cfg)?;
            trace.push(entry(Some(level), true, out.delta, &ib, &round));
            applied.push(level);
            next_level.push(Some(level));
            continue 'outer;
        }
        break;
    }
    let resolved = !round.has_conflict();
    if !resolved {
        next_level.push(None);
    }
    let verdict = match (resolved, applied.iter().max()) {
        (true, None) => Verdict::NoConflict,
        (true, Some(&l)) => Verdict::ResolvedAt(l),
        (false, _) => Verdict::Unresolved,
    };

    // A cause is discharged by the level applied after its round when it
    // does not come back later.
    let mut discharged: Vec<Vec<Option<ResolutionLevel>>> = vec![Vec::new(); rounds.len()];
    let mut later: BTreeMap<_, Option<ResolutionLevel>> = BTreeMap::new();
    for r in (0..rounds.len()).rev() {
        let mut here = BTreeMap::new();
        for c in &rounds[r] {
            let k = c.key();
            let d = if !resolved {
                None
            } else if let Some(&d) = later.get(&k) {
                d
            } else {
                next_level[r]
            };
            here.insert(k, d);
            discharged[r].push(d);
        }
        later.extend(here);
    }

    let model = &problem.model;
    let view = &problem.view;
    let mut causes = Vec::new();
    let mut details = Vec::new();
    for (r, cs) in rounds.iter().enumerate() {
        for (c, d) in cs.iter().zip(&discharged[r]) {
            causes.push(CauseDoc {
                round: r,
                justification: c.justification.iter().cloned().collect(),
                contradicts: c.contradicts.iter().map(|(k, v)| (k.clone(), v.iter().cloned().collect())).collect(),
                goals_a: c.goals_a.iter().cloned().collect(),
                goals_b: c.goals_b.iter().cloned().collect(),
                group: c.group_id.clone(),
                group_atoms: c.group_atoms.iter().cloned().collect(),
                blocking: BlockingDoc {
                    a_strategy: StrategyDoc::new(&c.a_strategy, model, view),
                    b_strategy: StrategyDoc::new(&c.b_strategy, model, view),
                },
                discharged_at: *d,
            });
            details.push(c.clone());
        }
    }
    let survivors = if resolved { round.survivors.clone() } else { Vec::new() };
    let strategies = survivors
        .iter()
        .take(cfg.report_limit)
        .map(|s| SurvivorDoc {
            strategy: StrategyDoc::new(&s.strategy, model, view),
            goals: s.goals.iter().cloned().collect(),
        })
        .collect();
    Ok(ConflictReport {
        verdict,
        level: match verdict {
            Verdict::ResolvedAt(l) => Some(l),
            _ => None,
        },
        strategy_count: survivors.len(),
        strategies,
        causes,
        trace,
        negotiated_goals: ib.negotiated.as_ref().map(|s| s.iter().cloned().collect()),
        survivors,
        cause_details: details,
        final_base: Some(ib),
    })
}

fn entry(
    level: Option<ResolutionLevel>,
    applied: bool,
    delta: Vec<String>,
    ib: &InformationBase,
    round: &Round,
) -> TraceEntry {
    TraceEntry {
        level,
        applied,
        delta,
        info_base_size: ib.size(),
        group_count: round.ws.len(),
        candidates: round.candidates.len(),
        survivors: round.survivors.len(),
    }
}
