use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use super::{
    AnalysisConfig, ConflictCause, ConflictError, InformationBase, Problem, Survivor, NO_COOPERATIVE_WIN,
};
use crate::jgraph::{Checker, EvidenceBase};
use crate::sat::{self, Lit, SolverConfig, Status};
use crate::strategy::{
    all_groups, believed_paths, blocking_strategy, coop_wins, first_blocked_leaf, max_achievable,
    strategy_clauses, Arena, Blocker, Choice, ClassTree, Forced, GoalMask, Strategy,
};
use crate::world::{build_possible_worlds, Agent, PossibleWorldSet, MODEL_ATOM};

/// One analysis of an information base: worlds, A's candidate strategies,
/// the believed goals of B per group, survivors and conflict causes.
pub struct Round {
    pub ws: PossibleWorldSet,
    pub arena: Arena,
    pub universe: Vec<String>,
    pub a_tree: ClassTree,
    /// A's candidates with the maximal goal sets each wins cooperatively.
    pub candidates: Vec<(Choice, Vec<usize>)>,
    /// Maximal goal sets of A over all groups.
    pub phi_a: Vec<BTreeSet<String>>,
    /// Believed maximal goal sets of B, per group.
    pub phi_b: Vec<Vec<BTreeSet<String>>>,
    pub survivors: Vec<Survivor>,
    pub causes: Vec<ConflictCause>,
    believed: HashMap<(usize, GoalMask), Vec<Option<Forced>>>,
}

impl Round {
    pub fn run(problem: &Problem, ib: &InformationBase, cfg: &AnalysisConfig) -> Result<Round, ConflictError> {
        problem.check()?;
        let model = &problem.model;
        let ws = build_possible_worlds(&ib.evidence, model, &ib.shared_strategy_facts, cfg.group_bound)?;
        let universe = problem.universe();
        let formulas: Vec<_> = universe.iter().map(|n| problem.goal(n).expect("universe").clone()).collect();
        let arena = Arena::build(&ws, &problem.view, &formulas)?;
        log::debug!("arena: {:?}, {} groups", arena.stats, ws.len());
        let a_tree = ClassTree::new(&arena, Agent::A);
        let choices = a_tree.enumerate(cfg.strategy_bound)?;
        let all = all_groups(ws.len());
        let mut round = Round {
            ws,
            arena,
            universe,
            a_tree,
            candidates: Vec::new(),
            phi_a: Vec::new(),
            phi_b: Vec::new(),
            survivors: Vec::new(),
            causes: Vec::new(),
            believed: HashMap::new(),
        };
        round.phi_a = round.maximal_a(problem, ib, all)?;
        if round.phi_a.is_empty() {
            round.causes.push(round.no_win_cause(problem));
            return Ok(round);
        }
        round.phi_b = (0..round.ws.len()).map(|g| round.maximal_b(problem, ib, g)).collect::<Result<_, _>>()?;
        for g in 0..round.ws.len() {
            for s in round.phi_b[g].clone() {
                let m = round.mask(&s);
                let paths = believed_paths(&round.arena, g, m);
                round.believed.insert((g, m), paths);
            }
        }

        let phi_masks: Vec<GoalMask> = round.phi_a.iter().map(|s| round.mask(s)).collect();
        let verdicts: Vec<(Vec<usize>, Option<usize>, Vec<(usize, Blocker)>)> = choices
            .par_iter()
            .map(|ch| {
                let won: Vec<usize> =
                    (0..phi_masks.len()).filter(|&i| coop_wins(&round.arena, &round.a_tree, ch, phi_masks[i], all)).collect();
                let mut blocked = Vec::new();
                for &i in &won {
                    match round.block(ch, phi_masks[i]) {
                        None => return (won, Some(i), blocked),
                        Some(b) => blocked.push((i, b)),
                    }
                }
                (won, None, blocked)
            })
            .collect();

        let mut seen_leaf: BTreeSet<(usize, GoalMask, GoalMask, usize)> = BTreeSet::new();
        let mut seen_cause = BTreeSet::new();
        let mut checker = ContradictionChecker::new(&ib.evidence, model)?;
        for (ch, (won, pass, blocked)) in choices.into_iter().zip(verdicts) {
            if won.is_empty() {
                continue;
            }
            let id = round.candidates.len();
            if let Some(i) = pass {
                let strategy = round.a_tree.to_strategy(&round.arena, &ch, format!("A{id}"));
                round.survivors.push(Survivor { strategy, goals: round.phi_a[i].clone() });
            }
            for (i, b) in blocked {
                if !seen_leaf.insert((b.group, b.b_goals, phi_masks[i], b.leaf)) {
                    continue;
                }
                let cause = round.cause(problem, &mut checker, &ch, id, i, &b)?;
                if seen_cause.insert(cause.key()) {
                    round.causes.push(cause);
                }
            }
            round.candidates.push((ch, won));
        }
        Ok(round)
    }

    pub fn has_conflict(&self) -> bool {
        self.survivors.is_empty()
    }

    pub fn mask(&self, subset: &BTreeSet<String>) -> GoalMask {
        subset.iter().map(|n| 1u64 << self.universe.iter().position(|u| u == n).expect("known goal")).sum()
    }

    fn names(&self, mask: GoalMask) -> BTreeSet<String> {
        (0..self.universe.len()).filter(|i| mask & (1 << i) != 0).map(|i| self.universe[i].clone()).collect()
    }

    fn maximal_a(
        &self,
        problem: &Problem,
        ib: &InformationBase,
        all: u64,
    ) -> Result<Vec<BTreeSet<String>>, ConflictError> {
        if let Some(s) = &ib.negotiated {
            let a: BTreeSet<String> = problem.goals_a.names().into_iter().map(str::to_string).collect();
            return Ok(vec![s.intersection(&a).cloned().collect()]);
        }
        let found = max_achievable(&self.arena, &problem.goals_a, &self.universe, &BTreeSet::new(), all)?;
        let best = found.first().map_or(0, |f| f.weight);
        if best == 0 {
            if problem.goals_a.weights.values().any(|&w| w > 0) {
                return Ok(Vec::new());
            }
            return Ok(inclusion_maximal(found.into_iter().map(|f| f.subset).collect()));
        }
        Ok(found.into_iter().map(|f| f.subset).collect())
    }

    fn maximal_b(
        &self,
        problem: &Problem,
        ib: &InformationBase,
        group: usize,
    ) -> Result<Vec<BTreeSet<String>>, ConflictError> {
        if let Some(s) = &ib.negotiated {
            let b: BTreeSet<String> = problem.goals_b.names().into_iter().map(str::to_string).collect();
            return Ok(vec![s.intersection(&b).cloned().collect()]);
        }
        let adopted = &ib.adopted_goals;
        let mut gs = problem.goals_b.clone();
        for n in adopted {
            gs.goals.push((n.clone(), problem.goals_a.get(n).expect("checked").clone()));
        }
        gs.weights = problem
            .goals_b
            .weights
            .iter()
            .map(|(k, &w)| (k.union(adopted).cloned().collect(), w))
            .collect();
        let found = max_achievable(&self.arena, &gs, &self.universe, adopted, 1 << group)?;
        // Nothing worth pursuing: B may behave arbitrarily, beyond what it
        // agreed to adopt.
        match found.first() {
            None => Ok(vec![BTreeSet::new()]),
            Some(f) if f.weight == 0 => Ok(vec![adopted.clone()]),
            Some(_) => Ok(found.into_iter().map(|f| f.subset).collect()),
        }
    }

    /// A believed B strategy blocking the A strategy for `phi` in some
    /// group, if there is one.
    fn block(&self, choice: &Choice, phi: GoalMask) -> Option<Blocker> {
        for g in 0..self.ws.len() {
            for s in &self.phi_b[g] {
                let m = self.mask(s);
                let paths = &self.believed[&(g, m)];
                if let Some(leaf) = first_blocked_leaf(&self.arena, &self.a_tree, choice, g, phi | m, paths) {
                    let forced = paths[leaf].clone().expect("believed leaf");
                    return Some(Blocker { group: g, b_goals: m, leaf, forced });
                }
            }
        }
        None
    }

    fn no_win_cause(&self, problem: &Problem) -> ConflictCause {
        log::info!("A can reach none of its valued goal sets ({} goals)", problem.goals_a.goals.len());
        let g = &self.ws.groups[0];
        ConflictCause {
            justification: BTreeSet::from([NO_COOPERATIVE_WIN.to_string()]),
            goals_a: BTreeSet::new(),
            goals_b: BTreeSet::new(),
            group: 0,
            group_id: g.group.id().to_string(),
            group_atoms: g.group.atoms.clone(),
            a_strategy: Strategy::new(Agent::A, "none"),
            b_strategy: Strategy::new(Agent::B, "none"),
            contradicts: BTreeMap::new(),
        }
    }

    fn cause(
        &self,
        problem: &Problem,
        checker: &mut ContradictionChecker,
        choice: &Choice,
        id: usize,
        phi: usize,
        b: &Blocker,
    ) -> Result<ConflictCause, ConflictError> {
        let a = self.a_tree.to_strategy(&self.arena, choice, format!("A{id}"));
        let bs = blocking_strategy(&self.arena, b.group, b.b_goals, &b.forced, &self.a_tree, choice, &format!("B{id}"));
        let goals_a = self.phi_a[phi].clone();
        let goals_b = self.names(b.b_goals);
        let joint: BTreeSet<String> = goals_a.union(&goals_b).cloned().collect();
        let justification = justify(&self.ws, problem, b.group, &a, &bs, &joint)?;
        let contradicts = checker.contradicting(&justification)?;
        let g = &self.ws.groups[b.group];
        Ok(ConflictCause {
            justification,
            goals_a,
            goals_b,
            group: b.group,
            group_id: g.group.id().to_string(),
            group_atoms: g.group.atoms.clone(),
            a_strategy: a,
            b_strategy: bs,
            contradicts,
        })
    }
}

fn inclusion_maximal(sets: Vec<BTreeSet<String>>) -> Vec<BTreeSet<String>> {
    let keep: Vec<bool> =
        sets.iter().map(|s| !sets.iter().any(|t| t != s && s.is_subset(t))).collect();
    sets.into_iter().zip(keep).filter(|(_, k)| *k).map(|(s, _)| s).collect()
}

/// Evidence and facts that make the pair miss the joint goal in the group:
/// a minimized core of the pair's runs reaching the goal. When some runs
/// do reach it, the environment's moves are pinned to a failing run first.
fn justify(
    ws: &PossibleWorldSet,
    problem: &Problem,
    group: usize,
    a: &Strategy,
    b: &Strategy,
    joint: &BTreeSet<String>,
) -> Result<BTreeSet<String>, ConflictError> {
    let u = &ws.unrolling;
    let g = &ws.groups[group];
    let c = u.current();
    let goal = crate::formula::Formula::conj(joint.iter().map(|n| problem.goal(n).expect("known").clone()).collect::<Vec<_>>());
    let mut cnf = g.definitions.clone();
    strategy_clauses(&mut cnf, u, &problem.view, &[a, b]);
    let mut enc = g.encoder.clone();
    let goal_lit = u.encode_formula(&mut enc, &mut cnf, &goal, c)?;
    let assumps: Vec<Lit> = g.assumptions().into_iter().map(Lit::from_dimacs).collect();

    let mut failing = cnf.clone();
    failing.add_clause([-goal_lit]);
    let mut fs = failing.to_solver(SolverConfig::default()).expect("well formed");
    let mut env = Vec::new();
    if fs.solve(&assumps) == Status::Sat {
        let run = u.decode(|l| fs.lit_model_value(Lit::from_dimacs(l)));
        for k in c..c + problem.model.horizon {
            env.push(u.map.action_lit(k, Agent::Env, run.actions[k][Agent::Env.index()]));
        }
    }

    let mut reaching = cnf;
    reaching.add_clause([goal_lit]);
    let mut tries = vec![reaching.clone()];
    if !env.is_empty() {
        let mut pinned = reaching;
        for &l in &env {
            pinned.add_clause([l]);
        }
        tries.push(pinned);
    }
    for f in tries {
        let mut solver = f.to_solver(SolverConfig::default()).expect("well formed");
        if solver.solve(&assumps) == Status::Unsat {
            let core = if solver.core().is_empty() {
                Vec::new()
            } else {
                sat::minimize_assumptions(&mut solver, &assumps).expect("unsat")
            };
            let names: BTreeSet<String> =
                core.iter().filter_map(|l| g.name_of(l.to_dimacs())).map(str::to_string).collect();
            if !names.is_empty() {
                return Ok(names);
            }
            break;
        }
    }
    Ok(BTreeSet::from([MODEL_ATOM.to_string()]))
}

/// Pairwise contradictions between evidence atoms, on variable domains.
struct ContradictionChecker {
    checker: Checker,
    ids: Vec<String>,
    memo: BTreeMap<String, BTreeSet<String>>,
}

impl ContradictionChecker {
    fn new(base: &EvidenceBase, model: &crate::world::WorldModel) -> Result<Self, ConflictError> {
        let domain = domain_base(base, model)?;
        let ids = domain.items().iter().map(|i| i.atom.id.clone()).collect();
        Ok(ContradictionChecker { checker: Checker::new(&domain, model.horizon)?, ids, memo: BTreeMap::new() })
    }

    fn of(&mut self, id: &str) -> Result<BTreeSet<String>, ConflictError> {
        if let Some(s) = self.memo.get(id) {
            return Ok(s.clone());
        }
        let mut out = BTreeSet::new();
        if self.ids.iter().any(|i| i == id) {
            for other in self.ids.clone() {
                if other != id && !self.checker.is_consistent(&BTreeSet::from([id.to_string(), other.clone()]))? {
                    out.insert(other);
                }
            }
        }
        self.memo.insert(id.to_string(), out.clone());
        Ok(out)
    }

    fn contradicting(&mut self, atoms: &BTreeSet<String>) -> Result<BTreeMap<String, BTreeSet<String>>, ConflictError> {
        let mut out = BTreeMap::new();
        for a in atoms {
            let c = self.of(a)?;
            if !c.is_empty() {
                out.insert(a.clone(), c);
            }
        }
        Ok(out)
    }
}

/// The base re-anchored at the current position with the model's domain
/// constraints as background.
pub(super) fn domain_base(base: &EvidenceBase, model: &crate::world::WorldModel) -> Result<EvidenceBase, ConflictError> {
    let mut out = EvidenceBase::with_background(model.domain_background());
    out.set_anchor(model.current());
    for item in base.items() {
        out.push(item.atom.id.clone(), item.body.clone(), item.tag.clone())?;
    }
    Ok(out)
}

/// Whether A believes to be in conflict with B, with the causes found.
pub fn detect_conflict(
    problem: &Problem,
    ib: &InformationBase,
    cfg: &AnalysisConfig,
) -> Result<(bool, Vec<ConflictCause>), ConflictError> {
    let r = Round::run(problem, ib, cfg)?;
    Ok((r.has_conflict(), r.causes))
}

/// Justification of the first failure of an A strategy for `goals_a`
/// against B's believed strategies, empty if it never fails.
pub fn test(
    round: &Round,
    problem: &Problem,
    choice: &Choice,
    goals_a: &BTreeSet<String>,
) -> Result<BTreeSet<String>, ConflictError> {
    let Some(b) = round.block(choice, round.mask(goals_a)) else {
        return Ok(BTreeSet::new());
    };
    let a = round.a_tree.to_strategy(&round.arena, choice, "A");
    let bs = blocking_strategy(&round.arena, b.group, b.b_goals, &b.forced, &round.a_tree, choice, "B");
    let joint: BTreeSet<String> = goals_a.union(&round.names(b.b_goals)).cloned().collect();
    justify(&round.ws, problem, b.group, &a, &bs, &joint)
}
