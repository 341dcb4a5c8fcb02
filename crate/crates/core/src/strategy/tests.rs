use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::formula::{eval, parse_formula};
use crate::jgraph::EvidenceBase;
use crate::world::testing::toy;
use crate::world::{
    build_possible_worlds, Assign, Domain, JointAction, Operand, Rhs, Rule as TransRule, State, StateVar,
};

type ExplicitRun = (Vec<State>, Vec<JointAction>);

/// A model, its worlds and arena, plus every explicit run sorted into the
/// groups it belongs to.
struct Fixture {
    model: WorldModel,
    ws: PossibleWorldSet,
    view: View,
    arena: Arena,
    runs: Vec<ExplicitRun>,
    members: Vec<Vec<usize>>,
}

impl Fixture {
    fn new(model: WorldModel, evidence: &[(&str, &str)], view: View, goals: &[Formula]) -> Self {
        let mut base = EvidenceBase::new();
        let mut bodies = BTreeMap::new();
        for (id, f) in evidence {
            let f = parse_formula(f).unwrap();
            bodies.insert(id.to_string(), f.clone());
            base.push(*id, f, "sensor").unwrap();
        }
        let ws = build_possible_worlds(&base, &model, &[], 16).unwrap();
        let arena = Arena::build(&ws, &view, goals).unwrap();
        let runs = model.explicit_runs(1 << 16).unwrap();
        let c = model.current();
        let members = ws
            .groups
            .iter()
            .map(|g| {
                (0..runs.len())
                    .filter(|&i| {
                        let r = model.run_atoms(&runs[i].0, &runs[i].1);
                        g.group.atoms.iter().all(|id| eval(&bodies[id], &r, c).unwrap())
                    })
                    .collect()
            })
            .collect();
        Fixture { model, ws, view, arena, runs, members }
    }

    /// Does the run follow every part? `None` if some part has no action
    /// for a history the run reaches while agreeing with all parts so far.
    fn follows(&self, run: &ExplicitRun, parts: &[&Strategy]) -> Option<bool> {
        let c = self.model.current();
        for k in 0..self.model.horizon {
            let hist: History = run.0[c..=c + k].iter().map(|s| self.view.of_state(s)).collect();
            for s in parts {
                match s.action(&hist) {
                    None => return None,
                    Some(x) if x != run.1[c + k][s.owner.index()] => return Some(false),
                    Some(_) => {}
                }
            }
        }
        Some(true)
    }

    /// Whether B may be following a believed strategy along the run: at
    /// every step some pair winning B's goals agrees with the run so far
    /// and with B's move, unless A's move already rules every such pair out.
    fn believed_run(&self, run: &ExplicitRun, pairs: &[(&Strategy, &Strategy)]) -> bool {
        let c = self.model.current();
        let agrees = |s: &Strategy, k: usize| {
            let hist: History = run.0[c..=c + k].iter().map(|s| self.view.of_state(s)).collect();
            s.action(&hist) == Some(run.1[c + k][s.owner.index()])
        };
        let mut live: Vec<&(&Strategy, &Strategy)> = pairs.iter().collect();
        if live.is_empty() {
            return false;
        }
        for k in 0..self.model.horizon {
            live.retain(|(a2, _)| agrees(a2, k));
            if live.is_empty() {
                return true;
            }
            live.retain(|(_, b2)| agrees(b2, k));
            if live.is_empty() {
                return false;
            }
        }
        true
    }

    /// Whether every run of `group` that follows the parts satisfies `goal`.
    fn wins(&self, parts: &[&Strategy], goal: &Formula, group: usize) -> Option<bool> {
        let c = self.model.current();
        for &i in &self.members[group] {
            let run = &self.runs[i];
            match self.follows(run, parts)? {
                false => continue,
                true => {
                    if !eval(goal, &self.model.run_atoms(&run.0, &run.1), c).unwrap() {
                        return Some(false);
                    }
                }
            }
        }
        Some(true)
    }

    fn wins_all(&self, parts: &[&Strategy], goal: &Formula) -> bool {
        (0..self.ws.len()).all(|g| self.wins(parts, goal, g).expect("total"))
    }

    fn goal(&self, mask: GoalMask) -> Formula {
        let mut f = Formula::Top;
        for (i, g) in self.arena.goals.iter().enumerate() {
            if mask & (1 << i) != 0 {
                f = Formula::and(f, g.clone());
            }
        }
        f
    }

    fn strategies(&self, agent: Agent) -> (ClassTree, Vec<Choice>, Vec<Strategy>) {
        let tree = ClassTree::new(&self.arena, agent);
        let choices = tree.enumerate(DEFAULT_STRATEGY_BOUND).unwrap();
        let strats = choices.iter().enumerate().map(|(i, c)| tree.to_strategy(&self.arena, c, format!("s{i}"))).collect();
        (tree, choices, strats)
    }
}

const TOY_ATOMS: [&str; 9] = ["a=1", "a=2", "b=1", "b=2", "b=3", "sig=true", "go", "stop", "flip"];

fn random_formula(rng: &mut ChaCha8Rng, depth: u32) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return Formula::atom(TOY_ATOMS[rng.gen_range(0..TOY_ATOMS.len())]);
    }
    let d = depth - 1;
    match rng.gen_range(0..8) {
        0 => Formula::not(random_formula(rng, d)),
        1 => Formula::and(random_formula(rng, d), random_formula(rng, d)),
        2 => Formula::or(random_formula(rng, d), random_formula(rng, d)),
        3 => Formula::next(random_formula(rng, d)),
        4 => Formula::globally(random_formula(rng, d)),
        5 => Formula::finally(random_formula(rng, d)),
        6 => Formula::until(random_formula(rng, d), random_formula(rng, d)),
        _ => Formula::finally_within(rng.gen_range(0..3), random_formula(rng, d)),
    }
}

fn random_goals(seed: u64, n: usize) -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_formula(&mut rng, 3)).collect()
}

fn toy_after_one_step() -> WorldModel {
    let mut m = toy();
    m.history = vec![parse_formula("a = 1").unwrap()];
    m
}

const SIG_SPLIT: [(&str, &str); 2] = [("radar", "X sig = true"), ("lidar", "X sig = false")];

/// One counter that A may bump; B and the environment have a single action.
fn counter() -> WorldModel {
    let vars = vec![StateVar::new("x", Domain::Range(0, 3)).unwrap()];
    let actions = [vec!["hold".into(), "inc".into()], vec!["noop".into()], vec!["idle".into()]];
    let rules = vec![TransRule {
        agent: Agent::A,
        action: Some(1),
        guard: Formula::Top,
        assigns: vec![Assign { var: 0, rhs: Rhs::Sum(vec![(true, Operand::Var(0)), (true, Operand::Int(1))]) }],
    }];
    WorldModel::new(vars, actions, rules, parse_formula("x = 0").unwrap(), vec![], 3).unwrap()
}

/// Step size visiting about a dozen of `n` strategies.
fn stride(n: usize) -> usize {
    (n / 12).max(1)
}

fn all_lits(u: &Unrolling) -> Vec<i32> {
    let mut out = Vec::new();
    for t in 0..u.len() {
        for v in 0..u.model.vars.len() {
            out.extend_from_slice(u.map.value_lits(t, v));
        }
        if t + 1 < u.len() {
            for ag in Agent::ALL {
                out.extend_from_slice(u.map.action_lits(t, ag));
            }
        }
    }
    out
}

#[test]
fn class_counts_on_the_toy() {
    let m = toy();
    let blind = Fixture::new(m.clone(), &[], View::default(), &[]);
    let (tree, choices, strats) = blind.strategies(Agent::A);
    assert_eq!(tree.count(), 4);
    assert_eq!(choices.len(), 4);
    assert_eq!(strats.iter().map(|s| s.decisions.clone()).collect::<BTreeSet<_>>().len(), 4);

    // Every variable observable: after wait or go, B's move and the signal
    // give four distinguishable successors, each with two choices.
    let full = Fixture::new(m, &[], View::everything(&toy()), &[]);
    let (tree, choices, strats) = full.strategies(Agent::A);
    assert_eq!(tree.count(), 32);
    assert_eq!(choices.len(), 32);
    let distinct: BTreeSet<_> = strats.iter().map(|s| s.decisions.clone()).collect();
    assert_eq!(distinct.len(), 32);
    for (ch, s) in choices.iter().zip(&strats) {
        assert_eq!(&tree.from_strategy(&full.arena, s).unwrap(), ch);
    }
}

#[test]
fn capacity_error_reports_the_count() {
    let f = Fixture::new(toy(), &[], View::everything(&toy()), &[]);
    let tree = ClassTree::new(&f.arena, Agent::A);
    match tree.enumerate(3) {
        Err(StrategyError::Capacity { count, bound }) => {
            assert_eq!(count, "32");
            assert_eq!(bound, 3);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn agents_without_actions_are_rejected() {
    let mut m = toy();
    m.actions[1].clear();
    let ws = build_possible_worlds(&EvidenceBase::new(), &toy(), &[], 16).unwrap();
    let mut ws2 = ws.clone();
    let mut u = (*ws.unrolling).clone();
    u.model = m;
    ws2.unrolling = std::sync::Arc::new(u);
    assert!(matches!(Arena::build(&ws2, &View::default(), &[]), Err(StrategyError::NoActions(Agent::B))));
}

#[test]
fn constant_strategy_in_a_deterministic_world_has_one_run() {
    let m = counter();
    let ws = build_possible_worlds(&EvidenceBase::new(), &m, &[], 16).unwrap();
    let view = View::everything(&m);
    let u = &ws.unrolling;
    let lits = all_lits(u);
    for a in 0..2 {
        let sa = complete(&ws, &view, &Strategy::constant(Agent::A, "a", a)).unwrap();
        let sb = complete(&ws, &view, &Strategy::constant(Agent::B, "b", 0)).unwrap();
        let cnf = encode_strategy(u, &ws.groups[0], &view, &[&sa, &sb]).unwrap();
        assert_eq!(sat::enumerate_models(&cnf, &lits, 8).unwrap().len(), 1);
        let only_a = encode_strategy(u, &ws.groups[0], &view, &[&sa]).unwrap();
        assert_eq!(sat::enumerate_models(&only_a, &lits, 8).unwrap().len(), 1);
    }
    let free = encode_strategy(u, &ws.groups[0], &view, &[]).unwrap();
    assert_eq!(sat::enumerate_models(&free, &lits, 64).unwrap().len(), 8);
}

#[test]
fn missing_decisions_are_a_totality_error() {
    let m = toy();
    let ws = build_possible_worlds(&EvidenceBase::new(), &m, &[], 16).unwrap();
    let view = View::everything(&m);
    let mut s = Strategy::new(Agent::A, "partial");
    s.decisions.insert(vec![vec![0, 1, 0]], 1);
    match encode_strategy(&ws.unrolling, &ws.groups[0], &view, &[&s]) {
        Err(StrategyError::Totality(h)) => assert!(h.contains("a=1"), "{h}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn encoded_strategies_match_simulation() {
    for (model, evidence) in [(toy(), &[][..]), (toy(), &SIG_SPLIT[..]), (toy_after_one_step(), &[][..])] {
        let view = View::everything(&model);
        let f = Fixture::new(model, evidence, view, &[]);
        let u = &f.ws.unrolling;
        let lits = all_lits(u);
        let (_, _, a_strats) = f.strategies(Agent::A);
        let (_, _, b_strats) = f.strategies(Agent::B);
        let pairs: Vec<Vec<&Strategy>> = a_strats
            .iter()
            .step_by(stride(a_strats.len()))
            .map(|a| vec![a])
            .chain(
                a_strats
                    .iter()
                    .step_by(stride(a_strats.len()) + 1)
                    .zip(b_strats.iter().step_by(stride(b_strats.len())))
                    .map(|(a, b)| vec![a, b]),
            )
            .collect();
        for parts in pairs {
            for g in 0..f.ws.len() {
                let cnf = encode_strategy(u, &f.ws.groups[g], &f.view, &parts).unwrap();
                let models = sat::enumerate_models(&cnf, &lits, 1 << 12).unwrap();
                let expected: Vec<&ExplicitRun> =
                    f.members[g].iter().map(|&i| &f.runs[i]).filter(|r| f.follows(r, &parts) == Some(true)).collect();
                assert_eq!(models.len(), expected.len());
                for r in expected {
                    let mut assumps = Vec::new();
                    for (t, s) in r.0.iter().enumerate() {
                        for (v, &x) in s.iter().enumerate() {
                            assumps.push(u.map.value_lit(t, v, x));
                        }
                    }
                    for (t, j) in r.1.iter().enumerate() {
                        for ag in Agent::ALL {
                            assumps.push(u.map.action_lit(t, ag, j[ag.index()]));
                        }
                    }
                    assert!(sat::solve(&cnf, &assumps).unwrap().is_sat());
                }
            }
        }
    }
}

#[test]
fn winning_checks_agree_with_simulation() {
    for seed in 0..10u64 {
        for (model, evidence) in [(toy(), &SIG_SPLIT[..]), (toy_after_one_step(), &[][..])] {
            let goals = random_goals(seed, 3);
            let view = View::everything(&model);
            let f = Fixture::new(model, evidence, view, &goals);
            let (tree, choices, strats) = f.strategies(Agent::A);
            let all = all_groups(f.ws.len());
            let groups: Vec<usize> = (0..f.ws.len()).collect();
            for (ch, s) in choices.iter().zip(&strats).step_by(stride(strats.len())) {
                for mask in [1u64, 2, 4, 7] {
                    let goal = f.goal(mask);
                    let oracle = f.wins_all(&[s], &goal);
                    assert_eq!(wins_alone(&f.arena, &tree, ch, mask, all), oracle, "seed {seed} {goal}");
                    let sat = is_winning(&f.ws, &groups, &f.view, &[s], &goal).unwrap();
                    assert_eq!(sat.is_winning(), oracle, "seed {seed} {goal}");
                    if let WinCheck::Losing { group, witness } = sat {
                        let u = &f.ws.unrolling;
                        assert!(!eval(&goal, &u.to_run(&witness), u.current()).unwrap());
                        assert!(f.members[group].iter().any(|&i| f.runs[i].0 == witness.states));
                        let hist = observed(u, &f.view, &witness);
                        for (k, x) in s.actions_taken(&hist).into_iter().take(f.model.horizon).enumerate() {
                            assert_eq!(x, Some(witness.actions[u.current() + k][0]));
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn an_impossible_goal_loses_with_a_witness() {
    let m = toy();
    let ws = build_possible_worlds(&EvidenceBase::new(), &m, &[], 16).unwrap();
    let view = View::everything(&m);
    let go = complete(&ws, &view, &Strategy::constant(Agent::A, "go", 1)).unwrap();
    let goal = parse_formula("G a = 0").unwrap();
    match is_winning(&ws, &[0], &view, &[&go], &goal).unwrap() {
        WinCheck::Losing { group, witness } => {
            assert_eq!(group, 0);
            assert_eq!(witness.states[1][0], 1);
        }
        WinCheck::Winning => panic!("going moves A"),
    }
    let reach = parse_formula("F a = 2").unwrap();
    assert!(is_winning(&ws, &[0], &view, &[&go], &reach).unwrap().is_winning());
}

#[test]
fn cooperative_wins_match_brute_force() {
    for seed in 20..28u64 {
        let goals = random_goals(seed, 3);
        let f = Fixture::new(toy(), &SIG_SPLIT, View::everything(&toy()), &goals);
        let (a_tree, a_choices, a_strats) = f.strategies(Agent::A);
        let (_, _, b_strats) = f.strategies(Agent::B);
        let all = all_groups(f.ws.len());
        for mask in [1u64, 3, 6, 7] {
            let goal = f.goal(mask);
            for (ch, a) in a_choices.iter().zip(&a_strats) {
                let oracle = b_strats.iter().any(|b| f.wins_all(&[a, b], &goal));
                assert_eq!(coop_wins(&f.arena, &a_tree, ch, mask, all), oracle, "seed {seed} {goal}");
                if oracle {
                    let mut s = Solve::new(&f.arena, mask, all, Rule::Fixed(&a_tree, ch), Rule::Free);
                    assert!(s.wins());
                    let joint = s.extract("w");
                    for (h, x) in &joint.a_part.decisions {
                        assert_eq!(a.action(h), Some(*x));
                    }
                    assert!(f.wins_all(&[&joint.a_part, &joint.b_part], &goal));
                }
            }
            // Per group the verdicts can only get easier.
            for g in 0..f.ws.len() {
                for ch in &a_choices {
                    if coop_wins(&f.arena, &a_tree, ch, mask, all) {
                        assert!(coop_wins(&f.arena, &a_tree, ch, mask, 1 << g));
                    }
                }
            }
        }
    }
}

#[test]
fn maximal_subsets_match_brute_force() {
    for seed in 40..48u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let goals = random_goals(seed, 3);
        let names: Vec<String> = (0..3).map(|i| format!("g{i}")).collect();
        let mut gs = GoalSet::new(names.iter().cloned().zip(goals.iter().cloned()).collect());
        for sel in 1u32..8 {
            let subset: Vec<&str> = (0..3).filter(|i| sel & (1 << i) != 0).map(|i| names[i].as_str()).collect();
            if rng.gen_bool(0.7) {
                gs = gs.with_weight(&subset, rng.gen_range(0..4));
            }
        }
        let f = Fixture::new(toy(), &SIG_SPLIT, View::everything(&toy()), &goals);
        let (_, _, a_strats) = f.strategies(Agent::A);
        let (_, _, b_strats) = f.strategies(Agent::B);
        let all = all_groups(f.ws.len());
        for mandatory in [BTreeSet::new(), BTreeSet::from(["g0".to_string()])] {
            let mut best: Option<u64> = None;
            let mut expected: Vec<BTreeSet<String>> = Vec::new();
            for sel in 0u64..8 {
                let subset: BTreeSet<String> =
                    (0..3).filter(|i| sel & (1 << i) != 0).map(|i| names[i].clone()).collect();
                if !mandatory.is_subset(&subset) {
                    continue;
                }
                let goal = f.goal(sel);
                let ok = a_strats.iter().any(|a| b_strats.iter().any(|b| f.wins_all(&[a, b], &goal)));
                if !ok {
                    continue;
                }
                let w = gs.weight(&subset);
                if best.is_none_or(|b| w > b) {
                    best = Some(w);
                    expected.clear();
                }
                if best == Some(w) {
                    expected.push(subset);
                }
            }
            expected.sort();
            let got = max_achievable(&f.arena, &gs, &names, &mandatory, all).unwrap();
            let subsets: Vec<BTreeSet<String>> = got.iter().map(|a| a.subset.clone()).collect();
            assert_eq!(subsets, expected, "seed {seed}");
            for a in &got {
                assert_eq!(Some(a.weight), best);
                assert!(f.wins_all(&[&a.witness.a_part, &a.witness.b_part], &f.goal(a.mask)));
            }
        }
    }
}

#[test]
fn blocking_matches_brute_force() {
    let mut blocked = 0;
    for seed in 60..68u64 {
        let goals = random_goals(seed, 2);
        let f = Fixture::new(toy(), &SIG_SPLIT, View::everything(&toy()), &goals);
        let (a_tree, a_choices, a_strats) = f.strategies(Agent::A);
        let (_, _, b_strats) = f.strategies(Agent::B);
        let (b_mask, joint) = (2u64, 3u64);
        let b_goal = f.goal(b_mask);
        let joint_goal = f.goal(joint);
        for g in 0..f.ws.len() {
            let pairs: Vec<(&Strategy, &Strategy)> = b_strats
                .iter()
                .flat_map(|b| a_strats.iter().map(move |a2| (a2, b)))
                .filter(|(a2, b)| f.wins(&[a2, b], &b_goal, g) == Some(true))
                .collect();
            let paths = believed_paths(&f.arena, g, b_mask);
            for (ch, a) in a_choices.iter().zip(&a_strats) {
                let oracle = f.members[g].iter().map(|&i| &f.runs[i]).any(|run| {
                    f.follows(run, &[a]) == Some(true)
                        && f.believed_run(run, &pairs)
                        && !eval(&joint_goal, &f.model.run_atoms(&run.0, &run.1), f.model.current()).unwrap()
                });
                blocked += oracle as usize;
                let leaf = first_blocked_leaf(&f.arena, &a_tree, ch, g, joint, &paths);
                assert_eq!(leaf.is_some(), oracle, "seed {seed} group {g}");
                let Some(leaf) = leaf else { continue };
                let forced = paths[leaf].clone().unwrap();
                let b = blocking_strategy(&f.arena, g, b_mask, &forced, &a_tree, ch, "blk");
                assert_eq!(f.wins(&[a, &b], &joint_goal, g), Some(false));
                let sat = is_winning(&f.ws, &[g], &f.view, &[a, &b], &joint_goal).unwrap();
                assert!(!sat.is_winning());
            }
        }
    }
    assert!(blocked > 0, "no strategy was ever blocked");
}
