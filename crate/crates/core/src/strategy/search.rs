use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::arena::{Arena, Move};
use super::{GoalSet, JointStrategy, Strategy, StrategyError};
use crate::world::Agent;

/// Bit `i` selects goal `i` of the arena's goal list.
pub type GoalMask = u64;

/// An action per class of a [`ClassTree`]; `NONE` marks unreached classes.
pub type Choice = Vec<u8>;

pub(super) const NONE: u8 = u8::MAX;

/// Observation histories of one agent: arena nodes grouped by observation
/// prefix and the agent's own earlier actions. A strategy picks one action
/// per class it reaches.
#[derive(Clone, Debug)]
pub struct ClassTree {
    pub agent: Agent,
    pub classes: Vec<Class>,
    pub roots: Vec<usize>,
    /// Arena node to class.
    pub class_of: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Class {
    pub depth: usize,
    pub hist: usize,
    pub nodes: Vec<usize>,
    /// Per own action, the classes it can lead to.
    pub children: Vec<Vec<usize>>,
}

impl Class {
    pub fn legal(&self, x: usize) -> bool {
        !self.children[x].is_empty()
    }
}

fn own(agent: Agent, a: usize, b: usize) -> usize {
    if agent == Agent::A {
        a
    } else {
        b
    }
}

impl ClassTree {
    pub fn new(arena: &Arena, agent: Agent) -> Self {
        assert!(agent != Agent::Env, "the environment has no strategies here");
        let n_own = arena.n_actions[agent.index()];
        let mut tree = ClassTree { agent, classes: Vec::new(), roots: Vec::new(), class_of: vec![usize::MAX; arena.nodes.len()] };
        for &r in &arena.roots {
            let id = tree.push(arena, vec![r], arena.nodes[r].depth);
            tree.roots.push(id);
        }
        let mut i = 0;
        while i < tree.classes.len() {
            if tree.classes[i].depth < arena.horizon {
                let mut per_action = Vec::with_capacity(n_own);
                for x in 0..n_own {
                    let mut by_obs: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
                    for &n in &tree.classes[i].nodes {
                        for mv in &arena.nodes[n].moves {
                            if own(agent, mv.a, mv.b) == x {
                                for &ch in &mv.children {
                                    by_obs.entry(arena.nodes[ch].obs.clone()).or_default().push(ch);
                                }
                            }
                        }
                    }
                    let depth = tree.classes[i].depth + 1;
                    let kids: Vec<usize> = by_obs.into_values().map(|nodes| tree.push(arena, nodes, depth)).collect();
                    per_action.push(kids);
                }
                tree.classes[i].children = per_action;
            }
            i += 1;
        }
        tree
    }

    fn push(&mut self, arena: &Arena, nodes: Vec<usize>, depth: usize) -> usize {
        let id = self.classes.len();
        for &n in &nodes {
            self.class_of[n] = id;
        }
        let hist = arena.nodes[nodes[0]].hist;
        self.classes.push(Class { depth, hist, nodes, children: Vec::new() });
        id
    }

    pub fn is_leaf(&self, c: usize) -> bool {
        self.classes[c].children.is_empty()
    }

    /// Number of distinct total strategies, saturating.
    pub fn count(&self) -> u128 {
        fn go(t: &ClassTree, c: usize) -> u128 {
            if t.is_leaf(c) {
                return 1;
            }
            let mut total: u128 = 0;
            for kids in t.classes[c].children.iter().filter(|k| !k.is_empty()) {
                let mut prod: u128 = 1;
                for &k in kids {
                    prod = prod.saturating_mul(go(t, k));
                }
                total = total.saturating_add(prod);
            }
            total.max(1)
        }
        self.roots.iter().fold(1u128, |acc, &r| acc.saturating_mul(go(self, r)))
    }

    /// Every total deterministic strategy, each exactly once, ordered by the
    /// action picked at the earliest class first.
    pub fn enumerate(&self, bound: usize) -> Result<Vec<Choice>, StrategyError> {
        let count = self.count();
        if count > bound as u128 {
            let count = if count == u128::MAX { format!(">{}", u128::MAX) } else { count.to_string() };
            return Err(StrategyError::Capacity { count, bound });
        }
        let mut out = vec![vec![NONE; self.classes.len()]];
        let mut pending: Vec<usize> = self.roots.clone();
        pending.reverse();
        self.expand(&mut out, pending);
        Ok(out)
    }

    // Breadth over classes: each partial choice vector is extended at the
    // next unassigned reached class.
    fn expand(&self, out: &mut Vec<Choice>, roots: Vec<usize>) {
        let mut done: Vec<Choice> = Vec::new();
        let mut work: Vec<(Choice, Vec<usize>)> = out.drain(..).map(|c| (c, roots.clone())).collect();
        work.reverse();
        while let Some((choice, mut stack)) = work.pop() {
            let Some(c) = stack.pop() else {
                done.push(choice);
                continue;
            };
            if self.is_leaf(c) {
                work.push((choice, stack));
                continue;
            }
            let mut branches = Vec::new();
            for (x, kids) in self.classes[c].children.iter().enumerate() {
                if kids.is_empty() {
                    continue;
                }
                let mut ch = choice.clone();
                ch[c] = x as u8;
                let mut st = stack.clone();
                st.extend(kids.iter().rev());
                branches.push((ch, st));
            }
            if branches.is_empty() {
                work.push((choice, stack));
            }
            while let Some(b) = branches.pop() {
                work.push(b);
            }
        }
        *out = done;
    }

    /// The strategy a choice vector describes.
    pub fn to_strategy(&self, arena: &Arena, choice: &Choice, name: impl Into<String>) -> Strategy {
        let mut s = Strategy::new(self.agent, name);
        for (c, &x) in choice.iter().enumerate() {
            if x != NONE && !self.is_leaf(c) {
                s.decisions.insert(arena.history(self.classes[c].hist), x as usize);
            }
        }
        s
    }

    /// Choice vector of a strategy, over the classes it reaches.
    pub fn from_strategy(&self, arena: &Arena, s: &Strategy) -> Result<Choice, StrategyError> {
        let mut choice = vec![NONE; self.classes.len()];
        let mut stack: Vec<usize> = self.roots.clone();
        while let Some(c) = stack.pop() {
            if self.is_leaf(c) {
                continue;
            }
            let h = arena.history(self.classes[c].hist);
            let Some(x) = s.action(&h) else {
                return Err(StrategyError::Totality(format!("{h:?}")));
            };
            choice[c] = x as u8;
            stack.extend(&self.classes[c].children[x]);
        }
        Ok(choice)
    }
}

/// How each agent's actions are constrained in a game-tree solve.
#[derive(Clone, Copy)]
pub enum Rule<'a> {
    Free,
    /// Follows a strategy given as a choice vector over a class tree.
    Fixed(&'a ClassTree, &'a Choice),
    /// Fixed on some histories, free elsewhere.
    Forced(&'a HashMap<usize, usize>),
}

impl Rule<'_> {
    fn allows(&self, arena: &Arena, n: usize, x: usize) -> bool {
        match self {
            Rule::Free => true,
            Rule::Fixed(tree, choice) => choice[tree.class_of[n]] as usize == x,
            Rule::Forced(map) => map.get(&arena.nodes[n].hist).is_none_or(|&y| y == x),
        }
    }
}

/// B actions fixed along a path, as (history id, action) pairs.
pub type Forced = Vec<(usize, usize)>;

/// A cooperative solve: do A and B (each under its rule) have a joint
/// strategy making every run in `groups` satisfy all goals in `goals`?
pub struct Solve<'a> {
    arena: &'a Arena,
    goals: GoalMask,
    groups: u64,
    a: Rule<'a>,
    b: Rule<'a>,
    memo: Vec<u8>,
}

const UNKNOWN: u8 = 2;

impl<'a> Solve<'a> {
    pub fn new(arena: &'a Arena, goals: GoalMask, groups: u64, a: Rule<'a>, b: Rule<'a>) -> Self {
        Solve { arena, goals, groups, a, b, memo: vec![UNKNOWN; arena.nodes.len()] }
    }

    pub fn wins(&mut self) -> bool {
        let roots = self.arena.roots.clone();
        roots.into_iter().all(|r| self.node(r))
    }

    fn candidates(&self, n: usize) -> Vec<usize> {
        let ar = self.arena;
        ar.nodes[n]
            .moves
            .iter()
            .enumerate()
            .filter(|(_, mv)| self.a.allows(ar, n, mv.a) && self.b.allows(ar, n, mv.b))
            .filter(|(_, mv)| mv.children.iter().any(|&c| ar.nodes[c].groups & self.groups != 0))
            .map(|(i, _)| i)
            .collect()
    }

    fn node(&mut self, n: usize) -> bool {
        let ar = self.arena;
        let node = &ar.nodes[n];
        if node.groups & self.groups == 0 {
            return true;
        }
        if self.memo[n] != UNKNOWN {
            return self.memo[n] == 1;
        }
        let res = if ar.is_leaf(n) {
            (0..ar.n_groups)
                .filter(|g| node.groups & self.groups & (1 << g) != 0)
                .all(|g| node.good[g] & self.goals == self.goals)
        } else {
            let cands = self.candidates(n);
            // No possible move under the rules: no run follows them here.
            cands.is_empty()
                || cands.into_iter().any(|i| {
                    let kids = ar.nodes[n].moves[i].children.clone();
                    kids.into_iter().all(|c| self.node(c))
                })
        };
        self.memo[n] = res as u8;
        res
    }

    /// After a winning solve, the joint strategy it found.
    pub fn extract(&mut self, name: &str) -> JointStrategy {
        let ar = self.arena;
        let mut a = Strategy::new(Agent::A, format!("{name}.A"));
        let mut b = Strategy::new(Agent::B, format!("{name}.B"));
        let mut stack: Vec<usize> = ar.roots.clone();
        while let Some(n) = stack.pop() {
            if ar.nodes[n].groups & self.groups == 0 || ar.is_leaf(n) {
                continue;
            }
            let cands = self.candidates(n);
            let pick = cands.into_iter().find(|&i| {
                let kids = ar.nodes[n].moves[i].children.clone();
                kids.into_iter().all(|c| self.node(c))
            });
            if let Some(i) = pick {
                let mv = &ar.nodes[n].moves[i];
                let h = ar.history(ar.nodes[n].hist);
                a.decisions.insert(h.clone(), mv.a);
                b.decisions.insert(h, mv.b);
                stack.extend(&mv.children);
            }
        }
        JointStrategy::new(a, b)
    }
}

/// Whether a fixed A strategy wins `goals` in `groups` with some B strategy.
pub fn coop_wins(arena: &Arena, tree: &ClassTree, choice: &Choice, goals: GoalMask, groups: u64) -> bool {
    Solve::new(arena, goals, groups, Rule::Fixed(tree, choice), Rule::Free).wins()
}

/// Whether a fixed A strategy wins `goals` in `groups` whatever B does.
pub fn wins_alone(arena: &Arena, tree: &ClassTree, choice: &Choice, goals: GoalMask, groups: u64) -> bool {
    let mut stack: Vec<usize> = arena.roots.clone();
    while let Some(n) = stack.pop() {
        let node = &arena.nodes[n];
        if node.groups & groups == 0 {
            continue;
        }
        if arena.is_leaf(n) {
            let bad = (0..arena.n_groups)
                .filter(|g| node.groups & groups & (1 << g) != 0)
                .any(|g| node.good[g] & goals != goals);
            if bad {
                return false;
            }
            continue;
        }
        let a = choice[tree.class_of[n]] as usize;
        for mv in node.moves.iter().filter(|mv| mv.a == a) {
            stack.extend(&mv.children);
        }
    }
    true
}

/// A goal subset reached by a joint strategy, with its weight.
#[derive(Clone, Debug)]
pub struct Achieved {
    pub subset: BTreeSet<String>,
    pub mask: GoalMask,
    pub weight: u64,
    pub witness: JointStrategy,
}

/// Weight-maximal goal subsets of `gs` (each containing `mandatory`) that a
/// joint strategy of A and B wins in all of `groups`. Goal names map to
/// arena goal indices through `universe`. If even `mandatory` alone cannot be
/// won, the result is empty.
pub fn max_achievable(
    arena: &Arena,
    gs: &GoalSet,
    universe: &[String],
    mandatory: &BTreeSet<String>,
    groups: u64,
) -> Result<Vec<Achieved>, StrategyError> {
    let index = |n: &str| {
        universe.iter().position(|u| u == n).ok_or_else(|| StrategyError::UnknownGoal(n.to_string()))
    };
    let names: Vec<&str> = gs.names().into_iter().filter(|n| !mandatory.contains(*n)).collect();
    if names.len() > 20 {
        return Err(StrategyError::TooManyGoals(names.len()));
    }
    let mut base_mask = 0u64;
    for m in mandatory {
        base_mask |= 1 << index(m)?;
    }
    let bits: Vec<u64> = names.iter().map(|n| index(n).map(|i| 1u64 << i)).collect::<Result<_, _>>()?;
    let mut best: Option<u64> = None;
    let mut found: Vec<(BTreeSet<String>, u64, u64)> = Vec::new();
    for sel in 0u32..(1 << names.len()) {
        let mut mask = base_mask;
        let mut subset: BTreeSet<String> = mandatory.clone();
        for (i, n) in names.iter().enumerate() {
            if sel & (1 << i) != 0 {
                mask |= bits[i];
                subset.insert(n.to_string());
            }
        }
        let w = gs.weight(&subset);
        if best.is_some_and(|b| w < b) {
            continue;
        }
        if !Solve::new(arena, mask, groups, Rule::Free, Rule::Free).wins() {
            continue;
        }
        if best.is_none_or(|b| w > b) {
            best = Some(w);
            found.clear();
        }
        found.push((subset, mask, w));
    }
    found.sort_by(|x, y| x.0.cmp(&y.0));
    Ok(found
        .into_iter()
        .map(|(subset, mask, weight)| {
            let mut s = Solve::new(arena, mask, groups, Rule::Free, Rule::Free);
            s.wins();
            let witness = s.extract("coop");
            Achieved { subset, mask, weight, witness }
        })
        .collect())
}

/// Paths of the arena along which B may be following one of its believed
/// strategies: for each leaf of `group`, the B choices on its path if some
/// joint strategy making all the path's choices, A's included, wins
/// `b_goals` in the group. B thus never takes a move that ruins its own
/// goals on the history actually played. Once a move of A leaves B no way
/// to reach them, B may behave arbitrarily below it.
pub fn believed_paths(arena: &Arena, group: usize, b_goals: GoalMask) -> Vec<Option<Forced>> {
    let gmask = 1u64 << group;
    let mut out: Vec<Option<Forced>> = vec![None; arena.nodes.len()];
    let mut memo: HashMap<(Forced, Forced), bool> = HashMap::new();
    let mut feasible = |fa: &Forced, fb: &Forced| -> bool {
        let mut key = (fa.clone(), fb.clone());
        key.0.sort_unstable();
        key.1.sort_unstable();
        if let Some(&v) = memo.get(&key) {
            return v;
        }
        let amap: HashMap<usize, usize> = fa.iter().copied().collect();
        let bmap: HashMap<usize, usize> = fb.iter().copied().collect();
        let v = Solve::new(arena, b_goals, gmask, Rule::Forced(&amap), Rule::Forced(&bmap)).wins();
        memo.insert(key, v);
        v
    };
    if !feasible(&Vec::new(), &Vec::new()) {
        return out;
    }
    let mut stack: Vec<(usize, Forced, Forced, bool)> = arena
        .roots
        .iter()
        .rev()
        .filter(|&&r| arena.nodes[r].groups & gmask != 0)
        .map(|&r| (r, Vec::new(), Vec::new(), false))
        .collect();
    while let Some((n, fa, fb, free)) = stack.pop() {
        if arena.is_leaf(n) {
            out[n] = Some(fb);
            continue;
        }
        let hist = arena.nodes[n].hist;
        let live: Vec<(&Move, Vec<usize>)> = arena.nodes[n]
            .moves
            .iter()
            .map(|mv| (mv, mv.children.iter().copied().filter(|&c| arena.nodes[c].groups & gmask != 0).collect::<Vec<_>>()))
            .filter(|(_, kids)| !kids.is_empty())
            .collect();
        let mut ok: Vec<bool> = Vec::with_capacity(live.len());
        for (mv, _) in &live {
            let keep = free || {
                let mut fa2 = fa.clone();
                fa2.push((hist, mv.a));
                let mut fb2 = fb.clone();
                fb2.push((hist, mv.b));
                feasible(&fa2, &fb2)
            };
            ok.push(keep);
        }
        // A's moves after which B cannot reach its goals leave B arbitrary.
        let hopeless: BTreeSet<usize> = live
            .iter()
            .map(|(mv, _)| mv.a)
            .filter(|&a| !live.iter().zip(&ok).any(|((mv, _), &k)| mv.a == a && k))
            .collect();
        for ((mv, kids), &keep) in live.iter().zip(&ok).rev() {
            let arbitrary = free || hopeless.contains(&mv.a);
            if !keep && !arbitrary {
                continue;
            }
            let mut fa2 = fa.clone();
            fa2.push((hist, mv.a));
            let mut fb2 = fb.clone();
            fb2.push((hist, mv.b));
            for &c in kids.iter().rev() {
                stack.push((c, fa2.clone(), fb2.clone(), arbitrary));
            }
        }
    }
    out
}

/// A B strategy that follows `forced` and otherwise plays a cooperative
/// winner for `b_goals` in `group`, completed against the A strategy so
/// that it is total on every history the pair reaches.
pub fn blocking_strategy(
    arena: &Arena,
    group: usize,
    b_goals: GoalMask,
    forced: &Forced,
    a_tree: &ClassTree,
    a_choice: &Choice,
    name: &str,
) -> Strategy {
    let gmask = 1u64 << group;
    let map: HashMap<usize, usize> = forced.iter().copied().collect();
    let mut solve = Solve::new(arena, b_goals, gmask, Rule::Free, Rule::Forced(&map));
    solve.wins();
    let coop = solve.extract(name);
    let mut by_hist: HashMap<usize, usize> = map.clone();
    for (h, &b) in &coop.b_part.decisions {
        if let Some(id) = arena.hist_id(h) {
            by_hist.entry(id).or_insert(b);
        }
    }
    let mut s = Strategy::new(Agent::B, name);
    let mut stack: Vec<usize> = arena.roots.iter().copied().filter(|&r| arena.nodes[r].groups & gmask != 0).collect();
    while let Some(n) = stack.pop() {
        if arena.is_leaf(n) {
            continue;
        }
        let a = a_choice[a_tree.class_of[n]] as usize;
        let hist = arena.nodes[n].hist;
        let possible = |b: usize| {
            let mv = &arena.nodes[n].moves[arena.move_index(a, b)];
            mv.children.iter().any(|&c| arena.nodes[c].groups & gmask != 0)
        };
        let b = match by_hist.get(&hist) {
            Some(&b) => b,
            None => (0..arena.n_actions[1]).find(|&b| possible(b)).unwrap_or(0),
        };
        by_hist.insert(hist, b);
        s.decisions.insert(arena.history(hist), b);
        let mv = &arena.nodes[n].moves[arena.move_index(a, b)];
        stack.extend(mv.children.iter().copied().filter(|&c| arena.nodes[c].groups & gmask != 0));
    }
    for (h, b) in coop.b_part.decisions {
        s.decisions.entry(h).or_insert(b);
    }
    s
}

/// First leaf, in arena order, that the A strategy can reach in `group`, that
/// B may reach while following a believed strategy, and where some run
/// misses a goal of `joint`.
pub fn first_blocked_leaf(
    arena: &Arena,
    a_tree: &ClassTree,
    a_choice: &Choice,
    group: usize,
    joint: GoalMask,
    believed: &[Option<Forced>],
) -> Option<usize> {
    let gmask = 1u64 << group;
    let mut stack: Vec<usize> =
        arena.roots.iter().rev().copied().filter(|&r| arena.nodes[r].groups & gmask != 0).collect();
    while let Some(n) = stack.pop() {
        if arena.is_leaf(n) {
            if believed[n].is_some() && arena.nodes[n].good[group] & joint != joint {
                return Some(n);
            }
            continue;
        }
        let a = a_choice[a_tree.class_of[n]] as usize;
        for b in (0..arena.n_actions[1]).rev() {
            let mv = &arena.nodes[n].moves[arena.move_index(a, b)];
            stack.extend(mv.children.iter().rev().copied().filter(|&c| arena.nodes[c].groups & gmask != 0));
        }
    }
    None
}

/// One failure of an A strategy against a believed B strategy.
#[derive(Clone, Debug)]
pub struct Blocker {
    pub group: usize,
    pub b_goals: GoalMask,
    pub leaf: usize,
    pub forced: Forced,
}
