use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use super::{History, Obs, StrategyError, View};
use crate::formula::Formula;
use crate::sat::{self, Lit, Solver, SolverConfig, Status};
use crate::world::{Agent, PossibleWorldSet, Unrolling};

/// Joint moves of A and B from a node and the observations they can lead to.
#[derive(Clone, Debug)]
pub struct Move {
    pub a: usize,
    pub b: usize,
    pub children: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Node {
    /// Decision step; the node sits at position `current + depth`.
    pub depth: usize,
    pub parent: Option<usize>,
    /// The (A, B) move taken from the parent.
    pub via: Option<(usize, usize)>,
    pub obs: Obs,
    /// Interned observation prefix ending here.
    pub hist: usize,
    /// Groups with a run through this node.
    pub groups: u64,
    /// Indexed by `a * |actions of B| + b`; empty at leaves.
    pub moves: Vec<Move>,
    /// Leaves only: per group, the goals that hold on every run through here.
    pub good: Vec<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ArenaStats {
    pub nodes: usize,
    pub leaves: usize,
    pub sat_calls: usize,
}

/// The game tree of A and B moves against the environment over all groups,
/// keyed on observations, with per-goal verdicts at the leaves.
#[derive(Clone, Debug)]
pub struct Arena {
    pub view: View,
    pub horizon: usize,
    pub n_actions: [usize; 2],
    pub n_groups: usize,
    pub goals: Vec<Formula>,
    pub nodes: Vec<Node>,
    pub roots: Vec<usize>,
    pub stats: ArenaStats,
    hist_parent: Vec<Option<usize>>,
    hist_obs: Vec<Obs>,
    hist_index: HashMap<(Option<usize>, Obs), usize>,
}

struct GroupCtx {
    solver: Solver,
    base: Vec<Lit>,
    goal_lits: Vec<i32>,
}

/// Mask selecting the first `n` groups.
pub fn all_groups(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl Arena {
    pub fn build(ws: &PossibleWorldSet, view: &View, goals: &[Formula]) -> Result<Arena, StrategyError> {
        if goals.len() > 64 {
            return Err(StrategyError::TooManyGoals(goals.len()));
        }
        assert!(ws.groups.len() <= 64, "group bound keeps this small");
        let u = &ws.unrolling;
        let m = &u.model;
        for ag in [Agent::A, Agent::B] {
            if m.actions[ag.index()].is_empty() {
                return Err(StrategyError::NoActions(ag));
            }
        }
        let c = u.current();
        let mut ctxs = ws
            .groups
            .iter()
            .map(|g| {
                let mut cnf = g.definitions.clone();
                let mut enc = g.encoder.clone();
                let goal_lits = goals
                    .iter()
                    .map(|f| u.encode_formula(&mut enc, &mut cnf, f, c))
                    .collect::<Result<Vec<_>, _>>()?;
                let solver = cnf.to_solver(SolverConfig::default()).expect("well formed");
                let base = g.assumptions().into_iter().map(Lit::from_dimacs).collect();
                Ok(GroupCtx { solver, base, goal_lits })
            })
            .collect::<Result<Vec<_>, StrategyError>>()?;

        let mut arena = Arena {
            view: view.clone(),
            horizon: m.horizon,
            n_actions: [m.actions[0].len(), m.actions[1].len()],
            n_groups: ws.groups.len(),
            goals: goals.to_vec(),
            nodes: Vec::new(),
            roots: Vec::new(),
            stats: ArenaStats::default(),
            hist_parent: Vec::new(),
            hist_obs: Vec::new(),
            hist_index: HashMap::new(),
        };

        let proj0 = view.projection(u, c);
        let found: Vec<Vec<Obs>> = ctxs
            .par_iter_mut()
            .map(|cx| {
                sat::enumerate_projected(&mut cx.solver, &cx.base, &proj0, usize::MAX)
                    .iter()
                    .map(|vals| view.decode(m, vals))
                    .collect()
            })
            .collect();
        let mut roots: BTreeMap<Obs, u64> = BTreeMap::new();
        for (g, obs) in found.into_iter().enumerate() {
            for o in obs {
                *roots.entry(o).or_default() |= 1 << g;
            }
        }
        for (obs, mask) in roots {
            let id = arena.push_node(None, None, obs, mask, 0);
            arena.roots.push(id);
        }

        let mut frontier = arena.roots.clone();
        let mut sat_calls = 0usize;
        for k in 0..m.horizon {
            let proj = view.projection(u, c + k + 1);
            let paths: Vec<Vec<i32>> = frontier.iter().map(|&n| arena.path_lits(u, n)).collect();
            let moves = arena.joint_moves();
            let per_group: Vec<(usize, Vec<Vec<Vec<Obs>>>)> = ctxs
                .par_iter_mut()
                .enumerate()
                .map(|(g, cx)| {
                    let mut calls = 0;
                    let res = frontier
                        .iter()
                        .zip(&paths)
                        .map(|(&n, path)| {
                            if arena.nodes[n].groups & (1 << g) == 0 {
                                return vec![];
                            }
                            moves
                                .iter()
                                .map(|&(a, b)| {
                                    let mut assumps = cx.base.clone();
                                    assumps.extend(path.iter().map(|&l| Lit::from_dimacs(l)));
                                    assumps.push(Lit::from_dimacs(u.map.action_lit(c + k, Agent::A, a)));
                                    assumps.push(Lit::from_dimacs(u.map.action_lit(c + k, Agent::B, b)));
                                    let out: Vec<Obs> =
                                        sat::enumerate_projected(&mut cx.solver, &assumps, &proj, usize::MAX)
                                            .iter()
                                            .map(|vals| view.decode(m, vals))
                                            .collect();
                                    calls += out.len() + 1;
                                    out
                                })
                                .collect()
                        })
                        .collect();
                    (calls, res)
                })
                .collect();
            let mut next = Vec::new();
            for (i, &n) in frontier.iter().enumerate() {
                let mut node_moves = Vec::with_capacity(moves.len());
                for (mi, &(a, b)) in moves.iter().enumerate() {
                    let mut merged: BTreeMap<Obs, u64> = BTreeMap::new();
                    for (g, (_, res)) in per_group.iter().enumerate() {
                        if let Some(per_move) = res.get(i).filter(|r| !r.is_empty()) {
                            for o in &per_move[mi] {
                                *merged.entry(o.clone()).or_default() |= 1 << g;
                            }
                        }
                    }
                    let children: Vec<usize> = merged
                        .into_iter()
                        .map(|(obs, mask)| arena.push_node(Some(n), Some((a, b)), obs, mask, k + 1))
                        .collect();
                    next.extend(&children);
                    node_moves.push(Move { a, b, children });
                }
                arena.nodes[n].moves = node_moves;
            }
            sat_calls += per_group.iter().map(|(calls, _)| calls).sum::<usize>();
            frontier = next;
        }

        // Leaf verdicts, one query per (leaf, group, goal), in chunks that
        // each work on a private solver copy.
        let leaves = frontier;
        let jobs: Vec<(usize, Vec<usize>)> = (0..ctxs.len())
            .flat_map(|g| {
                let mine: Vec<usize> =
                    leaves.iter().copied().filter(|&n| arena.nodes[n].groups & (1 << g) != 0).collect();
                let chunk = (mine.len() / rayon::current_num_threads().max(1)).max(16);
                mine.chunks(chunk).map(|ch| (g, ch.to_vec())).collect::<Vec<_>>()
            })
            .collect();
        let verdicts: Vec<(usize, Vec<(usize, u64)>)> = jobs
            .par_iter()
            .map(|(g, chunk)| {
                let cx = &ctxs[*g];
                let mut solver = cx.solver.clone();
                let out = chunk
                    .iter()
                    .map(|&n| {
                        let path = arena.path_lits(u, n);
                        let mut assumps = cx.base.clone();
                        assumps.extend(path.iter().map(|&l| Lit::from_dimacs(l)));
                        let mut mask = 0u64;
                        for (i, &gl) in cx.goal_lits.iter().enumerate() {
                            assumps.push(Lit::from_dimacs(-gl));
                            if solver.solve(&assumps) == Status::Unsat {
                                mask |= 1 << i;
                            }
                            assumps.pop();
                        }
                        (n, mask)
                    })
                    .collect();
                (*g, out)
            })
            .collect();
        let n_groups = arena.n_groups;
        for &n in &leaves {
            arena.nodes[n].good = vec![0; n_groups];
        }
        for (g, out) in verdicts {
            for (n, mask) in out {
                arena.nodes[n].good[g] = mask;
            }
        }
        sat_calls += leaves.iter().map(|&n| arena.nodes[n].groups.count_ones() as usize).sum::<usize>() * goals.len();
        arena.stats = ArenaStats { nodes: arena.nodes.len(), leaves: leaves.len(), sat_calls };
        log::debug!(
            "arena: {} nodes, {} leaves, {} groups, {} sat calls",
            arena.stats.nodes,
            arena.stats.leaves,
            arena.n_groups,
            arena.stats.sat_calls
        );
        Ok(arena)
    }

    fn push_node(&mut self, parent: Option<usize>, via: Option<(usize, usize)>, obs: Obs, groups: u64, depth: usize) -> usize {
        let parent_hist = parent.map(|p| self.nodes[p].hist);
        let key = (parent_hist, obs.clone());
        let hist = match self.hist_index.get(&key) {
            Some(&h) => h,
            None => {
                let h = self.hist_obs.len();
                self.hist_parent.push(parent_hist);
                self.hist_obs.push(obs.clone());
                self.hist_index.insert(key, h);
                h
            }
        };
        self.nodes.push(Node { depth, parent, via, obs, hist, groups, moves: Vec::new(), good: Vec::new() });
        self.nodes.len() - 1
    }

    /// All (A, B) action pairs in move order.
    pub fn joint_moves(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n_actions[0] {
            for b in 0..self.n_actions[1] {
                out.push((a, b));
            }
        }
        out
    }

    pub fn move_index(&self, a: usize, b: usize) -> usize {
        a * self.n_actions[1] + b
    }

    /// Observation and A/B action literals fixing the path to `n`.
    pub fn path_lits(&self, u: &Unrolling, n: usize) -> Vec<i32> {
        let c = u.current();
        let mut out = Vec::new();
        let mut cur = Some(n);
        while let Some(id) = cur {
            let node = &self.nodes[id];
            out.extend(self.view.lits(u, c + node.depth, &node.obs));
            if let Some(p) = node.parent {
                let (a, b) = node.via.unwrap();
                let t = c + self.nodes[p].depth;
                out.push(u.map.action_lit(t, Agent::A, a));
                out.push(u.map.action_lit(t, Agent::B, b));
            }
            cur = node.parent;
        }
        out
    }

    pub fn is_leaf(&self, n: usize) -> bool {
        self.nodes[n].depth == self.horizon
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&n| self.is_leaf(n))
    }

    pub fn history_count(&self) -> usize {
        self.hist_obs.len()
    }

    /// The observation prefix an interned history id stands for.
    pub fn history(&self, hist: usize) -> History {
        let mut out = Vec::new();
        let mut cur = Some(hist);
        while let Some(h) = cur {
            out.push(self.hist_obs[h].clone());
            cur = self.hist_parent[h];
        }
        out.reverse();
        out
    }

    pub fn hist_id(&self, h: &[Obs]) -> Option<usize> {
        let mut cur: Option<usize> = None;
        for o in h {
            cur = Some(*self.hist_index.get(&(cur, o.clone()))?);
        }
        cur
    }

    /// (A, B) actions along the path to `n`, by step.
    pub fn path_moves(&self, n: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut cur = n;
        while let Some(p) = self.nodes[cur].parent {
            out.push(self.nodes[cur].via.unwrap());
            cur = p;
        }
        out.reverse();
        out
    }

    /// Nodes on the path from a root to `n`, root first.
    pub fn path(&self, n: usize) -> Vec<usize> {
        let mut out = vec![n];
        let mut cur = n;
        while let Some(p) = self.nodes[cur].parent {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }
}
