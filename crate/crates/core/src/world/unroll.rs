use std::collections::HashMap;

use super::{Agent, JointAction, Rhs, State, WorldError, WorldModel};
use crate::formula::{AtomSource, Formula, FormulaError, Run, TraceEncoder};
use crate::sat::{self, ClauseSink, CnfFormula, Lit, SolverConfig, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtomRef {
    Value(usize, usize),
    Action(Agent, usize),
}

/// Variable layout of an unrolled model: one literal per (position,
/// variable, value) and per (step, agent, action).
#[derive(Clone, Debug)]
pub struct AtomMap {
    len: usize,
    state: Vec<Vec<Vec<i32>>>,
    action: Vec<[Vec<i32>; 3]>,
    names: HashMap<String, AtomRef>,
    truth: i32,
}

impl AtomMap {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value_lit(&self, t: usize, var: usize, value: usize) -> i32 {
        self.state[t][var][value]
    }

    pub fn value_lits(&self, t: usize, var: usize) -> &[i32] {
        &self.state[t][var]
    }

    /// Action literal; constantly false at the final position.
    pub fn action_lit(&self, t: usize, agent: Agent, action: usize) -> i32 {
        match self.action.get(t) {
            Some(slots) => slots[agent.index()][action],
            None => -self.truth,
        }
    }

    pub fn action_lits(&self, t: usize, agent: Agent) -> &[i32] {
        &self.action[t][agent.index()]
    }

    pub fn truth(&self) -> i32 {
        self.truth
    }

    pub fn resolve(&self, name: &str) -> Option<AtomRef> {
        self.names.get(name).copied()
    }

    fn lit_for(&self, r: AtomRef, t: usize) -> i32 {
        let t = t.min(self.len - 1);
        match r {
            AtomRef::Value(v, x) => self.value_lit(t, v, x),
            AtomRef::Action(ag, a) => self.action_lit(t, ag, a),
        }
    }
}

impl<S: ClauseSink> AtomSource<S> for &AtomMap {
    fn atom_lit(&mut self, _sink: &mut S, atom: &str, t: usize) -> Result<i32, FormulaError> {
        let r = self.resolve(atom).ok_or_else(|| FormulaError::UnknownAtom(atom.to_string()))?;
        Ok(self.lit_for(r, t))
    }
}

/// A run read back from a model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedRun {
    pub states: Vec<State>,
    pub actions: Vec<JointAction>,
}

/// CNF whose models are exactly the runs of a model of length `run_len()`
/// that satisfy its initial constraint and history.
#[derive(Clone, Debug)]
pub struct Unrolling {
    pub model: WorldModel,
    pub map: AtomMap,
    pub cnf: CnfFormula,
}

fn and2<S: ClauseSink>(sink: &mut S, truth: i32, a: i32, b: i32) -> i32 {
    if a == truth {
        return b;
    }
    if b == truth {
        return a;
    }
    let o = sink.fresh_var();
    sink.push_clause(&[-o, a]);
    sink.push_clause(&[-o, b]);
    sink.push_clause(&[o, -a, -b]);
    o
}

fn exactly_one<S: ClauseSink>(sink: &mut S, lits: &[i32]) {
    sink.push_clause(lits);
    for i in 0..lits.len() {
        for j in i + 1..lits.len() {
            sink.push_clause(&[-lits[i], -lits[j]]);
        }
    }
}

const INITIAL_STATE_LIMIT: usize = 4096;

impl Unrolling {
    pub fn new(model: &WorldModel) -> Result<Self, WorldError> {
        model.check()?;
        let m = model;
        let len = m.run_len();
        let mut cnf = CnfFormula::new();
        let truth = cnf.new_var();
        cnf.add_clause([truth]);

        let mut names = HashMap::new();
        for (v, var) in m.vars.iter().enumerate() {
            for x in 0..var.size() {
                names.insert(var.atom(x), AtomRef::Value(v, x));
            }
        }
        for ag in Agent::ALL {
            for (i, a) in m.actions[ag.index()].iter().enumerate() {
                names.insert(a.clone(), AtomRef::Action(ag, i));
            }
        }
        let state: Vec<Vec<Vec<i32>>> = (0..len)
            .map(|_| m.vars.iter().map(|v| (0..v.size()).map(|_| cnf.new_var()).collect()).collect())
            .collect();
        let action: Vec<[Vec<i32>; 3]> = (0..len - 1)
            .map(|_| {
                Agent::ALL.map(|ag| (0..m.actions[ag.index()].len()).map(|_| cnf.new_var()).collect())
            })
            .collect();
        for layer in &state {
            for lits in layer {
                exactly_one(&mut cnf, lits);
            }
        }
        for slots in &action {
            for lits in slots {
                exactly_one(&mut cnf, lits);
            }
        }
        let map = AtomMap { len, state, action, names, truth };

        let mut enc = TraceEncoder::new(len);
        let mut src = &map;
        let l = enc.encode(&mut cnf, &mut src, &m.init, 0)?;
        cnf.add_clause([l]);
        for (k, h) in m.history.iter().enumerate() {
            let l = enc.encode(&mut cnf, &mut src, h, k + 1)?;
            cnf.add_clause([l]);
        }

        for t in 0..len - 1 {
            // fires[v] collects the firing literals of rules assigning v.
            let mut fires: Vec<Vec<i32>> = vec![Vec::new(); m.vars.len()];
            for r in &m.rules {
                let g = enc.encode(&mut cnf, &mut src, &r.guard, t)?;
                let act = match r.action {
                    Some(a) => map.action_lit(t, r.agent, a),
                    None => truth,
                };
                let fire = and2(&mut cnf, truth, act, g);
                for asg in &r.assigns {
                    fires[asg.var].push(fire);
                    let target = &m.vars[asg.var];
                    let inputs = asg.rhs.vars();
                    for combo in combinations(m, &inputs) {
                        let mut s: State = vec![0; m.vars.len()];
                        for (&v, &x) in inputs.iter().zip(&combo) {
                            s[v] = x;
                        }
                        let x = match &asg.rhs {
                            Rhs::Value(x) => *x,
                            rhs => m.rhs_value(asg.var, rhs, &s),
                        };
                        debug_assert!(x < target.size());
                        let mut clause = vec![-fire];
                        clause.extend(inputs.iter().zip(&combo).map(|(&v, &y)| -map.value_lit(t, v, y)));
                        clause.push(map.value_lit(t + 1, asg.var, x));
                        cnf.add_clause(clause);
                    }
                }
            }
            for (v, var) in m.vars.iter().enumerate() {
                for x in 0..var.size() {
                    let mut clause = fires[v].clone();
                    clause.push(-map.value_lit(t, v, x));
                    clause.push(map.value_lit(t + 1, v, x));
                    cnf.add_clause(clause);
                }
            }
        }

        let u = Unrolling { model: m.clone(), map, cnf };
        u.check_integrity()?;
        Ok(u)
    }

    // Explores every reachable state explicitly so that conflicting rules
    // surface as an error instead of silently pruning joint actions.
    fn check_integrity(&self) -> Result<(), WorldError> {
        let mut solver = self.cnf.to_solver(SolverConfig::default()).expect("unrolling is well formed");
        let proj: Vec<Var> = (0..self.model.vars.len())
            .flat_map(|v| self.map.value_lits(0, v).to_vec())
            .map(|l| Lit::from_dimacs(l).var())
            .collect();
        let found = sat::enumerate_projected(&mut solver, &[], &proj, INITIAL_STATE_LIMIT + 1);
        if found.len() > INITIAL_STATE_LIMIT {
            log::warn!("more than {INITIAL_STATE_LIMIT} initial states; skipping the rule-consistency sweep");
            return Ok(());
        }
        let mut init = Vec::new();
        for vals in found {
            let mut it = vals.into_iter();
            let s: State = self
                .model
                .vars
                .iter()
                .map(|var| {
                    let bits: Vec<bool> = it.by_ref().take(var.size()).collect();
                    bits.iter().position(|&b| b).unwrap_or(0)
                })
                .collect();
            init.push(s);
        }
        // Unsatisfiable init or history: nothing reachable, nothing to check.
        // Conflicts can still hide the only successors, so explore from the
        // explicit initial states rather than from models.
        if init.is_empty() {
            let explicit = self.model.initial_states(1 << 16).unwrap_or_default();
            self.model.reachable_layers(explicit)?;
            return Ok(());
        }
        self.model.reachable_layers(init)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.map.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Positions `0..=current` are the shared past; decisions happen at
    /// steps `current..len-1`.
    pub fn current(&self) -> usize {
        self.model.current()
    }

    pub fn decode(&self, value: impl Fn(i32) -> bool) -> DecodedRun {
        let m = &self.model;
        let states = (0..self.len())
            .map(|t| {
                (0..m.vars.len())
                    .map(|v| {
                        self.map.value_lits(t, v).iter().position(|&l| value(l)).unwrap_or(0)
                    })
                    .collect()
            })
            .collect();
        let actions = (0..self.len() - 1)
            .map(|t| {
                Agent::ALL.map(|ag| {
                    self.map.action_lits(t, ag).iter().position(|&l| value(l)).unwrap_or(0)
                })
            })
            .collect();
        DecodedRun { states, actions }
    }

    pub fn to_run(&self, d: &DecodedRun) -> Run {
        self.model.run_atoms(&d.states, &d.actions)
    }

    /// Literal for `f` at position `t`, defined in `sink` with `enc`.
    pub fn encode_formula<S: ClauseSink>(
        &self,
        enc: &mut TraceEncoder,
        sink: &mut S,
        f: &Formula,
        t: usize,
    ) -> Result<i32, FormulaError> {
        let mut src = &self.map;
        enc.encode(sink, &mut src, f, t)
    }
}

fn combinations(m: &WorldModel, vars: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &v in vars {
        out = out
            .into_iter()
            .flat_map(|c| {
                (0..m.vars[v].size()).map(move |x| {
                    let mut c2 = c.clone();
                    c2.push(x);
                    c2
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::testing::toy;
    use super::super::*;
    use super::*;
    use crate::formula::parse_formula;
    use crate::sat;

    fn projected_runs(u: &Unrolling) -> Vec<DecodedRun> {
        let mut proj: Vec<i32> = Vec::new();
        for t in 0..u.len() {
            for v in 0..u.model.vars.len() {
                proj.extend_from_slice(u.map.value_lits(t, v));
            }
            if t + 1 < u.len() {
                for ag in Agent::ALL {
                    proj.extend_from_slice(u.map.action_lits(t, ag));
                }
            }
        }
        let models = sat::enumerate_models(&u.cnf, &proj, usize::MAX).unwrap();
        models
            .into_iter()
            .map(|m| {
                let pos: std::collections::HashSet<i32> = m.into_iter().filter(|&l| l > 0).collect();
                u.decode(|l| pos.contains(&l))
            })
            .collect()
    }

    #[test]
    fn models_are_the_explicit_runs() {
        let m = toy();
        let u = Unrolling::new(&m).unwrap();
        let mut symbolic: Vec<_> = projected_runs(&u).into_iter().map(|d| (d.states, d.actions.to_vec())).collect();
        let mut explicit = m.explicit_runs(100_000).unwrap();
        symbolic.sort();
        explicit.sort();
        assert_eq!(symbolic, explicit);
    }

    #[test]
    fn deterministic_system_has_one_run() {
        let vars = vec![StateVar::new("v", Domain::Bool).unwrap()];
        let actions = [vec!["keep".into()], vec!["bkeep".into()], vec!["ekeep".into()]];
        let rules = vec![Rule {
            agent: Agent::A,
            action: Some(0),
            guard: Formula::Top,
            assigns: vec![Assign { var: 0, rhs: Rhs::Sum(vec![(true, Operand::Var(0))]) }],
        }];
        let m = WorldModel::new(vars, actions, rules, parse_formula("v = true").unwrap(), vec![], 2).unwrap();
        let u = Unrolling::new(&m).unwrap();
        assert_eq!(projected_runs(&u).len(), 1);
    }

    #[test]
    fn one_hot_excludes_two_values() {
        let u = Unrolling::new(&toy()).unwrap();
        let both = [u.map.value_lit(1, 0, 0), u.map.value_lit(1, 0, 1)];
        assert!(!sat::solve(&u.cnf, &both).unwrap().is_sat());
    }

    #[test]
    fn history_pins_the_past() {
        let mut m = toy();
        m.history = vec![parse_formula("a = 1").unwrap()];
        let u = Unrolling::new(&m).unwrap();
        for d in projected_runs(&u) {
            assert_eq!(d.actions[0][0], 1, "a moved, so A went");
        }
        let mut m = toy();
        m.history = vec![parse_formula("a = 3").unwrap()];
        assert!(!sat::solve(&Unrolling::new(&m).unwrap().cnf, &[]).unwrap().is_sat());
    }

    #[test]
    fn integrity_error_names_the_state() {
        let mut m = toy();
        m.rules.push(Rule {
            agent: Agent::B,
            action: Some(1),
            guard: parse_formula("a = 1").unwrap(),
            assigns: vec![Assign { var: 0, rhs: Rhs::Value(0) }],
        });
        match Unrolling::new(&m) {
            Err(WorldError::Integrity { state, .. }) => assert!(state.contains("a=1")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn action_atoms_are_false_at_the_end() {
        let u = Unrolling::new(&toy()).unwrap();
        let last = u.len() - 1;
        let l = u.map.action_lit(last, Agent::A, 0);
        assert!(!sat::solve(&u.cnf, &[l]).unwrap().is_sat());
    }
}
