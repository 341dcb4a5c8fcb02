use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;

use super::{State, Unrolling, WorldError, WorldModel};
use crate::formula::{Formula, TraceEncoder};
use crate::jgraph::{self, ConsistentGroup, EvidenceBase};
use crate::sat::{self, CnfFormula, Lit, SolverConfig, Status, Var};

/// Name reported for core members that are not evidence or shared facts.
pub const MODEL_ATOM: &str = "model";

/// One maximal consistent evidence group with its symbolic world constraint.
#[derive(Clone, Debug)]
pub struct WorldGroup {
    pub group: ConsistentGroup,
    /// The unrolling plus definitions of every body and fact literal. The
    /// literals themselves are not asserted here.
    pub definitions: CnfFormula,
    /// Encoder state matching `definitions`, for encoding further formulas.
    pub encoder: TraceEncoder,
    pub body_lits: Vec<(String, i32)>,
    pub fact_lits: Vec<(String, i32)>,
}

impl WorldGroup {
    /// Literals asserting the group's evidence and the shared facts.
    pub fn assumptions(&self) -> Vec<i32> {
        self.body_lits.iter().chain(&self.fact_lits).map(|(_, l)| *l).collect()
    }

    /// The full world constraint as a standalone CNF.
    pub fn constraint(&self) -> CnfFormula {
        let mut cnf = self.definitions.clone();
        for l in self.assumptions() {
            cnf.add_clause([l]);
        }
        cnf
    }

    /// Name of the evidence atom or fact behind an assumption literal.
    pub fn name_of(&self, lit: i32) -> Option<&str> {
        self.body_lits.iter().chain(&self.fact_lits).find(|(_, l)| *l == lit).map(|(n, _)| n.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct PossibleWorldSet {
    pub unrolling: Arc<Unrolling>,
    pub groups: Vec<WorldGroup>,
}

impl PossibleWorldSet {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Possible worlds for an evidence base: one group per maximal consistent
/// evidence set (consistency judged on the variable domains alone), each
/// constrained by the model's dynamics, its evidence at the current position,
/// and the shared `facts`.
pub fn build_possible_worlds(
    base: &EvidenceBase,
    model: &WorldModel,
    facts: &[(String, Formula)],
    group_bound: usize,
) -> Result<PossibleWorldSet, WorldError> {
    let unrolling = Arc::new(Unrolling::new(model)?);
    let c = model.current();
    let mut domain_base = EvidenceBase::with_background(model.domain_background());
    domain_base.set_anchor(c);
    for item in base.items() {
        domain_base.push(item.atom.id.clone(), item.body.clone(), item.tag.clone())?;
    }
    let groups = jgraph::max_consistent_groups_bounded(&domain_base, model.horizon, group_bound)?;
    let built: Result<Vec<WorldGroup>, WorldError> = groups
        .into_par_iter()
        .map(|g| build_group(&unrolling, &domain_base, g, facts, c))
        .collect();
    Ok(PossibleWorldSet { unrolling, groups: built? })
}

fn build_group(
    u: &Unrolling,
    base: &EvidenceBase,
    group: ConsistentGroup,
    facts: &[(String, Formula)],
    c: usize,
) -> Result<WorldGroup, WorldError> {
    let mut cnf = u.cnf.clone();
    let mut enc = TraceEncoder::new(u.len());
    let mut body_lits = Vec::new();
    for id in &group.atoms {
        let item = base.get(id).expect("group atoms come from the base");
        body_lits.push((id.clone(), u.encode_formula(&mut enc, &mut cnf, &item.body, c)?));
    }
    let mut fact_lits = Vec::new();
    for (name, f) in facts {
        fact_lits.push((name.clone(), u.encode_formula(&mut enc, &mut cnf, f, c)?));
    }
    let wg = WorldGroup { group, definitions: cnf, encoder: enc, body_lits, fact_lits };
    let mut solver = wg.definitions.to_solver(SolverConfig::default()).expect("well formed");
    let assumps: Vec<Lit> = wg.assumptions().into_iter().map(Lit::from_dimacs).collect();
    if solver.solve(&assumps) == Status::Unsat {
        let core = if solver.core().is_empty() {
            vec![]
        } else {
            sat::minimize_assumptions(&mut solver, &assumps).expect("unsat")
        };
        let mut names: Vec<String> =
            core.iter().filter_map(|l| wg.name_of(l.to_dimacs())).map(str::to_string).collect();
        if names.is_empty() {
            names.push(MODEL_ATOM.to_string());
        }
        let label: Vec<&str> = wg.group.atoms.iter().map(String::as_str).collect();
        return Err(WorldError::IncompatibleEvidence { group: format!("{{{}}}", label.join(",")), core: names });
    }
    Ok(wg)
}

/// The distinct pasts (positions `0..=current`) across all groups.
pub fn histories(ws: &PossibleWorldSet) -> BTreeSet<Vec<State>> {
    let u = &ws.unrolling;
    let m = &u.model;
    let c = u.current();
    let mut proj_lits: Vec<i32> = Vec::new();
    for t in 0..=c {
        for v in 0..m.vars.len() {
            proj_lits.extend_from_slice(u.map.value_lits(t, v));
        }
    }
    let proj: Vec<Var> = proj_lits.iter().map(|&l| Lit::from_dimacs(l).var()).collect();
    let mut out = BTreeSet::new();
    for g in &ws.groups {
        let mut solver = g.definitions.to_solver(SolverConfig::default()).expect("well formed");
        let assumps: Vec<Lit> = g.assumptions().into_iter().map(Lit::from_dimacs).collect();
        for vals in sat::enumerate_projected(&mut solver, &assumps, &proj, usize::MAX) {
            let mut it = vals.into_iter();
            let past: Vec<State> = (0..=c)
                .map(|_| {
                    m.vars
                        .iter()
                        .map(|var| {
                            let bits: Vec<bool> = it.by_ref().take(var.size()).collect();
                            bits.iter().position(|&b| b).unwrap_or(0)
                        })
                        .collect()
                })
                .collect();
            out.insert(past);
        }
    }
    out
}
