//! Justification graphs: belief atoms, their grouping into maximal
//! consistent sets, and minimal justifications for entailed facts.
//!
//! Consistency of `e1:φ1, …, en:φn` over belief atoms reduces to
//! satisfiability of `φ1 ∧ … ∧ φn` together with the background constraints.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::formula::{AtomTable, Formula, FormulaError, TraceEncoder};
use crate::sat::{self, ClauseSink, Lit, Solver, SolverConfig, Status};

pub const DEFAULT_GROUP_BOUND: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JGraphError {
    #[error("unknown belief atom `{0}`")]
    UnknownAtom(String),
    #[error("belief atom `{0}` is declared twice")]
    DuplicateAtom(String),
    #[error(
        "evidence base has {atoms} atoms but group enumeration is limited to {bound}; \
         raise the bound explicitly to proceed"
    )]
    Capacity { atoms: usize, bound: usize },
    #[error("justification graph: {0}")]
    Graph(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BeliefAtom {
    pub id: String,
}

impl BeliefAtom {
    pub fn new(id: impl Into<String>) -> Self {
        BeliefAtom { id: id.into() }
    }
}

/// A node of a justification graph. Atoms have no components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BeliefEntity {
    pub id: String,
    pub components: BTreeSet<String>,
}

impl BeliefEntity {
    pub fn atom(id: impl Into<String>) -> Self {
        BeliefEntity { id: id.into(), components: BTreeSet::new() }
    }

    pub fn is_atom(&self) -> bool {
        self.components.is_empty()
    }
}

/// A DAG of belief entities.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct JustificationGraph {
    entities: BTreeMap<String, BeliefEntity>,
}

impl JustificationGraph {
    /// Checks that every component exists and the component relation is acyclic.
    pub fn new<I: IntoIterator<Item = BeliefEntity>>(entities: I) -> Result<Self, JGraphError> {
        let mut map = BTreeMap::new();
        for e in entities {
            if map.insert(e.id.clone(), e.clone()).is_some() {
                return Err(JGraphError::Graph(format!("entity `{}` appears twice", e.id)));
            }
        }
        for e in map.values() {
            for c in &e.components {
                if !map.contains_key(c) {
                    return Err(JGraphError::Graph(format!(
                        "entity `{}` names missing component `{c}`",
                        e.id
                    )));
                }
            }
        }
        let graph = JustificationGraph { entities: map };
        graph.check_acyclic()?;
        Ok(graph)
    }

    fn check_acyclic(&self) -> Result<(), JGraphError> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut mark: HashMap<&str, u8> = HashMap::new();
        fn visit<'a>(
            g: &'a JustificationGraph,
            id: &'a str,
            mark: &mut HashMap<&'a str, u8>,
        ) -> Result<(), JGraphError> {
            match mark.get(id) {
                Some(2) => return Ok(()),
                Some(1) => return Err(JGraphError::Graph(format!("cycle through `{id}`"))),
                _ => {}
            }
            mark.insert(id, 1);
            for c in &g.entities[id].components {
                visit(g, c, mark)?;
            }
            mark.insert(id, 2);
            Ok(())
        }
        for id in self.entities.keys() {
            visit(self, id, &mut mark)?;
        }
        Ok(())
    }

    pub fn entity(&self, id: &str) -> Option<&BeliefEntity> {
        self.entities.get(id)
    }

    /// The belief atoms an entity ultimately rests on.
    pub fn leaves(&self, id: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack = vec![id];
        while let Some(cur) = stack.pop() {
            if let Some(e) = self.entities.get(cur) {
                if e.is_atom() {
                    out.insert(e.id.clone());
                }
                stack.extend(e.components.iter().map(String::as_str));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvidenceItem {
    pub atom: BeliefAtom,
    pub body: Formula,
    pub tag: String,
}

/// Evidence items `e:φ` plus background constraints that every world obeys.
/// Background formulas hold at position 0; bodies hold at `anchor`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvidenceBase {
    items: Vec<EvidenceItem>,
    background: Vec<Formula>,
    anchor: usize,
}

impl EvidenceBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_background(background: Vec<Formula>) -> Self {
        EvidenceBase { background, ..Self::default() }
    }

    pub fn set_anchor(&mut self, anchor: usize) {
        self.anchor = anchor;
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn push(
        &mut self,
        id: impl Into<String>,
        body: Formula,
        tag: impl Into<String>,
    ) -> Result<(), JGraphError> {
        let id = id.into();
        if self.items.iter().any(|i| i.atom.id == id) {
            return Err(JGraphError::DuplicateAtom(id));
        }
        if let Some(b) = body.first_belief() {
            return Err(FormulaError::UnsupportedBelief(b).into());
        }
        self.items.push(EvidenceItem { atom: BeliefAtom::new(id), body, tag: tag.into() });
        Ok(())
    }

    /// Removes an item, returning it.
    pub fn remove(&mut self, id: &str) -> Option<EvidenceItem> {
        let pos = self.items.iter().position(|i| i.atom.id == id)?;
        Some(self.items.remove(pos))
    }

    pub fn items(&self) -> &[EvidenceItem] {
        &self.items
    }

    pub fn background(&self) -> &[Formula] {
        &self.background
    }

    pub fn get(&self, id: &str) -> Option<&EvidenceItem> {
        self.items.iter().find(|i| i.atom.id == id)
    }

    pub fn ids(&self) -> BTreeSet<String> {
        self.items.iter().map(|i| i.atom.id.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsistentGroup {
    pub atoms: BTreeSet<String>,
    /// Fresh root entity whose components are the member atoms.
    pub graph: BeliefEntity,
}

impl ConsistentGroup {
    fn new(index: usize, atoms: BTreeSet<String>) -> Self {
        let graph = BeliefEntity { id: format!("g{index}"), components: atoms.clone() };
        ConsistentGroup { atoms, graph }
    }

    pub fn id(&self) -> &str {
        &self.graph.id
    }

    /// Justification graph consisting of the root and its atoms.
    pub fn justification_graph(&self) -> JustificationGraph {
        let mut nodes: Vec<BeliefEntity> = self.atoms.iter().map(BeliefEntity::atom).collect();
        nodes.push(self.graph.clone());
        JustificationGraph::new(nodes).expect("a root over atoms is a DAG")
    }
}

/// Incremental consistency checker: one solver holding the background and
/// each body behind a selector literal.
pub struct Checker {
    solver: Solver,
    encoder: TraceEncoder,
    table: AtomTable,
    ids: Vec<String>,
    selectors: Vec<Lit>,
    anchor: usize,
    memo: HashMap<Vec<usize>, bool>,
}

impl Checker {
    pub fn new(base: &EvidenceBase, horizon: usize) -> Result<Self, JGraphError> {
        let len = base.anchor + horizon + 1;
        let mut solver = Solver::with_config(SolverConfig::default());
        let mut encoder = TraceEncoder::new(len);
        let mut table = AtomTable::default();
        for f in &base.background {
            let l = encoder.encode(&mut solver, &mut table, f, 0)?;
            solver.push_clause(&[l]);
        }
        let mut order: Vec<&EvidenceItem> = base.items.iter().collect();
        order.sort_by(|a, b| a.atom.id.cmp(&b.atom.id));
        let mut ids = Vec::new();
        let mut selectors = Vec::new();
        for item in order {
            let l = encoder.encode(&mut solver, &mut table, &item.body, base.anchor)?;
            let s = solver.fresh_var();
            solver.push_clause(&[-s, l]);
            ids.push(item.atom.id.clone());
            selectors.push(Lit::from_dimacs(s));
        }
        Ok(Checker { solver, encoder, table, ids, selectors, anchor: base.anchor, memo: HashMap::new() })
    }

    /// Atom ids in sorted order; all index arguments refer to this order.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    fn index_of(&self, id: &str) -> Result<usize, JGraphError> {
        self.ids.binary_search_by(|x| x.as_str().cmp(id)).map_err(|_| JGraphError::UnknownAtom(id.into()))
    }

    fn indices<'a, I: IntoIterator<Item = &'a String>>(&self, ids: I) -> Result<Vec<usize>, JGraphError> {
        let mut v = ids.into_iter().map(|id| self.index_of(id)).collect::<Result<Vec<_>, _>>()?;
        v.sort_unstable();
        v.dedup();
        Ok(v)
    }

    fn consistent_indices(&mut self, idx: &[usize]) -> bool {
        if let Some(&b) = self.memo.get(idx) {
            return b;
        }
        let assumps: Vec<Lit> = idx.iter().map(|&i| self.selectors[i]).collect();
        let ok = self.solver.solve(&assumps) == Status::Sat;
        self.memo.insert(idx.to_vec(), ok);
        ok
    }

    pub fn is_consistent(&mut self, atoms: &BTreeSet<String>) -> Result<bool, JGraphError> {
        let idx = self.indices(atoms)?;
        Ok(self.consistent_indices(&idx))
    }

    /// All maximal consistent subsets, sorted by their sorted atom lists.
    pub fn max_groups(&mut self, bound: usize) -> Result<Vec<ConsistentGroup>, JGraphError> {
        let n = self.ids.len();
        if n > bound {
            return Err(JGraphError::Capacity { atoms: n, bound });
        }
        let mut found: Vec<Vec<usize>> = Vec::new();
        let mut current = Vec::new();
        self.search(0, &mut current, &mut found);
        let mut groups: Vec<BTreeSet<String>> = found
            .into_iter()
            .map(|g| g.into_iter().map(|i| self.ids[i].clone()).collect())
            .collect();
        groups.sort();
        Ok(groups.into_iter().enumerate().map(|(k, g)| ConsistentGroup::new(k, g)).collect())
    }

    fn search(&mut self, i: usize, current: &mut Vec<usize>, found: &mut Vec<Vec<usize>>) {
        if i == self.ids.len() {
            let maximal = (0..self.ids.len()).filter(|j| !current.contains(j)).all(|j| {
                let mut with = current.clone();
                with.push(j);
                with.sort_unstable();
                !self.consistent_indices(&with)
            });
            if maximal && self.consistent_indices(current) {
                found.push(current.clone());
            }
            return;
        }
        current.push(i);
        if self.consistent_indices(current) {
            self.search(i + 1, current, found);
        }
        current.pop();
        // Leaving `i` out only pays off if `i` can still be blocked later.
        let mut with = current.clone();
        with.push(i);
        let blocked_now = !self.consistent_indices(&with);
        if blocked_now || i + 1 < self.ids.len() {
            self.search(i + 1, current, found);
        }
    }

    /// Whether the group's bodies entail `query` at the anchor position, and
    /// a deletion-minimal set of atoms that already does.
    pub fn entails(
        &mut self,
        group: &BTreeSet<String>,
        query: &Formula,
    ) -> Result<(bool, BTreeSet<String>), JGraphError> {
        let idx = self.indices(group)?;
        let q = self.encoder.encode(&mut self.solver, &mut self.table, query, self.anchor)?;
        let neg_query = Lit::from_dimacs(-q);
        let mut assumps = vec![neg_query];
        assumps.extend(idx.iter().map(|&i| self.selectors[i]));
        if self.solver.solve(&assumps) == Status::Sat {
            return Ok((false, BTreeSet::new()));
        }
        let core = sat::minimize_assumptions(&mut self.solver, &assumps)
            .expect("assumptions were just shown unsatisfiable");
        let just = core
            .into_iter()
            .filter_map(|l| self.selectors.iter().position(|&s| s == l))
            .map(|i| self.ids[i].clone())
            .collect();
        Ok((true, just))
    }
}

pub fn is_consistent(
    base: &EvidenceBase,
    atoms: &BTreeSet<String>,
    horizon: usize,
) -> Result<bool, JGraphError> {
    Checker::new(base, horizon)?.is_consistent(atoms)
}

pub fn max_consistent_groups(
    base: &EvidenceBase,
    horizon: usize,
) -> Result<Vec<ConsistentGroup>, JGraphError> {
    max_consistent_groups_bounded(base, horizon, DEFAULT_GROUP_BOUND)
}

pub fn max_consistent_groups_bounded(
    base: &EvidenceBase,
    horizon: usize,
    bound: usize,
) -> Result<Vec<ConsistentGroup>, JGraphError> {
    if base.len() > bound {
        return Err(JGraphError::Capacity { atoms: base.len(), bound });
    }
    Checker::new(base, horizon)?.max_groups(bound)
}

pub fn entails(
    base: &EvidenceBase,
    group: &ConsistentGroup,
    query: &Formula,
    horizon: usize,
) -> Result<(bool, BTreeSet<String>), JGraphError> {
    Checker::new(base, horizon)?.entails(&group.atoms, query)
}
