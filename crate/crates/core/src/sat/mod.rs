//! Propositional satisfiability: a CDCL solver with assumptions, unsat cores,
//! deletion-based core minimization and projected model enumeration.

mod dimacs;
mod solver;

pub use dimacs::{parse_dimacs, write_dimacs};
pub use solver::{set_default_seed, Solver, SolverConfig, Status};

use std::fmt;
use std::ops::Not;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SatError {
    #[error("malformed literal {lit}: variables are 1..={num_vars} and 0 is not a literal")]
    MalformedLiteral { lit: i32, num_vars: u32 },
    #[error("dimacs line {line}: {message}")]
    Dimacs { line: usize, message: String },
    #[error("core is satisfiable: the formula has a model under the given assumptions")]
    CoreSatisfiable,
}

/// A propositional variable, numbered from zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub(crate) u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(index: usize) -> Self {
        Var(index as u32)
    }

    pub fn lit(self, positive: bool) -> Lit {
        Lit(self.0 * 2 + u32::from(!positive))
    }

    pub fn pos(self) -> Lit {
        self.lit(true)
    }

    pub fn neg(self) -> Lit {
        self.lit(false)
    }

    /// One-based DIMACS number.
    pub fn dimacs(self) -> i32 {
        self.0 as i32 + 1
    }
}

/// A literal: a variable together with a polarity.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    pub(crate) fn code(self) -> usize {
        self.0 as usize
    }

    pub fn to_dimacs(self) -> i32 {
        let v = self.var().dimacs();
        if self.is_positive() {
            v
        } else {
            -v
        }
    }

    pub fn from_dimacs(lit: i32) -> Self {
        debug_assert!(lit != 0);
        Var(lit.unsigned_abs() - 1).lit(lit > 0)
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// Clause list over DIMACS-style signed variable indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CnfFormula {
    pub num_vars: u32,
    pub clauses: Vec<Vec<i32>>,
}

impl CnfFormula {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_var(&mut self) -> i32 {
        self.num_vars += 1;
        self.num_vars as i32
    }

    pub fn add_clause<I: IntoIterator<Item = i32>>(&mut self, lits: I) {
        let clause: Vec<i32> = lits.into_iter().collect();
        for &l in &clause {
            let v = l.unsigned_abs();
            if v > self.num_vars {
                self.num_vars = v;
            }
        }
        self.clauses.push(clause);
    }

    pub fn extend(&mut self, other: &CnfFormula) {
        self.num_vars = self.num_vars.max(other.num_vars);
        self.clauses.extend(other.clauses.iter().cloned());
    }

    pub fn check_literal(&self, lit: i32) -> Result<(), SatError> {
        if lit == 0 || lit.unsigned_abs() > self.num_vars {
            return Err(SatError::MalformedLiteral { lit, num_vars: self.num_vars });
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), SatError> {
        self.clauses.iter().flatten().try_for_each(|&l| self.check_literal(l))
    }

    /// Evaluates every clause under a full assignment (`model[v-1]` is the value of `v`).
    pub fn is_satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter().any(|&l| {
                let value = model.get(l.unsigned_abs() as usize - 1).copied().unwrap_or(false);
                value == (l > 0)
            })
        })
    }

    /// Loads the formula into a fresh solver. Variable `i` (DIMACS) becomes `Var(i-1)`.
    pub fn to_solver(&self, config: SolverConfig) -> Result<Solver, SatError> {
        self.validate()?;
        let mut solver = Solver::with_config(config);
        solver.reserve_vars(self.num_vars as usize);
        for clause in &self.clauses {
            let lits: Vec<Lit> = clause.iter().map(|&l| Lit::from_dimacs(l)).collect();
            solver.add_clause(&lits);
        }
        Ok(solver)
    }
}

/// Anything that accepts fresh variables and clauses in DIMACS numbering.
pub trait ClauseSink {
    fn fresh_var(&mut self) -> i32;
    fn push_clause(&mut self, lits: &[i32]);
}

impl ClauseSink for CnfFormula {
    fn fresh_var(&mut self) -> i32 {
        self.new_var()
    }

    fn push_clause(&mut self, lits: &[i32]) {
        self.add_clause(lits.iter().copied());
    }
}

impl ClauseSink for Solver {
    fn fresh_var(&mut self) -> i32 {
        self.new_var().dimacs()
    }

    fn push_clause(&mut self, lits: &[i32]) {
        let lits: Vec<Lit> = lits.iter().map(|&l| Lit::from_dimacs(l)).collect();
        self.add_clause(&lits);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SatStatus {
    Sat,
    Unsat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub status: SatStatus,
    /// Full assignment, index `v-1` for variable `v`. Present iff SAT.
    pub model: Option<Vec<bool>>,
    /// Subset of the assumptions responsible for UNSAT. Present iff UNSAT.
    pub core: Option<Vec<i32>>,
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        self.status == SatStatus::Sat
    }
}

pub fn solve(f: &CnfFormula, assumptions: &[i32]) -> Result<SolveResult, SatError> {
    solve_with(f, assumptions, SolverConfig::default())
}

pub fn solve_with(
    f: &CnfFormula,
    assumptions: &[i32],
    config: SolverConfig,
) -> Result<SolveResult, SatError> {
    for &a in assumptions {
        f.check_literal(a)?;
    }
    let mut solver = f.to_solver(config)?;
    let assumps: Vec<Lit> = assumptions.iter().map(|&l| Lit::from_dimacs(l)).collect();
    Ok(match solver.solve(&assumps) {
        Status::Sat => SolveResult {
            status: SatStatus::Sat,
            model: Some((0..f.num_vars as usize).map(|v| solver.model_value(Var::from_index(v))).collect()),
            core: None,
        },
        Status::Unsat => SolveResult {
            status: SatStatus::Unsat,
            model: None,
            core: Some(solver.core().iter().map(|l| l.to_dimacs()).collect()),
        },
    })
}

/// Shrinks an unsatisfiable assumption set until every single deletion makes
/// it satisfiable. Elements are tried for deletion from the back, so earlier
/// positions in `core` are kept in preference to later ones.
pub fn minimize_core(f: &CnfFormula, core: &[i32]) -> Result<Vec<i32>, SatError> {
    for &a in core {
        f.check_literal(a)?;
    }
    let mut solver = f.to_solver(SolverConfig::default())?;
    let lits: Vec<Lit> = core.iter().map(|&l| Lit::from_dimacs(l)).collect();
    let minimal = minimize_assumptions(&mut solver, &lits)?;
    Ok(minimal.into_iter().map(Lit::to_dimacs).collect())
}

/// Deletion-based minimization on a live solver.
pub fn minimize_assumptions(solver: &mut Solver, core: &[Lit]) -> Result<Vec<Lit>, SatError> {
    let mut current: Vec<Lit> = Vec::with_capacity(core.len());
    for &l in core {
        if !current.contains(&l) {
            current.push(l);
        }
    }
    if solver.solve(&current) == Status::Sat {
        return Err(SatError::CoreSatisfiable);
    }
    restrict_to_core(&mut current, solver.core());
    let mut i = current.len();
    while i > 0 {
        i -= 1;
        if i >= current.len() {
            continue;
        }
        let candidate: Vec<Lit> =
            current.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &l)| l).collect();
        if solver.solve(&candidate) == Status::Unsat {
            current = candidate;
            restrict_to_core(&mut current, solver.core());
            i = i.min(current.len());
        }
    }
    Ok(current)
}

fn restrict_to_core(current: &mut Vec<Lit>, core: &[Lit]) {
    current.retain(|l| core.contains(l));
}

/// Distinct valuations of `projection` that extend to models of `f`, found in
/// solver order. Each valuation lists every projection variable as a signed literal.
pub fn enumerate_models(
    f: &CnfFormula,
    projection: &[i32],
    limit: usize,
) -> Result<Vec<Vec<i32>>, SatError> {
    for &p in projection {
        f.check_literal(p)?;
    }
    let mut solver = f.to_solver(SolverConfig::default())?;
    let vars: Vec<Var> = projection.iter().map(|&p| Lit::from_dimacs(p.abs()).var()).collect();
    Ok(enumerate_projected(&mut solver, &[], &vars, limit)
        .into_iter()
        .map(|vals| {
            vars.iter().zip(vals).map(|(v, b)| if b { v.dimacs() } else { -v.dimacs() }).collect()
        })
        .collect())
}

/// Projected enumeration on a live solver. Blocking clauses are guarded by a
/// fresh selector that is switched off afterwards, so the solver is left
/// logically unchanged.
pub fn enumerate_projected(
    solver: &mut Solver,
    assumptions: &[Lit],
    projection: &[Var],
    limit: usize,
) -> Vec<Vec<bool>> {
    let selector = solver.new_var();
    let mut assumps = assumptions.to_vec();
    assumps.push(selector.pos());
    let mut found = Vec::new();
    while found.len() < limit && solver.solve(&assumps) == Status::Sat {
        let vals: Vec<bool> = projection.iter().map(|&v| solver.model_value(v)).collect();
        let mut block = vec![selector.neg()];
        block.extend(projection.iter().zip(&vals).map(|(&v, &b)| v.lit(!b)));
        found.push(vals);
        solver.add_clause(&block);
        if projection.is_empty() {
            break;
        }
    }
    solver.add_clause(&[selector.neg()]);
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Truth-table oracle.
    pub(crate) fn brute_force_sat(f: &CnfFormula) -> bool {
        let n = f.num_vars as usize;
        (0u64..1 << n).any(|bits| {
            let model: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
            f.is_satisfied_by(&model)
        })
    }

    fn pigeonhole(pigeons: usize, holes: usize) -> CnfFormula {
        let var = |p: usize, h: usize| (p * holes + h + 1) as i32;
        let mut f = CnfFormula::new();
        for p in 0..pigeons {
            f.add_clause((0..holes).map(|h| var(p, h)));
        }
        for h in 0..holes {
            for p in 0..pigeons {
                for q in p + 1..pigeons {
                    f.add_clause([-var(p, h), -var(q, h)]);
                }
            }
        }
        f
    }

    #[test]
    fn empty_formula_is_sat() {
        let r = solve(&CnfFormula::new(), &[]).unwrap();
        assert!(r.is_sat());
        assert_eq!(r.model, Some(vec![]));
    }

    #[test]
    fn direct_contradiction_is_unsat() {
        let mut f = CnfFormula::new();
        f.add_clause([1]);
        f.add_clause([-1]);
        assert_eq!(solve(&f, &[]).unwrap().status, SatStatus::Unsat);
    }

    #[test]
    fn pigeonhole_4_3_is_unsat() {
        let f = pigeonhole(4, 3);
        assert_eq!(f.num_vars, 12);
        assert!(!brute_force_sat(&f));
        assert_eq!(solve(&f, &[]).unwrap().status, SatStatus::Unsat);
        assert!(solve(&pigeonhole(3, 3), &[]).unwrap().is_sat());
    }

    #[test]
    fn malformed_literals_are_rejected() {
        let mut f = CnfFormula::new();
        f.add_clause([1, 2]);
        assert!(matches!(solve(&f, &[3]), Err(SatError::MalformedLiteral { lit: 3, .. })));
        assert!(matches!(solve(&f, &[0]), Err(SatError::MalformedLiteral { lit: 0, .. })));
    }

    #[test]
    fn core_is_subset_of_assumptions() {
        // a -> x, b -> !x, c free
        let mut f = CnfFormula::new();
        f.add_clause([-1, 4]);
        f.add_clause([-2, -4]);
        f.add_clause([3, 4, -4]);
        let r = solve(&f, &[1, 2, 3]).unwrap();
        assert_eq!(r.status, SatStatus::Unsat);
        let core = r.core.unwrap();
        assert!(core.iter().all(|l| [1, 2, 3].contains(l)));
        assert!(!solve(&f, &core).unwrap().is_sat());
    }

    #[test]
    fn minimize_single_cause() {
        // only `a` (1) forces UNSAT
        let mut f = CnfFormula::new();
        f.add_clause([-1, 3]);
        f.add_clause([-1, -3]);
        f.add_clause([2, 3]);
        assert_eq!(minimize_core(&f, &[1, 2]).unwrap(), vec![1]);
    }

    #[test]
    fn minimize_keeps_minimal_core() {
        let mut f = CnfFormula::new();
        f.add_clause([-1, -2]);
        assert_eq!(minimize_core(&f, &[1, 2]).unwrap(), vec![1, 2]);
    }

    #[test]
    fn minimize_rejects_sat_core() {
        let mut f = CnfFormula::new();
        f.add_clause([1, 2]);
        assert_eq!(minimize_core(&f, &[1]), Err(SatError::CoreSatisfiable));
    }

    #[test]
    fn enumerate_or_has_three_models() {
        let mut f = CnfFormula::new();
        f.add_clause([1, 2]);
        let mut models = enumerate_models(&f, &[1, 2], 10).unwrap();
        models.sort();
        assert_eq!(models, vec![vec![-1, 2], vec![1, -2], vec![1, 2]]);
    }

    #[test]
    fn enumerate_unsat_is_empty() {
        let mut f = CnfFormula::new();
        f.add_clause([1]);
        f.add_clause([-1]);
        assert!(enumerate_models(&f, &[1], 5).unwrap().is_empty());
    }

    #[test]
    fn enumerate_respects_limit() {
        let mut f = CnfFormula::new();
        f.add_clause([1, 2, 3]);
        assert_eq!(enumerate_models(&f, &[1, 2, 3], 1).unwrap().len(), 1);
    }

    #[test]
    fn solver_is_reusable_after_enumeration() {
        let mut f = CnfFormula::new();
        f.add_clause([1, 2]);
        let mut solver = f.to_solver(SolverConfig::default()).unwrap();
        let vars = [Var(0), Var(1)];
        assert_eq!(enumerate_projected(&mut solver, &[], &vars, 10).len(), 3);
        assert_eq!(enumerate_projected(&mut solver, &[], &vars, 10).len(), 3);
    }
}
