//! Bounded-variable linear programming.
//!
//! Dense tableau simplex: a primal simplex (composite phase 1 followed by
//! phase 2) for cold solves, and a dual simplex that restarts from a parent
//! basis after a bound change, which is how branch-and-bound evaluates child
//! nodes. Rows are `a.x (<=|=|>=) b`; every row gets a slack so that the
//! working form is `A x + s = b` with bounds on both `x` and `s`.

mod presolve;
mod tableau;

use std::sync::Arc;

use thiserror::Error;

pub use presolve::{reduce, Reduction};
use tableau::Tableau;

pub const FEASIBILITY_TOL: f64 = 1e-7;
pub const OPTIMALITY_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("simplex failed to converge within {0} pivots")]
    NumericalFailure(usize),
    #[error("malformed problem: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

/// Minimisation problem over bounded columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    pub fn new(n: usize) -> Self {
        Self {
            objective: vec![0.0; n],
            rows: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.num_cols());
        self.rows.push(coeffs);
        self.senses.push(sense);
        self.rhs.push(rhs);
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_cols();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Malformed("bound vectors do not match the column count".into()));
        }
        if self.senses.len() != self.rows.len() || self.rhs.len() != self.rows.len() {
            return Err(LpError::Malformed("row metadata does not match the row count".into()));
        }
        if let Some(r) = self.rows.iter().position(|r| r.len() != n) {
            return Err(LpError::Malformed(format!("row {r} has the wrong length")));
        }
        for j in 0..n {
            if !self.lower[j].is_finite() || !self.upper[j].is_finite() {
                return Err(LpError::Malformed(format!("column {j} has an infinite bound")));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound by `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for (i, row) in self.rows.iter().enumerate() {
            let act: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
            let viol = match self.senses[i] {
                Sense::Le => act - self.rhs[i],
                Sense::Ge => self.rhs[i] - act,
                Sense::Eq => (act - self.rhs[i]).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
}

/// Basis over `n` structural columns followed by `m` row slacks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    /// Basic column of each row.
    pub heads: Vec<usize>,
    /// Status of every column, structural then slack.
    pub status: Vec<VarStatus>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    pub objective: f64,
    /// Structural values (meaningful when optimal).
    pub x: Vec<f64>,
    pub basis: Basis,
    pub iterations: usize,
    /// Final tableau kept for warm starts.
    pub(crate) warm: Option<Arc<Tableau>>,
}

impl LpResult {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// A single bound change applied on top of a parent problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundChange {
    pub var: usize,
    pub lower: f64,
    pub upper: f64,
}

impl BoundChange {
    pub fn fix(var: usize, value: f64) -> Self {
        Self { var, lower: value, upper: value }
    }
}

fn pivot_limit(p: &LpProblem) -> usize {
    50 * (p.num_rows() + p.num_cols()).max(1)
}

/// Cold solve: singleton presolve, primal simplex, then restoration to the
/// original columns.
pub fn solve_primal(p: &LpProblem) -> Result<LpResult, LpError> {
    p.validate()?;
    let red = reduce(p);
    if red.infeasible {
        return Ok(infeasible_result(p));
    }
    let inner = solve_primal_unreduced(&red.problem)?;
    Ok(red.restore(p, &inner))
}

/// Primal simplex on the problem as given, without presolve.
pub fn solve_primal_unreduced(p: &LpProblem) -> Result<LpResult, LpError> {
    p.validate()?;
    let mut t = Tableau::slack_basis(p);
    let limit = pivot_limit(p);
    let status = t.primal(limit)?;
    Ok(t.into_result(status))
}

/// Re-solves `p` from the optimal basis of its parent, where `p` differs from
/// the parent only by `change`. Falls back to a cold primal solve when the
/// dual simplex cannot proceed.
pub fn solve_dual_warmstart(p: &LpProblem, parent: &LpResult, change: BoundChange) -> Result<LpResult, LpError> {
    p.validate()?;
    let n = p.num_cols();
    if change.var >= n || parent.basis.status.len() != n + p.num_rows() {
        return Err(LpError::Malformed("parent basis does not match the problem".into()));
    }
    if parent.status != LpStatus::Optimal {
        return solve_primal_unreduced(p);
    }
    // no-op fixing: the parent solution already satisfies the new bounds
    let v = parent.x[change.var];
    if v >= change.lower - FEASIBILITY_TOL && v <= change.upper + FEASIBILITY_TOL {
        if let Some(w) = parent.warm.as_ref().filter(|w| w.matches(p)) {
            let mut t = (**w).clone();
            t.set_bounds(change.var, change.lower, change.upper);
            t.snap_nonbasic(change.var);
            if t.primal_feasible() && t.dual_feasible() {
                return Ok(t.into_result(LpStatus::Optimal));
            }
        }
    }
    let mut t = match &parent.warm {
        Some(w) if w.matches(p) => (**w).clone(),
        _ => match Tableau::from_basis(p, &parent.basis) {
            Some(t) => t,
            None => return solve_primal_unreduced(p),
        },
    };
    t.set_bounds(change.var, change.lower, change.upper);
    t.snap_nonbasic(change.var);
    let limit = pivot_limit(p);
    match t.dual(limit) {
        Ok(status) => {
            let res = t.into_result(status);
            if res.status == LpStatus::Optimal && p.max_violation(&res.x) > 1e-5 {
                log::debug!("dual warm start drifted; falling back to a cold solve");
                return solve_primal_unreduced(p);
            }
            Ok(res)
        }
        Err(e) => {
            log::debug!("dual simplex failed ({e}); falling back to a cold solve");
            solve_primal_unreduced(p)
        }
    }
}

fn infeasible_result(p: &LpProblem) -> LpResult {
    let n = p.num_cols();
    let m = p.num_rows();
    let mut status = vec![VarStatus::AtLower; n + m];
    for s in status.iter_mut().skip(n) {
        *s = VarStatus::Basic;
    }
    LpResult {
        status: LpStatus::Infeasible,
        objective: f64::INFINITY,
        x: p.lower.clone(),
        basis: Basis { heads: (n..n + m).collect(), status },
        iterations: 0,
        warm: None,
    }
}
