//! Singleton presolve: removes fixed columns, singleton equality rows and rows
//! left empty by the substitutions.

use super::{Basis, LpProblem, LpResult, LpStatus, Sense, VarStatus, FEASIBILITY_TOL};

#[derive(Debug, Clone)]
pub struct Reduction {
    pub problem: LpProblem,
    /// Original index of each kept column.
    pub col_map: Vec<usize>,
    /// Original index of each kept row.
    pub row_map: Vec<usize>,
    /// Value of each eliminated original column.
    pub fixed: Vec<Option<f64>>,
    /// Objective contribution of the eliminated columns.
    pub offset: f64,
    pub infeasible: bool,
}

pub fn reduce(p: &LpProblem) -> Reduction {
    let n = p.num_cols();
    let m = p.num_rows();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    let mut row_alive = vec![true; m];
    let mut rhs = p.rhs.clone();
    let mut offset = 0.0;
    let mut infeasible = false;

    let mut fix = |j: usize, v: f64, fixed: &mut Vec<Option<f64>>, rhs: &mut Vec<f64>, row_alive: &[bool]| {
        fixed[j] = Some(v);
        for i in 0..m {
            if row_alive[i] {
                rhs[i] -= p.rows[i][j] * v;
            }
        }
        offset += p.objective[j] * v;
    };

    for j in 0..n {
        if p.upper[j] - p.lower[j] <= 0.0 {
            fix(j, p.lower[j], &mut fixed, &mut rhs, &row_alive);
        }
    }
    let mut changed = true;
    while changed && !infeasible {
        changed = false;
        for i in 0..m {
            if !row_alive[i] {
                continue;
            }
            let mut live = (0..n).filter(|&j| fixed[j].is_none() && p.rows[i][j] != 0.0);
            let first = live.next();
            let second = live.next();
            match (first, second) {
                (None, _) => {
                    let ok = match p.senses[i] {
                        Sense::Le => rhs[i] >= -FEASIBILITY_TOL,
                        Sense::Ge => rhs[i] <= FEASIBILITY_TOL,
                        Sense::Eq => rhs[i].abs() <= FEASIBILITY_TOL,
                    };
                    if !ok {
                        infeasible = true;
                    }
                    row_alive[i] = false;
                    changed = true;
                }
                (Some(j), None) if p.senses[i] == Sense::Eq => {
                    let v = rhs[i] / p.rows[i][j];
                    if v < p.lower[j] - FEASIBILITY_TOL || v > p.upper[j] + FEASIBILITY_TOL {
                        infeasible = true;
                    }
                    let v = v.clamp(p.lower[j], p.upper[j]);
                    row_alive[i] = false;
                    fix(j, v, &mut fixed, &mut rhs, &row_alive);
                    changed = true;
                }
                _ => {}
            }
        }
    }

    let col_map: Vec<usize> = (0..n).filter(|&j| fixed[j].is_none()).collect();
    let row_map: Vec<usize> = (0..m).filter(|&i| row_alive[i]).collect();
    let mut problem = LpProblem::new(col_map.len());
    for (k, &j) in col_map.iter().enumerate() {
        problem.objective[k] = p.objective[j];
        problem.lower[k] = p.lower[j];
        problem.upper[k] = p.upper[j];
    }
    for &i in &row_map {
        let coeffs = col_map.iter().map(|&j| p.rows[i][j]).collect();
        problem.add_row(coeffs, p.senses[i], rhs[i]);
    }
    Reduction { problem, col_map, row_map, fixed, offset, infeasible }
}

impl Reduction {
    /// Expands reduced column values to the original columns.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut full: Vec<f64> = self.fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
        for (k, &j) in self.col_map.iter().enumerate() {
            full[j] = x[k];
        }
        full
    }

    /// Maps a result on the reduced problem back to `original`.
    pub fn restore(&self, original: &LpProblem, inner: &LpResult) -> LpResult {
        let n = original.num_cols();
        let m = original.num_rows();
        let nr = self.col_map.len();
        let map_col = |c: usize| if c < nr { self.col_map[c] } else { n + self.row_map[c - nr] };

        let mut status = vec![VarStatus::Basic; n + m];
        for (j, f) in self.fixed.iter().enumerate() {
            if let Some(v) = f {
                let at_upper = (v - original.upper[j]).abs() < (v - original.lower[j]).abs();
                status[j] = if at_upper { VarStatus::AtUpper } else { VarStatus::AtLower };
            }
        }
        for (c, s) in inner.basis.status.iter().enumerate() {
            status[map_col(c)] = *s;
        }
        let mut heads: Vec<usize> = inner.basis.heads.iter().map(|&c| map_col(c)).collect();
        let mut kept_row = vec![false; m];
        for &i in &self.row_map {
            kept_row[i] = true;
        }
        for (i, kept) in kept_row.iter().enumerate() {
            if !kept {
                heads.push(n + i);
                status[n + i] = VarStatus::Basic;
            }
        }
        let x = self.expand(&inner.x);
        let objective = match inner.status {
            LpStatus::Optimal => original.objective_value(&x),
            _ => inner.objective,
        };
        LpResult {
            status: inner.status,
            objective,
            x,
            basis: Basis { heads, status },
            iterations: inner.iterations,
            warm: None,
        }
    }
}
