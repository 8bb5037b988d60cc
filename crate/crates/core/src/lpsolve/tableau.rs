//! Dense simplex tableau `B^-1 [A | I]` with bounded columns.

use std::sync::Arc;

use super::{Basis, LpError, LpProblem, LpResult, LpStatus, Sense, VarStatus, FEASIBILITY_TOL, OPTIMALITY_TOL};

const PIVOT_TOL: f64 = 1e-7;
const REFACTOR_EVERY: usize = 100;

#[derive(Debug, Clone)]
pub(crate) struct Tableau {
    m: usize,
    n: usize,
    width: usize,
    /// Row-major `m x (n + m)`.
    t: Vec<f64>,
    /// `B^-1 b`.
    beta: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    status: Vec<VarStatus>,
    heads: Vec<usize>,
    /// Current value of every column.
    x: Vec<f64>,
    a: Arc<Vec<f64>>,
    b: Arc<Vec<f64>>,
    c: Arc<Vec<f64>>,
    senses: Arc<Vec<Sense>>,
    iterations: usize,
    since_refactor: usize,
    bland: bool,
    degenerate_run: usize,
}

enum Step {
    Flip,
    Pivot { row: usize, to_upper: bool },
}

fn slack_bounds(sense: Sense) -> (f64, f64) {
    match sense {
        Sense::Le => (0.0, f64::INFINITY),
        Sense::Eq => (0.0, 0.0),
        Sense::Ge => (f64::NEG_INFINITY, 0.0),
    }
}

impl Tableau {
    fn skeleton(p: &LpProblem) -> Self {
        let m = p.num_rows();
        let n = p.num_cols();
        let mut a = Vec::with_capacity(m * n);
        for row in &p.rows {
            a.extend_from_slice(row);
        }
        let mut lower = p.lower.clone();
        let mut upper = p.upper.clone();
        for &s in &p.senses {
            let (l, u) = slack_bounds(s);
            lower.push(l);
            upper.push(u);
        }
        Self {
            m,
            n,
            width: n + m,
            t: Vec::new(),
            beta: Vec::new(),
            lower,
            upper,
            status: Vec::new(),
            heads: Vec::new(),
            x: vec![0.0; n + m],
            a: Arc::new(a),
            b: Arc::new(p.rhs.clone()),
            c: Arc::new(p.objective.clone()),
            senses: Arc::new(p.senses.clone()),
            iterations: 0,
            since_refactor: 0,
            bland: false,
            degenerate_run: 0,
        }
    }

    /// All slacks basic, structurals at their lower bound.
    pub(crate) fn slack_basis(p: &LpProblem) -> Self {
        let mut tab = Self::skeleton(p);
        let (m, n, w) = (tab.m, tab.n, tab.width);
        tab.t = vec![0.0; m * w];
        for i in 0..m {
            tab.t[i * w..i * w + n].copy_from_slice(&p.rows[i]);
            tab.t[i * w + n + i] = 1.0;
        }
        tab.beta = p.rhs.clone();
        tab.heads = (n..n + m).collect();
        tab.status = vec![VarStatus::AtLower; w];
        for s in tab.status.iter_mut().skip(n) {
            *s = VarStatus::Basic;
        }
        tab.sync_values();
        tab
    }

    /// Rebuilds the tableau for a stored basis. `None` when the basis matrix
    /// is singular.
    pub(crate) fn from_basis(p: &LpProblem, basis: &Basis) -> Option<Self> {
        let mut tab = Self::skeleton(p);
        if basis.heads.len() != tab.m || basis.status.len() != tab.width {
            return None;
        }
        tab.heads = basis.heads.clone();
        tab.status = basis.status.clone();
        if !tab.refactor() {
            return None;
        }
        tab.sync_values();
        Some(tab)
    }

    pub(crate) fn matches(&self, p: &LpProblem) -> bool {
        self.n == p.num_cols()
            && self.m == p.num_rows()
            && self.c.as_slice() == p.objective.as_slice()
            && self.b.as_slice() == p.rhs.as_slice()
            && self.senses.as_slice() == p.senses.as_slice()
    }

    /// Gauss-Jordan elimination of `[A | I | b]` on the current heads.
    fn refactor(&mut self) -> bool {
        let (m, n, w) = (self.m, self.n, self.width);
        let mut t = vec![0.0; m * w];
        for i in 0..m {
            t[i * w..i * w + n].copy_from_slice(&self.a[i * n..(i + 1) * n]);
            t[i * w + n + i] = 1.0;
        }
        let mut beta = self.b.as_ref().clone();
        let mut assigned = vec![usize::MAX; m];
        let mut used = vec![false; m];
        for (k, &col) in self.heads.iter().enumerate() {
            let mut best = usize::MAX;
            let mut best_val = PIVOT_TOL;
            for (i, &u) in used.iter().enumerate() {
                if !u {
                    let v = t[i * w + col].abs();
                    if v > best_val {
                        best_val = v;
                        best = i;
                    }
                }
            }
            if best == usize::MAX {
                return false;
            }
            used[best] = true;
            assigned[k] = best;
            pivot_rows(&mut t, &mut beta, m, w, best, col);
        }
        // reorder rows so that row k holds the basic column heads[k]
        let mut nt = vec![0.0; m * w];
        let mut nb = vec![0.0; m];
        for (k, &r) in assigned.iter().enumerate() {
            nt[k * w..(k + 1) * w].copy_from_slice(&t[r * w..(r + 1) * w]);
            nb[k] = beta[r];
        }
        self.t = nt;
        self.beta = nb;
        for &h in &self.heads {
            self.status[h] = VarStatus::Basic;
        }
        self.since_refactor = 0;
        true
    }

    fn cost(&self, j: usize) -> f64 {
        if j < self.n {
            self.c[j]
        } else {
            0.0
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::AtUpper => self.upper[j],
            _ => self.lower[j],
        }
    }

    /// Places nonbasic columns at their bound and recomputes basic values.
    fn sync_values(&mut self) {
        let w = self.width;
        for j in 0..w {
            if self.status[j] != VarStatus::Basic {
                self.x[j] = self.nonbasic_value(j);
            }
        }
        let nonbasic: Vec<(usize, f64)> = (0..w)
            .filter(|&j| self.status[j] != VarStatus::Basic && self.x[j] != 0.0)
            .map(|j| (j, self.x[j]))
            .collect();
        for i in 0..self.m {
            let row = &self.t[i * w..(i + 1) * w];
            let mut v = self.beta[i];
            for &(j, xj) in &nonbasic {
                v -= row[j] * xj;
            }
            self.x[self.heads[i]] = v;
        }
    }

    pub(crate) fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    /// Keeps a nonbasic column on a bound after its bounds changed.
    pub(crate) fn snap_nonbasic(&mut self, j: usize) {
        if self.status[j] != VarStatus::Basic {
            self.x[j] = self.nonbasic_value(j);
        }
        self.sync_values();
    }

    pub(crate) fn primal_feasible(&self) -> bool {
        self.heads
            .iter()
            .all(|&h| self.x[h] >= self.lower[h] - FEASIBILITY_TOL && self.x[h] <= self.upper[h] + FEASIBILITY_TOL)
    }

    fn reduced_costs(&self, weights: &[f64]) -> Vec<f64> {
        // d_j = c_j - sum_i weights_i T[i][j]
        let w = self.width;
        let mut d = vec![0.0; w];
        for i in 0..self.m {
            let wi = weights[i];
            if wi != 0.0 {
                let row = &self.t[i * w..(i + 1) * w];
                for (dj, &tij) in d.iter_mut().zip(row) {
                    *dj -= wi * tij;
                }
            }
        }
        d
    }

    fn phase2_costs(&self) -> Vec<f64> {
        let cb: Vec<f64> = self.heads.iter().map(|&h| self.cost(h)).collect();
        let mut d = self.reduced_costs(&cb);
        for (j, dj) in d.iter_mut().enumerate() {
            if self.status[j] == VarStatus::Basic {
                *dj = 0.0;
            } else {
                *dj += self.cost(j);
            }
        }
        d
    }

    pub(crate) fn dual_feasible(&self) -> bool {
        let d = self.phase2_costs();
        (0..self.width).all(|j| self.dual_ok(j, d[j]))
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.upper[j] - self.lower[j] <= 0.0
    }

    fn dual_ok(&self, j: usize, dj: f64) -> bool {
        if self.is_fixed(j) {
            return true;
        }
        match self.status[j] {
            VarStatus::Basic => true,
            VarStatus::AtLower => dj >= -OPTIMALITY_TOL,
            VarStatus::AtUpper => dj <= OPTIMALITY_TOL,
        }
    }

    /// Basic infeasibility gradient: -1 below the lower bound, +1 above the upper.
    fn infeasibility_weights(&self) -> Option<Vec<f64>> {
        let mut any = false;
        let g: Vec<f64> = self
            .heads
            .iter()
            .map(|&h| {
                if self.x[h] < self.lower[h] - FEASIBILITY_TOL {
                    any = true;
                    -1.0
                } else if self.x[h] > self.upper[h] + FEASIBILITY_TOL {
                    any = true;
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        any.then_some(g)
    }

    fn choose_entering(&self, d: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = OPTIMALITY_TOL;
        for j in 0..self.width {
            if self.is_fixed(j) {
                continue;
            }
            let dir = match self.status[j] {
                VarStatus::Basic => continue,
                VarStatus::AtLower if d[j] < -OPTIMALITY_TOL => 1.0,
                VarStatus::AtUpper if d[j] > OPTIMALITY_TOL => -1.0,
                _ => continue,
            };
            if self.bland {
                return Some((j, dir));
            }
            if d[j].abs() > best_score {
                best_score = d[j].abs();
                best = Some((j, dir));
            }
        }
        best
    }

    /// Primal ratio test for column `q` moving in direction `dir`, in two
    /// passes (Harris): the step bound is taken with bounds relaxed by the
    /// feasibility tolerance, then the largest pivot element within that
    /// bound is chosen.
    fn primal_ratio(&self, q: usize, dir: f64, phase1: bool) -> Option<(f64, Step)> {
        let w = self.width;
        let flip = self.upper[q] - self.lower[q];
        // (row, |alpha|, exact limit, to_upper)
        let mut cands: Vec<(usize, f64, f64, bool)> = Vec::new();
        let mut relaxed_min = flip;
        for i in 0..self.m {
            let alpha = self.t[i * w + q] * dir;
            if alpha.abs() <= PIVOT_TOL {
                continue;
            }
            let h = self.heads[i];
            let (xv, l, u) = (self.x[h], self.lower[h], self.upper[h]);
            // x_h moves by -alpha * theta
            let (gap, to_upper) = if alpha > 0.0 {
                if xv > u + FEASIBILITY_TOL && phase1 {
                    (xv - u, true)
                } else if xv >= l - FEASIBILITY_TOL && l.is_finite() {
                    (xv - l, false)
                } else {
                    continue;
                }
            } else if xv < l - FEASIBILITY_TOL && phase1 {
                (l - xv, false)
            } else if xv <= u + FEASIBILITY_TOL && u.is_finite() {
                (u - xv, true)
            } else {
                continue;
            };
            let a = alpha.abs();
            let limit = gap.max(0.0) / a;
            relaxed_min = relaxed_min.min((gap.max(0.0) + FEASIBILITY_TOL) / a);
            cands.push((i, a, limit, to_upper));
        }
        if !relaxed_min.is_finite() {
            return None;
        }
        let mut best: Option<(usize, f64, f64, bool)> = None;
        for &c in &cands {
            if c.2 > relaxed_min {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) if self.bland => {
                    c.2 < b.2 - 1e-12 || (c.2 <= b.2 + 1e-12 && self.heads[c.0] < self.heads[b.0])
                }
                Some(b) => c.1 > b.1,
            };
            if better {
                best = Some(c);
            }
        }
        match best {
            Some((row, _, limit, to_upper)) if limit <= flip => Some((limit, Step::Pivot { row, to_upper })),
            _ => Some((flip, Step::Flip)),
        }
    }

    fn pivot(&mut self, r: usize, q: usize, leaving_to_upper: bool) {
        let leaving = self.heads[r];
        pivot_rows(&mut self.t, &mut self.beta, self.m, self.width, r, q);
        self.heads[r] = q;
        self.status[q] = VarStatus::Basic;
        self.status[leaving] = if leaving_to_upper { VarStatus::AtUpper } else { VarStatus::AtLower };
        // a half-infinite slack can only rest on its finite bound
        if !self.upper[leaving].is_finite() {
            self.status[leaving] = VarStatus::AtLower;
        } else if !self.lower[leaving].is_finite() {
            self.status[leaving] = VarStatus::AtUpper;
        }
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            let saved = (self.t.clone(), self.beta.clone());
            if !self.refactor() {
                self.t = saved.0;
                self.beta = saved.1;
            }
        }
        self.sync_values();
    }

    fn note_step(&mut self, theta: f64) {
        if theta <= 1e-12 {
            self.degenerate_run += 1;
            if self.degenerate_run > 3 * self.m.max(1) {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
        }
    }

    /// Composite primal simplex: minimises total infeasibility while any basic
    /// column is out of bounds, then the true objective.
    pub(crate) fn primal(&mut self, limit: usize) -> Result<LpStatus, LpError> {
        loop {
            if self.iterations >= limit {
                return Err(LpError::NumericalFailure(limit));
            }
            let weights = self.infeasibility_weights();
            let phase1 = weights.is_some();
            let d = match &weights {
                Some(g) => {
                    let mut d = self.reduced_costs(g);
                    for &h in &self.heads {
                        d[h] = 0.0;
                    }
                    d
                }
                None => self.phase2_costs(),
            };
            let Some((q, dir)) = self.choose_entering(&d) else {
                return Ok(if phase1 { LpStatus::Infeasible } else { LpStatus::Optimal });
            };
            let Some((theta, step)) = self.primal_ratio(q, dir, phase1) else {
                return Ok(LpStatus::Unbounded);
            };
            self.iterations += 1;
            self.note_step(theta);
            match step {
                Step::Flip => {
                    self.status[q] = if dir > 0.0 { VarStatus::AtUpper } else { VarStatus::AtLower };
                    self.sync_values();
                }
                Step::Pivot { row, to_upper } => self.pivot(row, q, to_upper),
            }
        }
    }

    /// Dual simplex from a dual feasible basis.
    pub(crate) fn dual(&mut self, limit: usize) -> Result<LpStatus, LpError> {
        // restore dual feasibility by bound flips where possible
        let d0 = self.phase2_costs();
        for j in 0..self.width {
            if !self.dual_ok(j, d0[j]) {
                let target = if self.status[j] == VarStatus::AtLower { self.upper[j] } else { self.lower[j] };
                if !target.is_finite() {
                    return Err(LpError::NumericalFailure(0));
                }
                self.status[j] =
                    if self.status[j] == VarStatus::AtLower { VarStatus::AtUpper } else { VarStatus::AtLower };
            }
        }
        self.sync_values();
        let w = self.width;
        loop {
            if self.iterations >= limit {
                return Err(LpError::NumericalFailure(limit));
            }
            // leaving row: largest infeasibility
            let mut leave: Option<(usize, bool)> = None;
            let mut worst = FEASIBILITY_TOL;
            for (i, &h) in self.heads.iter().enumerate() {
                let below = self.lower[h] - self.x[h];
                let above = self.x[h] - self.upper[h];
                let (viol, up) = if below > above { (below, false) } else { (above, true) };
                if viol > FEASIBILITY_TOL {
                    if self.bland {
                        let better = match leave {
                            None => true,
                            Some((r, _)) => h < self.heads[r],
                        };
                        if better {
                            leave = Some((i, up));
                        }
                    } else if viol > worst {
                        worst = viol;
                        leave = Some((i, up));
                    }
                }
            }
            let Some((r, to_upper)) = leave else {
                return Ok(LpStatus::Optimal);
            };
            let d = self.phase2_costs();
            let row = &self.t[r * w..(r + 1) * w];
            // (column, |a|, ratio)
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            let mut relaxed_min = f64::INFINITY;
            for j in 0..w {
                if self.status[j] == VarStatus::Basic || self.is_fixed(j) {
                    continue;
                }
                let a = row[j];
                // leaving column must rise when below its lower bound
                let eligible = match (self.status[j], to_upper) {
                    (VarStatus::AtLower, false) => a < -PIVOT_TOL,
                    (VarStatus::AtUpper, false) => a > PIVOT_TOL,
                    (VarStatus::AtLower, true) => a > PIVOT_TOL,
                    (VarStatus::AtUpper, true) => a < -PIVOT_TOL,
                    _ => false,
                };
                if !eligible {
                    continue;
                }
                let ratio = d[j].abs() / a.abs();
                relaxed_min = relaxed_min.min((d[j].abs() + OPTIMALITY_TOL) / a.abs());
                cands.push((j, a.abs(), ratio));
            }
            let mut best: Option<(usize, f64, f64)> = None;
            for &c in &cands {
                if c.2 > relaxed_min {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some(b) if self.bland => c.2 < b.2 - 1e-12 || (c.2 <= b.2 + 1e-12 && c.0 < b.0),
                    Some(b) => c.1 > b.1,
                };
                if better {
                    best = Some(c);
                }
            }
            let best_ratio = best.map_or(0.0, |b| b.2);
            let best = best.map(|b| b.0);
            let Some(q) = best else {
                return Ok(LpStatus::Infeasible);
            };
            self.iterations += 1;
            self.note_step(best_ratio);
            self.pivot(r, q, to_upper);
        }
    }

    pub(crate) fn into_result(self, status: LpStatus) -> LpResult {
        let x: Vec<f64> = self.x[..self.n].to_vec();
        let objective = match status {
            LpStatus::Optimal => x.iter().zip(self.c.iter()).map(|(v, c)| v * c).sum(),
            LpStatus::Infeasible => f64::INFINITY,
            LpStatus::Unbounded => f64::NEG_INFINITY,
        };
        LpResult {
            status,
            objective,
            x,
            basis: Basis { heads: self.heads.clone(), status: self.status.clone() },
            iterations: self.iterations,
            warm: Some(Arc::new(self)),
        }
    }
}

fn pivot_rows(t: &mut [f64], beta: &mut [f64], m: usize, w: usize, r: usize, q: usize) {
    let p = t[r * w + q];
    let inv = 1.0 / p;
    for v in &mut t[r * w..(r + 1) * w] {
        *v *= inv;
    }
    beta[r] *= inv;
    t[r * w + q] = 1.0;
    let (before, rest) = t.split_at_mut(r * w);
    let (prow, after) = rest.split_at_mut(w);
    let br = beta[r];
    let eliminate = |row: &mut [f64], b: &mut f64| {
        let f = row[q];
        if f != 0.0 {
            for (v, &pv) in row.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
            row[q] = 0.0;
            *b -= f * br;
        }
    };
    for i in 0..r {
        eliminate(&mut before[i * w..(i + 1) * w], &mut beta[i]);
    }
    for k in 0..(m - r - 1) {
        eliminate(&mut after[k * w..(k + 1) * w], &mut beta[r + 1 + k]);
    }
}
