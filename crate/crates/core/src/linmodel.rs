//! Linearized mixed-binary path model.
//!
//! Every candidate transfer is replaced by secant approximations of its cost
//! and duration around a reference drift orbit, and the choice of the debris
//! sequence becomes a 0-1 program over edge selection variables. Inside the
//! model lengths are in km, dates and durations in days and costs in m/s, so
//! that coefficients stay within a few orders of magnitude of each other.
//!
//! Variable layout for `N` nodes:
//! `s_ij` for every ordered pair, then `x_k, y_k, z_k, s_k` per node
//! (binaries), then `alpha_ij`, `tau_k`, `p_ij = s_ij alpha_ij` and
//! `q_ij = s_ij tau_i` (reals).

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::lpsolve::{LpProblem, Sense};
use crate::orbital::{units, OrbitalElements};
use crate::transfer::{DriftSide, TransferError, TransferModel, TransferSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinModelError {
    #[error("drift interval [{lo:.1}, {hi:.1}] km leaves the admissible side [{side_lo:.1}, {side_hi:.1}] km")]
    GuardViolation { lo: f64, hi: f64, side_lo: f64, side_hi: f64 },
    #[error("product linearization needs finite bounds, got [{0}, {1}]")]
    UnboundedProduct(f64, f64),
    #[error("infeasible model: {0}")]
    InfeasibleModel(String),
    #[error("solution does not decode to a single path: {0}")]
    NotAPath(String),
    #[error(transparent)]
    Transfer(#[from] TransferError),
}

pub type Result<T> = std::result::Result<T, LinModelError>;

/// Secant approximation of one transfer.
///
/// `alpha` is an offset (km) from `a_ref`. The cost is
/// `c0 + c1 (alpha - alpha_min)` and the duration
/// `t0c + t1c (alpha - alpha_min) + t2c (t - t_ref)` for a departure date `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedTransfer {
    pub from_id: usize,
    pub to_id: usize,
    pub side: DriftSide,
    /// Drift inclination (rad), fixed by the side.
    pub i_drift: f64,
    /// Cost at `alpha_min` (m/s).
    pub c0: f64,
    /// m/s per km.
    pub c1: f64,
    /// Duration at `(alpha_min, t_ref)` (days).
    pub t0c: f64,
    /// Days per km.
    pub t1c: f64,
    /// Days of drift per day of departure delay.
    pub t2c: f64,
    pub alpha_bounds: (f64, f64),
    /// Departure-date offsets (days) over which `t2c` was taken.
    pub tau_bounds: (f64, f64),
    /// Absolute departure dates (days) at which the transfer may be used, when
    /// restricted. Outside it the secants stop describing the transfer.
    pub date_window: Option<(f64, f64)>,
    /// Reference drift semi-major axis (km).
    pub a_ref: f64,
    /// Reference departure date (days).
    pub t_ref: f64,
}

impl LinearizedTransfer {
    pub fn cost_at(&self, alpha: f64) -> f64 {
        self.c0 + self.c1 * (alpha - self.alpha_bounds.0)
    }

    pub fn duration_at(&self, alpha: f64, t_depart: f64) -> f64 {
        self.t0c + self.t1c * (alpha - self.alpha_bounds.0) + self.t2c * (t_depart - self.t_ref)
    }

    /// Constant term of the cost as a function of `alpha`.
    pub fn cost_intercept(&self) -> f64 {
        self.c0 - self.c1 * self.alpha_bounds.0
    }

    /// Constant term of the duration as a function of `alpha` and of the
    /// offset `tau` from the departure debris date `d_from`.
    pub fn duration_intercept(&self, d_from: f64) -> f64 {
        self.t0c - self.t1c * self.alpha_bounds.0 + self.t2c * (d_from - self.t_ref)
    }

    /// Drift axis (km) for an offset.
    pub fn axis(&self, alpha: f64) -> f64 {
        self.a_ref + alpha
    }

    /// Constant transfer: used when the two orbits already share their node.
    pub fn constant(sol: &TransferSolution) -> Self {
        Self {
            from_id: sol.from_id,
            to_id: sol.to_id,
            side: sol.side,
            i_drift: sol.i_drift,
            c0: sol.dv_total,
            c1: 0.0,
            t0c: sol.duration / units::DAY,
            t1c: 0.0,
            t2c: 0.0,
            alpha_bounds: (0.0, 0.0),
            tau_bounds: (0.0, 0.0),
            date_window: None,
            a_ref: sol.a_drift / units::KM,
            t_ref: sol.t_depart / units::DAY,
        }
    }
}

/// Builds secants of cost and duration around `sol`.
///
/// `alpha_bounds` (km) is relative to `sol.a_drift`; `tau_bounds` (days) is
/// relative to the reference departure `sol.t_depart`. The drift inclination
/// and side stay those of `sol`.
pub fn linearize_transfer(
    model: &TransferModel,
    sol: &TransferSolution,
    from: &OrbitalElements,
    to: &OrbitalElements,
    alpha_bounds: (f64, f64),
    tau_bounds: (f64, f64),
) -> Result<LinearizedTransfer> {
    if sol.duration == 0.0 && alpha_bounds == (0.0, 0.0) {
        return Ok(LinearizedTransfer::constant(sol));
    }
    let a_ref = sol.a_drift / units::KM;
    let (lo, hi) = (a_ref + alpha_bounds.0, a_ref + alpha_bounds.1);
    let (side_lo, side_hi) = model
        .side_interval(from, to, sol.side)
        .map(|(l, h)| (l / units::KM, h / units::KM))
        .unwrap_or((f64::NAN, f64::NAN));
    let tol = 1e-6;
    if !(lo >= side_lo - tol && hi <= side_hi + tol && lo <= hi) {
        return Err(LinModelError::GuardViolation { lo, hi, side_lo, side_hi });
    }
    let i_d = sol.i_drift;
    let t_ref = sol.t_depart / units::DAY;
    let cost = |a_km: f64| model.transfer_cost(from, to, a_km * units::KM, i_d).map(|c| c.0);
    let dur = |a_km: f64| model.drift_duration(from, to, a_km * units::KM, i_d, sol.t_depart).map(|d| d / units::DAY);

    let c0 = cost(lo)?;
    let t0c = dur(lo)?;
    let width = hi - lo;
    let (c1, t1c) = if width > 1e-9 { ((cost(hi)? - c0) / width, (dur(hi)? - t0c) / width) } else { (0.0, 0.0) };

    // duration is linear in the departure date on a fixed wrap branch
    let turns = model.branch_turns(from, to, sol.a_drift, i_d, sol.t_depart)?;
    let (t_lo, t_hi) = if tau_bounds.1 - tau_bounds.0 > 1e-9 {
        (t_ref + tau_bounds.0, t_ref + tau_bounds.1)
    } else {
        (t_ref - 1.0, t_ref + 1.0)
    };
    let on_branch = |t_days: f64| {
        model
            .duration_on_branch(from, to, sol.a_drift, i_d, t_days * units::DAY, turns)
            .map(|d| d / units::DAY)
    };
    let t2c = (on_branch(t_hi)? - on_branch(t_lo)?) / (t_hi - t_lo);

    Ok(LinearizedTransfer {
        from_id: sol.from_id,
        to_id: sol.to_id,
        side: sol.side,
        i_drift: i_d,
        c0,
        c1,
        t0c,
        t1c,
        t2c,
        alpha_bounds,
        tau_bounds,
        date_window: None,
        a_ref,
        t_ref,
    })
}

/// One row `z + x_coef x + y_coef y (sense) rhs` of a product linearization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductRow {
    pub x_coef: f64,
    pub y_coef: f64,
    pub sense: Sense,
    pub rhs: f64,
}

/// The four rows forcing `z = x y` for binary `x` and `y` in `[y_min, y_max]`.
pub fn linearize_product(y_min: f64, y_max: f64) -> Result<[ProductRow; 4]> {
    if !y_min.is_finite() || !y_max.is_finite() || y_min > y_max {
        return Err(LinModelError::UnboundedProduct(y_min, y_max));
    }
    Ok([
        // z >= x y_min
        ProductRow { x_coef: -y_min, y_coef: 0.0, sense: Sense::Ge, rhs: 0.0 },
        // z <= x y_max
        ProductRow { x_coef: -y_max, y_coef: 0.0, sense: Sense::Le, rhs: 0.0 },
        // z <= y - (1 - x) y_min
        ProductRow { x_coef: -y_min, y_coef: -1.0, sense: Sense::Le, rhs: -y_min },
        // z >= y - (1 - x) y_max
        ProductRow { x_coef: -y_max, y_coef: -1.0, sense: Sense::Ge, rhs: -y_max },
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Real,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

/// Offsets of the departure debris date allowed while the transfer is
/// selected: the debris bounds cut to the transfer's date window. `None` when
/// they do not overlap.
fn selected_tau_bounds(tr: &LinearizedTransfer, reference_date: f64, bounds: (f64, f64)) -> Option<(f64, f64)> {
    let Some((lo, hi)) = tr.date_window else { return Some(bounds) };
    let (lo, hi) = (bounds.0.max(lo - reference_date), bounds.1.min(hi - reference_date));
    (lo <= hi).then_some((lo, hi))
}

/// Everything needed to assemble a [`PathModel`] besides the transfers.
#[derive(Debug, Clone, PartialEq)]
pub struct PathModelSpec {
    /// Candidate debris ids; the model node `k` is `node_ids[k]`.
    pub node_ids: Vec<usize>,
    /// Reference date (days) of each node; `tau_k` is an offset from it.
    pub reference_dates: Vec<f64>,
    /// Bounds (days) on `tau_k`.
    pub tau_bounds: Vec<(f64, f64)>,
    /// Per-debris operation cost `C_k` (m/s).
    pub per_debris_cost: Vec<f64>,
    /// Per-debris operation duration `T_k` (days).
    pub per_debris_duration: Vec<f64>,
    pub n_select: usize,
    /// Mission duration limit (days).
    pub t_max: f64,
    /// Minimum time spent at a debris before the next departure (days).
    pub t_deorb: f64,
    /// Debris imposed as the first of the path.
    pub start_debris: Option<usize>,
}

/// Smallest date separation between consecutive debris (days); keeps the
/// chronology strict when `t_deorb` is zero.
pub const MIN_SEPARATION: f64 = 1e-3;

/// Id given to the fictitious start node.
pub const FICTITIOUS_ID: usize = 0;

/// The assembled mixed-binary program.
#[derive(Debug, Clone)]
pub struct PathModel {
    pub n_select: usize,
    pub n_candidates: usize,
    pub node_ids: Vec<usize>,
    pub reference_dates: Vec<f64>,
    /// Ordered pairs `(i, j)` of node indices, in variable order.
    pub pairs: Vec<(usize, usize)>,
    /// Linearization of each pair, `None` when the transfer is excluded.
    pub transfers: Vec<Option<LinearizedTransfer>>,
    pub variables: Vec<Variable>,
    pub row_names: Vec<String>,
    pub lp: LpProblem,
    pub t_max: f64,
    pub t_deorb: f64,
    pub per_debris_cost: Vec<f64>,
    pub per_debris_duration: Vec<f64>,
    /// Node index of the fictitious start, when a start debris is imposed.
    pub fictitious: Option<usize>,
    pair_index: HashMap<(usize, usize), usize>,
}

/// Closed-form model dimensions for `N` nodes: binaries, reals, rows.
pub fn expected_dimensions(n: usize) -> (usize, usize, usize) {
    (n * n + 3 * n, 3 * n * n - 2 * n, 9 * n * n - 2 * n + 3)
}

impl PathModel {
    pub fn num_nodes(&self) -> usize {
        self.node_ids.len()
    }

    fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<usize> {
        self.pair_index.get(&(i, j)).copied()
    }

    pub fn node_of(&self, id: usize) -> Option<usize> {
        self.node_ids.iter().position(|&k| k == id)
    }

    pub fn s(&self, pair: usize) -> usize {
        pair
    }
    pub fn x(&self, k: usize) -> usize {
        self.num_pairs() + 4 * k
    }
    pub fn y(&self, k: usize) -> usize {
        self.num_pairs() + 4 * k + 1
    }
    pub fn z(&self, k: usize) -> usize {
        self.num_pairs() + 4 * k + 2
    }
    pub fn s_node(&self, k: usize) -> usize {
        self.num_pairs() + 4 * k + 3
    }
    pub fn alpha(&self, pair: usize) -> usize {
        self.num_pairs() + 4 * self.num_nodes() + pair
    }
    pub fn tau(&self, k: usize) -> usize {
        2 * self.num_pairs() + 4 * self.num_nodes() + k
    }
    pub fn p(&self, pair: usize) -> usize {
        2 * self.num_pairs() + 5 * self.num_nodes() + pair
    }
    pub fn q(&self, pair: usize) -> usize {
        3 * self.num_pairs() + 5 * self.num_nodes() + pair
    }

    pub fn binaries(&self) -> Vec<usize> {
        (0..self.variables.len()).filter(|&j| self.variables[j].kind == VarKind::Binary).collect()
    }

    pub fn reals(&self) -> Vec<usize> {
        (0..self.variables.len()).filter(|&j| self.variables[j].kind == VarKind::Real).collect()
    }

    pub fn num_rows(&self) -> usize {
        self.lp.num_rows()
    }

    /// Plain-text dump in an LP-file style, one constraint per line.
    pub fn to_lp_string(&self) -> String {
        let mut out = String::new();
        let term_list = |coeffs: &[f64]| {
            let mut s = String::new();
            for (j, &c) in coeffs.iter().enumerate() {
                if c != 0.0 {
                    let sign = if c < 0.0 { "-" } else { "+" };
                    let _ = write!(s, " {sign} {} {}", fmt_num(c.abs()), self.variables[j].name);
                }
            }
            if s.is_empty() {
                s.push_str(" 0");
            }
            s
        };
        let _ = writeln!(out, "\\ nodes={} select={} t_max={}", self.num_nodes(), self.n_select, fmt_num(self.t_max));
        let _ = writeln!(out, "minimize");
        let _ = writeln!(out, " obj:{}", term_list(&self.lp.objective));
        let _ = writeln!(out, "subject to");
        for (i, row) in self.lp.rows.iter().enumerate() {
            let _ = writeln!(
                out,
                " {}:{} {} {}",
                self.row_names[i],
                term_list(row),
                self.lp.senses[i].symbol(),
                fmt_num(self.lp.rhs[i])
            );
        }
        let _ = writeln!(out, "bounds");
        for (j, v) in self.variables.iter().enumerate() {
            let _ = writeln!(out, " {} <= {} <= {}", fmt_num(self.lp.lower[j]), v.name, fmt_num(self.lp.upper[j]));
        }
        let _ = writeln!(out, "binaries");
        for j in self.binaries() {
            let _ = writeln!(out, " {}", self.variables[j].name);
        }
        let _ = writeln!(out, "end");
        out
    }

    /// Reads an integer solution back as a path.
    pub fn decode(&self, x: &[f64]) -> Result<DecodedPath> {
        let selected: Vec<usize> = (0..self.num_pairs()).filter(|&e| x[self.s(e)] > 0.5).collect();
        if selected.len() + 1 != self.n_select {
            return Err(LinModelError::NotAPath(format!("{} edges selected, expected {}", selected.len(), self.n_select - 1)));
        }
        let mut next: HashMap<usize, usize> = HashMap::new();
        let mut has_pred = vec![false; self.num_nodes()];
        for &e in &selected {
            let (i, j) = self.pairs[e];
            if next.insert(i, e).is_some() || has_pred[j] {
                return Err(LinModelError::NotAPath("a node has two successors or predecessors".into()));
            }
            has_pred[j] = true;
        }
        let starts: Vec<usize> = next.keys().copied().filter(|&i| !has_pred[i]).collect();
        if starts.len() != 1 {
            return Err(LinModelError::NotAPath(format!("{} path starts", starts.len())));
        }
        let mut nodes = vec![starts[0]];
        let mut legs = Vec::new();
        while let Some(&e) = next.get(nodes.last().unwrap()) {
            if legs.len() >= selected.len() {
                return Err(LinModelError::NotAPath("cycle".into()));
            }
            legs.push(e);
            nodes.push(self.pairs[e].1);
        }
        if legs.len() != selected.len() {
            return Err(LinModelError::NotAPath("disconnected cycle".into()));
        }
        let dates: Vec<f64> = nodes.iter().map(|&k| self.reference_dates[k] + x[self.tau(k)]).collect();
        let mut decoded_legs = Vec::new();
        let mut linear_cost = 0.0;
        let mut linear_duration = 0.0;
        for (step, &e) in legs.iter().enumerate() {
            let tr = self.transfers[e].as_ref().ok_or_else(|| LinModelError::NotAPath("excluded transfer selected".into()))?;
            let alpha = x[self.alpha(e)];
            let cost = tr.cost_at(alpha);
            let duration = tr.duration_at(alpha, dates[step]);
            linear_cost += cost;
            linear_duration += duration;
            decoded_legs.push(DecodedLeg { pair: e, alpha, depart: dates[step], linear_cost: cost, linear_duration: duration });
        }
        for &k in &nodes {
            linear_cost += self.per_debris_cost[k];
            linear_duration += self.per_debris_duration[k];
        }
        // drop the fictitious start
        let (nodes, dates, decoded_legs) = match self.fictitious {
            Some(f) if nodes.first() == Some(&f) => {
                (nodes[1..].to_vec(), dates[1..].to_vec(), decoded_legs[1..].to_vec())
            }
            _ => (nodes, dates, decoded_legs),
        };
        let ids = nodes.iter().map(|&k| self.node_ids[k]).collect();
        Ok(DecodedPath { nodes, ids, dates, legs: decoded_legs, linear_cost, linear_duration })
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.lp.objective_value(x)
    }

    /// Values of every binary for the path visiting `nodes` in order, or
    /// `None` when the path uses an excluded transfer or repeats a node.
    pub fn path_binaries(&self, nodes: &[usize]) -> Option<Vec<(usize, f64)>> {
        let n = self.num_nodes();
        let mut seen = vec![false; n];
        for &k in nodes {
            if k >= n || std::mem::replace(&mut seen[k], true) {
                return None;
            }
        }
        let mut values = vec![0.0; self.variables.len()];
        for w in nodes.windows(2) {
            let e = self.pair(w[0], w[1])?;
            self.transfers[e].as_ref()?;
            values[self.s(e)] = 1.0;
        }
        for (pos, &k) in nodes.iter().enumerate() {
            let has_pred = pos > 0;
            let has_succ = pos + 1 < nodes.len();
            values[self.x(k)] = f64::from(u8::from(has_pred));
            values[self.y(k)] = f64::from(u8::from(has_succ));
            values[self.z(k)] = f64::from(u8::from(has_pred && has_succ));
            values[self.s_node(k)] = 1.0;
        }
        Some(self.binaries().into_iter().map(|j| (j, values[j])).collect())
    }

    /// The model restricted to one path: every binary fixed, leaving an LP
    /// over drift offsets and dates.
    pub fn fix_path(&self, nodes: &[usize]) -> Option<LpProblem> {
        let mut lp = self.lp.clone();
        for (j, v) in self.path_binaries(nodes)? {
            if v < lp.lower[j] || v > lp.upper[j] {
                return None;
            }
            lp.lower[j] = v;
            lp.upper[j] = v;
        }
        Some(lp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedLeg {
    pub pair: usize,
    /// Drift offset (km) from the transfer's reference axis.
    pub alpha: f64,
    /// Departure date (days).
    pub depart: f64,
    pub linear_cost: f64,
    pub linear_duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedPath {
    /// Node indices in visiting order.
    pub nodes: Vec<usize>,
    /// Debris ids in visiting order.
    pub ids: Vec<usize>,
    /// Date (days) at each node.
    pub dates: Vec<f64>,
    pub legs: Vec<DecodedLeg>,
    pub linear_cost: f64,
    pub linear_duration: f64,
}

fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.9}").trim_end_matches('0').to_string()
    }
}

/// Assembles the path model from per-transfer linearizations.
///
/// Pairs without a linearization are kept with every variable fixed to zero
/// so that the model dimensions only depend on the node count.
pub fn build_path_model(spec: &PathModelSpec, linearized: &[LinearizedTransfer]) -> Result<PathModel> {
    let mut spec = spec.clone();
    let mut linearized = linearized.to_vec();
    let mut fictitious = None;
    if let Some(start) = spec.start_debris {
        if !spec.node_ids.contains(&start) {
            return Err(LinModelError::InfeasibleModel(format!("start debris {start} is not a candidate")));
        }
        if spec.node_ids.contains(&FICTITIOUS_ID) {
            return Err(LinModelError::InfeasibleModel("id 0 is reserved for the fictitious start".into()));
        }
        fictitious = Some(spec.node_ids.len());
        spec.node_ids.push(FICTITIOUS_ID);
        spec.reference_dates.push(0.0);
        spec.tau_bounds.push((0.0, 0.0));
        spec.per_debris_cost.push(0.0);
        spec.per_debris_duration.push(0.0);
        spec.n_select += 1;
        let start_date = spec.node_ids.iter().position(|&k| k == start).map(|k| spec.reference_dates[k]).unwrap_or(0.0);
        linearized.push(LinearizedTransfer {
            from_id: FICTITIOUS_ID,
            to_id: start,
            side: DriftSide::BelowTarget,
            i_drift: 0.0,
            c0: 0.0,
            c1: 0.0,
            t0c: 0.0,
            t1c: 0.0,
            t2c: 0.0,
            alpha_bounds: (0.0, 0.0),
            tau_bounds: (0.0, 0.0),
            date_window: None,
            a_ref: 0.0,
            t_ref: start_date,
        });
    }
    let n = spec.node_ids.len();
    let check_len = |len: usize, what: &str| {
        if len == n {
            Ok(())
        } else {
            Err(LinModelError::InfeasibleModel(format!("{what} has {len} entries for {n} nodes")))
        }
    };
    check_len(spec.reference_dates.len(), "reference_dates")?;
    check_len(spec.tau_bounds.len(), "tau_bounds")?;
    check_len(spec.per_debris_cost.len(), "per_debris_cost")?;
    check_len(spec.per_debris_duration.len(), "per_debris_duration")?;
    if spec.n_select < 2 || spec.n_select > n {
        return Err(LinModelError::InfeasibleModel(format!("cannot select {} of {} debris", spec.n_select, n)));
    }

    let mut pairs = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                pairs.push((i, j));
            }
        }
    }
    let pair_index: HashMap<(usize, usize), usize> = pairs.iter().enumerate().map(|(e, &p)| (p, e)).collect();
    let mut transfers: Vec<Option<LinearizedTransfer>> = vec![None; pairs.len()];
    for tr in linearized {
        let (Some(i), Some(j)) = (
            spec.node_ids.iter().position(|&k| k == tr.from_id),
            spec.node_ids.iter().position(|&k| k == tr.to_id),
        ) else {
            continue;
        };
        if i == j {
            continue;
        }
        if fictitious.is_some() && tr.to_id == FICTITIOUS_ID {
            continue;
        }
        if selected_tau_bounds(&tr, spec.reference_dates[i], spec.tau_bounds[i]).is_none() {
            continue;
        }
        transfers[pair_index[&(i, j)]] = Some(tr);
    }
    let feasible = transfers.iter().filter(|t| t.is_some()).count();
    if feasible + 1 < spec.n_select {
        return Err(LinModelError::InfeasibleModel(format!(
            "{feasible} feasible transfers cannot form a path of {} debris",
            spec.n_select
        )));
    }

    let mut model = PathModel {
        n_select: spec.n_select,
        n_candidates: n,
        node_ids: spec.node_ids.clone(),
        reference_dates: spec.reference_dates.clone(),
        pairs,
        transfers,
        variables: Vec::new(),
        row_names: Vec::new(),
        lp: LpProblem::new(0),
        t_max: spec.t_max,
        t_deorb: spec.t_deorb,
        per_debris_cost: spec.per_debris_cost.clone(),
        per_debris_duration: spec.per_debris_duration.clone(),
        fictitious,
        pair_index,
    };
    let np = model.pairs.len();
    let nv = 3 * np + np + 5 * n;
    let id = |k: usize| spec.node_ids[k];
    let mut variables = Vec::with_capacity(nv);
    let var = |name: String, kind| Variable { name, kind };
    for &(i, j) in &model.pairs {
        variables.push(var(format!("s_{}_{}", id(i), id(j)), VarKind::Binary));
    }
    for k in 0..n {
        for prefix in ["x", "y", "z", "s"] {
            variables.push(var(format!("{prefix}_{}", id(k)), VarKind::Binary));
        }
    }
    for &(i, j) in &model.pairs {
        variables.push(var(format!("alpha_{}_{}", id(i), id(j)), VarKind::Real));
    }
    for k in 0..n {
        variables.push(var(format!("tau_{}", id(k)), VarKind::Real));
    }
    for prefix in ["p", "q"] {
        for &(i, j) in &model.pairs {
            variables.push(var(format!("{prefix}_{}_{}", id(i), id(j)), VarKind::Real));
        }
    }
    debug_assert_eq!(variables.len(), nv);
    model.variables = variables;

    let mut lp = LpProblem::new(nv);
    for j in 0..nv {
        lp.upper[j] = 1.0;
    }
    let mut row_names = Vec::new();
    let mut add = |lp: &mut LpProblem, name: String, terms: &[(usize, f64)], sense: Sense, rhs: f64| {
        let mut row = vec![0.0; nv];
        for &(j, c) in terms {
            row[j] += c;
        }
        lp.add_row(row, sense, rhs);
        row_names.push(name);
    };

    // bounds
    for e in 0..np {
        let (i, _) = model.pairs[e];
        match &model.transfers[e] {
            Some(tr) => {
                let (amin, amax) = tr.alpha_bounds;
                lp.lower[model.alpha(e)] = amin;
                lp.upper[model.alpha(e)] = amax;
                lp.lower[model.p(e)] = amin.min(0.0);
                lp.upper[model.p(e)] = amax.max(0.0);
                let (tmin, tmax) = spec.tau_bounds[i];
                lp.lower[model.q(e)] = tmin.min(0.0);
                lp.upper[model.q(e)] = tmax.max(0.0);
            }
            None => {
                for j in [model.s(e), model.alpha(e), model.p(e), model.q(e)] {
                    lp.lower[j] = 0.0;
                    lp.upper[j] = 0.0;
                }
            }
        }
    }
    for k in 0..n {
        lp.lower[model.tau(k)] = spec.tau_bounds[k].0;
        lp.upper[model.tau(k)] = spec.tau_bounds[k].1;
    }
    if let Some(f) = fictitious {
        let fix = |lp: &mut LpProblem, j: usize, v: f64| {
            lp.lower[j] = v;
            lp.upper[j] = v;
        };
        fix(&mut lp, model.x(f), 0.0);
        fix(&mut lp, model.y(f), 1.0);
        fix(&mut lp, model.z(f), 0.0);
        fix(&mut lp, model.s_node(f), 1.0);
    }

    // selection and connexity
    let all_s: Vec<(usize, f64)> = (0..np).map(|e| (model.s(e), 1.0)).collect();
    add(&mut lp, "selection".into(), &all_s, Sense::Eq, (spec.n_select - 1) as f64);
    let all_z: Vec<(usize, f64)> = (0..n).map(|k| (model.z(k), 1.0)).collect();
    add(&mut lp, "connexity".into(), &all_z, Sense::Eq, (spec.n_select - 2) as f64);
    // degrees
    for k in 0..n {
        let mut terms = vec![(model.x(k), 1.0)];
        terms.extend((0..np).filter(|&e| model.pairs[e].1 == k).map(|e| (model.s(e), -1.0)));
        add(&mut lp, format!("indeg_{}", id(k)), &terms, Sense::Eq, 0.0);
    }
    for k in 0..n {
        let mut terms = vec![(model.y(k), 1.0)];
        terms.extend((0..np).filter(|&e| model.pairs[e].0 == k).map(|e| (model.s(e), -1.0)));
        add(&mut lp, format!("outdeg_{}", id(k)), &terms, Sense::Eq, 0.0);
    }
    for k in 0..n {
        let terms = [(model.s_node(k), 1.0), (model.x(k), -1.0), (model.y(k), -1.0), (model.z(k), 1.0)];
        add(&mut lp, format!("visit_{}", id(k)), &terms, Sense::Eq, 0.0);
    }
    // chronology: t_j >= t_i + T_L,ij + separation whenever s_ij = 1
    let separation = spec.t_deorb.max(MIN_SEPARATION);
    let big_m = spec.t_max + separation;
    for e in 0..np {
        let (i, j) = model.pairs[e];
        let (d_i, d_j) = (spec.reference_dates[i], spec.reference_dates[j]);
        let (t0, t1, t2) = match &model.transfers[e] {
            Some(tr) => (tr.duration_intercept(d_i), tr.t1c, tr.t2c),
            None => (0.0, 0.0, 0.0),
        };
        let terms = [
            (model.tau(i), 1.0),
            (model.tau(j), -1.0),
            (model.s(e), t0 + big_m),
            (model.p(e), t1),
            (model.q(e), t2),
        ];
        add(&mut lp, format!("chrono_{}_{}", id(i), id(j)), &terms, Sense::Le, big_m - separation - d_i + d_j);
    }
    // total duration
    let mut terms = Vec::new();
    for e in 0..np {
        if let Some(tr) = &model.transfers[e] {
            let d_i = spec.reference_dates[model.pairs[e].0];
            terms.push((model.s(e), tr.duration_intercept(d_i)));
            terms.push((model.p(e), tr.t1c));
            terms.push((model.q(e), tr.t2c));
        }
    }
    for k in 0..n {
        terms.push((model.s_node(k), spec.per_debris_duration[k]));
    }
    add(&mut lp, "duration".into(), &terms, Sense::Le, spec.t_max);
    // products
    let mut add_product = |lp: &mut LpProblem, name: &str, z: usize, x: usize, y: usize, rows: [ProductRow; 4]| {
        for (r, pr) in rows.iter().enumerate() {
            let terms = [(z, 1.0), (x, pr.x_coef), (y, pr.y_coef)];
            add(lp, format!("{name}_{}", r + 1), &terms, pr.sense, pr.rhs);
        }
    };
    for k in 0..n {
        add_product(&mut lp, &format!("prod_z_{}", id(k)), model.z(k), model.x(k), model.y(k), linearize_product(0.0, 1.0)?);
    }
    for e in 0..np {
        let (i, j) = model.pairs[e];
        let rows = linearize_product(lp.lower[model.alpha(e)], lp.upper[model.alpha(e)])?;
        add_product(&mut lp, &format!("prod_p_{}_{}", id(i), id(j)), model.p(e), model.s(e), model.alpha(e), rows);
    }
    for e in 0..np {
        let (i, j) = model.pairs[e];
        let bounds = spec.tau_bounds[i];
        let wide = linearize_product(bounds.0, bounds.1)?;
        let rows = match &model.transfers[e] {
            Some(tr) => {
                // the two rows that bind only when selected take the transfer's
                // window; the other two keep the debris bounds valid otherwise
                let window = selected_tau_bounds(tr, spec.reference_dates[i], bounds).expect("checked on insertion");
                let narrow = linearize_product(window.0, window.1)?;
                [narrow[0], narrow[1], wide[2], wide[3]]
            }
            None => wide,
        };
        add_product(&mut lp, &format!("prod_q_{}_{}", id(i), id(j)), model.q(e), model.s(e), model.tau(i), rows);
    }

    // objective
    for e in 0..np {
        if let Some(tr) = &model.transfers[e] {
            lp.objective[model.s(e)] = tr.cost_intercept();
            lp.objective[model.p(e)] = tr.c1;
        }
    }
    for k in 0..n {
        lp.objective[model.s_node(k)] = spec.per_debris_cost[k];
    }
    model.row_names = row_names;
    model.lp = lp;
    Ok(model)
}
