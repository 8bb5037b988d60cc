//! End-to-end planning: pre-optimization of every transfer, the initial
//! reference path, then successive linearized branch-and-bound solves until
//! the path and its exact cost settle.
//!
//! Each drift axis moves inside an interval around its reference. Intervals
//! narrow once the path is stable. A leg that keeps running into the same
//! edge of its interval while the exact cost falls gets its width back, and a
//! step that raises the exact cost on an unchanged path is undone.
//!
//! Public quantities are SI (m, s, rad, m/s); the linearized model works in
//! km and days internally.

use thiserror::Error;

use crate::bnb::{solve_with_hints, BnbError, Proof, SearchConfig};
use crate::linmodel::{build_path_model, linearize_transfer, LinModelError, LinearizedTransfer, PathModelSpec};
use crate::lpsolve::reduce;
use crate::orbital::{units, OrbitalElements};
use crate::transfer::{DriftSide, TransferError, TransferModel, TransferSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("infeasible mission: {0}")]
    InfeasibleMission(String),
    #[error(transparent)]
    Model(#[from] LinModelError),
    #[error(transparent)]
    Search(#[from] BnbError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
}

pub type Result<T> = std::result::Result<T, PlannerError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Debris {
    pub id: usize,
    pub elements: OrbitalElements,
}

/// Narrowest drift-axis half-width reached by shrinking (m). Below this the
/// secant slopes stop carrying information and the reference date offsets
/// leave no room to absorb the linearization error.
pub const MIN_ALPHA_HALF_WIDTH: f64 = 100.0;
/// Narrowest date offset half-width reached by shrinking (s).
pub const MIN_TAU_HALF_WIDTH: f64 = units::DAY;

/// A converged plan's exact duration may exceed its linearized duration by
/// at most this much (s). The secants bound the drift-axis effect, but the
/// product of axis and date offsets is not modelled, so convergence also
/// waits for that residue to vanish.
pub const DURATION_COVER_TOLERANCE: f64 = 0.01 * units::DAY;

/// A drift offset this close (m) to its interval half-width counts as
/// stopped by the interval.
const PINNED_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct IterationConfig {
    /// Duration cap of each leg during pre-optimization (s).
    pub t_cap_init: f64,
    pub max_iterations: usize,
    /// Factor applied to linearization intervals once the path is stable;
    /// its inverse widens the interval of a leg that is still advancing.
    pub shrink_factor: f64,
    /// Number of consecutive identical paths that marks the path as stable.
    pub stability_window: usize,
    /// Convergence threshold on the exact mission cost change (m/s).
    pub cost_tolerance: f64,
    /// Convergence threshold on the change of duration slack (s).
    pub slack_tolerance: f64,
    /// Initial and largest half-width of the drift-axis interval around each
    /// reference (m).
    pub alpha_half_width: f64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            t_cap_init: 61.0 * units::DAY,
            max_iterations: 20,
            shrink_factor: 0.5,
            stability_window: 2,
            cost_tolerance: 1.0,
            slack_tolerance: 0.5 * units::DAY,
            alpha_half_width: 30.0 * units::KM,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub n_select: usize,
    /// Mission duration limit (s).
    pub t_max: f64,
    /// Time spent at each debris (s).
    pub t_deorb: f64,
    /// Most expensive transfer kept (m/s).
    pub dv_max: f64,
    /// Operation cost added per visited debris (m/s).
    pub per_debris_cost: f64,
    /// Debris imposed as the first of the path.
    pub start_debris: Option<usize>,
    pub transfer: TransferModel,
    pub search: SearchConfig,
    pub iteration: IterationConfig,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            n_select: 5,
            t_max: 366.0 * units::DAY,
            t_deorb: 0.0,
            dv_max: 400.0,
            per_debris_cost: 0.0,
            start_debris: None,
            transfer: TransferModel::default(),
            search: SearchConfig::default(),
            iteration: IterationConfig::default(),
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self, catalog_len: usize) -> Result<()> {
        let bad = |m: String| Err(PlannerError::InvalidInput(m));
        if self.n_select < 2 {
            return bad(format!("n_select must be at least 2, got {}", self.n_select));
        }
        if self.n_select > catalog_len {
            return bad(format!("n_select {} exceeds the catalog size {catalog_len}", self.n_select));
        }
        if !(self.t_max > self.n_select as f64 * self.t_deorb) {
            return bad("t_max must exceed n_select * t_deorb".into());
        }
        if !(self.dv_max > 0.0) || !(self.iteration.t_cap_init > 0.0) {
            return bad("dv_max and t_cap_init must be positive".into());
        }
        let s = self.iteration.shrink_factor;
        if !(s > 0.0 && s < 1.0) {
            return bad(format!("shrink factor must lie in (0, 1), got {s}"));
        }
        if self.iteration.stability_window == 0 || self.iteration.max_iterations == 0 {
            return bad("stability window and max_iterations must be positive".into());
        }
        if self.transfer.min_altitude >= self.transfer.max_altitude {
            return bad("altitude bounds are inverted".into());
        }
        Ok(())
    }
}

/// Reference drift orbit of one admissible ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairReference {
    /// Catalog indices.
    pub from: usize,
    pub to: usize,
    /// Reference drift orbit; `t_depart` is the reference departure date.
    pub solution: TransferSolution,
    /// Current half-width of the drift-axis interval (m).
    pub half_width: f64,
    /// Last move of the drift axis (m), zero before the pair is selected.
    pub last_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSize {
    pub variables: usize,
    pub constraints: usize,
}

/// Output of [`initialize`].
#[derive(Debug, Clone)]
pub struct InitialState {
    pub catalog: Vec<Debris>,
    pub config: PlannerConfig,
    pub references: Vec<PairReference>,
    /// Ordered pairs (ids) dropped as infeasible or too expensive.
    pub eliminated: Vec<(usize, usize)>,
    /// Initial reference path (ids).
    pub path: Vec<usize>,
    /// Pre-optimized legs of the initial path.
    pub path_legs: Vec<TransferSolution>,
    /// Reference date (s) of each catalog entry.
    pub reference_dates: Vec<f64>,
    pub full_size: ModelSize,
    pub reduced_size: ModelSize,
}

impl InitialState {
    pub fn initial_dv(&self) -> f64 {
        self.path_legs.iter().map(|l| l.dv_total).sum()
    }

    pub fn initial_duration(&self) -> f64 {
        self.path_legs.iter().map(|l| l.duration).sum()
    }

    fn index_of(&self, id: usize) -> usize {
        self.catalog.iter().position(|d| d.id == id).expect("id from this catalog")
    }

    fn reference(&self, from: usize, to: usize) -> Option<&PairReference> {
        self.references.iter().find(|r| r.from == from && r.to == to)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub iteration: usize,
    pub nodes: usize,
    pub path: Vec<usize>,
    /// Objective of the linearized model (m/s); the initial row holds the
    /// pre-optimized cost.
    pub linear_dv: f64,
    /// Linearized mission duration (s).
    pub linear_duration: f64,
    /// Exact re-evaluated cost and duration of the same path.
    pub exact_dv: f64,
    pub exact_duration: f64,
    pub proof: Proof,
    /// False when the step raised the exact cost and was undone.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionPlan {
    pub path: Vec<usize>,
    /// Exact transfers in path order.
    pub legs: Vec<TransferSolution>,
    /// Arrival and departure date (s) at each debris.
    pub arrivals: Vec<f64>,
    pub departures: Vec<f64>,
    pub total_dv: f64,
    pub total_duration: f64,
    pub history: Vec<HistoryRow>,
    pub converged: bool,
    /// The path kept changing after intervals had been restored once.
    pub oscillation: bool,
    pub iterations: usize,
    pub initial_path: Vec<usize>,
    pub initial_legs: Vec<TransferSolution>,
    pub t_max: f64,
    pub eliminated: usize,
    pub full_size: ModelSize,
    pub reduced_size: ModelSize,
}

fn check_catalog(catalog: &[Debris]) -> Result<()> {
    if catalog.is_empty() {
        return Err(PlannerError::InvalidInput("empty catalog".into()));
    }
    for (k, d) in catalog.iter().enumerate() {
        if catalog[..k].iter().any(|o| o.id == d.id) {
            return Err(PlannerError::InvalidInput(format!("duplicate debris id {}", d.id)));
        }
    }
    Ok(())
}

/// Cheapest arrangement of `n` catalog indices where leg `k` costs
/// `slot_cost[k][from][to]`; depth-first with cost pruning.
fn best_arrangement(slot_cost: &[Vec<Vec<Option<f64>>>], n: usize, start: Option<usize>) -> Option<(f64, Vec<usize>)> {
    let size = slot_cost.first().map_or(0, |s| s.len());
    struct Dfs<'a> {
        slot_cost: &'a [Vec<Vec<Option<f64>>>],
        n: usize,
        size: usize,
        path: Vec<usize>,
        used: Vec<bool>,
        best: Option<(f64, Vec<usize>)>,
    }
    impl Dfs<'_> {
        fn go(&mut self, cost: f64) {
            if self.best.as_ref().is_some_and(|b| cost >= b.0) {
                return;
            }
            if self.path.len() == self.n {
                self.best = Some((cost, self.path.clone()));
                return;
            }
            let k = self.path.len() - 1;
            let cur = *self.path.last().unwrap();
            for j in 0..self.size {
                if self.used[j] {
                    continue;
                }
                if let Some(c) = self.slot_cost[k][cur][j] {
                    self.used[j] = true;
                    self.path.push(j);
                    self.go(cost + c);
                    self.path.pop();
                    self.used[j] = false;
                }
            }
        }
    }
    let mut dfs = Dfs { slot_cost, n, size, path: Vec::new(), used: vec![false; size], best: None };
    let starts: Vec<usize> = match start {
        Some(s) => vec![s],
        None => (0..size).collect(),
    };
    for s in starts {
        dfs.path = vec![s];
        dfs.used[s] = true;
        dfs.go(0.0);
        dfs.used[s] = false;
    }
    dfs.best
}

/// Pre-optimizes every ordered pair at each leg slot `k * t_cap`, drops pairs
/// that are never admissible and picks the cheapest arrangement as the
/// initial reference path.
pub fn initialize(catalog: &[Debris], config: &PlannerConfig) -> Result<InitialState> {
    check_catalog(catalog)?;
    config.validate(catalog.len())?;
    let n = catalog.len();
    let legs = config.n_select - 1;
    let t_cap = config.iteration.t_cap_init;
    let tm = &config.transfer;
    let start = match config.start_debris {
        Some(id) => Some(
            catalog
                .iter()
                .position(|d| d.id == id)
                .ok_or_else(|| PlannerError::InvalidInput(format!("start debris {id} is not in the catalog")))?,
        ),
        None => None,
    };

    let mut slots: Vec<Vec<Vec<Option<TransferSolution>>>> = Vec::with_capacity(legs);
    for k in 0..legs {
        let t_depart = k as f64 * t_cap;
        let mut table = vec![vec![None; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (a, b) = (&catalog[i], &catalog[j]);
                let sol = tm.pre_optimize(&a.elements, &b.elements, (a.id, b.id), t_depart, t_cap, config.dv_max);
                if sol.feasible {
                    table[i][j] = Some(sol);
                }
            }
        }
        slots.push(table);
    }
    let slot_cost: Vec<Vec<Vec<Option<f64>>>> = slots
        .iter()
        .map(|t| t.iter().map(|row| row.iter().map(|s| s.as_ref().map(|s| s.dv_total)).collect()).collect())
        .collect();
    let (_, arrangement) = best_arrangement(&slot_cost, config.n_select, start).ok_or_else(|| {
        PlannerError::InfeasibleMission(format!("no path of {} debris survives the transfer filter", config.n_select))
    })?;

    let mut references = Vec::new();
    let mut eliminated = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            // the path slot for path legs, the cheapest slot otherwise
            let on_path = arrangement.windows(2).position(|w| w[0] == i && w[1] == j);
            let chosen = match on_path {
                Some(k) => slots[k][i][j].clone(),
                None => (0..legs)
                    .filter_map(|k| slots[k][i][j].clone())
                    .min_by(|a, b| a.dv_total.total_cmp(&b.dv_total)),
            };
            match chosen {
                Some(solution) => references.push(PairReference {
                    from: i,
                    to: j,
                    solution,
                    half_width: config.iteration.alpha_half_width,
                    last_step: 0.0,
                }),
                None => eliminated.push((catalog[i].id, catalog[j].id)),
            }
        }
    }
    let path_legs: Vec<TransferSolution> =
        arrangement.windows(2).enumerate().map(|(k, w)| slots[k][w[0]][w[1]].clone().unwrap()).collect();
    let mut reference_dates = vec![0.5 * config.t_max; n];
    for (k, &i) in arrangement.iter().enumerate() {
        reference_dates[i] = k as f64 * t_cap;
    }
    let path = arrangement.iter().map(|&i| catalog[i].id).collect();
    let mut state = InitialState {
        catalog: catalog.to_vec(),
        config: config.clone(),
        references,
        eliminated,
        path,
        path_legs,
        reference_dates,
        full_size: ModelSize { variables: 0, constraints: 0 },
        reduced_size: ModelSize { variables: 0, constraints: 0 },
    };
    let widths = vec![f64::INFINITY; n];
    let (linearized, spec) = linearize_all(&state, &widths)?;
    let model = build_path_model(&spec, &linearized)?;
    let red = reduce(&model.lp);
    state.full_size = ModelSize { variables: model.variables.len(), constraints: model.num_rows() };
    state.reduced_size = ModelSize { variables: red.problem.num_cols(), constraints: red.problem.num_rows() };
    log::info!(
        "{} admissible transfers, {} eliminated; model {}x{} reduced to {}x{}",
        state.references.len(),
        state.eliminated.len(),
        state.full_size.variables,
        state.full_size.constraints,
        state.reduced_size.variables,
        state.reduced_size.constraints
    );
    Ok(state)
}

/// Linearizes every admissible pair around its reference and assembles the
/// model specification. `tau_half_width` (s) bounds each debris date offset.
fn linearize_all(state: &InitialState, tau_half_width: &[f64]) -> Result<(Vec<LinearizedTransfer>, PathModelSpec)> {
    let cfg = &state.config;
    let tm = &cfg.transfer;
    let t_max_d = cfg.t_max / units::DAY;
    let mut linearized = Vec::with_capacity(state.references.len());
    for r in &state.references {
        let (from, to) = (&state.catalog[r.from].elements, &state.catalog[r.to].elements);
        let sol = &r.solution;
        // a direct transfer has nothing to linearize
        if sol.duration == 0.0 {
            linearized.push(LinearizedTransfer::constant(sol));
            continue;
        }
        let lin = match tm.side_interval(from, to, sol.side) {
            Some((lo, hi)) => {
                let a = sol.a_drift;
                let amin = (a - r.half_width).max(lo).min(a);
                let amax = (a + r.half_width).min(hi).max(a);
                let t_ref = sol.t_depart / units::DAY;
                let mut lin = linearize_transfer(
                    tm,
                    sol,
                    from,
                    to,
                    ((amin - a) / units::KM, (amax - a) / units::KM),
                    (-t_ref, t_max_d - t_ref),
                )?;
                lin.date_window = branch_window(&lin);
                lin
            }
            None => LinearizedTransfer::constant(sol),
        };
        linearized.push(lin);
    }
    let n = state.catalog.len();
    let dates_d: Vec<f64> = state.reference_dates.iter().map(|d| d / units::DAY).collect();
    let tau_bounds = (0..n)
        .map(|k| {
            let w = tau_half_width[k] / units::DAY;
            ((-dates_d[k]).max(-w), (t_max_d - dates_d[k]).min(w))
        })
        .collect();
    let spec = PathModelSpec {
        node_ids: state.catalog.iter().map(|d| d.id).collect(),
        reference_dates: dates_d,
        tau_bounds,
        per_debris_cost: vec![cfg.per_debris_cost; n],
        per_debris_duration: vec![cfg.t_deorb / units::DAY; n],
        n_select: cfg.n_select,
        t_max: t_max_d,
        t_deorb: cfg.t_deorb / units::DAY,
        start_debris: cfg.start_debris,
    };
    Ok((linearized, spec))
}

/// Departure dates (days) over which the linearized duration stays
/// non-negative across the drift-axis interval. Beyond them the exact
/// duration wraps to the next closure of the RAAN gap, a full synodic period
/// later, which the linear model would badly understate.
fn branch_window(lin: &LinearizedTransfer) -> Option<(f64, f64)> {
    let width = lin.alpha_bounds.1 - lin.alpha_bounds.0;
    let shortest = lin.t0c.min(lin.t0c + lin.t1c * width).max(0.0);
    if lin.t2c < 0.0 {
        Some((f64::NEG_INFINITY, lin.t_ref + shortest / -lin.t2c))
    } else if lin.t2c > 0.0 {
        Some((lin.t_ref - shortest / lin.t2c, f64::INFINITY))
    } else {
        None
    }
}

/// Exact transfers along `path` (ids) with the drift orbits of the current
/// references. `schedule` holds the planned date (s) at each debris: the
/// vehicle leaves at the later of that date and its actual arrival, so the
/// waits chosen by the model are kept while late arrivals push the rest of
/// the path back.
fn evaluate_exact(state: &InitialState, path: &[usize], schedule: &[f64]) -> Result<Evaluated> {
    let cfg = &state.config;
    let mut arrivals = vec![schedule[0]];
    let mut departures = Vec::with_capacity(path.len());
    let mut legs = Vec::new();
    for (k, w) in path.windows(2).enumerate() {
        let (i, j) = (state.index_of(w[0]), state.index_of(w[1]));
        let r = state
            .reference(i, j)
            .ok_or_else(|| PlannerError::InfeasibleMission(format!("transfer {} -> {} was eliminated", w[0], w[1])))?;
        let depart = arrivals[k].max(schedule[k]) + cfg.t_deorb;
        let (a, b) = (&state.catalog[i], &state.catalog[j]);
        let sol = cfg.transfer.evaluate(
            &a.elements,
            &b.elements,
            (a.id, b.id),
            r.solution.side,
            r.solution.a_drift,
            r.solution.i_drift,
            depart,
        )?;
        departures.push(depart);
        arrivals.push(depart + sol.duration);
        legs.push(sol);
    }
    departures.push(arrivals.last().unwrap() + cfg.t_deorb);
    let dv = legs.iter().map(|l| l.dv_total).sum::<f64>() + cfg.per_debris_cost * path.len() as f64;
    let duration = legs.iter().map(|l| l.duration).sum::<f64>() + cfg.t_deorb * path.len() as f64;
    Ok(Evaluated { legs, arrivals, departures, dv, duration })
}

#[derive(Debug, Clone)]
struct Evaluated {
    legs: Vec<TransferSolution>,
    arrivals: Vec<f64>,
    departures: Vec<f64>,
    dv: f64,
    duration: f64,
}

/// Successive linearization loop (see module docs).
pub fn iterate(mut state: InitialState) -> Result<MissionPlan> {
    let cfg = state.config.clone();
    let it_cfg = &cfg.iteration;
    let n = state.catalog.len();
    let mut tau_width = vec![f64::INFINITY; n];
    let slots: Vec<f64> = (0..state.path.len()).map(|k| k as f64 * it_cfg.t_cap_init).collect();
    let initial = evaluate_exact(&state, &state.path.clone(), &slots)?;
    let mut history = vec![HistoryRow {
        iteration: 0,
        nodes: 0,
        path: state.path.clone(),
        linear_dv: state.initial_dv() + cfg.per_debris_cost * state.path.len() as f64,
        linear_duration: state.initial_duration(),
        exact_dv: initial.dv,
        exact_duration: initial.duration,
        proof: Proof::Optimal,
        accepted: true,
    }];
    let mut prev_path = state.path.clone();
    let mut prev_exact: Option<(f64, f64)> = None;
    let mut same_count = 1;
    let mut shrinking = false;
    let mut restored = false;
    let mut oscillation = false;
    let mut converged = false;
    let mut iterations = 0;
    let mut best: Option<(Vec<usize>, Evaluated)> = None;
    let mut last: (Vec<usize>, Evaluated) = (state.path.clone(), initial.clone());

    for it in 1..=it_cfg.max_iterations {
        iterations = it;
        let (linearized, spec) = linearize_all(&state, &tau_width)?;
        let model = build_path_model(&spec, &linearized)?;
        let hint: Vec<usize> = prev_path.iter().filter_map(|id| model.node_of(*id)).collect();
        let hint = match model.fictitious {
            Some(f) => std::iter::once(f).chain(hint).collect(),
            None => hint,
        };
        let outcome = solve_with_hints(&model, &cfg.search, &[hint])?;
        let Some(inc) = outcome.incumbent else {
            return Err(PlannerError::InfeasibleMission(format!("linearized model infeasible at iteration {it}")));
        };
        let decoded = model.decode(&inc.x)?;
        if it == 1 {
            history[0].nodes = outcome.node_count;
        }
        let saved = (state.references.clone(), state.reference_dates.clone());
        // move each selected leg's reference to the new drift axis. A leg
        // pushed to the same edge of its interval twice running is still
        // travelling and the loop does not stop yet.
        let mut advancing = Vec::new();
        for leg in &decoded.legs {
            let (i, j) = model.pairs[leg.pair];
            let (fi, ti) = (state.index_of(model.node_ids[i]), state.index_of(model.node_ids[j]));
            if let Some(r) = state.references.iter_mut().find(|r| r.from == fi && r.to == ti) {
                let step = leg.alpha * units::KM;
                r.solution.a_drift += step;
                if step.abs() >= r.half_width - PINNED_TOLERANCE && step * r.last_step > 0.0 && r.half_width > MIN_ALPHA_HALF_WIDTH {
                    advancing.push((fi, ti));
                }
                r.last_step = step;
            }
        }
        let path = decoded.ids.clone();
        let schedule: Vec<f64> = decoded.dates.iter().map(|d| d * units::DAY).collect();
        let exact = evaluate_exact(&state, &path, &schedule)?;
        // a move along the same path that raised the exact cost is undone
        // and the intervals of its legs narrow
        if decoded.ids == prev_path && exact.dv > last.1.dv + it_cfg.cost_tolerance {
            (state.references, state.reference_dates) = saved;
            for w in prev_path.windows(2) {
                let (i, j) = (state.index_of(w[0]), state.index_of(w[1]));
                if let Some(r) = state.references.iter_mut().find(|r| r.from == i && r.to == j) {
                    r.half_width = (r.half_width * it_cfg.shrink_factor).max(MIN_ALPHA_HALF_WIDTH);
                    r.last_step = 0.0;
                }
            }
            history.push(HistoryRow {
                iteration: it,
                nodes: outcome.node_count,
                path: decoded.ids.clone(),
                linear_dv: decoded.linear_cost,
                linear_duration: decoded.linear_duration * units::DAY,
                exact_dv: exact.dv,
                exact_duration: exact.duration,
                proof: outcome.proof,
                accepted: false,
            });
            log::info!("iteration {it}: step rejected, exact {:.1} m/s against {:.1} m/s", exact.dv, last.1.dv);
            continue;
        }
        // only a move that paid off earns a wider interval
        if exact.dv < last.1.dv - it_cfg.cost_tolerance {
            for r in state.references.iter_mut().filter(|r| advancing.contains(&(r.from, r.to))) {
                r.half_width = (r.half_width / it_cfg.shrink_factor).min(it_cfg.alpha_half_width);
            }
        } else {
            advancing.clear();
        }
        // exact dates become the new references
        for (k, &id) in path.iter().enumerate() {
            let i = state.index_of(id);
            state.reference_dates[i] = exact.departures[k] - cfg.t_deorb;
        }
        for (k, w) in path.windows(2).enumerate() {
            let (i, j) = (state.index_of(w[0]), state.index_of(w[1]));
            if let Some(r) = state.references.iter_mut().find(|r| r.from == i && r.to == j) {
                r.solution.t_depart = exact.departures[k];
            }
        }

        history.push(HistoryRow {
            iteration: it,
            nodes: outcome.node_count,
            path: path.clone(),
            linear_dv: decoded.linear_cost,
            linear_duration: decoded.linear_duration * units::DAY,
            exact_dv: exact.dv,
            exact_duration: exact.duration,
            proof: outcome.proof,
            accepted: true,
        });
        log::info!(
            "iteration {it}: path {:?} linear {:.1} m/s {:.1} d, exact {:.1} m/s {:.1} d, {} nodes",
            path,
            decoded.linear_cost,
            decoded.linear_duration,
            exact.dv,
            exact.duration / units::DAY,
            outcome.node_count
        );

        let within_limit = exact.duration <= cfg.t_max + 2.0 * units::DAY;
        if within_limit && best.as_ref().is_none_or(|b| exact.dv < b.1.dv) {
            best = Some((path.clone(), exact.clone()));
        }

        if path == prev_path {
            same_count += 1;
        } else {
            same_count = 1;
            if shrinking {
                if restored {
                    oscillation = true;
                } else {
                    // path changed after narrowing: widen once and start over
                    restored = true;
                    shrinking = false;
                    for r in &mut state.references {
                        r.half_width = it_cfg.alpha_half_width;
                    }
                    tau_width = vec![f64::INFINITY; n];
                }
            }
        }
        let slack = cfg.t_max - exact.duration;
        if same_count >= 2 {
            if let Some((c, s)) = prev_exact {
                let covered = exact.duration <= decoded.linear_duration * units::DAY + DURATION_COVER_TOLERANCE;
                if (exact.dv - c).abs() < it_cfg.cost_tolerance
                    && (slack - s).abs() < it_cfg.slack_tolerance
                    && within_limit
                    && covered
                    && advancing.is_empty()
                {
                    converged = true;
                    last = (path, exact);
                    break;
                }
            }
        }
        if same_count >= it_cfg.stability_window {
            shrinking = true;
            for w in path.windows(2) {
                let (i, j) = (state.index_of(w[0]), state.index_of(w[1]));
                if advancing.contains(&(i, j)) {
                    continue;
                }
                if let Some(r) = state.references.iter_mut().find(|r| r.from == i && r.to == j) {
                    r.half_width = (r.half_width * it_cfg.shrink_factor).max(MIN_ALPHA_HALF_WIDTH);
                }
            }
            for &id in &path {
                let k = state.index_of(id);
                tau_width[k] = (tau_width[k].min(cfg.t_max) * it_cfg.shrink_factor).max(MIN_TAU_HALF_WIDTH);
            }
        }
        prev_exact = Some((exact.dv, slack));
        prev_path = path.clone();
        last = (path, exact);
    }

    let (path, exact) = match (converged, best) {
        (false, Some(best)) => best,
        _ => last,
    };
    Ok(MissionPlan {
        path,
        legs: exact.legs,
        arrivals: exact.arrivals,
        departures: exact.departures,
        total_dv: exact.dv,
        total_duration: exact.duration,
        history,
        converged,
        oscillation,
        iterations,
        initial_path: state.path.clone(),
        initial_legs: initial.legs,
        t_max: cfg.t_max,
        eliminated: state.eliminated.len(),
        full_size: state.full_size,
        reduced_size: state.reduced_size,
    })
}

/// Initialization followed by the iteration loop.
pub fn plan(catalog: &[Debris], config: &PlannerConfig) -> Result<MissionPlan> {
    iterate(initialize(catalog, config)?)
}

/// Admissible-interval bound a drift axis can sit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftBound {
    AltitudeFloor,
    AltitudeCeiling,
    AsymptoteGuard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SideFlag {
    pub leg: usize,
    pub from_id: usize,
    pub to_id: usize,
    pub bound: DriftBound,
    pub dv: f64,
    /// Cost of the same leg on the other side within the leg's duration,
    /// when that side is admissible.
    pub flipped_dv: Option<f64>,
}

/// Distance (m) under which a drift axis counts as sitting on a bound.
pub const BOUND_TOLERANCE: f64 = 100.0;

/// Flags legs whose drift axis sits on an altitude bound or on the asymptote
/// guard, and prices the opposite side for comparison.
pub fn validate_side_choices(plan: &MissionPlan, catalog: &[Debris], model: &TransferModel) -> Vec<SideFlag> {
    let find = |id: usize| catalog.iter().find(|d| d.id == id).map(|d| &d.elements);
    let (floor, ceiling) = model.drift_axis_bounds();
    let mut flags = Vec::new();
    for (k, leg) in plan.legs.iter().enumerate() {
        let (Some(from), Some(to)) = (find(leg.from_id), find(leg.to_id)) else { continue };
        let a = leg.a_drift;
        let bound = if (a - floor).abs() <= BOUND_TOLERANCE {
            Some(DriftBound::AltitudeFloor)
        } else if (a - ceiling).abs() <= BOUND_TOLERANCE {
            Some(DriftBound::AltitudeCeiling)
        } else {
            model
                .asymptote_axis(to, leg.i_drift)
                .filter(|a_star| ((a - a_star).abs() - model.asymptote_guard).abs() <= BOUND_TOLERANCE)
                .map(|_| DriftBound::AsymptoteGuard)
        };
        if let Some(bound) = bound {
            let flipped_side = leg.side.flipped();
            let flipped_dv = model
                .optimize_side(from, to, (leg.from_id, leg.to_id), flipped_side, leg.t_depart, leg.duration.max(1.0))
                .map(|s| s.dv_total);
            flags.push(SideFlag { leg: k, from_id: leg.from_id, to_id: leg.to_id, bound, dv: leg.dv_total, flipped_dv });
        }
    }
    flags
}

impl MissionPlan {
    pub fn side_of_leg(&self, k: usize) -> DriftSide {
        self.legs[k].side
    }
}
