#![allow(dead_code)]

pub mod lp;

use adr_core::linmodel::{build_path_model, LinearizedTransfer, PathModel, PathModelSpec, MIN_SEPARATION};
use adr_core::transfer::DriftSide;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random path instance with date-independent durations (`t2c = 0`), so the
/// optimum over one arrangement is a single-constraint LP.
pub struct Instance {
    pub spec: PathModelSpec,
    pub transfers: Vec<LinearizedTransfer>,
}

pub fn random_instance(seed: u64, n_nodes: usize, n_select: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<usize> = (1..=n_nodes).collect();
    let mut transfers = Vec::new();
    for &f in &ids {
        for &t in &ids {
            if f == t || rng.gen_bool(0.15) {
                continue;
            }
            let width: f64 = rng.gen_range(0.0..30.0);
            let lo = -rng.gen_range(0.0..width.max(1e-3));
            let t1c = rng.gen_range(-1.0..1.0);
            transfers.push(LinearizedTransfer {
                from_id: f,
                to_id: t,
                side: DriftSide::BelowTarget,
                i_drift: 1.7,
                c0: rng.gen_range(50.0..250.0),
                c1: rng.gen_range(-2.0..2.0),
                t0c: rng.gen_range(35.0..120.0),
                t1c,
                t2c: 0.0,
                alpha_bounds: (lo, lo + width),
                tau_bounds: (0.0, 0.0),
                date_window: None,
                a_ref: 7000.0,
                t_ref: 0.0,
            });
        }
    }
    let per_debris = rng.gen_range(0.0..50.0);
    let t_max = if rng.gen_bool(0.3) { 1e5 } else { rng.gen_range(60.0..100.0) * (n_select - 1) as f64 };
    let spec = PathModelSpec {
        node_ids: ids,
        reference_dates: vec![0.0; n_nodes],
        tau_bounds: vec![(0.0, t_max); n_nodes],
        per_debris_cost: vec![per_debris; n_nodes],
        per_debris_duration: vec![0.0; n_nodes],
        n_select,
        t_max,
        t_deorb: 0.0,
        start_debris: None,
    };
    Instance { spec, transfers }
}

impl Instance {
    pub fn model(&self) -> Option<PathModel> {
        build_path_model(&self.spec, &self.transfers).ok()
    }

    fn transfer(&self, f: usize, t: usize) -> Option<&LinearizedTransfer> {
        self.transfers.iter().find(|tr| tr.from_id == f && tr.to_id == t)
    }

    /// Best objective of one arrangement of ids, by Lagrangian duality on the
    /// single duration budget.
    pub fn arrangement_optimum(&self, ids: &[usize]) -> Option<f64> {
        let legs: Vec<&LinearizedTransfer> =
            ids.windows(2).map(|w| self.transfer(w[0], w[1])).collect::<Option<Vec<_>>>()?;
        let sep = self.spec.t_deorb.max(MIN_SEPARATION);
        let budget = self.spec.t_max.min(self.spec.t_max - sep * (legs.len() as f64))
            - legs.iter().map(|l| l.t0c - l.t1c * l.alpha_bounds.0).sum::<f64>();
        let fixed_cost: f64 = legs.iter().map(|l| l.c0 - l.c1 * l.alpha_bounds.0).sum::<f64>()
            + self.spec.per_debris_cost[0] * ids.len() as f64;
        // minimise sum c1 a s.t. sum t1 a <= budget, a in boxes
        let min_duration: f64 = legs.iter().map(|l| (l.t1c * l.alpha_bounds.0).min(l.t1c * l.alpha_bounds.1)).sum();
        if min_duration > budget + 1e-9 {
            return None;
        }
        let dual = |lambda: f64| -> f64 {
            legs.iter()
                .map(|l| {
                    let g = l.c1 + lambda * l.t1c;
                    (g * l.alpha_bounds.0).min(g * l.alpha_bounds.1)
                })
                .sum::<f64>()
                - lambda * budget
        };
        let mut best = dual(0.0);
        for l in &legs {
            if l.t1c != 0.0 {
                let bp = -l.c1 / l.t1c;
                if bp > 0.0 {
                    best = best.max(dual(bp));
                }
            }
        }
        Some(fixed_cost + best)
    }

    /// Exhaustive minimum over every ordered arrangement of `n_select` ids.
    pub fn enumeration_optimum(&self) -> Option<(f64, Vec<usize>)> {
        let mut best: Option<(f64, Vec<usize>)> = None;
        let ids = self.spec.node_ids.clone();
        let mut current = Vec::new();
        arrangements(&ids, self.spec.n_select, &mut current, &mut |arr| {
            if let Some(v) = self.arrangement_optimum(arr) {
                if best.as_ref().is_none_or(|b| v < b.0) {
                    best = Some((v, arr.to_vec()));
                }
            }
        });
        best
    }
}

pub fn arrangements(ids: &[usize], k: usize, current: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if current.len() == k {
        f(current);
        return;
    }
    for &id in ids {
        if !current.contains(&id) {
            current.push(id);
            arrangements(ids, k, current, f);
            current.pop();
        }
    }
}

/// The eleven-debris sun-synchronous catalog used throughout the tests:
/// id, a (km), i (deg), RAAN (deg), e.
pub const SSO_CATALOG: [(usize, f64, f64, f64, f64); 11] = [
    (1, 7030.5, 98.0, 221.1, 1e-4),
    (2, 7055.3, 98.1, 188.3, 1e-4),
    (3, 7080.0, 98.2, 164.4, 1e-4),
    (4, 7104.4, 98.3, 235.0, 3e-4),
    (5, 7128.5, 98.4, 174.7, 0.0),
    (6, 7152.5, 98.5, 194.1, 1e-4),
    (7, 7176.3, 98.6, 149.0, 1e-4),
    (8, 7200.0, 98.7, 180.3, 1e-4),
    (9, 7223.2, 98.8, 200.6, 2e-4),
    (10, 7246.4, 98.9, 191.0, 1e-4),
    (11, 7269.3, 99.0, 160.2, 3e-4),
];

pub fn sso_catalog() -> Vec<adr_core::planner::Debris> {
    use adr_core::orbital::{units, Constants, OrbitalElements};
    let consts = Constants::default();
    SSO_CATALOG
        .iter()
        .map(|&(id, a, i, raan, e)| adr_core::planner::Debris {
            id,
            elements: OrbitalElements::new(a * units::KM, e, i * units::DEG, raan * units::DEG, 0.0, &consts).unwrap(),
        })
        .collect()
}

/// Cheapest admissible drift on a 1 km grid over both sides whose duration
/// from `t_depart` is at most `t_cap`: (cost, axis).
pub fn grid_min_cost(
    tm: &adr_core::transfer::TransferModel,
    from: &adr_core::orbital::OrbitalElements,
    to: &adr_core::orbital::OrbitalElements,
    t_depart: f64,
    t_cap: f64,
) -> Option<(f64, f64)> {
    use adr_core::transfer::drift_inclination;
    let (lo, hi) = tm.drift_axis_bounds();
    let mut best: Option<(f64, f64)> = None;
    for side in [DriftSide::BelowTarget, DriftSide::AboveTarget] {
        let i_d = drift_inclination(from.i, to.i, side);
        let steps = ((hi - lo) / 1e3).floor() as usize;
        for k in 0..=steps {
            let a = lo + 1e3 * k as f64;
            let on_side = match tm.asymptote_axis(to, i_d) {
                Some(a_star) => match side {
                    DriftSide::BelowTarget => a <= a_star - tm.asymptote_guard,
                    DriftSide::AboveTarget => a >= a_star + tm.asymptote_guard,
                },
                None => true,
            };
            if !on_side {
                continue;
            }
            if let (Ok(d), Ok((c, _))) = (tm.drift_duration(from, to, a, i_d, t_depart), tm.transfer_cost(from, to, a, i_d)) {
                if d <= t_cap && best.is_none_or(|b| c < b.0) {
                    best = Some((c, a));
                }
            }
        }
    }
    best
}
