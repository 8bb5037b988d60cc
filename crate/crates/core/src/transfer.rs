//! Four-impulse drift-orbit transfer between two debris orbits.
//!
//! A transfer is a Hohmann leg down (or up) to a circular drift orbit, a
//! coast on that orbit while differential J2 precession closes the RAAN gap,
//! and a second Hohmann leg onto the target orbit. The drift inclination is
//! bound to one of the two debris inclinations by the side of the drift orbit
//! relative to the precession asymptote.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::orbital::{units, Constants, OrbitalElements, OrbitalError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransferError {
    #[error("drift precession rate too close to the target rate (asymptote)")]
    Asymptote,
    #[error("no positive correction duration exists")]
    Infeasible,
    #[error(transparent)]
    Orbital(#[from] OrbitalError),
}

pub type Result<T> = std::result::Result<T, TransferError>;

/// Smallest precession-rate separation accepted by [`correction_duration`]
/// (rad/s, about 5e-8 deg/day).
pub const MIN_RATE_SEPARATION: f64 = 1e-15;

/// Side of the drift orbit relative to the semi-major axis at which its
/// precession rate would equal the target's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DriftSide {
    BelowTarget,
    AboveTarget,
}

impl DriftSide {
    pub fn flipped(self) -> Self {
        match self {
            DriftSide::BelowTarget => DriftSide::AboveTarget,
            DriftSide::AboveTarget => DriftSide::BelowTarget,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DriftSide::BelowTarget => "below",
            DriftSide::AboveTarget => "above",
        }
    }
}

/// Drift inclination maximising the precession-rate difference with the
/// target: the larger inclination below, the smaller one above.
pub fn drift_inclination(i_from: f64, i_to: f64, side: DriftSide) -> f64 {
    match side {
        DriftSide::BelowTarget => i_from.max(i_to),
        DriftSide::AboveTarget => i_from.min(i_to),
    }
}

/// Time for a drift orbit to close a RAAN gap.
///
/// `gap_at_t0` is `raan_to(t0) - raan_from(t0)`; rates in rad/s; `t_depart`
/// in seconds from t0. The gap at departure is wrapped modulo 2pi so that it
/// has the sign of the closing rate and the result is non-negative.
pub fn correction_duration(gap_at_t0: f64, rate_from: f64, rate_to: f64, rate_drift: f64, t_depart: f64) -> Result<f64> {
    let closing = rate_drift - rate_to;
    if closing.abs() < MIN_RATE_SEPARATION {
        return Err(TransferError::Asymptote);
    }
    let gap = gap_at_t0 + (rate_to - rate_from) * t_depart;
    let numerator = wrap_to_sign(gap, closing);
    let d = numerator / closing;
    if d.is_finite() && d >= 0.0 {
        Ok(d)
    } else {
        Err(TransferError::Infeasible)
    }
}

/// Wraps `gap` into [0, 2pi) when `sign > 0`, or (-2pi, 0] otherwise.
fn wrap_to_sign(gap: f64, sign: f64) -> f64 {
    let mut g = gap.rem_euclid(TAU);
    if g >= TAU {
        g = 0.0;
    }
    if sign < 0.0 && g > 0.0 {
        g -= TAU;
    }
    g
}

/// Result of optimising one debris-to-debris transfer.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferSolution {
    pub from_id: usize,
    pub to_id: usize,
    pub side: DriftSide,
    /// Drift semi-major axis (m).
    pub a_drift: f64,
    /// Drift inclination (rad).
    pub i_drift: f64,
    /// Always 0: only circular drift orbits are modelled.
    pub e_drift: f64,
    /// Departure date (s from t0).
    pub t_depart: f64,
    /// Drift duration (s).
    pub duration: f64,
    pub dv_total: f64,
    /// `[P1, A1, A2, P2]` burn magnitudes (m/s) in execution order.
    pub dv_breakdown: [f64; 4],
    pub feasible: bool,
}

/// Transfer evaluation model: Earth constants, drift altitude window and the
/// asymptote guard distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferModel {
    pub consts: Constants,
    /// Lowest admissible drift altitude (m).
    pub min_altitude: f64,
    /// Highest admissible drift altitude (m).
    pub max_altitude: f64,
    /// Minimum distance between the drift semi-major axis and the asymptote (m).
    pub asymptote_guard: f64,
    /// Grid spacing of the pre-optimiser scan (m).
    pub scan_step: f64,
}

impl Default for TransferModel {
    fn default() -> Self {
        Self {
            consts: Constants::default(),
            min_altitude: 400e3,
            max_altitude: 1200e3,
            asymptote_guard: 10e3,
            scan_step: 5e3,
        }
    }
}

impl TransferModel {
    pub fn with_altitude_bounds(mut self, min_altitude: f64, max_altitude: f64) -> Self {
        self.min_altitude = min_altitude;
        self.max_altitude = max_altitude;
        self
    }

    /// Admissible drift semi-major axis window (m).
    pub fn drift_axis_bounds(&self) -> (f64, f64) {
        (self.consts.earth_radius + self.min_altitude, self.consts.earth_radius + self.max_altitude)
    }

    /// Semi-major axis where a circular drift orbit at `i_drift` precesses at
    /// the target's rate.
    pub fn asymptote_axis(&self, to: &OrbitalElements, i_drift: f64) -> Option<f64> {
        self.consts.axis_for_rate(to.precession_rate(&self.consts), i_drift)
    }

    /// Admissible drift axis interval on `side`, or `None` when empty.
    pub fn side_interval(&self, from: &OrbitalElements, to: &OrbitalElements, side: DriftSide) -> Option<(f64, f64)> {
        let (lo, hi) = self.drift_axis_bounds();
        let i_d = drift_inclination(from.i, to.i, side);
        let (lo, hi) = match (self.asymptote_axis(to, i_d), side) {
            (Some(a_star), DriftSide::BelowTarget) => (lo, hi.min(a_star - self.asymptote_guard)),
            (Some(a_star), DriftSide::AboveTarget) => (lo.max(a_star + self.asymptote_guard), hi),
            // rates of opposite sign never meet: the whole window is on one side
            (None, DriftSide::BelowTarget) if self.drift_is_faster_everywhere(to, i_d) => (lo, hi),
            (None, DriftSide::AboveTarget) if !self.drift_is_faster_everywhere(to, i_d) => (lo, hi),
            (None, _) => return None,
        };
        (hi > lo).then_some((lo, hi))
    }

    fn drift_is_faster_everywhere(&self, to: &OrbitalElements, i_d: f64) -> bool {
        let (lo, _) = self.drift_axis_bounds();
        let rd = self.consts.raan_precession_rate(lo, 0.0, i_d).unwrap_or(0.0);
        rd > to.precession_rate(&self.consts)
    }

    /// `raan_to(t) - raan_from(t)`, unwrapped.
    pub fn raan_gap(&self, from: &OrbitalElements, to: &OrbitalElements, t: f64) -> f64 {
        to.raan_at(t, &self.consts) - from.raan_at(t, &self.consts)
    }

    fn drift_rate(&self, a_drift: f64, i_drift: f64) -> Result<f64> {
        Ok(self.consts.raan_precession_rate(a_drift, 0.0, i_drift)?)
    }

    fn check_guard(&self, to: &OrbitalElements, a_drift: f64, i_drift: f64) -> Result<()> {
        match self.asymptote_axis(to, i_drift) {
            Some(a_star) if (a_drift - a_star).abs() < self.asymptote_guard * (1.0 - 1e-9) => Err(TransferError::Asymptote),
            _ => Ok(()),
        }
    }

    /// Drift duration (s) for departing at `t_depart` onto the given drift orbit.
    pub fn drift_duration(&self, from: &OrbitalElements, to: &OrbitalElements, a_drift: f64, i_drift: f64, t_depart: f64) -> Result<f64> {
        self.check_guard(to, a_drift, i_drift)?;
        let rate_drift = self.drift_rate(a_drift, i_drift)?;
        correction_duration(
            self.raan_gap(from, to, 0.0),
            from.precession_rate(&self.consts),
            to.precession_rate(&self.consts),
            rate_drift,
            t_depart,
        )
    }

    /// Whole turns added to the raw gap at `t_depart` by the modulo wrap.
    /// Keeping this fixed lets the duration be extended linearly in time
    /// across a wrap.
    pub fn branch_turns(&self, from: &OrbitalElements, to: &OrbitalElements, a_drift: f64, i_drift: f64, t_depart: f64) -> Result<f64> {
        let closing = self.drift_rate(a_drift, i_drift)? - to.precession_rate(&self.consts);
        let gap = self.raan_gap(from, to, t_depart);
        Ok(((wrap_to_sign(gap, closing) - gap) / TAU).round())
    }

    /// Duration on a fixed wrap branch; may be negative or infinite.
    pub fn duration_on_branch(&self, from: &OrbitalElements, to: &OrbitalElements, a_drift: f64, i_drift: f64, t_depart: f64, turns: f64) -> Result<f64> {
        let closing = self.drift_rate(a_drift, i_drift)? - to.precession_rate(&self.consts);
        Ok((self.raan_gap(from, to, t_depart) + turns * TAU) / closing)
    }

    /// Total and per-burn cost of the two Hohmann legs. Independent of dates.
    pub fn transfer_cost(&self, from: &OrbitalElements, to: &OrbitalElements, a_drift: f64, i_drift: f64) -> Result<(f64, [f64; 4])> {
        let c = &self.consts;
        let (b1, b2) = c.hohmann_dv(from.a, a_drift, from.i, i_drift)?;
        let (b3, b4) = c.hohmann_dv(a_drift, to.a, i_drift, to.i)?;
        let parts = [b1, b2, b3, b4];
        Ok((parts.iter().sum(), parts))
    }

    /// True when the two orbits share their node at `t` and precess together,
    /// so that no drift is ever needed.
    fn gap_closed(&self, from: &OrbitalElements, to: &OrbitalElements, t: f64) -> bool {
        let gap = self.raan_gap(from, to, t).rem_euclid(TAU);
        gap.min(TAU - gap) < 1e-12
    }

    /// Minimises the transfer cost subject to `duration <= t_cap` over the
    /// drift axis on both sides of the asymptote. Infeasibility (no admissible
    /// drift meets `t_cap`, or the best cost exceeds `dv_max`) is reported
    /// through `feasible = false`.
    pub fn pre_optimize(
        &self,
        from: &OrbitalElements,
        to: &OrbitalElements,
        ids: (usize, usize),
        t_depart: f64,
        t_cap: f64,
        dv_max: f64,
    ) -> TransferSolution {
        let mut best: Option<TransferSolution> = None;
        if self.gap_closed(from, to, t_depart) {
            // direct transfer, the drift orbit is the target orbit
            if let Ok((dv, parts)) = self.transfer_cost(from, to, to.a, to.i) {
                best = Some(self.solution(ids, DriftSide::BelowTarget, to.a, to.i, t_depart, 0.0, dv, parts));
            }
        } else {
            for side in [DriftSide::BelowTarget, DriftSide::AboveTarget] {
                if let Some(sol) = self.optimize_side(from, to, ids, side, t_depart, t_cap) {
                    // ties keep the earlier (below) side
                    if best.as_ref().map_or(true, |b| sol.dv_total < b.dv_total - 1e-9) {
                        best = Some(sol);
                    }
                }
            }
        }
        match best {
            Some(mut sol) => {
                sol.feasible = sol.dv_total <= dv_max;
                sol
            }
            None => self.infeasible_solution(from, to, ids, t_depart),
        }
    }

    /// Best drift on one side, `None` when that side cannot meet `t_cap`.
    pub fn optimize_side(
        &self,
        from: &OrbitalElements,
        to: &OrbitalElements,
        ids: (usize, usize),
        side: DriftSide,
        t_depart: f64,
        t_cap: f64,
    ) -> Option<TransferSolution> {
        let (lo, hi) = self.side_interval(from, to, side)?;
        let i_d = drift_inclination(from.i, to.i, side);
        let dur = |a: f64| self.drift_duration(from, to, a, i_d, t_depart).unwrap_or(f64::INFINITY);
        // duration grows toward the asymptote on either side
        let (far, near) = match side {
            DriftSide::BelowTarget => (lo, hi),
            DriftSide::AboveTarget => (hi, lo),
        };
        if !(dur(far) <= t_cap) {
            return None;
        }
        let limit = if dur(near) <= t_cap {
            near
        } else {
            let (mut ok, mut bad) = (far, near);
            for _ in 0..100 {
                let mid = 0.5 * (ok + bad);
                if dur(mid) <= t_cap {
                    ok = mid;
                } else {
                    bad = mid;
                }
                if (ok - bad).abs() < 1e-6 {
                    break;
                }
            }
            ok
        };
        let (lo, hi) = if far < limit { (far, limit) } else { (limit, far) };
        let cost = |a: f64| self.transfer_cost(from, to, a, i_d).map(|c| c.0).unwrap_or(f64::INFINITY);
        let a = minimize_scalar(cost, lo, hi, self.scan_step);
        let (dv, parts) = self.transfer_cost(from, to, a, i_d).ok()?;
        let d = self.drift_duration(from, to, a, i_d, t_depart).ok()?;
        Some(self.solution(ids, side, a, i_d, t_depart, d, dv, parts))
    }

    /// Evaluates a given drift orbit exactly.
    pub fn evaluate(
        &self,
        from: &OrbitalElements,
        to: &OrbitalElements,
        ids: (usize, usize),
        side: DriftSide,
        a_drift: f64,
        i_drift: f64,
        t_depart: f64,
    ) -> Result<TransferSolution> {
        let (dv, parts) = self.transfer_cost(from, to, a_drift, i_drift)?;
        let d = if self.gap_closed(from, to, t_depart) {
            0.0
        } else {
            self.drift_duration(from, to, a_drift, i_drift, t_depart)?
        };
        Ok(self.solution(ids, side, a_drift, i_drift, t_depart, d, dv, parts))
    }

    #[allow(clippy::too_many_arguments)]
    fn solution(&self, ids: (usize, usize), side: DriftSide, a: f64, i: f64, t_depart: f64, duration: f64, dv: f64, parts: [f64; 4]) -> TransferSolution {
        TransferSolution {
            from_id: ids.0,
            to_id: ids.1,
            side,
            a_drift: a,
            i_drift: i,
            e_drift: 0.0,
            t_depart,
            duration,
            dv_total: dv,
            dv_breakdown: parts,
            feasible: true,
        }
    }

    fn infeasible_solution(&self, from: &OrbitalElements, to: &OrbitalElements, ids: (usize, usize), t_depart: f64) -> TransferSolution {
        let (lo, _) = self.drift_axis_bounds();
        let i_d = drift_inclination(from.i, to.i, DriftSide::BelowTarget);
        let (dv, parts) = self.transfer_cost(from, to, lo, i_d).unwrap_or((f64::INFINITY, [f64::INFINITY; 4]));
        let d = self.drift_duration(from, to, lo, i_d, t_depart).unwrap_or(f64::INFINITY);
        let mut s = self.solution(ids, DriftSide::BelowTarget, lo, i_d, t_depart, d, dv, parts);
        s.feasible = false;
        s
    }
}

/// Grid scan at `step` followed by golden-section refinement around the best
/// grid point.
fn minimize_scalar(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
    if hi - lo <= 0.0 {
        return lo;
    }
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    let mut best = 0;
    let mut best_val = f(grid[0]);
    for (k, &x) in grid.iter().enumerate().skip(1) {
        let v = f(x);
        if v < best_val {
            best = k;
            best_val = v;
        }
    }
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(n)];
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-4 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    // never return something worse than the best grid point
    let x = 0.5 * (a + b);
    if f(x) <= best_val {
        x
    } else {
        grid[best]
    }
}

/// Converts a duration in seconds to days; convenience for reports.
pub fn to_days(seconds: f64) -> f64 {
    seconds / units::DAY
}
