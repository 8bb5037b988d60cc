//! Orbital elements, physical constants, secular J2 nodal precession and
//! impulsive manoeuvre costs.
//!
//! Everything in here works in SI units (metres, seconds, radians). Unit
//! conversion to km / days / degrees happens at the I/O boundary; the helpers
//! in [`units`] are the only place those factors live.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

/// Unit conversion factors used at the boundary.
pub mod units {
    pub const KM: f64 = 1_000.0;
    pub const DAY: f64 = 86_400.0;
    pub const DEG: f64 = std::f64::consts::PI / 180.0;

    pub fn km(x: f64) -> f64 {
        x * KM
    }

    pub fn days(x: f64) -> f64 {
        x * DAY
    }

    pub fn deg(x: f64) -> f64 {
        x * DEG
    }

    /// rad/s to deg/day.
    pub fn rate_deg_per_day(rad_per_s: f64) -> f64 {
        rad_per_s / DEG * DAY
    }
}

/// Altitude of the hard Earth guard used to validate manoeuvres.
pub const EARTH_GUARD_ALTITUDE: f64 = 100.0e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitalError {
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, OrbitalError>;

/// Earth model constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// Equatorial radius (m).
    pub earth_radius: f64,
    /// Gravitational parameter (m^3/s^2).
    pub mu: f64,
    /// First zonal harmonic.
    pub j2: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            earth_radius: 6_378_137.0,
            mu: 3.986e14,
            j2: 1.086e-3,
        }
    }
}

impl Constants {
    /// `3/2 * J2 * sqrt(mu) * R^2`, in m^(7/2)/s.
    pub fn c_j2(&self) -> f64 {
        1.5 * self.j2 * self.mu.sqrt() * self.earth_radius * self.earth_radius
    }

    pub fn guard_radius(&self) -> f64 {
        self.earth_radius + EARTH_GUARD_ALTITUDE
    }

    /// Secular RAAN rate `-C_J2 cos(i) / (a^(7/2) (1-e^2)^2)` in rad/s.
    pub fn raan_precession_rate(&self, a: f64, e: f64, i: f64) -> Result<f64> {
        if !(a > 0.0) {
            return Err(OrbitalError::Domain(format!("semi-major axis must be positive, got {a}")));
        }
        if !(0.0..1.0).contains(&e) {
            return Err(OrbitalError::Domain(format!("eccentricity must lie in [0, 1), got {e}")));
        }
        let one_minus_e2 = 1.0 - e * e;
        Ok(-self.c_j2() * i.cos() / (a.powf(3.5) * one_minus_e2 * one_minus_e2))
    }

    /// Semi-major axis of a circular orbit of inclination `i` whose nodal rate
    /// equals `rate`. `None` when no such orbit exists (sign mismatch).
    pub fn axis_for_rate(&self, rate: f64, i: f64) -> Option<f64> {
        let k = -self.c_j2() * i.cos() / rate;
        (k > 0.0 && k.is_finite()).then(|| k.powf(1.0 / 3.5))
    }

    /// Vis-viva speed at radius `r` on an orbit of semi-major axis `a`.
    pub fn orbital_velocity(&self, a: f64, r: f64) -> Result<f64> {
        if !(a > 0.0 && r > 0.0) {
            return Err(OrbitalError::Domain(format!("a and r must be positive (a={a}, r={r})")));
        }
        let energy = 2.0 / r - 1.0 / a;
        if !(energy > 0.0) {
            return Err(OrbitalError::Domain(format!("2/r - 1/a must be positive (a={a}, r={r})")));
        }
        Ok((self.mu * energy).sqrt())
    }

    /// Two-burn Hohmann transfer between circular orbits. The inclination
    /// change is folded into the burn performed at the larger radius (the
    /// first burn when `a_from > a_to`). Returns `(dv_first, dv_second)`.
    pub fn hohmann_dv(&self, a_from: f64, a_to: f64, i_from: f64, i_to: f64) -> Result<(f64, f64)> {
        let guard = self.guard_radius();
        if !(a_from > guard && a_to > guard) {
            return Err(OrbitalError::Domain(format!(
                "orbit below the Earth guard radius ({:.1} km): a_from={:.1} km, a_to={:.1} km",
                guard / 1e3,
                a_from / 1e3,
                a_to / 1e3
            )));
        }
        let delta_i = i_to - i_from;
        let a_transfer = 0.5 * (a_from + a_to);
        let v_from = self.orbital_velocity(a_from, a_from)?;
        let v_to = self.orbital_velocity(a_to, a_to)?;
        let v_transfer_at_from = self.orbital_velocity(a_transfer, a_from)?;
        let v_transfer_at_to = self.orbital_velocity(a_transfer, a_to)?;
        if a_from >= a_to {
            Ok((
                combined_maneuver_dv(v_from, v_transfer_at_from, delta_i),
                (v_to - v_transfer_at_to).abs(),
            ))
        } else {
            Ok((
                (v_transfer_at_from - v_from).abs(),
                combined_maneuver_dv(v_transfer_at_to, v_to, delta_i),
            ))
        }
    }
}

/// Magnitude of the velocity difference for a burn that also rotates the
/// orbit plane by `delta_i`.
pub fn combined_maneuver_dv(v_before: f64, v_after: f64, delta_i: f64) -> f64 {
    let sq = v_before * v_before + v_after * v_after - 2.0 * v_before * v_after * delta_i.cos();
    // cancellation can leave a tiny negative residue when the two vectors coincide
    sq.max(0.0).sqrt()
}

/// Wraps an angle into [0, 2pi).
pub fn normalize_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Keplerian elements of a debris or drift orbit at a stated epoch. The
/// argument of perigee and anomaly are not tracked: phasing is neglected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitalElements {
    /// Semi-major axis (m).
    pub a: f64,
    pub e: f64,
    /// Inclination (rad).
    pub i: f64,
    /// RAAN at `epoch` (rad), in [0, 2pi).
    pub raan: f64,
    /// Epoch of `raan`, seconds from mission start.
    pub epoch: f64,
}

impl OrbitalElements {
    pub fn new(a: f64, e: f64, i: f64, raan: f64, epoch: f64, consts: &Constants) -> Result<Self> {
        if !(a > consts.earth_radius) {
            return Err(OrbitalError::Domain(format!(
                "semi-major axis {:.3} km is not above the Earth radius",
                a / 1e3
            )));
        }
        if !(0.0..1.0).contains(&e) {
            return Err(OrbitalError::Domain(format!("eccentricity {e} outside [0, 1)")));
        }
        if !(0.0..=PI).contains(&i) {
            return Err(OrbitalError::Domain(format!(
                "inclination {:.4} deg outside [0, 180]",
                i.to_degrees()
            )));
        }
        if !raan.is_finite() || !epoch.is_finite() {
            return Err(OrbitalError::Domain("non-finite RAAN or epoch".into()));
        }
        Ok(Self { a, e, i, raan: normalize_angle(raan), epoch })
    }

    /// Circular orbit shorthand, epoch at mission start.
    pub fn circular(a: f64, i: f64, raan: f64, consts: &Constants) -> Result<Self> {
        Self::new(a, 0.0, i, raan, 0.0, consts)
    }

    pub fn precession_rate(&self, consts: &Constants) -> f64 {
        // elements are validated on construction
        consts
            .raan_precession_rate(self.a, self.e, self.i)
            .expect("validated elements")
    }

    /// Unwrapped RAAN at time `t` (s from mission start).
    pub fn raan_at(&self, t: f64, consts: &Constants) -> f64 {
        self.raan + self.precession_rate(consts) * (t - self.epoch)
    }
}
