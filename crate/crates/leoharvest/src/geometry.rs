//! Spherical geometry relating a pole-sited ground user to a shell of
//! circular orbits.
//!
//! The user sits at (0, 0, r_e); satellites live on the sphere of radius r_o.
//! Everything here is a consequence of the cosine law on the triangle
//! (origin, user, satellite):
//!
//! - `max_azimuth_xi`: polar half-angle xi of the spherical cap reachable
//!   within slant range gamma.
//! - `visible_arc_half_angle`: half the angular extent of the arc an inclined
//!   orbit cuts through that cap.
//! - `user_satellite_distance`: slant range as a function of inclination and
//!   argument angle.
//! - `kappa`: cap half-angle when the range is shrunk from gamma to u.
//!
//! Angles are radians, lengths are meters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Floating-point slack for sqrt arguments at the tangency boundary.
///
/// Integrands are evaluated arbitrarily close to the edge of the visible
/// band, where 1 - cos^2(xi)/cos^2(v) crosses zero; tiny negative values are
/// rounding noise, not domain errors.
const TANGENCY_SLACK: f64 = 1e-12;

/// Errors for geometric preconditions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    /// Shell radii must satisfy r_o > r_e > 0.
    #[error("invalid shell radii: r_e = {r_e} m, r_o = {r_o} m (need r_o > r_e > 0)")]
    InvalidShell { r_e: f64, r_o: f64 },
    /// Communication range must lie between the altitude and the horizon.
    #[error("range gamma = {gamma} m outside [{min} m, {max} m]")]
    RangeOutsideShell { gamma: f64, min: f64, max: f64 },
    /// Inclination too far from polar for the orbit to cross the cap.
    #[error("inclination {phi} rad outside the visible band |phi - pi/2| < {xi} rad")]
    OutOfCap { phi: f64, xi: f64 },
    /// Distance argument outside [altitude, horizon].
    #[error("distance {value} m outside [{min} m, {max} m]")]
    OutOfRange { value: f64, min: f64, max: f64 },
}

// ============================================================================
// Angle
// ============================================================================

/// A plane angle in radians.
///
/// A thin newtype so that signatures distinguish angles from lengths and
/// ratios; arithmetic happens on the raw `f64` via [`Angle::rad`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    /// Wraps a radian value. The value must be finite.
    pub fn from_radians(rad: f64) -> Self {
        debug_assert!(rad.is_finite(), "angle must be finite, got {rad}");
        Angle(rad)
    }

    /// Converts from degrees.
    pub fn from_degrees(deg: f64) -> Self {
        Angle::from_radians(deg.to_radians())
    }

    /// The value in radians.
    pub fn rad(self) -> f64 {
        self.0
    }

    /// The value in degrees.
    pub fn deg(self) -> f64 {
        self.0.to_degrees()
    }

    /// The same direction normalized into [0, 2*pi).
    pub fn wrapped_two_pi(self) -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        Angle(self.0.rem_euclid(two_pi))
    }
}

// ============================================================================
// OrbitGeometry
// ============================================================================

/// Shell geometry: Earth radius, orbit radius, and maximum slant range.
///
/// Invariants enforced at construction (and on deserialization):
/// r_o > r_e > 0, and gamma within [r_o - r_e, sqrt(r_o^2 - r_e^2)] — any
/// shorter range reaches no satellite, any longer range sees past the
/// horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOrbitGeometry")]
pub struct OrbitGeometry {
    r_e: f64,
    r_o: f64,
    gamma: f64,
}

/// Unvalidated mirror used by serde so stored files cannot bypass invariants.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOrbitGeometry {
    r_e: f64,
    r_o: f64,
    gamma: f64,
}

impl TryFrom<RawOrbitGeometry> for OrbitGeometry {
    type Error = GeometryError;

    fn try_from(raw: RawOrbitGeometry) -> Result<Self, GeometryError> {
        OrbitGeometry::new(raw.r_e, raw.r_o, raw.gamma)
    }
}

impl OrbitGeometry {
    /// Validates and builds a shell geometry (all lengths in meters).
    pub fn new(r_e: f64, r_o: f64, gamma: f64) -> Result<Self, GeometryError> {
        if !(r_e > 0.0 && r_o > r_e && r_o.is_finite()) {
            return Err(GeometryError::InvalidShell { r_e, r_o });
        }
        let min = r_o - r_e;
        let max = (r_o * r_o - r_e * r_e).sqrt();
        if !(gamma >= min && gamma <= max) {
            return Err(GeometryError::RangeOutsideShell { gamma, min, max });
        }
        Ok(OrbitGeometry { r_e, r_o, gamma })
    }

    /// Earth radius in meters.
    pub fn r_e(&self) -> f64 {
        self.r_e
    }

    /// Orbit radius in meters.
    pub fn r_o(&self) -> f64 {
        self.r_o
    }

    /// Maximum communication (slant) range in meters.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Orbit altitude r_o - r_e in meters; the shortest possible slant range.
    pub fn altitude(&self) -> f64 {
        self.r_o - self.r_e
    }

    /// Slant range to the horizon, sqrt(r_o^2 - r_e^2); the longest possible.
    pub fn horizon_range(&self) -> f64 {
        (self.r_o * self.r_o - self.r_e * self.r_e).sqrt()
    }
}

// ============================================================================
// Cap and arc geometry
// ============================================================================

/// Polar half-angle xi of the visibility cap.
///
/// Cosine law: xi = arccos((r_e^2 + r_o^2 - gamma^2) / (2 r_e r_o)).
/// The geometry invariants keep the argument inside [-1, 1] up to rounding,
/// which is clamped.
pub fn max_azimuth_xi(geom: &OrbitGeometry) -> Angle {
    let arg =
        (geom.r_e * geom.r_e + geom.r_o * geom.r_o - geom.gamma * geom.gamma)
            / (2.0 * geom.r_e * geom.r_o);
    Angle::from_radians(arg.clamp(-1.0, 1.0).acos())
}

/// Half the angular extent of the visible arc for an orbit of inclination phi.
///
/// An orbit crossing the cap is visible for argument angles in
/// [pi/2 - a, pi/2 + a] with a = arcsin(sqrt(1 - cos^2(xi) csc^2(phi))).
/// Errors with `OutOfCap` when the orbit misses the cap entirely
/// (|phi - pi/2| > xi); exact tangency returns zero.
pub fn visible_arc_half_angle(
    geom: &OrbitGeometry,
    phi: Angle,
) -> Result<Angle, GeometryError> {
    let xi = max_azimuth_xi(geom);
    let sin_phi = phi.rad().sin();
    if sin_phi <= 0.0 {
        return Err(GeometryError::OutOfCap { phi: phi.rad(), xi: xi.rad() });
    }
    let cos_xi = xi.rad().cos();
    let arg = 1.0 - (cos_xi * cos_xi) / (sin_phi * sin_phi);
    if arg < -TANGENCY_SLACK {
        return Err(GeometryError::OutOfCap { phi: phi.rad(), xi: xi.rad() });
    }
    Ok(Angle::from_radians(arg.clamp(0.0, 1.0).sqrt().asin()))
}

/// Arc half-angle as a function of the offset v = |phi - pi/2| from polar,
/// given cos^2(xi). Hot path shared by every analytic integrand; negative
/// rounding noise is clamped exactly like `visible_arc_half_angle`.
pub(crate) fn half_arc_centered(cos_xi_sq: f64, v: f64) -> f64 {
    let cos_v = v.cos();
    let arg = 1.0 - cos_xi_sq / (cos_v * cos_v);
    arg.clamp(0.0, 1.0).sqrt().asin()
}

/// Slant range from the user at (0, 0, r_e) to a satellite at inclination phi
/// and argument omega: sqrt(r_o^2 - 2 r_e r_o sin(omega) sin(phi) + r_e^2).
///
/// Independent of the orbit's longitude — the user sits on the polar axis.
pub fn user_satellite_distance(geom: &OrbitGeometry, phi: Angle, omega: Angle) -> f64 {
    let cross = 2.0 * geom.r_e * geom.r_o * omega.rad().sin() * phi.rad().sin();
    (geom.r_o * geom.r_o - cross + geom.r_e * geom.r_e).sqrt()
}

/// Cap half-angle when the communication range shrinks from gamma to u:
/// kappa(u) = arccos((r_o^2 + r_e^2 - u^2) / (2 r_o r_e)).
///
/// Satisfies kappa(altitude) = 0 and kappa(gamma) = xi. `u` must lie in
/// [altitude, horizon]; a hair of rounding slack is tolerated at both ends
/// because quadrature probes the endpoints.
pub fn kappa(geom: &OrbitGeometry, u: f64) -> Result<Angle, GeometryError> {
    let min = geom.altitude();
    let max = geom.horizon_range();
    let slack = TANGENCY_SLACK * geom.r_o;
    if !(u >= min - slack && u <= max + slack) {
        return Err(GeometryError::OutOfRange { value: u, min, max });
    }
    let arg = (geom.r_o * geom.r_o + geom.r_e * geom.r_e - u * u)
        / (2.0 * geom.r_o * geom.r_e);
    Ok(Angle::from_radians(arg.clamp(-1.0, 1.0).acos()))
}

/// True when a satellite at (phi, omega) is within slant range gamma.
pub fn in_cap(geom: &OrbitGeometry, phi: Angle, omega: Angle) -> bool {
    user_satellite_distance(geom, phi, omega) <= geom.gamma
}
