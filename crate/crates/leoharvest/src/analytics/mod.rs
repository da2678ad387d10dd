//! Closed-form network metrics evaluated by adaptive quadrature.
//!
//! Every metric reduces to one- or two-level integrals over the visibility
//! band (inclinations within xi of polar) or over the slant-distance range:
//!
//! - mean visible orbits = lambda sin(xi)
//! - mean visible satellites = (lambda mu / pi) Int_0^xi cos(v) a(v) dv
//! - harvest time fraction = 1 - exp(-lambda Int_0^xi cos(v)(1 - e^(-(mu/pi) a(v))) dv)
//! - delay CDF replaces the per-orbit arc 2a(v) with 2a(v) + omega_s d
//! - data per pass integrates the fading tail across one visible transit
//! - harvesting capacity composes the nearest-satellite distance density
//!   with the ergodic rate integral Int_0^inf P(SNR > 2^v - 1) dv
//!
//! where a(v) = arcsin(sqrt(1 - cos^2(xi) sec^2(v))) is the visible-arc
//! half-angle of an orbit offset v from polar. The companion `simulator`
//! module estimates each of these by Monte Carlo; tests hold the two sides
//! together.

pub mod quadrature;

pub use quadrature::{integrate_1d, integrate_semi_infinite, QuadratureFailure, QuadratureSpec};

use crate::channel::{tail_probability, LinkBudget, NakagamiFading};
use crate::constellation::MotionParams;
use crate::geometry::{
    half_arc_centered, kappa, max_azimuth_xi, visible_arc_half_angle, Angle, GeometryError,
    OrbitGeometry,
};
use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// Errors from metric evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    /// Intensities must be positive and finite.
    #[error("intensities must be positive and finite: lambda = {lambda}, mu = {mu}")]
    InvalidIntensities { lambda: f64, mu: f64 },
    /// Fixed modulation needs a positive rate and threshold.
    #[error("fixed modulation needs rate_m >= 1 and tau > 0, got rate_m = {rate_m}, tau = {tau}")]
    InvalidScheme { rate_m: u32, tau: f64 },
    /// The arc-void delay formula only holds below one satellite revolution.
    #[error(
        "delay {d} s is outside [0, {limit}); beyond the limit the visible arc \
         plus the swept arc exceeds the orbit circumference and the formula wraps"
    )]
    DelayOutOfValidity { d: f64, limit: f64 },
    /// The visibility cap is a single point (slant range equals altitude).
    #[error("degenerate geometry: the visibility cap has zero extent")]
    DegenerateGeometry,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureFailure),
}

/// Intensities of the two-level orbit process: mean orbit count `lambda`,
/// mean satellites per orbit `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoxParams {
    lambda: f64,
    mu: f64,
}

impl CoxParams {
    /// Builds validated intensities; both must be positive and finite.
    pub fn new(lambda: f64, mu: f64) -> Result<Self, AnalyticsError> {
        if !(lambda > 0.0 && lambda.is_finite() && mu > 0.0 && mu.is_finite()) {
            return Err(AnalyticsError::InvalidIntensities { lambda, mu });
        }
        Ok(CoxParams { lambda, mu })
    }

    /// Mean number of orbits.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Mean number of satellites per orbit.
    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// Upload modulation: a fixed m-ary scheme gated by an SNR threshold, or
/// rate adaptation to the instantaneous SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModulationScheme {
    /// `rate_m` bits per symbol whenever SNR exceeds `tau`, else nothing.
    Fixed { rate_m: u32, tau: f64 },
    /// log2(1 + SNR) bits per symbol.
    Adaptive,
}

impl ModulationScheme {
    pub(crate) fn validate(&self) -> Result<(), AnalyticsError> {
        if let ModulationScheme::Fixed { rate_m, tau } = *self {
            if rate_m < 1 || !(tau > 0.0 && tau.is_finite()) {
                return Err(AnalyticsError::InvalidScheme { rate_m, tau });
            }
        }
        Ok(())
    }
}

// ============================================================================
// Visible counts and coverage
// ============================================================================

/// Mean number of orbits crossing the visibility band: lambda sin(xi).
pub fn expected_visible_orbits(params: &CoxParams, xi: Angle) -> f64 {
    params.lambda * xi.rad().sin()
}

/// Mean number of visible satellites:
/// (lambda mu / pi) Int_0^xi cos(v) a(v) dv.
pub fn expected_visible_satellites(
    params: &CoxParams,
    geom: &OrbitGeometry,
    quad: &QuadratureSpec,
) -> Result<f64, AnalyticsError> {
    Ok(params.lambda * params.mu / PI * visible_arc_integral(geom, quad)?)
}

/// Int_0^xi cos(v) a(v) dv — the arc-length kernel shared by the mean count
/// and the moment-matching inversion.
fn visible_arc_integral(
    geom: &OrbitGeometry,
    quad: &QuadratureSpec,
) -> Result<f64, AnalyticsError> {
    let xi = max_azimuth_xi(geom).rad();
    let cos_xi_sq = xi.cos() * xi.cos();
    Ok(integrate_1d(|v| v.cos() * half_arc_centered(cos_xi_sq, v), 0.0, xi, quad)?)
}

/// lambda Int_0^xi cos(v) (1 - exp(-(mu/2pi)(2 a(v) + extra_arc))) dv.
///
/// With extra_arc = 0 this is the exponent of the coverage void probability;
/// with extra_arc = omega_s d it is the delay-window exponent. Sharing one
/// code path makes delay_cdf(0) bitwise equal to the time fraction.
fn band_void_exponent(
    params: &CoxParams,
    geom: &OrbitGeometry,
    extra_arc: f64,
    quad: &QuadratureSpec,
) -> Result<f64, AnalyticsError> {
    let xi = max_azimuth_xi(geom).rad();
    let cos_xi_sq = xi.cos() * xi.cos();
    let rate = params.mu / (2.0 * PI);
    let integrand = |v: f64| {
        let arc = 2.0 * half_arc_centered(cos_xi_sq, v) + extra_arc;
        v.cos() * (1.0 - (-rate * arc).exp())
    };
    Ok(params.lambda * integrate_1d(integrand, 0.0, xi, quad)?)
}

/// Long-run fraction of time at least one satellite is within range:
/// 1 - exp(-lambda Int_0^xi cos(v)(1 - e^(-(mu/pi) a(v))) dv).
pub fn harvest_time_fraction(
    params: &CoxParams,
    geom: &OrbitGeometry,
    quad: &QuadratureSpec,
) -> Result<f64, AnalyticsError> {
    Ok(1.0 - (-band_void_exponent(params, geom, 0.0, quad)?).exp())
}

// ============================================================================
// Data per pass
// ============================================================================

/// Mean bits uploaded during one satellite transit of the visible arc, for
/// an orbit of inclination `phi`.
///
/// Fixed scheme: rate_m * B_w / omega_s * Int over the visible arc of
/// P(SNR(omega) > tau). Adaptive scheme: B_w / omega_s * Int_0^inf dv Int
/// over the arc of P(SNR(omega) > 2^v - 1) — the ergodic log2(1 + SNR)
/// written as a tail integral.
pub fn data_per_pass(
    phi: Angle,
    geom: &OrbitGeometry,
    link: &LinkBudget,
    fading: &NakagamiFading,
    motion: &MotionParams,
    scheme: &ModulationScheme,
    quad: &QuadratureSpec,
) -> Result<f64, AnalyticsError> {
    scheme.validate()?;
    let half_arc = visible_arc_half_angle(geom, phi)?.rad();
    let (w_enter, w_exit) = (FRAC_PI_2 - half_arc, FRAC_PI_2 + half_arc);
    let sin_phi = phi.rad().sin();
    let (r_e, r_o) = (geom.r_e(), geom.r_o());
    let half_alpha = link.alpha() / 2.0;
    // distance^alpha as a function of the argument angle
    let dist_alpha =
        move |w: f64| (r_o * r_o - 2.0 * r_e * r_o * w.sin() * sin_phi + r_e * r_e).powf(half_alpha);
    let snr_scale = link.snr_at_one_meter();
    let fading = *fading;

    match *scheme {
        ModulationScheme::Fixed { rate_m, tau } => {
            let arc = integrate_1d(
                |w| tail_probability(fading, tau * dist_alpha(w) / snr_scale),
                w_enter,
                w_exit,
                quad,
            )?;
            Ok(rate_m as f64 * link.bandwidth_hz() / motion.omega_s() * arc)
        }
        ModulationScheme::Adaptive => {
            let pending = RefCell::new(None);
            let per_level = |v: f64| {
                let threshold = 2f64.powf(v) - 1.0;
                let arc = integrate_1d(
                    |w| tail_probability(fading, threshold * dist_alpha(w) / snr_scale),
                    w_enter,
                    w_exit,
                    quad,
                );
                match arc {
                    Ok(value) => value,
                    Err(failure) => {
                        pending.borrow_mut().get_or_insert(failure);
                        f64::NAN
                    }
                }
            };
            let rate = integrate_semi_infinite(per_level, 0.0, quad);
            if let Some(failure) = pending.into_inner() {
                return Err(failure.into());
            }
            Ok(link.bandwidth_hz() / motion.omega_s() * rate?)
        }
    }
}

// ============================================================================
// Harvesting capacity
// ============================================================================

/// Probability density of the distance to the nearest visible satellite,
/// supported on [altitude, gamma]. Integrates to the harvest time fraction
/// (the remaining mass is the no-coverage event).
///
/// f(u) = (lambda mu u / (pi r_e r_o)) * exp(-lambda Int_0^kappa cos(x)
/// (1 - gbar(x)) dx) * Int gbar along the cap boundary, with
/// gbar(x) = exp(-(mu/pi) a_kappa(x)) the void probability of one orbit's
/// sub-cap arc and kappa = kappa(u). The boundary integral's
/// inverse-square-root endpoint is removed by sin(x) = sin(kappa) sin(t).
pub fn nearest_distance_density(
    params: &CoxParams,
    geom: &OrbitGeometry,
    u: f64,
    quad: &QuadratureSpec,
) -> Result<f64, AnalyticsError> {
    if !(u >= geom.altitude() && u <= geom.gamma()) {
        return Err(GeometryError::OutOfRange {
            value: u,
            min: geom.altitude(),
            max: geom.gamma(),
        }
        .into());
    }
    let kap = kappa(geom, u)?.rad();
    let cos_kap_sq = kap.cos() * kap.cos();
    let (lambda, mu) = (params.lambda, params.mu);
    let g_bar = move |x: f64| (-(mu / PI) * half_arc_centered(cos_kap_sq, x)).exp();

    let void = integrate_1d(|x| x.cos() * (1.0 - g_bar(x)), 0.0, kap, quad)?;
    let sin_kap = kap.sin();
    let boundary = integrate_1d(|t| g_bar((sin_kap * t.sin()).asin()), 0.0, FRAC_PI_2, quad)?;
    Ok(lambda * mu * u / (PI * geom.r_e() * geom.r_o()) * (-lambda * void).exp() * boundary)
}

/// Mean uplink rate to the nearest visible satellite, bits per second:
/// B_w Int_altitude^gamma f(u) Int_0^inf P(SNR(u) > 2^v - 1) dv du.
pub fn harvesting_capacity(
    params: &CoxParams,
    geom: &OrbitGeometry,
    link: &LinkBudget,
    fading: &NakagamiFading,
    quad: &QuadratureSpec,
) -> Result<f64, AnalyticsError> {
    let snr_scale = link.snr_at_one_meter();
    let alpha = link.alpha();
    let fading = *fading;

    let pending = RefCell::new(None);
    let integrand = |u: f64| {
        let result = nearest_distance_density(params, geom, u, quad).and_then(|density| {
            let path_loss = u.powf(alpha) / snr_scale;
            let rate = integrate_semi_infinite(
                |v| tail_probability(fading, (2f64.powf(v) - 1.0) * path_loss),
                0.0,
                quad,
            )?;
            Ok(density * rate)
        });
        match result {
            Ok(value) => value,
            Err(error) => {
                pending.borrow_mut().get_or_insert(error);
                f64::NAN
            }
        }
    };
    let integral = integrate_1d(integrand, geom.altitude(), geom.gamma(), quad);
    if let Some(error) = pending.into_inner() {
        return Err(error);
    }
    Ok(link.bandwidth_hz() * integral?)
}

// ============================================================================
// Delay
// ============================================================================

/// Largest delay for which the arc-void argument stays within one orbit
/// circumference: (2 pi - 2 xi) / omega_s.
pub fn wraparound_limit(geom: &OrbitGeometry, motion: &MotionParams) -> f64 {
    (2.0 * PI - 2.0 * max_azimuth_xi(geom).rad()) / motion.omega_s()
}

/// P(D <= d): probability that some satellite becomes visible within `d`
/// seconds. Valid for 0 <= d < wraparound_limit; beyond that the formula's
/// per-orbit arc exceeds the circumference and it underestimates the void
/// saturation, so an error is returned (the simulator handles any d).
pub fn delay_cdf(
    params: &CoxParams,
    geom: &OrbitGeometry,
    motion: &MotionParams,
    d: f64,
    quad: &QuadratureSpec,
) -> Result<f64, AnalyticsError> {
    let limit = wraparound_limit(geom, motion);
    if !(d >= 0.0 && d < limit) {
        return Err(AnalyticsError::DelayOutOfValidity { d, limit });
    }
    let swept = motion.omega_s() * d;
    Ok(1.0 - (-band_void_exponent(params, geom, swept, quad)?).exp())
}

/// P(D = 0): a satellite is already visible. Identical to
/// harvest_time_fraction (same formula, same code path).
pub fn zero_delay_probability(
    params: &CoxParams,
    geom: &OrbitGeometry,
    quad: &QuadratureSpec,
) -> Result<f64, AnalyticsError> {
    harvest_time_fraction(params, geom, quad)
}

/// P(D = infinity) = exp(-lambda sin xi): no orbit ever crosses the band.
/// (An orbit present but empty of satellites also strands the user; that
/// event has probability O(e^(-mu)) per orbit and is ignored here, matching
/// the closed form. The simulator accounts for it exactly.)
pub fn infinite_delay_probability(params: &CoxParams, geom: &OrbitGeometry) -> f64 {
    (-params.lambda * max_azimuth_xi(geom).rad().sin()).exp()
}

// ============================================================================
// Moment matching
// ============================================================================

/// Finds Cox intensities matching a polar constellation's mean visible orbit
/// and satellite counts: lambda_bar = polar_lambda / sin(xi), and mu_bar
/// solves (lambda_bar mu_bar / pi) Int_0^xi cos(v) a(v) dv =
/// polar_lambda polar_mu xi / pi.
pub fn moment_match_polar_to_cox(
    polar_lambda: f64,
    polar_mu: f64,
    geom: &OrbitGeometry,
    quad: &QuadratureSpec,
) -> Result<CoxParams, AnalyticsError> {
    if !(polar_lambda > 0.0
        && polar_lambda.is_finite()
        && polar_mu > 0.0
        && polar_mu.is_finite())
    {
        return Err(AnalyticsError::InvalidIntensities { lambda: polar_lambda, mu: polar_mu });
    }
    let xi = max_azimuth_xi(geom).rad();
    if xi <= 0.0 {
        return Err(AnalyticsError::DegenerateGeometry);
    }
    let lambda_bar = polar_lambda / xi.sin();
    let arc_integral = visible_arc_integral(geom, quad)?;
    if arc_integral <= 0.0 {
        return Err(AnalyticsError::DegenerateGeometry);
    }
    let mu_bar = polar_lambda * polar_mu * xi / (lambda_bar * arc_integral);
    CoxParams::new(lambda_bar, mu_bar)
}
