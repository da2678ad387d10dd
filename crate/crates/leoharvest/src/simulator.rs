//! Monte Carlo estimators mirroring every analytic metric.
//!
//! Each trial draws a fresh constellation snapshot (and fading where needed)
//! from its own rng seeded by base_seed + trial_index, so results do not
//! depend on scheduling. Trials are processed in fixed-size chunks; chunk
//! partial sums are combined in chunk order, making every estimate
//! bit-identical across thread counts and across runs.
//!
//! The estimators deliberately avoid the analytics module's quadrature: they
//! sample the constellation law directly and count events, which is what
//! makes them independent oracles for the closed forms.
//!
//! The typical user sits on the polar axis, where Earth rotation changes
//! orbit longitudes but no user-to-satellite distance; the
//! include_earth_rotation flag is accepted for interface completeness and
//! documented as having no effect on any estimate.

use crate::analytics::{AnalyticsError, CoxParams, ModulationScheme};
use crate::channel::{fading_sampler, LinkBudget, NakagamiFading};
use crate::constellation::MotionParams;
use crate::geometry::{max_azimuth_xi, visible_arc_half_angle, Angle, GeometryError, OrbitGeometry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// Trials per work unit. Fixed (not tunable) so that the reduction order,
/// and therefore every floating-point sum, is independent of thread count.
const CHUNK: usize = 4096;

/// Errors from simulation setup.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulatorError {
    /// Invalid simulation configuration.
    #[error("invalid simulation configuration: {reason}")]
    InvalidConfig { reason: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

/// How many trials to run, how to seed them, and how to report uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    trials: usize,
    base_seed: u64,
    time_step: f64,
    include_earth_rotation: bool,
    confidence_level: f64,
}

impl SimConfig {
    /// Config with `trials` and `base_seed`; time step 1 s, no Earth
    /// rotation, 95% confidence.
    pub fn new(trials: usize, base_seed: u64) -> Result<Self, SimulatorError> {
        if trials == 0 {
            return Err(SimulatorError::InvalidConfig {
                reason: "trials must be at least 1".into(),
            });
        }
        Ok(SimConfig {
            trials,
            base_seed,
            time_step: 1.0,
            include_earth_rotation: false,
            confidence_level: 0.95,
        })
    }

    /// Replaces the time step (seconds) used by time-stepped estimators.
    /// For pass simulation, (pass duration)/1000 is the documented default;
    /// see [`pass_time_step`].
    pub fn with_time_step(mut self, time_step: f64) -> Result<Self, SimulatorError> {
        if !(time_step > 0.0 && time_step.is_finite()) {
            return Err(SimulatorError::InvalidConfig {
                reason: format!("time_step must be positive, got {time_step}"),
            });
        }
        self.time_step = time_step;
        Ok(self)
    }

    /// Sets the (distance-preserving, hence inert) Earth-rotation flag.
    pub fn with_earth_rotation(mut self, include: bool) -> Self {
        self.include_earth_rotation = include;
        self
    }

    /// Replaces the two-sided confidence level (in (0, 1)).
    pub fn with_confidence_level(mut self, level: f64) -> Result<Self, SimulatorError> {
        if !(level > 0.0 && level < 1.0) {
            return Err(SimulatorError::InvalidConfig {
                reason: format!("confidence level must be in (0, 1), got {level}"),
            });
        }
        self.confidence_level = level;
        Ok(self)
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn time_step(&self) -> f64 {
        self.time_step
    }

    pub fn include_earth_rotation(&self) -> bool {
        self.include_earth_rotation
    }

    pub fn confidence_level(&self) -> f64 {
        self.confidence_level
    }
}

/// A Monte Carlo mean with a normal-approximation confidence half-width.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricEstimate {
    /// Which metric this estimates.
    pub metric_name: String,
    /// Sample mean over all trials.
    pub mean: f64,
    /// Confidence half-interval at the configured level.
    pub half_width: f64,
    /// Number of trials behind the estimate.
    pub trials: usize,
    /// Base seed the trial streams derive from.
    pub seed: u64,
}

impl MetricEstimate {
    /// Whether `value` lies inside the confidence interval.
    pub fn contains(&self, value: f64) -> bool {
        (value - self.mean).abs() <= self.half_width
    }

    /// |value - mean| in units of the standard error (half_width / z).
    pub fn sigmas_from(&self, value: f64, config: &SimConfig) -> f64 {
        let z = normal_quantile(0.5 + config.confidence_level / 2.0);
        if self.half_width == 0.0 {
            if value == self.mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (value - self.mean).abs() / (self.half_width / z)
        }
    }
}

// ============================================================================
// Deterministic chunked reduction
// ============================================================================

/// Running (count, mean, sum of squared deviations) in Welford form, which
/// stays well-conditioned even when the values are large and nearly equal.
#[derive(Clone, Copy, Default)]
struct RunningMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan's pairwise combination; exact when both sides agree.
    fn merge(self, other: RunningMoments) -> RunningMoments {
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return other;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let weight = other.count as f64 / count as f64;
        RunningMoments {
            count,
            mean: self.mean + delta * weight,
            m2: self.m2 + other.m2 + delta * delta * weight * self.count as f64,
        }
    }

    fn sample_variance(&self) -> f64 {
        if self.count > 1 {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        } else {
            0.0
        }
    }
}

/// Runs `per_trial` once per trial with its own seeded rng; chunk moments
/// are merged in fixed chunk order regardless of which worker ran them.
fn monte_carlo_mean<F>(
    metric_name: &str,
    config: &SimConfig,
    per_trial: F,
) -> MetricEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let trials = config.trials;
    let n_chunks = trials.div_ceil(CHUNK);
    let partials: Vec<RunningMoments> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(trials);
            let mut moments = RunningMoments::default();
            for trial in lo..hi {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(config.base_seed.wrapping_add(trial as u64));
                moments.push(per_trial(&mut rng));
            }
            moments
        })
        .collect();

    let moments = partials
        .into_iter()
        .fold(RunningMoments::default(), RunningMoments::merge);
    let z = normal_quantile(0.5 + config.confidence_level / 2.0);
    MetricEstimate {
        metric_name: metric_name.to_string(),
        mean: moments.mean,
        half_width: z * (moments.sample_variance() / trials as f64).sqrt(),
        trials,
        seed: config.base_seed,
    }
}

/// Acklam's rational approximation to the standard normal quantile,
/// |error| < 1.2e-9 — far below Monte Carlo resolution.
fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    }
}

// ============================================================================
// Snapshot trial kernels
// ============================================================================

/// Precomputed per-geometry quantities shared by every trial.
struct BandGeometry {
    sin_xi: f64,
    cos_xi: f64,
    orbit_count: Poisson<f64>,
    sat_count: Poisson<f64>,
}

impl BandGeometry {
    fn new(params: &CoxParams, geom: &OrbitGeometry) -> Self {
        let xi = max_azimuth_xi(geom).rad();
        BandGeometry {
            sin_xi: xi.sin(),
            cos_xi: xi.cos(),
            // intensities are validated positive by CoxParams
            orbit_count: Poisson::new(params.lambda()).expect("lambda > 0"),
            sat_count: Poisson::new(params.mu()).expect("mu > 0"),
        }
    }

    /// Draws one orbit inclination as sin(phi): cos(phi) = 1 - 2U, and
    /// returns Some(sin_phi) only when the orbit crosses the visibility band
    /// (|cos phi| < sin xi). Out-of-band orbits never contribute.
    fn band_orbit<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        let cos_phi: f64 = 1.0 - 2.0 * rng.random::<f64>();
        (cos_phi.abs() < self.sin_xi).then(|| (1.0 - cos_phi * cos_phi).sqrt())
    }

    /// A satellite at argument omega on an orbit of inclination phi is in
    /// the cap iff sin(omega) sin(phi) >= cos(xi) (distance condition).
    fn in_cap(&self, sin_phi: f64, omega: f64) -> bool {
        omega.sin() * sin_phi >= self.cos_xi
    }

    /// Half-angle of the visible argument arc for a band orbit.
    fn half_arc(&self, sin_phi: f64) -> f64 {
        (1.0 - (self.cos_xi * self.cos_xi) / (sin_phi * sin_phi))
            .clamp(0.0, 1.0)
            .sqrt()
            .asin()
    }
}

fn poisson_draw<R: Rng + ?Sized>(dist: &Poisson<f64>, rng: &mut R) -> usize {
    dist.sample(rng) as usize
}

// ============================================================================
// Estimators
// ============================================================================

/// Mean number of visible satellites over snapshot draws.
pub fn estimate_visible_count(
    params: &CoxParams,
    geom: &OrbitGeometry,
    sim: &SimConfig,
) -> MetricEstimate {
    let band = BandGeometry::new(params, geom);
    monte_carlo_mean("visible_sats", sim, |rng| {
        let mut count = 0u32;
        for _ in 0..poisson_draw(&band.orbit_count, rng) {
            let Some(sin_phi) = band.band_orbit(rng) else { continue };
            for _ in 0..poisson_draw(&band.sat_count, rng) {
                if band.in_cap(sin_phi, rng.random_range(0.0..2.0 * PI)) {
                    count += 1;
                }
            }
        }
        count as f64
    })
}

/// Mean number of orbits crossing the visibility band over snapshot draws.
pub fn estimate_visible_orbits(
    params: &CoxParams,
    geom: &OrbitGeometry,
    sim: &SimConfig,
) -> MetricEstimate {
    let band = BandGeometry::new(params, geom);
    monte_carlo_mean("visible_orbits", sim, |rng| {
        (0..poisson_draw(&band.orbit_count, rng))
            .filter(|_| band.band_orbit(rng).is_some())
            .count() as f64
    })
}

/// Fraction of snapshot draws with at least one visible satellite
/// (the harvest time fraction, by time invariance of the snapshot law).
pub fn estimate_time_fraction(
    params: &CoxParams,
    geom: &OrbitGeometry,
    sim: &SimConfig,
) -> MetricEstimate {
    let band = BandGeometry::new(params, geom);
    monte_carlo_mean("time_fraction", sim, |rng| {
        let n_orbits = poisson_draw(&band.orbit_count, rng);
        for _ in 0..n_orbits {
            let Some(sin_phi) = band.band_orbit(rng) else { continue };
            for _ in 0..poisson_draw(&band.sat_count, rng) {
                if band.in_cap(sin_phi, rng.random_range(0.0..2.0 * PI)) {
                    return 1.0;
                }
            }
        }
        0.0
    })
}

/// Recommended pass-simulation step: (pass duration at inclination phi)/1000.
pub fn pass_time_step(
    phi: Angle,
    geom: &OrbitGeometry,
    motion: &MotionParams,
) -> Result<f64, SimulatorError> {
    let half_arc = visible_arc_half_angle(geom, phi)?.rad();
    Ok(2.0 * half_arc / motion.omega_s() / 1000.0)
}

/// Time-stepped upload through one satellite transit of the visible arc.
///
/// The satellite crosses from argument pi/2 - a to pi/2 + a at omega_s; each
/// step draws an independent fading value (the step doubles as the coherence
/// time) and accrues rate_m*B_w*dt when SNR clears tau (fixed scheme) or
/// B_w*dt*log2(1+SNR) (adaptive).
pub fn simulate_pass(
    phi: Angle,
    geom: &OrbitGeometry,
    link: &LinkBudget,
    fading: &NakagamiFading,
    motion: &MotionParams,
    scheme: &ModulationScheme,
    sim: &SimConfig,
) -> Result<MetricEstimate, SimulatorError> {
    scheme.validate()?;
    let half_arc = visible_arc_half_angle(geom, phi)?.rad();
    let duration = 2.0 * half_arc / motion.omega_s();
    let steps = ((duration / sim.time_step).ceil() as usize).max(1);
    let dt = duration / steps as f64;

    let sin_phi = phi.rad().sin();
    let (r_e, r_o) = (geom.r_e(), geom.r_o());
    let neg_half_alpha = -link.alpha() / 2.0;
    let snr_scale = link.snr_at_one_meter();
    let bandwidth = link.bandwidth_hz();
    let omega_s = motion.omega_s();
    let w_enter = FRAC_PI_2 - half_arc;
    let sampler = fading_sampler(*fading);
    let scheme = *scheme;

    Ok(monte_carlo_mean("data_per_pass", sim, move |rng| {
        let mut bits = 0.0;
        for step in 0..steps {
            // midpoint argument of this step
            let w = w_enter + omega_s * dt * (step as f64 + 0.5);
            let dist_sq = r_o * r_o - 2.0 * r_e * r_o * w.sin() * sin_phi + r_e * r_e;
            let h = sampler.sample(rng);
            let snr = snr_scale * h * dist_sq.powf(neg_half_alpha);
            match scheme {
                ModulationScheme::Fixed { rate_m, tau } => {
                    if snr > tau {
                        bits += rate_m as f64 * bandwidth * dt;
                    }
                }
                ModulationScheme::Adaptive => {
                    bits += bandwidth * dt * (1.0 + snr).log2();
                }
            }
        }
        bits
    }))
}

/// Mean instantaneous rate to the nearest visible satellite: per trial, the
/// nearest visible distance u (0 rate if none), one fading draw, and
/// B_w log2(1 + SNR(u)).
pub fn estimate_capacity(
    params: &CoxParams,
    geom: &OrbitGeometry,
    link: &LinkBudget,
    fading: &NakagamiFading,
    sim: &SimConfig,
) -> MetricEstimate {
    let band = BandGeometry::new(params, geom);
    let (r_e, r_o) = (geom.r_e(), geom.r_o());
    let neg_half_alpha = -link.alpha() / 2.0;
    let snr_scale = link.snr_at_one_meter();
    let bandwidth = link.bandwidth_hz();
    let sampler = fading_sampler(*fading);

    monte_carlo_mean("capacity", sim, move |rng| {
        let mut nearest_sq = f64::INFINITY;
        for _ in 0..poisson_draw(&band.orbit_count, rng) {
            let Some(sin_phi) = band.band_orbit(rng) else { continue };
            for _ in 0..poisson_draw(&band.sat_count, rng) {
                let omega: f64 = rng.random_range(0.0..2.0 * PI);
                let sin_product = omega.sin() * sin_phi;
                if sin_product >= band.cos_xi {
                    let dist_sq = r_o * r_o - 2.0 * r_e * r_o * sin_product + r_e * r_e;
                    nearest_sq = nearest_sq.min(dist_sq);
                }
            }
        }
        if nearest_sq.is_finite() {
            let h = sampler.sample(rng);
            let snr = snr_scale * h * nearest_sq.powf(neg_half_alpha);
            bandwidth * (1.0 + snr).log2()
        } else {
            0.0
        }
    })
}

/// One trial of the waiting time until some satellite enters the cap,
/// computed in closed form: a satellite already inside waits 0; otherwise it
/// reaches the arc entry argument pi/2 - a after ((pi/2 - a) - omega mod 2pi)
/// / omega_s seconds. Infinity when no band orbit carries a satellite.
fn delay_trial(band: &BandGeometry, omega_s: f64, rng: &mut ChaCha8Rng) -> f64 {
    let mut wait = f64::INFINITY;
    for _ in 0..poisson_draw(&band.orbit_count, rng) {
        let Some(sin_phi) = band.band_orbit(rng) else { continue };
        let entry = FRAC_PI_2 - band.half_arc(sin_phi);
        let exit = FRAC_PI_2 + band.half_arc(sin_phi);
        for _ in 0..poisson_draw(&band.sat_count, rng) {
            let omega = rng.random_range(0.0..2.0 * PI);
            if omega >= entry && omega <= exit {
                return 0.0;
            }
            wait = wait.min((entry - omega).rem_euclid(2.0 * PI) / omega_s);
        }
    }
    wait
}

/// Empirical CDF of the delay on `d_grid`: one shared set of trials, one
/// estimate (P(D <= d), binomial CI) per grid point. Monotone in d by
/// construction. Values beyond the analytic wraparound limit are fine here —
/// the simulation wraps exactly.
pub fn estimate_delay_cdf(
    params: &CoxParams,
    geom: &OrbitGeometry,
    motion: &MotionParams,
    d_grid: &[f64],
    sim: &SimConfig,
) -> Vec<MetricEstimate> {
    let band = BandGeometry::new(params, geom);
    let omega_s = motion.omega_s();
    let trials = sim.trials;
    let n_chunks = trials.div_ceil(CHUNK);

    // per chunk: how many trial delays land at or below each grid point
    let counts: Vec<Vec<u64>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(trials);
            let mut hits = vec![0u64; d_grid.len()];
            for trial in lo..hi {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(sim.base_seed.wrapping_add(trial as u64));
                let delay = delay_trial(&band, omega_s, &mut rng);
                for (slot, &d) in hits.iter_mut().zip(d_grid.iter()) {
                    if delay <= d {
                        *slot += 1;
                    }
                }
            }
            hits
        })
        .collect();

    let z = normal_quantile(0.5 + sim.confidence_level / 2.0);
    let n = trials as f64;
    d_grid
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let hit: u64 = counts.iter().map(|c| c[i]).sum();
            let p = hit as f64 / n;
            let variance = if trials > 1 { p * (1.0 - p) * n / (n - 1.0) } else { 0.0 };
            MetricEstimate {
                metric_name: "delay_cdf".to_string(),
                mean: p,
                half_width: z * (variance / n).sqrt(),
                trials,
                seed: sim.base_seed,
            }
        })
        .collect()
}

/// Fraction of trials whose delay is infinite: no orbit crosses the band,
/// or every band orbit is empty of satellites. (The closed form
/// exp(-lambda sin xi) ignores the second event; for mu >= 10 the two agree
/// to within e^{-10}.)
pub fn estimate_infinite_delay(
    params: &CoxParams,
    geom: &OrbitGeometry,
    sim: &SimConfig,
) -> MetricEstimate {
    let band = BandGeometry::new(params, geom);
    monte_carlo_mean("p_inf_delay", sim, |rng| {
        let mut stranded = 1.0;
        for _ in 0..poisson_draw(&band.orbit_count, rng) {
            if band.band_orbit(rng).is_none() {
                continue;
            }
            if poisson_draw(&band.sat_count, rng) > 0 {
                stranded = 0.0;
                // keep draining orbit draws? Not needed: remaining draws
                // cannot change the indicator, and per-trial streams are
                // independent, so early exit is safe.
                break;
            }
        }
        stranded
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{
        self, delay_cdf, harvest_time_fraction, infinite_delay_probability, QuadratureSpec,
    };
    use crate::channel::noise_power_from_density;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const KM: f64 = 1000.0;

    fn geom(r_o_km: f64, gamma_km: f64) -> OrbitGeometry {
        OrbitGeometry::new(6400.0 * KM, r_o_km * KM, gamma_km * KM).unwrap()
    }

    fn link(gain_db: f64) -> LinkBudget {
        let noise = noise_power_from_density(-174.0, 2e7).unwrap();
        LinkBudget::new(1.0, 10f64.powf(gain_db / 10.0), 2.0, noise, 2e7).unwrap()
    }

    fn quad() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0, 1).is_err());
        let sim = SimConfig::new(10, 1).unwrap();
        assert!(sim.with_time_step(0.0).is_err());
        assert!(sim.with_time_step(-1.0).is_err());
        assert!(sim.with_confidence_level(1.0).is_err());
        assert!(sim.with_confidence_level(0.0).is_err());
        let tuned = sim.with_time_step(0.25).unwrap().with_confidence_level(0.99).unwrap();
        assert_relative_eq!(tuned.time_step(), 0.25);
        assert_relative_eq!(tuned.confidence_level(), 0.99);
    }

    #[test]
    fn normal_quantile_reference_points() {
        assert_abs_diff_eq!(normal_quantile(0.5), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(normal_quantile(0.975), 1.959963984540054, epsilon = 1e-8);
        assert_abs_diff_eq!(normal_quantile(0.995), 2.5758293035489004, epsilon = 1e-8);
        assert_abs_diff_eq!(normal_quantile(0.005), -2.5758293035489004, epsilon = 1e-8);
        assert_abs_diff_eq!(normal_quantile(0.0001), -3.719016485455709, epsilon = 1e-7);
    }

    #[test]
    fn estimates_are_bit_identical_across_thread_counts_and_runs() {
        let g = geom(7000.0, 900.0);
        let params = CoxParams::new(25.0, 12.0).unwrap();
        let sim = SimConfig::new(20_000, 99).unwrap();

        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(7).build().unwrap();
        let a = single.install(|| estimate_time_fraction(&params, &g, &sim));
        let b = many.install(|| estimate_time_fraction(&params, &g, &sim));
        let c = estimate_time_fraction(&params, &g, &sim);
        assert_eq!(a, b);
        assert_eq!(b, c);
        assert_eq!(a.mean.to_bits(), c.mean.to_bits());
        assert_eq!(a.half_width.to_bits(), c.half_width.to_bits());

        // different seed, different stream; capacity has continuous trial
        // values, so distinct streams cannot collide on the mean
        let lk = link(20.0);
        let fading = NakagamiFading::new(1).unwrap();
        let small = SimConfig::new(2_000, 99).unwrap();
        let other = SimConfig::new(2_000, 100).unwrap();
        let d = estimate_capacity(&params, &g, &lk, &fading, &small);
        let e = estimate_capacity(&params, &g, &lk, &fading, &other);
        assert_ne!(d.mean.to_bits(), e.mean.to_bits());
    }

    #[test]
    fn visible_count_matches_analytics() {
        // r_e 6400, r_o 7000, gamma 1000: E[N] = 0.0035714...*lambda*mu
        let g = geom(7000.0, 1000.0);
        let params = CoxParams::new(40.0, 70.0).unwrap();
        let sim = SimConfig::new(100_000, 7).unwrap();
        let expected =
            analytics::expected_visible_satellites(&params, &g, &quad()).unwrap();
        let estimate = estimate_visible_count(&params, &g, &sim);
        let sigmas = estimate.sigmas_from(expected, &sim);
        assert!(
            sigmas < 3.0,
            "estimate {} +/- {} vs analytic {expected} ({sigmas:.2} sigma)",
            estimate.mean,
            estimate.half_width
        );
    }

    #[test]
    fn visible_orbit_count_matches_closed_form() {
        let g = geom(7000.0, 900.0);
        let params = CoxParams::new(30.0, 5.0).unwrap();
        let sim = SimConfig::new(100_000, 11).unwrap();
        let expected = analytics::expected_visible_orbits(&params, max_azimuth_xi(&g));
        let estimate = estimate_visible_orbits(&params, &g, &sim);
        let sigmas = estimate.sigmas_from(expected, &sim);
        assert!(sigmas < 3.0, "{} vs {expected} ({sigmas:.2} sigma)", estimate.mean);
    }

    #[test]
    fn time_fraction_matches_analytics() {
        // Fig-6-style geometry: altitude 700 km, gamma 750 km
        let g = geom(7100.0, 750.0);
        let params = CoxParams::new(25.0, 25.0).unwrap();
        let sim = SimConfig::new(200_000, 13).unwrap();
        let expected = harvest_time_fraction(&params, &g, &quad()).unwrap();
        let estimate = estimate_time_fraction(&params, &g, &sim);
        let sigmas = estimate.sigmas_from(expected, &sim);
        assert!(
            sigmas < 3.0,
            "estimate {} +/- {} vs analytic {expected} ({sigmas:.2} sigma)",
            estimate.mean,
            estimate.half_width
        );
    }

    #[test]
    fn pass_simulation_matches_analytics_overhead() {
        let g = geom(7000.0, 900.0);
        let motion = MotionParams::keplerian(&g);
        let lk = link(20.0);
        let fading = NakagamiFading::new(1).unwrap();
        let scheme = ModulationScheme::Fixed { rate_m: 1, tau: 1.0 };
        let phi = Angle::from_radians(FRAC_PI_2);

        let step = pass_time_step(phi, &g, &motion).unwrap();
        let sim = SimConfig::new(2_000, 17).unwrap().with_time_step(step).unwrap();
        let estimate =
            simulate_pass(phi, &g, &lk, &fading, &motion, &scheme, &sim).unwrap();
        let analytic = analytics::data_per_pass(
            phi,
            &g,
            &lk,
            &fading,
            &motion,
            &scheme,
            &quad(),
        )
        .unwrap();
        let rel = (estimate.mean - analytic).abs() / analytic;
        assert!(
            rel < 0.03,
            "pass sim {} vs analytic {analytic}: {rel:.4} relative",
            estimate.mean
        );
    }

    #[test]
    fn pass_simulation_halving_the_step_barely_moves_the_estimate() {
        let g = geom(7000.0, 900.0);
        let motion = MotionParams::keplerian(&g);
        let lk = link(20.0);
        let fading = NakagamiFading::new(1).unwrap();
        let scheme = ModulationScheme::Fixed { rate_m: 1, tau: 1.0 };
        let phi = Angle::from_radians(FRAC_PI_2);
        let step = pass_time_step(phi, &g, &motion).unwrap();

        let coarse_cfg = SimConfig::new(2_000, 21).unwrap().with_time_step(step).unwrap();
        let fine_cfg =
            SimConfig::new(2_000, 21).unwrap().with_time_step(step / 2.0).unwrap();
        let coarse = simulate_pass(phi, &g, &lk, &fading, &motion, &scheme, &coarse_cfg)
            .unwrap();
        let fine =
            simulate_pass(phi, &g, &lk, &fading, &motion, &scheme, &fine_cfg).unwrap();
        let shift = (coarse.mean - fine.mean).abs() / fine.mean;
        assert!(shift < 0.002, "halving the step moved the estimate by {shift:.5}");
    }

    #[test]
    fn pass_simulation_with_sure_fading_is_the_full_arc() {
        // tau far below any SNR in the cap: every step succeeds, so the
        // upload is rate_m * B_w * pass duration
        let g = geom(7000.0, 900.0);
        let motion = MotionParams::keplerian(&g);
        let lk = link(20.0);
        let fading = NakagamiFading::new(1).unwrap();
        let phi = Angle::from_radians(FRAC_PI_2);
        let half_arc = visible_arc_half_angle(&g, phi).unwrap().rad();
        let duration = 2.0 * half_arc / motion.omega_s();

        let scheme = ModulationScheme::Fixed { rate_m: 2, tau: 1e-30 };
        let sim = SimConfig::new(50, 3).unwrap().with_time_step(duration / 500.0).unwrap();
        let estimate = simulate_pass(phi, &g, &lk, &fading, &motion, &scheme, &sim).unwrap();
        assert_relative_eq!(
            estimate.mean,
            2.0 * lk.bandwidth_hz() * duration,
            max_relative = 1e-12
        );
        assert_abs_diff_eq!(estimate.half_width, 0.0);

        // tau far above any attainable SNR: nothing ever uploads
        let hopeless = ModulationScheme::Fixed { rate_m: 2, tau: 1e30 };
        let nothing = simulate_pass(phi, &g, &lk, &fading, &motion, &hopeless, &sim).unwrap();
        assert_abs_diff_eq!(nothing.mean, 0.0);

        // outside the band there is no pass at all
        let xi = max_azimuth_xi(&g).rad();
        assert!(matches!(
            simulate_pass(
                Angle::from_radians(FRAC_PI_2 + 2.0 * xi),
                &g,
                &lk,
                &fading,
                &motion,
                &scheme,
                &sim
            ),
            Err(SimulatorError::Geometry(GeometryError::OutOfCap { .. }))
        ));
    }

    #[test]
    fn capacity_estimate_matches_analytics() {
        let g = geom(7000.0, 1200.0);
        let lk = link(35.0);
        let fading = NakagamiFading::new(1).unwrap();
        let params = CoxParams::new(50.0, 50.0).unwrap();
        let sim = SimConfig::new(10_000, 23).unwrap();
        let analytic =
            analytics::harvesting_capacity(&params, &g, &lk, &fading, &quad()).unwrap();
        let estimate = estimate_capacity(&params, &g, &lk, &fading, &sim);
        let rel = (estimate.mean - analytic).abs() / analytic;
        assert!(
            rel < 0.03,
            "capacity sim {} vs analytic {analytic}: {rel:.4} relative",
            estimate.mean
        );
    }

    #[test]
    fn delay_cdf_estimates_match_analytics() {
        let g = geom(7000.0, 900.0);
        let motion = MotionParams::keplerian(&g);
        let params = CoxParams::new(10.0, 10.0).unwrap();
        let sim = SimConfig::new(30_000, 29).unwrap();
        let limit = analytics::wraparound_limit(&g, &motion);
        let d_grid: Vec<f64> = (0..10).map(|k| limit * 0.95 * k as f64 / 9.0).collect();

        let estimates = estimate_delay_cdf(&params, &g, &motion, &d_grid, &sim);
        assert_eq!(estimates.len(), d_grid.len());
        let mut previous = -1.0;
        for (estimate, &d) in estimates.iter().zip(d_grid.iter()) {
            assert!(estimate.mean >= previous, "empirical CDF must be monotone");
            previous = estimate.mean;
            let analytic = delay_cdf(&params, &g, &motion, d, &quad()).unwrap();
            let sigmas = estimate.sigmas_from(analytic, &sim);
            assert!(
                sigmas < 4.0,
                "at d = {d}: sim {} vs analytic {analytic} ({sigmas:.2} sigma)",
                estimate.mean
            );
        }

        // the d = 0 point estimates the same event as the time fraction
        let tf = estimate_time_fraction(&params, &g, &sim);
        let gap = (estimates[0].mean - tf.mean).abs();
        let budget = estimates[0].half_width + tf.half_width;
        assert!(gap <= budget, "P(D<=0) {} vs time fraction {}", estimates[0].mean, tf.mean);
    }

    #[test]
    fn infinite_delay_fraction_matches_corollary() {
        let g = geom(7000.0, 900.0);
        let params = CoxParams::new(10.0, 10.0).unwrap();
        let sim = SimConfig::new(100_000, 31).unwrap();
        let expected = infinite_delay_probability(&params, &g);
        let estimate = estimate_infinite_delay(&params, &g, &sim);
        let sigmas = estimate.sigmas_from(expected, &sim);
        assert!(
            sigmas < 3.0,
            "sim {} vs closed form {expected} ({sigmas:.2} sigma)",
            estimate.mean
        );
    }

    #[test]
    fn estimators_expose_metric_names_and_seeds() {
        let g = geom(7000.0, 900.0);
        let params = CoxParams::new(5.0, 5.0).unwrap();
        let sim = SimConfig::new(100, 41).unwrap();
        let estimate = estimate_time_fraction(&params, &g, &sim);
        assert_eq!(estimate.metric_name, "time_fraction");
        assert_eq!(estimate.trials, 100);
        assert_eq!(estimate.seed, 41);
        assert!(estimate.half_width >= 0.0);
        assert!(estimate.contains(estimate.mean));
    }
}
