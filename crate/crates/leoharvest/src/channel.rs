//! Uplink channel model: link budget, Nakagami-m fading, instantaneous SNR.
//!
//! Received power is p * g * H * d^(-alpha) with d in meters (d >= 1), where
//! H is a unit-mean Gamma-distributed fading power (Nakagami-m with integer
//! shape m; m = 1 is Rayleigh/exponential). SNR divides by a fixed thermal
//! noise power sigma^2.
//!
//! Decibel quantities are converted to linear units before they reach this
//! module; everything here is watts and plain ratios.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use thiserror::Error;

/// Errors for channel-domain preconditions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    /// Link-budget parameters must be positive (and alpha >= 2).
    #[error("invalid link budget: {reason}")]
    InvalidLink { reason: String },
    /// Fading shape must be a positive integer.
    #[error("Nakagami shape m must be >= 1, got {m}")]
    InvalidShape { m: u32 },
    /// Argument outside the operation's domain.
    #[error("domain error: {reason}")]
    DomainError { reason: String },
}

/// Link budget in linear units: transmit power, aggregate antenna gain,
/// path-loss exponent, noise power, and bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    p_watts: f64,
    gain: f64,
    alpha: f64,
    noise_power: f64,
    bandwidth_hz: f64,
}

impl LinkBudget {
    /// Validates and builds a link budget.
    ///
    /// Requires p, g, noise power, bandwidth > 0 and alpha >= 2 (free-space
    /// or worse; the far-field model is meaningless below 2).
    pub fn new(
        p_watts: f64,
        gain: f64,
        alpha: f64,
        noise_power: f64,
        bandwidth_hz: f64,
    ) -> Result<Self, ChannelError> {
        let positive = [
            (p_watts, "transmit power"),
            (gain, "gain"),
            (noise_power, "noise power"),
            (bandwidth_hz, "bandwidth"),
        ];
        for (value, name) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ChannelError::InvalidLink {
                    reason: format!("{name} must be positive and finite, got {value}"),
                });
            }
        }
        if !(alpha >= 2.0 && alpha.is_finite()) {
            return Err(ChannelError::InvalidLink {
                reason: format!("path-loss exponent must be >= 2, got {alpha}"),
            });
        }
        Ok(LinkBudget { p_watts, gain, alpha, noise_power, bandwidth_hz })
    }

    pub fn p_watts(&self) -> f64 {
        self.p_watts
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Thermal noise power sigma^2 in watts.
    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    /// SNR at 1 m with unit fading: p*g/sigma^2. The scale factor in every
    /// threshold computation.
    pub fn snr_at_one_meter(&self) -> f64 {
        self.p_watts * self.gain / self.noise_power
    }
}

/// Nakagami-m fading of the received *power* H: Gamma with integer shape m
/// and mean fixed at 1.
///
/// m is restricted to integers so the CCDF stays a finite sum; no analytic
/// result here needs fractional shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NakagamiFading {
    m: u32,
}

impl NakagamiFading {
    /// Builds a fading model with integer shape m >= 1.
    pub fn new(m: u32) -> Result<Self, ChannelError> {
        if m < 1 {
            return Err(ChannelError::InvalidShape { m });
        }
        Ok(NakagamiFading { m })
    }

    /// The integer shape parameter.
    pub fn m(&self) -> u32 {
        self.m
    }
}

/// Tail probability of the fading power:
/// P(H > x) = e^(-m x) * sum_{k=0}^{m-1} (m x)^k / k!.
///
/// For m = 1 this is the exponential tail e^(-x).
pub fn fading_ccdf(fading: NakagamiFading, x: f64) -> Result<f64, ChannelError> {
    if !(x >= 0.0) {
        return Err(ChannelError::DomainError {
            reason: format!("fading CCDF argument must be >= 0, got {x}"),
        });
    }
    Ok(tail_probability(fading, x))
}

/// CCDF body without the domain check, for quadrature integrands whose
/// argument is nonnegative by construction.
pub(crate) fn tail_probability(fading: NakagamiFading, x: f64) -> f64 {
    let mx = fading.m as f64 * x;
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 1..fading.m {
        term *= mx / k as f64;
        sum += term;
    }
    (-mx).exp() * sum
}

/// The sampling distribution of the fading power: Gamma(shape = m,
/// scale = 1/m), mean 1. Build once and reuse in sampling loops.
pub(crate) fn fading_sampler(fading: NakagamiFading) -> Gamma<f64> {
    let m = fading.m as f64;
    // shape >= 1 and scale > 0 always hold, so construction cannot fail
    Gamma::new(m, 1.0 / m).expect("valid Gamma parameters")
}

/// Draws one fading power H ~ Gamma(shape = m, scale = 1/m), which has mean 1.
///
/// Sampling delegates to `rand_distr::Gamma` (Marsaglia–Tsang squeeze
/// method); with a seeded rng the draw sequence is reproducible across runs
/// of the same build.
pub fn sample_fading<R: Rng + ?Sized>(fading: NakagamiFading, rng: &mut R) -> f64 {
    fading_sampler(fading).sample(rng)
}

/// Instantaneous SNR: p * g * h * d^(-alpha) / sigma^2, with d in meters.
///
/// The path-loss law is calibrated at 1 m, so d >= 1 is required.
pub fn snr(link: &LinkBudget, h: f64, d: f64) -> Result<f64, ChannelError> {
    if !(d >= 1.0) {
        return Err(ChannelError::DomainError {
            reason: format!("distance must be >= 1 m, got {d}"),
        });
    }
    Ok(link.snr_at_one_meter() * h * d.powf(-link.alpha))
}

/// Thermal noise power in watts from a density in dBm/Hz and a bandwidth:
/// sigma^2 = 10^((density_dbm + 10 log10(B) - 30) / 10).
pub fn noise_power_from_density(
    density_dbm_per_hz: f64,
    bandwidth_hz: f64,
) -> Result<f64, ChannelError> {
    if !(bandwidth_hz > 0.0) {
        return Err(ChannelError::DomainError {
            reason: format!("bandwidth must be positive, got {bandwidth_hz}"),
        });
    }
    Ok(10f64.powf((density_dbm_per_hz + 10.0 * bandwidth_hz.log10() - 30.0) / 10.0))
}
