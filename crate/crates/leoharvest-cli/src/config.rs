//! Strict TOML experiment configuration and its mapping to library types.
//!
//! One file holds every knob of an experiment: geometry (km), Cox
//! intensities, link budget (dBm/dB), orbital motion, upload scheme,
//! simulation settings, and optional sweep/output blocks. Parsing is strict:
//! unknown keys are rejected so a typo cannot silently fall back to a
//! default. Unit conversions to the library's meters/watts/radians happen
//! here and nowhere else.

use leoharvest::analytics::{CoxParams, ModulationScheme, QuadratureSpec};
use leoharvest::channel::{noise_power_from_density, LinkBudget, NakagamiFading};
use leoharvest::constellation::{MotionParams, EARTH_ROTATION_RATE};
use leoharvest::geometry::{Angle, OrbitGeometry};
use leoharvest::simulator::SimConfig;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::Path;

/// Configuration or input error; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(message.into()))
}

// ============================================================================
// Config blocks (wire format)
// ============================================================================

/// The whole experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryBlock,
    pub cox: CoxBlock,
    pub link: LinkBlock,
    pub motion: MotionBlock,
    pub scheme: SchemeBlock,
    pub sim: SimBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric_params: Option<MetricParamsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputBlock>,
}

/// Shell radii in kilometers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub r_e_km: f64,
    pub altitude_km: f64,
    pub gamma_km: f64,
}

/// Cox intensities: mean orbit count and mean satellites per orbit. The
/// moment-match command reads these as the *polar* constellation's exact
/// orbit and per-orbit satellite counts instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoxBlock {
    pub lambda: f64,
    pub mu: f64,
}

/// Link budget in conventional units (converted to watts/ratios here).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBlock {
    pub p_dbm: f64,
    pub g_db: f64,
    pub alpha: f64,
    pub noise_density_dbm_hz: f64,
    pub bandwidth_hz: f64,
    pub nakagami_m: u32,
}

/// Angular rates: omega_s either explicit (rad/s) or the literal string
/// "kepler" for the circular-orbit rate at the configured altitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionBlock {
    pub omega_s: OmegaSetting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_e: Option<f64>,
    #[serde(default)]
    pub include_earth_rotation: bool,
}

/// `omega_s = 0.00108` or `omega_s = "kepler"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaSetting {
    Value(f64),
    Named(String),
}

/// Upload scheme: kind = "fixed" (requires rate_m and tau) or "adaptive".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeBlock {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

/// Monte Carlo settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    pub trials: usize,
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence_level: Option<f64>,
}

/// Inputs consumed only by specific metrics: the pass inclination for
/// data_per_pass (default pi/2, straight overhead) and the delay argument
/// for delay_cdf (default 0, which equals the time fraction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricParamsBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_rad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_seconds: Option<f64>,
}

/// One-dimensional parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub parameter: String,
    pub values: Vec<f64>,
}

/// Where table output goes; format currently must be "csv".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

// ============================================================================
// Loading and overrides
// ============================================================================

impl ExperimentConfig {
    /// Parses a TOML config file, rejecting unknown keys with the parser's
    /// line/field diagnostic.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
            .map_err(|e| ConfigError(format!("in {}: {e}", path.display())))
    }

    /// Parses config text (exposed for the round-trip invariant).
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        if let Some(output) = &config.output {
            if let Some(format) = &output.format {
                if format != "csv" {
                    return err(format!("output.format must be \"csv\", got \"{format}\""));
                }
            }
        }
        Ok(config)
    }

    /// Applies the command-line --seed/--trials overrides.
    pub fn apply_overrides(&mut self, seed: Option<u64>, trials: Option<usize>) {
        if let Some(seed) = seed {
            self.sim.base_seed = seed;
        }
        if let Some(trials) = trials {
            self.sim.trials = trials;
        }
    }

    /// The effective-config echo: serialized TOML that re-parses to an
    /// identical configuration.
    pub fn echo(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Replaces the swept parameter with `value`. Unknown names are
    /// rejected with the full list of valid ones.
    pub fn set_parameter(&mut self, parameter: &str, value: f64) -> Result<(), ConfigError> {
        let integral = |name: &str| -> Result<u32, ConfigError> {
            if value.fract() == 0.0 && value >= 1.0 && value <= u32::MAX as f64 {
                Ok(value as u32)
            } else {
                err(format!("sweep value {value} for {name} must be a positive integer"))
            }
        };
        match parameter {
            "lambda" => self.cox.lambda = value,
            "mu" => self.cox.mu = value,
            "r_e_km" => self.geometry.r_e_km = value,
            "altitude_km" => self.geometry.altitude_km = value,
            "gamma_km" => self.geometry.gamma_km = value,
            "p_dbm" => self.link.p_dbm = value,
            "g_db" => self.link.g_db = value,
            "alpha" => self.link.alpha = value,
            "bandwidth_hz" => self.link.bandwidth_hz = value,
            "nakagami_m" => self.link.nakagami_m = integral("nakagami_m")?,
            "rate_m" => self.scheme.rate_m = Some(integral("rate_m")?),
            "tau" => self.scheme.tau = Some(value),
            "omega_s" => self.motion.omega_s = OmegaSetting::Value(value),
            "phi_rad" => self.metric_params_mut().phi_rad = Some(value),
            "d" => self.metric_params_mut().d_seconds = Some(value),
            other => {
                return err(format!(
                    "unknown sweep parameter \"{other}\"; valid parameters: lambda, mu, \
                     r_e_km, altitude_km, gamma_km, p_dbm, g_db, alpha, bandwidth_hz, \
                     nakagami_m, rate_m, tau, omega_s, phi_rad, d"
                ))
            }
        }
        Ok(())
    }

    fn metric_params_mut(&mut self) -> &mut MetricParamsBlock {
        self.metric_params
            .get_or_insert(MetricParamsBlock { phi_rad: None, d_seconds: None })
    }
}

// ============================================================================
// Mapping to library types
// ============================================================================

/// Everything a command needs, in library units, built from one config.
pub struct Experiment {
    pub geom: OrbitGeometry,
    pub params: CoxParams,
    pub link: LinkBudget,
    pub fading: NakagamiFading,
    pub motion: MotionParams,
    pub scheme: ModulationScheme,
    pub sim: SimConfig,
    /// Whether the config pinned a time step (otherwise pass simulation
    /// derives its default from the pass duration).
    pub explicit_time_step: bool,
    /// Pass inclination for data_per_pass.
    pub phi: Angle,
    /// Delay argument (seconds) for delay_cdf.
    pub d: f64,
    pub quad: QuadratureSpec,
}

impl Experiment {
    /// Validates and converts a parsed config into library types.
    pub fn build(config: &ExperimentConfig) -> Result<Self, ConfigError> {
        const KM: f64 = 1000.0;
        let g = &config.geometry;
        let geom = OrbitGeometry::new(
            g.r_e_km * KM,
            (g.r_e_km + g.altitude_km) * KM,
            g.gamma_km * KM,
        )
        .map_err(|e| ConfigError(format!("geometry: {e}")))?;

        let params = CoxParams::new(config.cox.lambda, config.cox.mu)
            .map_err(|e| ConfigError(format!("cox: {e}")))?;

        let l = &config.link;
        let p_watts = 10f64.powf((l.p_dbm - 30.0) / 10.0);
        let gain = 10f64.powf(l.g_db / 10.0);
        let noise = noise_power_from_density(l.noise_density_dbm_hz, l.bandwidth_hz)
            .map_err(|e| ConfigError(format!("link: {e}")))?;
        let link = LinkBudget::new(p_watts, gain, l.alpha, noise, l.bandwidth_hz)
            .map_err(|e| ConfigError(format!("link: {e}")))?;
        let fading = NakagamiFading::new(l.nakagami_m)
            .map_err(|e| ConfigError(format!("link: {e}")))?;

        let m = &config.motion;
        let base = match &m.omega_s {
            OmegaSetting::Value(rate) => MotionParams::new(*rate, 0.0)
                .map_err(|e| ConfigError(format!("motion: {e}")))?,
            OmegaSetting::Named(name) if name == "kepler" => MotionParams::keplerian(&geom),
            OmegaSetting::Named(name) => {
                return err(format!("motion.omega_s must be a rate in rad/s or \"kepler\", got \"{name}\""))
            }
        };
        let motion = if m.include_earth_rotation {
            base.with_earth_rotation(m.omega_e.unwrap_or(EARTH_ROTATION_RATE))
                .map_err(|e| ConfigError(format!("motion: {e}")))?
        } else {
            base
        };

        let s = &config.scheme;
        let scheme = match s.kind.as_str() {
            "fixed" => match (s.rate_m, s.tau) {
                (Some(rate_m), Some(tau)) => ModulationScheme::Fixed { rate_m, tau },
                _ => return err("scheme: kind = \"fixed\" requires rate_m and tau"),
            },
            "adaptive" => {
                if s.rate_m.is_some() || s.tau.is_some() {
                    return err("scheme: kind = \"adaptive\" takes no rate_m or tau");
                }
                ModulationScheme::Adaptive
            }
            other => return err(format!("scheme.kind must be \"fixed\" or \"adaptive\", got \"{other}\"")),
        };
        if let ModulationScheme::Fixed { rate_m, tau } = scheme {
            if rate_m < 1 || !(tau > 0.0 && tau.is_finite()) {
                return err(format!("scheme: rate_m must be >= 1 and tau > 0, got rate_m = {rate_m}, tau = {tau}"));
            }
        }

        let sb = &config.sim;
        let mut sim = SimConfig::new(sb.trials, sb.base_seed)
            .map_err(|e| ConfigError(format!("sim: {e}")))?
            .with_earth_rotation(m.include_earth_rotation);
        if let Some(step) = sb.time_step {
            sim = sim
                .with_time_step(step)
                .map_err(|e| ConfigError(format!("sim: {e}")))?;
        }
        if let Some(level) = sb.confidence_level {
            sim = sim
                .with_confidence_level(level)
                .map_err(|e| ConfigError(format!("sim: {e}")))?;
        }

        let mp = config.metric_params.as_ref();
        let phi = Angle::from_radians(mp.and_then(|p| p.phi_rad).unwrap_or(FRAC_PI_2));
        let d = mp.and_then(|p| p.d_seconds).unwrap_or(0.0);

        Ok(Experiment {
            geom,
            params,
            link,
            fading,
            motion,
            scheme,
            sim,
            explicit_time_step: sb.time_step.is_some(),
            phi,
            d,
            quad: QuadratureSpec::default(),
        })
    }
}
