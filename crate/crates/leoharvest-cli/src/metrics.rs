//! Metric names, their analytic evaluators, and their Monte Carlo twins.

use crate::config::{ConfigError, Experiment};
use leoharvest::analytics::{self, AnalyticsError};
use leoharvest::geometry::max_azimuth_xi;
use leoharvest::simulator::{self, MetricEstimate, SimulatorError};

/// A numeric evaluation failed (quadrature breakdown or degenerate
/// geometry); maps to exit code 3.
#[derive(Debug)]
pub struct NumericError(pub String);

impl std::fmt::Display for NumericError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for NumericError {}

/// Either flavor of evaluation failure, keeping the exit-code split.
#[derive(Debug)]
pub enum EvalError {
    Config(ConfigError),
    Numeric(NumericError),
}

impl std::fmt::Display for EvalError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvalError::Config(e) => write!(f, "{e}"),
            EvalError::Numeric(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for EvalError {}

/// Quadrature breakdown and degenerate geometry are numeric failures;
/// everything else the analytics layer rejects is a bad input.
fn classify(error: AnalyticsError) -> EvalError {
    match error {
        AnalyticsError::Quadrature(_) | AnalyticsError::DegenerateGeometry => {
            EvalError::Numeric(NumericError(error.to_string()))
        }
        other => EvalError::Config(ConfigError(other.to_string())),
    }
}

fn classify_sim(error: SimulatorError) -> EvalError {
    match error {
        SimulatorError::Analytics(inner) => classify(inner),
        other => EvalError::Config(ConfigError(other.to_string())),
    }
}

/// Every metric both the analytic and simulation commands understand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    VisibleOrbits,
    VisibleSats,
    TimeFraction,
    DataPerPass,
    Capacity,
    DelayCdf,
    PZeroDelay,
    PInfDelay,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::VisibleOrbits,
        Metric::VisibleSats,
        Metric::TimeFraction,
        Metric::DataPerPass,
        Metric::Capacity,
        Metric::DelayCdf,
        Metric::PZeroDelay,
        Metric::PInfDelay,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::VisibleOrbits => "visible_orbits",
            Metric::VisibleSats => "visible_sats",
            Metric::TimeFraction => "time_fraction",
            Metric::DataPerPass => "data_per_pass",
            Metric::Capacity => "capacity",
            Metric::DelayCdf => "delay_cdf",
            Metric::PZeroDelay => "p_zero_delay",
            Metric::PInfDelay => "p_inf_delay",
        }
    }

    /// Parses a metric name, listing the valid ones on failure.
    pub fn parse(name: &str) -> Result<Metric, ConfigError> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| {
                let valid: Vec<&str> = Metric::ALL.iter().map(|m| m.name()).collect();
                ConfigError(format!(
                    "unknown metric \"{name}\"; valid metrics: {}",
                    valid.join(", ")
                ))
            })
    }
}

/// Closed-form value of a metric for one experiment.
pub fn analytic_value(metric: Metric, exp: &Experiment) -> Result<f64, EvalError> {
    match metric {
        Metric::VisibleOrbits => Ok(analytics::expected_visible_orbits(
            &exp.params,
            max_azimuth_xi(&exp.geom),
        )),
        Metric::VisibleSats => {
            analytics::expected_visible_satellites(&exp.params, &exp.geom, &exp.quad)
                .map_err(classify)
        }
        Metric::TimeFraction => {
            analytics::harvest_time_fraction(&exp.params, &exp.geom, &exp.quad)
                .map_err(classify)
        }
        Metric::DataPerPass => analytics::data_per_pass(
            exp.phi,
            &exp.geom,
            &exp.link,
            &exp.fading,
            &exp.motion,
            &exp.scheme,
            &exp.quad,
        )
        .map_err(classify),
        Metric::Capacity => analytics::harvesting_capacity(
            &exp.params,
            &exp.geom,
            &exp.link,
            &exp.fading,
            &exp.quad,
        )
        .map_err(classify),
        Metric::DelayCdf => {
            analytics::delay_cdf(&exp.params, &exp.geom, &exp.motion, exp.d, &exp.quad)
                .map_err(classify)
        }
        Metric::PZeroDelay => {
            analytics::zero_delay_probability(&exp.params, &exp.geom, &exp.quad)
                .map_err(classify)
        }
        Metric::PInfDelay => Ok(analytics::infinite_delay_probability(&exp.params, &exp.geom)),
    }
}

/// Monte Carlo estimate of the same metric. The estimate's metric_name is
/// forced to the CLI metric name so output rows match the request.
pub fn simulate_value(metric: Metric, exp: &Experiment) -> Result<MetricEstimate, EvalError> {
    let mut estimate = match metric {
        Metric::VisibleOrbits => {
            simulator::estimate_visible_orbits(&exp.params, &exp.geom, &exp.sim)
        }
        Metric::VisibleSats => {
            simulator::estimate_visible_count(&exp.params, &exp.geom, &exp.sim)
        }
        Metric::TimeFraction | Metric::PZeroDelay => {
            simulator::estimate_time_fraction(&exp.params, &exp.geom, &exp.sim)
        }
        Metric::DataPerPass => {
            let sim = if exp.explicit_time_step {
                exp.sim
            } else {
                let step = simulator::pass_time_step(exp.phi, &exp.geom, &exp.motion)
                    .map_err(classify_sim)?;
                exp.sim.with_time_step(step).map_err(classify_sim)?
            };
            simulator::simulate_pass(
                exp.phi,
                &exp.geom,
                &exp.link,
                &exp.fading,
                &exp.motion,
                &exp.scheme,
                &sim,
            )
            .map_err(classify_sim)?
        }
        Metric::Capacity => simulator::estimate_capacity(
            &exp.params,
            &exp.geom,
            &exp.link,
            &exp.fading,
            &exp.sim,
        ),
        Metric::DelayCdf => {
            simulator::estimate_delay_cdf(&exp.params, &exp.geom, &exp.motion, &[exp.d], &exp.sim)
                .pop()
                .expect("one estimate per grid point")
        }
        Metric::PInfDelay => {
            simulator::estimate_infinite_delay(&exp.params, &exp.geom, &exp.sim)
        }
    };
    estimate.metric_name = metric.name().to_string();
    Ok(estimate)
}
