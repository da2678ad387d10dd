//! leoh: constellation analytics and Monte Carlo experiments from one
//! config file, emitting machine-readable CSV.
//!
//! Subcommands: analytic | simulate | compare | gen | moment-match | sweep.
//! Exit codes: 0 ok, 1 comparison failure, 2 config error, 3 numeric
//! failure. LEOH_THREADS caps the worker count.

mod config;
mod metrics;

use clap::{Args, Parser, Subcommand};
use config::{ConfigError, Experiment, ExperimentConfig};
use leoharvest::analytics::{self};
use leoharvest::constellation::{sample_cox, satellite_position_ecef};
use leoharvest::geometry::max_azimuth_xi;
use leoharvest::simulator::MetricEstimate;
use metrics::{analytic_value, simulate_value, EvalError, Metric, NumericError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

// ============================================================================
// Errors and exit codes
// ============================================================================

#[derive(Debug)]
enum AppError {
    /// Bad config, flags, or input file: exit 2.
    Config(String),
    /// Quadrature or degenerate-geometry failure: exit 3.
    Numeric(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Config(message) | AppError::Numeric(message) => write!(f, "{message}"),
        }
    }
}

impl From<ConfigError> for AppError {
    fn from(error: ConfigError) -> Self {
        AppError::Config(error.0)
    }
}

impl From<NumericError> for AppError {
    fn from(error: NumericError) -> Self {
        AppError::Numeric(error.0)
    }
}

impl From<EvalError> for AppError {
    fn from(error: EvalError) -> Self {
        match error {
            EvalError::Config(e) => e.into(),
            EvalError::Numeric(e) => e.into(),
        }
    }
}

// ============================================================================
// Command line
// ============================================================================

/// Constellation analytics and Monte Carlo experiment runner.
#[derive(Parser)]
#[command(name = "leoh", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a metric's closed form (CSV when a sweep is configured)
    Analytic(RunArgs),
    /// Monte Carlo estimate of a metric with a confidence interval
    Simulate(RunArgs),
    /// Analytic vs Monte Carlo per point, PASS/FAIL gate at 3 sigma
    Compare(RunArgs),
    /// Sample one constellation snapshot to JSON (and optionally ECEF CSV)
    Gen(GenArgs),
    /// Match Cox intensities to the configured polar constellation
    MomentMatch(MomentMatchArgs),
    /// Analytic and simulated values over the configured sweep, as CSV
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Metric name (see `--metric help` for the list)
    #[arg(long)]
    metric: String,
    /// Write table output here instead of the config's output.path/stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override sim.base_seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override sim.trials
    #[arg(long)]
    trials: Option<usize>,
    /// Print the effective config (re-parseable TOML) before running
    #[arg(long)]
    echo_config: bool,
}

#[derive(Args)]
struct GenArgs {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Constellation JSON destination (falls back to output.path)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write satellite ECEF positions to this CSV
    #[arg(long)]
    ecef: Option<PathBuf>,
    /// Override sim.base_seed
    #[arg(long)]
    seed: Option<u64>,
    /// Print the effective config (re-parseable TOML) before running
    #[arg(long)]
    echo_config: bool,
}

#[derive(Args)]
struct MomentMatchArgs {
    /// Experiment config (TOML); the cox block holds the polar counts
    #[arg(long)]
    config: PathBuf,
    /// Print the effective config (re-parseable TOML) before running
    #[arg(long)]
    echo_config: bool,
}

fn main() -> ExitCode {
    if let Err(error) = configure_threads() {
        eprintln!("error: {error}");
        return ExitCode::from(error.exit_code());
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code())
        }
    }
}

/// LEOH_THREADS caps rayon's worker count for every command.
fn configure_threads() -> Result<(), AppError> {
    let Ok(value) = std::env::var("LEOH_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| {
            AppError::Config(format!("LEOH_THREADS must be a positive integer, got \"{value}\""))
        })?;
    // only fails if a global pool already exists, which is equally fine
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn run(command: Command) -> Result<u8, AppError> {
    match command {
        Command::Analytic(args) => cmd_table(args, Which::AnalyticOnly),
        Command::Simulate(args) => cmd_table(args, Which::SimulateOnly),
        Command::Compare(args) => cmd_compare(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Gen(args) => cmd_gen(args),
        Command::MomentMatch(args) => cmd_moment_match(args),
    }
}

// ============================================================================
// Row evaluation shared by analytic/simulate/compare/sweep
// ============================================================================

#[derive(Clone, Copy)]
enum Which {
    AnalyticOnly,
    SimulateOnly,
    Both,
}

struct Row {
    sweep_var: String,
    value: Option<f64>,
    analytic: Option<f64>,
    estimate: Option<MetricEstimate>,
}

/// Evaluates the metric once, or once per sweep value. `analytic_scale`
/// multiplies the analytic column (1.0 normally; the compare command's
/// negative-test fixture sets it via LEOH_COMPARE_ANALYTIC_SCALE).
fn eval_rows(
    base: &ExperimentConfig,
    metric: Metric,
    which: Which,
    analytic_scale: f64,
) -> Result<Vec<Row>, AppError> {
    let points: Vec<(String, Option<f64>)> = match &base.sweep {
        None => vec![("none".to_string(), None)],
        Some(sweep) => {
            if sweep.values.is_empty() {
                return Err(AppError::Config("sweep.values must not be empty".into()));
            }
            sweep
                .values
                .iter()
                .map(|v| (sweep.parameter.clone(), Some(*v)))
                .collect()
        }
    };

    let mut rows = Vec::with_capacity(points.len());
    for (parameter, value) in points {
        let mut config = base.clone();
        if let Some(value) = value {
            config.set_parameter(&parameter, value)?;
        }
        let experiment = Experiment::build(&config)?;
        let analytic = match which {
            Which::AnalyticOnly | Which::Both => {
                Some(analytic_value(metric, &experiment)? * analytic_scale)
            }
            Which::SimulateOnly => None,
        };
        let estimate = match which {
            Which::SimulateOnly | Which::Both => Some(simulate_value(metric, &experiment)?),
            Which::AnalyticOnly => None,
        };
        rows.push(Row { sweep_var: parameter, value, analytic, estimate });
    }
    Ok(rows)
}

// ============================================================================
// Output formatting
// ============================================================================

/// Floats at 17 significant digits, losslessly re-parseable.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// The fixed CSV schema shared by every table command.
fn render_csv(rows: &[Row]) -> String {
    let mut text = String::from("sweep_var,value,analytic,sim_mean,sim_ci,trials,seed\n");
    for row in rows {
        let value = row.value.map(fmt_float).unwrap_or_default();
        let analytic = row.analytic.map(fmt_float).unwrap_or_default();
        let (sim_mean, sim_ci, trials, seed) = match &row.estimate {
            Some(e) => (
                fmt_float(e.mean),
                fmt_float(e.half_width),
                e.trials.to_string(),
                e.seed.to_string(),
            ),
            None => Default::default(),
        };
        writeln!(
            text,
            "{},{},{},{},{},{},{}",
            row.sweep_var, value, analytic, sim_mean, sim_ci, trials, seed
        )
        .expect("string writes cannot fail");
    }
    text
}

/// Output precedence: --out flag, then the config's output.path, else stdout.
fn output_path<'a>(flag: &'a Option<PathBuf>, config: &'a ExperimentConfig) -> Option<PathBuf> {
    flag.clone().or_else(|| {
        config
            .output
            .as_ref()
            .and_then(|o| o.path.as_ref())
            .map(PathBuf::from)
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), AppError> {
    match path {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| AppError::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_run_config(args: &RunArgs) -> Result<(ExperimentConfig, Metric), AppError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    config.apply_overrides(args.seed, args.trials);
    if args.echo_config {
        print!("{}", config.echo());
    }
    let metric = Metric::parse(&args.metric)?;
    Ok((config, metric))
}

// ============================================================================
// Commands
// ============================================================================

fn cmd_table(args: RunArgs, which: Which) -> Result<u8, AppError> {
    let (config, metric) = load_run_config(&args)?;
    let rows = eval_rows(&config, metric, which, 1.0)?;
    if config.sweep.is_some() || args.out.is_some() || output_path(&args.out, &config).is_some() {
        let csv = render_csv(&rows);
        write_text(output_path(&args.out, &config).as_deref(), &csv)?;
    } else {
        let row = &rows[0];
        match which {
            Which::AnalyticOnly => {
                println!("{} = {}", metric.name(), fmt_float(row.analytic.unwrap()));
            }
            _ => {
                let e = row.estimate.as_ref().unwrap();
                println!(
                    "{} = {} ± {} (trials = {}, seed = {})",
                    metric.name(),
                    fmt_float(e.mean),
                    fmt_float(e.half_width),
                    e.trials,
                    e.seed
                );
            }
        }
    }
    Ok(0)
}

fn cmd_sweep(args: RunArgs) -> Result<u8, AppError> {
    let (config, metric) = load_run_config(&args)?;
    if config.sweep.is_none() {
        return Err(AppError::Config(
            "the sweep command requires a [sweep] block in the config".into(),
        ));
    }
    let rows = eval_rows(&config, metric, Which::Both, 1.0)?;
    let csv = render_csv(&rows);
    write_text(output_path(&args.out, &config).as_deref(), &csv)?;
    Ok(0)
}

fn cmd_compare(args: RunArgs) -> Result<u8, AppError> {
    let (config, metric) = load_run_config(&args)?;
    let analytic_scale = match std::env::var("LEOH_COMPARE_ANALYTIC_SCALE") {
        Ok(value) => value.parse::<f64>().ok().filter(|s| *s > 0.0).ok_or_else(|| {
            AppError::Config(format!(
                "LEOH_COMPARE_ANALYTIC_SCALE must be a positive number, got \"{value}\""
            ))
        })?,
        Err(_) => 1.0,
    };
    let experiment = Experiment::build(&config)?;
    let rows = eval_rows(&config, metric, Which::Both, analytic_scale)?;

    let mut all_pass = true;
    for row in &rows {
        let analytic = row.analytic.unwrap();
        let estimate = row.estimate.as_ref().unwrap();
        let sigmas = estimate.sigmas_from(analytic, &experiment.sim);
        let pass = sigmas <= 3.0;
        all_pass &= pass;
        let label = match row.value {
            Some(value) => format!("{}={}", row.sweep_var, fmt_float(value)),
            None => metric.name().to_string(),
        };
        println!(
            "{label}: analytic={} sim={} ci={} z={:.2} {}",
            fmt_float(analytic),
            fmt_float(estimate.mean),
            fmt_float(estimate.half_width),
            sigmas,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!("overall: {}", if all_pass { "PASS" } else { "FAIL" });

    if let Some(path) = output_path(&args.out, &config) {
        write_text(Some(&path), &render_csv(&rows))?;
    }
    Ok(if all_pass { 0 } else { 1 })
}

fn cmd_gen(args: GenArgs) -> Result<u8, AppError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    config.apply_overrides(args.seed, None);
    if args.echo_config {
        print!("{}", config.echo());
    }
    let experiment = Experiment::build(&config)?;
    let out = output_path(&args.out, &config).ok_or_else(|| {
        AppError::Config("gen needs --out or output.path for the constellation JSON".into())
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.sim.base_seed);
    let constellation = sample_cox(
        &experiment.geom,
        config.cox.lambda,
        config.cox.mu,
        &mut rng,
    );
    let json = serde_json::to_string_pretty(&constellation)
        .map_err(|e| AppError::Config(format!("cannot serialize constellation: {e}")))?;
    write_text(Some(&out), &json)?;

    if let Some(ecef) = &args.ecef {
        let mut csv = String::from("satellite,orbit,x_m,y_m,z_m\n");
        for (index, sat) in constellation.satellites().iter().enumerate() {
            let [x, y, z] = satellite_position_ecef(
                constellation.geom(),
                constellation.orbit_of(sat),
                sat.omega,
            );
            writeln!(
                csv,
                "{index},{},{},{},{}",
                sat.orbit,
                fmt_float(x),
                fmt_float(y),
                fmt_float(z)
            )
            .expect("string writes cannot fail");
        }
        write_text(Some(ecef), &csv)?;
    }

    println!(
        "wrote {} orbits, {} satellites to {} (seed = {})",
        constellation.orbits().len(),
        constellation.satellites().len(),
        out.display(),
        config.sim.base_seed
    );
    Ok(0)
}

fn cmd_moment_match(args: MomentMatchArgs) -> Result<u8, AppError> {
    let config = ExperimentConfig::load(&args.config)?;
    if args.echo_config {
        print!("{}", config.echo());
    }
    let experiment = Experiment::build(&config)?;
    let (polar_lambda, polar_mu) = (config.cox.lambda, config.cox.mu);

    let matched = analytics::moment_match_polar_to_cox(
        polar_lambda,
        polar_mu,
        &experiment.geom,
        &experiment.quad,
    )
    .map_err(|e| match e {
        analytics::AnalyticsError::Quadrature(_) | analytics::AnalyticsError::DegenerateGeometry => {
            AppError::Numeric(e.to_string())
        }
        other => AppError::Config(other.to_string()),
    })?;

    // back-substitution: matched means must reproduce the polar means
    let xi = max_azimuth_xi(&experiment.geom);
    let orbit_target = polar_lambda;
    let orbit_matched = analytics::expected_visible_orbits(&matched, xi);
    let sat_target = polar_lambda * polar_mu * xi.rad() / std::f64::consts::PI;
    let sat_matched =
        analytics::expected_visible_satellites(&matched, &experiment.geom, &experiment.quad)
            .map_err(|e| AppError::Numeric(e.to_string()))?;

    println!("lambda_bar = {}", fmt_float(matched.lambda()));
    println!("mu_bar = {}", fmt_float(matched.mu()));
    println!(
        "residual_orbits = {}",
        fmt_float((orbit_matched - orbit_target).abs() / orbit_target)
    );
    println!(
        "residual_sats = {}",
        fmt_float((sat_matched - sat_target).abs() / sat_target)
    );
    Ok(0)
}
