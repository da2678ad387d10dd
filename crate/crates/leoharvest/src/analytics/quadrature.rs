//! Adaptive Gauss–Kronrod quadrature.
//!
//! A 7-point Gauss / 15-point Kronrod pair evaluated per interval; the worst
//! interval (largest |K15 - G7| gap) is bisected until the summed error
//! estimate meets max(abs_tol, rel_tol * |integral|) or the subdivision
//! budget runs out. All nodes are interior, so integrable endpoint
//! singularities (inverse square roots) never get evaluated directly and are
//! handled by subdivision toward the endpoint.
//!
//! Semi-infinite integrals locate a finite cutoff by doubling the interval
//! width until the integrand stays below tail_cutoff, then integrate the
//! finite piece; this assumes the tail decays monotonically past the cutoff
//! (true of the exponential-family tails this crate integrates).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

/// Tolerances and budgets for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Absolute error target.
    pub abs_tol: f64,
    /// Relative error target (scaled by the current integral estimate).
    pub rel_tol: f64,
    /// Maximum number of interval bisections.
    pub max_subdivisions: usize,
    /// Semi-infinite integrals truncate once the integrand falls below this.
    pub tail_cutoff: f64,
}

impl QuadratureSpec {
    /// Validated constructor; all fields must be positive.
    pub fn new(
        abs_tol: f64,
        rel_tol: f64,
        max_subdivisions: usize,
        tail_cutoff: f64,
    ) -> Option<Self> {
        (abs_tol > 0.0 && rel_tol > 0.0 && max_subdivisions >= 1 && tail_cutoff > 0.0)
            .then_some(QuadratureSpec { abs_tol, rel_tol, max_subdivisions, tail_cutoff })
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
            tail_cutoff: 1e-12,
        }
    }
}

/// Why an integral could not be computed to tolerance.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureFailure {
    /// Budget exhausted; carries the best estimate and the worst interval.
    #[error(
        "tolerance not met after {subdivisions} subdivisions: estimate {estimate:e}, \
         error estimate {error:e}, worst interval [{worst_a}, {worst_b}]"
    )]
    ToleranceNotMet {
        estimate: f64,
        error: f64,
        subdivisions: usize,
        worst_a: f64,
        worst_b: f64,
    },
    /// The integrand returned NaN or infinity.
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFiniteEvaluation { x: f64 },
    /// Semi-infinite tail never fell below tail_cutoff.
    #[error(
        "tail of semi-infinite integrand from {a} still {value:e} at x = {b_reached}; \
         expected decay below the tail cutoff"
    )]
    TailNotDecaying { a: f64, b_reached: f64, value: f64 },
}

// ============================================================================
// Gauss-Kronrod 7/15 rule
// ============================================================================

/// Kronrod abscissae on [0, 1] (symmetric about 0); odd indices are the
/// embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

/// Kronrod weights matching XGK.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// One Gauss-Kronrod evaluation: returns (K15 integral, |K15 - G7| estimate),
/// or the offending abscissa if the integrand misbehaves.
fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64), f64> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(center);
    }
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        if !f1.is_finite() {
            return Err(center - x);
        }
        if !f2.is_finite() {
            return Err(center + x);
        }
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

/// Interval with its local estimates, ordered by error for the work heap.
struct Interval {
    a: f64,
    b: f64,
    integral: f64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates f over the finite interval [a, b] (sign-flipping if a > b)
/// by adaptive bisection, always splitting the interval with the largest
/// error estimate.
pub fn integrate_1d<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64, QuadratureFailure> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate_1d(f, b, a, spec).map(|v| -v);
    }

    let eval = |lo: f64, hi: f64| -> Result<Interval, QuadratureFailure> {
        let (integral, error) = gauss_kronrod(&f, lo, hi)
            .map_err(|x| QuadratureFailure::NonFiniteEvaluation { x })?;
        Ok(Interval { a: lo, b: hi, integral, error })
    };

    let mut heap = BinaryHeap::new();
    let first = eval(a, b)?;
    let mut total = first.integral;
    let mut total_error = first.error;
    heap.push(first);

    for subdivisions in 0..spec.max_subdivisions {
        let target = spec.abs_tol.max(spec.rel_tol * total.abs());
        if total_error <= target {
            return Ok(total);
        }
        let worst = heap.pop().expect("heap holds at least one interval");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval is at floating-point resolution; cannot split further
            return Err(QuadratureFailure::ToleranceNotMet {
                estimate: total,
                error: total_error,
                subdivisions,
                worst_a: worst.a,
                worst_b: worst.b,
            });
        }
        let left = eval(worst.a, mid)?;
        let right = eval(mid, worst.b)?;
        total += left.integral + right.integral - worst.integral;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    let target = spec.abs_tol.max(spec.rel_tol * total.abs());
    if total_error <= target {
        return Ok(total);
    }
    let worst = heap.peek().expect("heap holds at least one interval");
    Err(QuadratureFailure::ToleranceNotMet {
        estimate: total,
        error: total_error,
        subdivisions: spec.max_subdivisions,
        worst_a: worst.a,
        worst_b: worst.b,
    })
}

/// Integrates f over [a, inf). Doubles the interval width until f stays
/// below spec.tail_cutoff at two consecutive probe points, then integrates
/// the finite remainder. The integrand must decay (no resurgent tails).
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    spec: &QuadratureSpec,
) -> Result<f64, QuadratureFailure> {
    let mut width = if a.abs() > 1.0 { a.abs() } else { 1.0 };
    let mut b = a;
    let mut small_probes = 0;
    for _ in 0..64 {
        b = a + width;
        let value = f(b);
        if !value.is_finite() {
            return Err(QuadratureFailure::NonFiniteEvaluation { x: b });
        }
        if value.abs() < spec.tail_cutoff {
            small_probes += 1;
            if small_probes == 2 {
                return integrate_1d(f, a, b, spec);
            }
        } else {
            small_probes = 0;
        }
        width *= 2.0;
    }
    Err(QuadratureFailure::TailNotDecaying { a, b_reached: b, value: f(b) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn polynomial_and_trig_integrals_are_exact() {
        let spec = QuadratureSpec::default();
        let cube = integrate_1d(|x| x * x, 0.0, 1.0, &spec).unwrap();
        assert_abs_diff_eq!(cube, 1.0 / 3.0, epsilon = 1e-14);

        let sine = integrate_1d(f64::sin, 0.0, PI, &spec).unwrap();
        assert_abs_diff_eq!(sine, 2.0, epsilon = 1e-13);

        let reversed = integrate_1d(|x| x * x, 1.0, 0.0, &spec).unwrap();
        assert_abs_diff_eq!(reversed, -1.0 / 3.0, epsilon = 1e-14);

        let empty = integrate_1d(|x| x, 2.0, 2.0, &spec).unwrap();
        assert_abs_diff_eq!(empty, 0.0);
    }

    #[test]
    fn oscillatory_integral_converges() {
        let spec = QuadratureSpec::default();
        let got = integrate_1d(|x| (50.0 * x).cos(), 0.0, 1.0, &spec).unwrap();
        assert_abs_diff_eq!(got, (50.0f64).sin() / 50.0, epsilon = 1e-12);
    }

    #[test]
    fn inverse_square_root_endpoint_singularity() {
        // All nodes are interior, so the singular endpoint is never touched;
        // accuracy is limited by bisection depth near x = 1.
        let spec = QuadratureSpec {
            abs_tol: 1e-6,
            rel_tol: 1e-6,
            max_subdivisions: 2000,
            tail_cutoff: 1e-12,
        };
        let got = integrate_1d(|x| 1.0 / (1.0 - x * x).sqrt(), 0.0, 1.0, &spec).unwrap();
        assert_abs_diff_eq!(got, FRAC_PI_2, epsilon = 1e-5);
    }

    #[test]
    fn semi_infinite_exponential_tails() {
        let spec = QuadratureSpec::default();
        let expo = integrate_semi_infinite(|x| (-x).exp(), 0.0, &spec).unwrap();
        assert_relative_eq!(expo, 1.0, max_relative = 1e-10);

        let gaussian = integrate_semi_infinite(|x| (-x * x).exp(), 0.0, &spec).unwrap();
        assert_relative_eq!(gaussian, PI.sqrt() / 2.0, max_relative = 1e-10);

        let shifted = integrate_semi_infinite(|x| (-3.0 * x).exp(), 2.0, &spec).unwrap();
        assert_relative_eq!(shifted, (-6.0f64).exp() / 3.0, max_relative = 1e-10);

        let zero = integrate_semi_infinite(|_| 0.0, 5.0, &spec).unwrap();
        assert_abs_diff_eq!(zero, 0.0);
    }

    #[test]
    fn failure_carries_diagnostics() {
        let spec = QuadratureSpec {
            abs_tol: 1e-14,
            rel_tol: 1e-14,
            max_subdivisions: 2,
            tail_cutoff: 1e-12,
        };
        let err = integrate_1d(|x| 1.0 / (1.0 - x * x).sqrt(), 0.0, 1.0, &spec).unwrap_err();
        match err {
            QuadratureFailure::ToleranceNotMet { error, subdivisions, worst_a, worst_b, .. } => {
                assert!(error > 0.0);
                assert!(subdivisions <= 2);
                assert!(worst_a < worst_b);
            }
            other => panic!("expected ToleranceNotMet, got {other:?}"),
        }

        let nan = integrate_1d(|_| f64::NAN, 0.0, 1.0, &QuadratureSpec::default()).unwrap_err();
        assert!(matches!(nan, QuadratureFailure::NonFiniteEvaluation { .. }));

        let flat =
            integrate_semi_infinite(|_| 1.0, 0.0, &QuadratureSpec::default()).unwrap_err();
        assert!(matches!(flat, QuadratureFailure::TailNotDecaying { .. }));
    }

    #[test]
    fn spec_constructor_validates() {
        assert!(QuadratureSpec::new(1e-10, 1e-8, 2000, 1e-12).is_some());
        assert!(QuadratureSpec::new(0.0, 1e-8, 2000, 1e-12).is_none());
        assert!(QuadratureSpec::new(1e-10, 1e-8, 0, 1e-12).is_none());
    }
}
