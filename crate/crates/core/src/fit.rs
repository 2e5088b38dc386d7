//! Weighted nonlinear least-squares fitting of the four-parameter curves.
//!
//! Both curve families share the form `c − d / (1 + (s·x)^k)`, so one damped
//! Gauss-Newton (Levenberg-Marquardt) solver serves both. The solver works on
//! the logarithms of the four coefficients, which keeps them strictly positive
//! without any active-set handling, and is restarted from a seeded set of
//! initial points; the lowest-SSE local minimum wins.

use nalgebra::{Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{four_param, AbgParams, BitScalingParams, MetricSample, PARAM_FLOOR};

/// Flat-data threshold on `max(y) − min(y)`.
pub const FLAT_RANGE: f64 = 1e-6;

const MIN_SAMPLES: usize = 5;
const MIN_DISTINCT: usize = 3;

/// A curve family with four positive coefficients in the order
/// `[ceiling, scale, depth, shape]`.
pub trait FourParamCurve: Copy + Sized {
    fn from_coefficients(c: [f64; 4]) -> Result<Self>;
    fn coefficients(&self) -> [f64; 4];

    fn eval_at(&self, x: f64) -> f64 {
        let [c, s, d, k] = self.coefficients();
        four_param(c, s, d, k, x)
    }
}

impl FourParamCurve for AbgParams {
    fn from_coefficients(c: [f64; 4]) -> Result<Self> {
        AbgParams::new(c[0], c[1], c[2], c[3])
    }

    fn coefficients(&self) -> [f64; 4] {
        [self.alpha(), self.beta(), self.gamma(), self.tau()]
    }
}

impl FourParamCurve for BitScalingParams {
    fn from_coefficients(c: [f64; 4]) -> Result<Self> {
        BitScalingParams::new(c[0], c[1], c[2], c[3])
    }

    fn coefficients(&self) -> [f64; 4] {
        [self.c1(), self.c2(), self.c3(), self.c4()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative step threshold on the log-coefficients.
    pub tolerance: f64,
    pub multistart_count: usize,
    pub seed: u64,
    /// Per-coefficient `(lower, upper)` box, same order as
    /// [`FourParamCurve::coefficients`].
    pub bounds: [(f64, f64); 4],
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-10,
            multistart_count: 16,
            seed: 0,
            bounds: [(PARAM_FLOOR, f64::INFINITY); 4],
        }
    }
}

impl FitOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::invalid(
                "max_iterations",
                "must be >= 1",
                self.max_iterations as f64,
            ));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::invalid("tolerance", "must be > 0", self.tolerance));
        }
        if self.multistart_count < 1 {
            return Err(Error::invalid(
                "multistart_count",
                "must be >= 1",
                self.multistart_count as f64,
            ));
        }
        for &(lo, hi) in &self.bounds {
            if !(lo >= PARAM_FLOOR && hi > lo) {
                return Err(Error::invalid(
                    "bounds",
                    "need 1e-12 <= lower < upper",
                    lo,
                ));
            }
        }
        Ok(())
    }

    fn log_bounds(&self) -> [(f64, f64); 4] {
        self.bounds.map(|(lo, hi)| (lo.ln(), hi.ln()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult<P> {
    pub params: P,
    pub sse: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Flat input: the depth was pinned to its lower bound.
    pub degenerate: bool,
    /// `[min x, max x]` of the fitted samples.
    pub validity_range: [f64; 2],
}

/// Fits ABG coefficients to `(linear SNR, metric)` samples.
pub fn fit_abg(samples: &[MetricSample], options: &FitOptions) -> Result<FitResult<AbgParams>> {
    fit_curve(samples, options)
}

/// Fits bit-scaling coefficients to `(bit count, ceiling)` samples.
pub fn fit_upper_bound(
    samples: &[MetricSample],
    options: &FitOptions,
) -> Result<FitResult<BitScalingParams>> {
    fit_curve(samples, options)
}

/// Weighted SSE of a curve over `samples`.
pub fn curve_sse<P: FourParamCurve>(curve: &P, samples: &[MetricSample]) -> f64 {
    samples
        .iter()
        .map(|s| s.weight * (s.y - curve.eval_at(s.x)).powi(2))
        .sum()
}

/// The seeded initial points used by [`fit_curve`] for these samples.
pub fn multistart_points<P: FourParamCurve>(
    samples: &[MetricSample],
    options: &FitOptions,
) -> Result<Vec<P>> {
    options.validate()?;
    check_samples(samples)?;
    start_thetas(samples, options)
        .into_iter()
        .map(|t| P::from_coefficients(t.map(f64::exp)))
        .collect()
}

pub fn fit_curve<P: FourParamCurve>(
    samples: &[MetricSample],
    options: &FitOptions,
) -> Result<FitResult<P>> {
    options.validate()?;
    check_samples(samples)?;

    let validity_range = samples.iter().fold([f64::INFINITY, f64::NEG_INFINITY], |r, s| {
        [r[0].min(s.x), r[1].max(s.x)]
    });
    let (y_min, y_max) = y_range(samples);
    if y_max - y_min < FLAT_RANGE {
        return flat_fit(samples, options, validity_range);
    }

    let bounds = options.log_bounds();
    let starts = start_thetas(samples, options);
    let locals: Vec<LocalFit> = starts
        .par_iter()
        .map(|theta0| levenberg_marquardt(samples, *theta0, &bounds, options))
        .collect();

    // Order-independent argmin: SSE, then smallest shape, then smallest scale.
    let best = locals
        .into_iter()
        .filter(|l| l.sse.is_finite())
        .min_by(|a, b| {
            a.sse
                .total_cmp(&b.sse)
                .then(a.theta[3].total_cmp(&b.theta[3]))
                .then(a.theta[1].total_cmp(&b.theta[1]))
        })
        .ok_or(Error::NoDescent {
            starts: starts.len(),
        })?;

    Ok(FitResult {
        params: P::from_coefficients(best.theta.map(f64::exp))?,
        sse: best.sse,
        iterations: best.iterations,
        converged: best.converged,
        degenerate: false,
        validity_range,
    })
}

fn check_samples(samples: &[MetricSample]) -> Result<()> {
    for (i, s) in samples.iter().enumerate() {
        s.validate(i)?;
    }
    let mut xs: Vec<f64> = samples.iter().map(|s| s.x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if samples.len() < MIN_SAMPLES || xs.len() < MIN_DISTINCT || !xs.iter().any(|&x| x > 0.0) {
        return Err(Error::InsufficientSamples {
            needed: MIN_SAMPLES,
            distinct_needed: MIN_DISTINCT,
            got: samples.len(),
            distinct: xs.len(),
        });
    }
    Ok(())
}

fn y_range(samples: &[MetricSample]) -> (f64, f64) {
    samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
        (lo.min(s.y), hi.max(s.y))
    })
}

fn clamp_theta(theta: [f64; 4], bounds: &[(f64, f64); 4]) -> [f64; 4] {
    let mut out = theta;
    for (t, &(lo, hi)) in out.iter_mut().zip(bounds) {
        *t = t.clamp(lo, hi);
    }
    out
}

fn start_thetas(samples: &[MetricSample], options: &FitOptions) -> Vec<[f64; 4]> {
    let (y_min, y_max) = y_range(samples);
    let x_max = samples.iter().map(|s| s.x).fold(f64::NEG_INFINITY, f64::max);
    let x_min = samples
        .iter()
        .map(|s| s.x)
        .filter(|&x| x > 0.0)
        .fold(f64::INFINITY, f64::min);
    let floor = PARAM_FLOOR.ln();
    let ceiling = y_max.max(PARAM_FLOOR).ln();
    let depth = (y_max - y_min).max(PARAM_FLOOR).ln();
    let (scale_lo, scale_hi) = (-x_max.ln(), -x_min.ln());
    let (shape_lo, shape_hi) = (0.25f64.ln(), 4f64.ln());

    let bounds = options.log_bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    (0..options.multistart_count)
        .map(|_| {
            let scale = rng.random_range(scale_lo..=scale_hi);
            let shape = rng.random_range(shape_lo..=shape_hi);
            clamp_theta([ceiling.max(floor), scale, depth, shape], &bounds)
        })
        .collect()
}

/// Curve value and its gradient with respect to the log-coefficients.
pub(crate) fn value_and_log_gradient(theta: &[f64; 4], x: f64) -> (f64, [f64; 4]) {
    let [c, s, d, k] = theta.map(f64::exp);
    let u = (s * x).powf(k);
    let denom = 1.0 + u;
    let value = c - d / denom;
    let pull = d * u / (denom * denom);
    // u·ln(s·x) → 0 as x → 0
    let log_sx = if u > 0.0 { (s * x).ln() } else { 0.0 };
    (value, [c, k * pull, -d / denom, k * pull * log_sx])
}

struct LocalFit {
    theta: [f64; 4],
    sse: f64,
    iterations: usize,
    converged: bool,
}

fn theta_sse(samples: &[MetricSample], theta: &[f64; 4]) -> f64 {
    let [c, s, d, k] = theta.map(f64::exp);
    samples
        .iter()
        .map(|p| p.weight * (p.y - four_param(c, s, d, k, p.x)).powi(2))
        .sum()
}

fn levenberg_marquardt(
    samples: &[MetricSample],
    theta0: [f64; 4],
    bounds: &[(f64, f64); 4],
    options: &FitOptions,
) -> LocalFit {
    let mut theta = theta0;
    let mut sse = theta_sse(samples, &theta);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    if !sse.is_finite() {
        return LocalFit {
            theta,
            sse,
            iterations,
            converged,
        };
    }

    while iterations < options.max_iterations {
        iterations += 1;
        let mut normal = Matrix4::<f64>::zeros();
        let mut gradient = Vector4::<f64>::zeros();
        for p in samples {
            let (value, grad) = value_and_log_gradient(&theta, p.x);
            let row = Vector4::from(grad);
            normal += p.weight * row * row.transpose();
            gradient += p.weight * (p.y - value) * row;
        }
        let diag_max = normal.diagonal().max();
        if !(diag_max.is_finite() && diag_max > 0.0) {
            break;
        }

        // Inner loop: raise damping until the step reduces the SSE.
        let mut accepted = None;
        while lambda < 1e20 {
            let mut damped = normal;
            for i in 0..4 {
                damped[(i, i)] += lambda * normal[(i, i)].max(1e-12 * diag_max);
            }
            let step = damped.cholesky().map(|ch| ch.solve(&gradient));
            if let Some(step) = step.filter(|s| s.iter().all(|v| v.is_finite())) {
                let trial = clamp_theta(
                    std::array::from_fn(|i| theta[i] + step[i]),
                    bounds,
                );
                let trial_sse = theta_sse(samples, &trial);
                if trial_sse < sse {
                    accepted = Some((trial, trial_sse));
                    break;
                }
                // no representable improvement left
                if trial == theta {
                    break;
                }
            }
            lambda *= 4.0;
        }

        let Some((trial, trial_sse)) = accepted else {
            // Stationary to working precision.
            converged = true;
            break;
        };
        let step_norm = trial
            .iter()
            .zip(&theta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let theta_norm = theta.iter().map(|t| t.abs()).fold(0.0, f64::max);
        theta = trial;
        sse = trial_sse;
        lambda = (lambda * 0.3).max(1e-15);
        if step_norm <= options.tolerance * (theta_norm + options.tolerance) || sse == 0.0 {
            converged = true;
            break;
        }
    }

    LocalFit {
        theta,
        sse,
        iterations,
        converged,
    }
}

fn flat_fit<P: FourParamCurve>(
    samples: &[MetricSample],
    options: &FitOptions,
    validity_range: [f64; 2],
) -> Result<FitResult<P>> {
    let total_weight: f64 = samples.iter().map(|s| s.weight).sum();
    let mean = if total_weight > 0.0 {
        samples.iter().map(|s| s.weight * s.y).sum::<f64>() / total_weight
    } else {
        samples.iter().map(|s| s.y).sum::<f64>() / samples.len() as f64
    };
    let positive_lo = samples
        .iter()
        .map(|s| s.x)
        .filter(|&x| x > 0.0)
        .fold(f64::INFINITY, f64::min);
    let mid = (positive_lo * validity_range[1]).sqrt();
    let b = options.bounds;
    let coefficients = [
        mean.clamp(b[0].0, b[0].1),
        mid.recip().clamp(b[1].0, b[1].1),
        b[2].0,
        1f64.clamp(b[3].0, b[3].1),
    ];
    let params = P::from_coefficients(coefficients)?;
    Ok(FitResult {
        sse: curve_sse(&params, samples),
        params,
        iterations: 0,
        converged: true,
        degenerate: true,
        validity_range,
    })
}
