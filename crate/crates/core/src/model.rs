//! The ABG performance-curve family.
//!
//! An ABG curve maps linear SNR `ρ` to an end-to-end metric
//!
//! ```text
//! φ(ρ) = α − γ / (1 + (β·ρ)^τ)
//! ```
//!
//! and the same four-parameter form, read in bit count `n_b` instead of SNR,
//! models how the metric ceiling `α` grows with the number of quantized
//! feature bits. Values are returned unclamped: a fitted curve is only
//! meaningful on the abscissa range it was fitted on, and low-SNR outputs of
//! several published curves are negative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible value of any curve coefficient.
pub const PARAM_FLOOR: f64 = 1e-12;

/// `ceiling − depth / (1 + (scale·x)^shape)`.
#[inline]
pub(crate) fn four_param(ceiling: f64, scale: f64, depth: f64, shape: f64, x: f64) -> f64 {
    ceiling - depth / (1.0 + (scale * x).powf(shape))
}

fn check_coefficient(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= PARAM_FLOOR {
        Ok(value)
    } else {
        Err(Error::invalid(field, "must be finite and >= 1e-12", value))
    }
}

/// Coefficients of one fitted ABG curve.
///
/// `alpha` is the metric ceiling, `beta` the inverse-SNR scale (per unit of
/// linear SNR), `gamma` the drop depth and `tau` the shape exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAbg")]
pub struct AbgParams {
    alpha: f64,
    beta: f64,
    gamma: f64,
    tau: f64,
}

#[derive(Deserialize)]
struct RawAbg {
    alpha: f64,
    beta: f64,
    gamma: f64,
    tau: f64,
}

impl TryFrom<RawAbg> for AbgParams {
    type Error = Error;

    fn try_from(raw: RawAbg) -> Result<Self> {
        AbgParams::new(raw.alpha, raw.beta, raw.gamma, raw.tau)
    }
}

/// A metric value together with a flag telling whether it leaves `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    pub value: f64,
}

impl MetricValue {
    /// Normalized metrics (MS-SSIM, accuracy) live in `[0, 1]`; fitted
    /// curves may leave it outside their fitted range.
    pub fn out_of_unit_range(&self) -> bool {
        !(0.0..=1.0).contains(&self.value)
    }
}

/// Linear SNR needed to reach a target metric value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RequiredSnr {
    pub rho: f64,
    /// The target lies below `α − γ`, the value already attained at zero
    /// SNR. `rho` is then 0.
    pub below_range: bool,
}

impl AbgParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, tau: f64) -> Result<Self> {
        Ok(Self {
            alpha: check_coefficient("alpha", alpha)?,
            beta: check_coefficient("beta", beta)?,
            gamma: check_coefficient("gamma", gamma)?,
            tau: check_coefficient("tau", tau)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Value at zero SNR, `α − γ`.
    pub fn floor(&self) -> f64 {
        self.alpha - self.gamma
    }

    /// Same curve with its ceiling replaced, e.g. by a bit-dependent bound.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.beta, self.gamma, self.tau)
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.alpha, beta, self.gamma, self.tau)
    }

    /// Evaluates the curve at linear SNR `rho`.
    #[inline]
    pub fn eval(&self, rho: f64) -> f64 {
        four_param(self.alpha, self.beta, self.gamma, self.tau, rho)
    }

    pub fn evaluate(&self, rho: f64) -> MetricValue {
        MetricValue {
            value: self.eval(rho),
        }
    }

    /// Inverts the curve: the linear SNR at which it reaches `target`.
    pub fn required_snr(&self, target: f64) -> Result<RequiredSnr> {
        if !target.is_finite() {
            return Err(Error::invalid("target", "must be finite", target));
        }
        if target >= self.alpha {
            return Err(Error::TargetUnreachable {
                target,
                ceiling: self.alpha,
            });
        }
        if target <= self.floor() {
            return Ok(RequiredSnr {
                rho: 0.0,
                below_range: target < self.floor(),
            });
        }
        let odds = self.gamma / (self.alpha - target) - 1.0;
        Ok(RequiredSnr {
            rho: odds.powf(self.tau.recip()) / self.beta,
            below_range: false,
        })
    }
}

/// Coefficients of the metric-ceiling-versus-bits curve
/// `c1 − c3 / (1 + (c2·n_b)^c4)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBits")]
pub struct BitScalingParams {
    c1: f64,
    c2: f64,
    c3: f64,
    c4: f64,
}

#[derive(Deserialize)]
struct RawBits {
    c1: f64,
    c2: f64,
    c3: f64,
    c4: f64,
}

impl TryFrom<RawBits> for BitScalingParams {
    type Error = Error;

    fn try_from(raw: RawBits) -> Result<Self> {
        BitScalingParams::new(raw.c1, raw.c2, raw.c3, raw.c4)
    }
}

impl BitScalingParams {
    pub fn new(c1: f64, c2: f64, c3: f64, c4: f64) -> Result<Self> {
        Ok(Self {
            c1: check_coefficient("c1", c1)?,
            c2: check_coefficient("c2", c2)?,
            c3: check_coefficient("c3", c3)?,
            c4: check_coefficient("c4", c4)?,
        })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn c3(&self) -> f64 {
        self.c3
    }

    pub fn c4(&self) -> f64 {
        self.c4
    }

    /// Metric ceiling for an encoder emitting `n_bits` quantized bits.
    pub fn upper_bound(&self, n_bits: u32) -> Result<f64> {
        if n_bits == 0 {
            return Err(Error::invalid("n_b", "must be a positive bit count", 0.0));
        }
        Ok(self.eval(f64::from(n_bits)))
    }

    /// Evaluates the curve at a real-valued abscissa; used by fitting.
    #[inline]
    pub fn eval(&self, n_bits: f64) -> f64 {
        four_param(self.c1, self.c2, self.c3, self.c4, n_bits)
    }
}

/// One measured point of a performance curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub x: f64,
    pub y: f64,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl MetricSample {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y, weight: 1.0 }
    }

    pub fn weighted(x: f64, y: f64, weight: f64) -> Self {
        Self { x, y, weight }
    }

    /// Checks `x ≥ 0`, `weight ≥ 0` and finiteness; `index` names the sample
    /// in the error.
    pub fn validate(&self, index: usize) -> Result<()> {
        if !(self.x.is_finite() && self.x >= 0.0) {
            return Err(Error::NonFinite { index, field: "x" });
        }
        if !self.y.is_finite() {
            return Err(Error::NonFinite { index, field: "y" });
        }
        if !(self.weight.is_finite() && self.weight >= 0.0) {
            return Err(Error::NonFinite {
                index,
                field: "weight",
            });
        }
        Ok(())
    }
}

/// Weighted sum of squared errors `Σ g_i (t_i − t̂_i)²`.
pub fn sse(samples: &[MetricSample], fitted: &[f64]) -> Result<f64> {
    if samples.len() != fitted.len() {
        return Err(Error::LengthMismatch {
            left: samples.len(),
            right: fitted.len(),
        });
    }
    if samples.is_empty() {
        return Err(Error::InsufficientSamples {
            needed: 1,
            distinct_needed: 1,
            got: 0,
            distinct: 0,
        });
    }
    Ok(samples
        .iter()
        .zip(fitted)
        .map(|(s, f)| s.weight * (s.y - f).powi(2))
        .sum())
}

/// Converts a dB value to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
