//! Single-link power control.
//!
//! Two problems on one link whose quality follows an ABG curve in SNR:
//! the minimum power meeting a quality threshold (closed form), and the
//! power maximizing energy efficiency `φ(p)/(p + p_cir)` subject to a
//! Shannon-rate floor and a power cap, solved with Dinkelbach's method.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::channel::LinkState;
use crate::error::{Error, Result};
use crate::model::AbgParams;

/// Largest shape exponent accepted by [`EeProblem`]; steeper curves could
/// hide sign changes of the derivative between bracket grid points.
pub const MAX_TAU: f64 = 16.0;
/// Points in the log-spaced grid used to bracket stationary points.
pub const BRACKET_POINTS: usize = 512;
pub const DEFAULT_XI: f64 = 1e-8;
pub const MAX_DINKELBACH_ITERATIONS: usize = 1000;

/// Ulp steps allowed when lifting a rounded inverse onto the threshold.
const MAX_ULP_LIFT: usize = 64;

/// Minimum transmit power reaching quality `eta` on `link`. Returns 0 when
/// the threshold is already met at zero power. The result satisfies
/// `abg.eval(link.snr(p)) >= eta` in floating point.
pub fn adaptive_power(abg: &AbgParams, link: &LinkState, eta: f64) -> Result<f64> {
    let required = abg.required_snr(eta)?;
    if required.rho == 0.0 {
        return Ok(0.0);
    }
    if link.gain_sq() == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let mut p = required.rho / link.gain_to_noise();
    for _ in 0..MAX_ULP_LIFT {
        if abg.eval(link.snr(p)) >= eta {
            break;
        }
        p = p.next_up();
    }
    Ok(p)
}

/// Quality per consumed watt, `φ(p)/(p + p_cir)`.
pub fn energy_efficiency(abg: &AbgParams, link: &LinkState, p: f64, p_cir: f64) -> Result<f64> {
    if p.is_nan() || p < 0.0 {
        return Err(Error::invalid("p", "must be >= 0", p));
    }
    let total = p + p_cir;
    if total.is_nan() || total <= 0.0 {
        return Err(Error::invalid("p + p_cir", "must be > 0", total));
    }
    Ok(abg.eval(link.snr(p)) / total)
}

/// Energy-efficiency maximization instance: maximize `φ(p)/(p + p_cir)`
/// over `p ≤ p_max` with `B·log2(1 + SNR(p)) ≥ min_rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProblem")]
pub struct EeProblem {
    pub abg: AbgParams,
    pub link: LinkState,
    /// Circuit power, watts.
    pub p_cir: f64,
    /// Hz.
    pub bandwidth: f64,
    /// bit/s.
    pub min_rate: f64,
    /// Power cap `P_U`, watts.
    pub p_max: f64,
}

#[derive(Deserialize)]
struct RawProblem {
    abg: AbgParams,
    link: LinkState,
    p_cir: f64,
    bandwidth: f64,
    min_rate: f64,
    p_max: f64,
}

impl TryFrom<RawProblem> for EeProblem {
    type Error = Error;

    fn try_from(r: RawProblem) -> Result<Self> {
        EeProblem::new(r.abg, r.link, r.p_cir, r.bandwidth, r.min_rate, r.p_max)
    }
}

impl EeProblem {
    pub fn new(
        abg: AbgParams,
        link: LinkState,
        p_cir: f64,
        bandwidth: f64,
        min_rate: f64,
        p_max: f64,
    ) -> Result<Self> {
        let problem = Self {
            abg,
            link,
            p_cir,
            bandwidth,
            min_rate,
            p_max,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_cir.is_finite() && self.p_cir >= 0.0) {
            return Err(Error::invalid("p_cir", "must be finite and >= 0", self.p_cir));
        }
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(Error::invalid("bandwidth", "must be finite and > 0", self.bandwidth));
        }
        if !(self.min_rate.is_finite() && self.min_rate >= 0.0) {
            return Err(Error::invalid("min_rate", "must be finite and >= 0", self.min_rate));
        }
        if !(self.p_max.is_finite() && self.p_max > 0.0) {
            return Err(Error::invalid("p_max", "must be finite and > 0", self.p_max));
        }
        if self.abg.tau() > MAX_TAU {
            return Err(Error::invalid("tau", "must be <= 16", self.abg.tau()));
        }
        Ok(())
    }

    pub fn with_p_max(&self, p_max: f64) -> Result<Self> {
        Self::new(self.abg, self.link, self.p_cir, self.bandwidth, self.min_rate, p_max)
    }

    pub fn with_min_rate(&self, min_rate: f64) -> Result<Self> {
        Self::new(self.abg, self.link, self.p_cir, self.bandwidth, min_rate, self.p_max)
    }

    /// Quality at transmit power `p`.
    #[inline]
    pub fn quality(&self, p: f64) -> f64 {
        self.abg.eval(self.link.snr(p))
    }

    /// Energy efficiency at `p`; `p_cir = 0` with `p = 0` yields NaN.
    #[inline]
    pub fn efficiency(&self, p: f64) -> f64 {
        self.quality(p) / (p + self.p_cir)
    }

    /// The parametric objective `F(p, v) = φ(p) − v·(p + p_cir)`.
    #[inline]
    pub fn parametric(&self, p: f64, v: f64) -> f64 {
        self.quality(p) - v * (p + self.p_cir)
    }

    /// `dφ/dp`.
    pub fn quality_slope(&self, p: f64) -> f64 {
        let k = self.abg.beta() * self.link.gain_to_noise();
        let (gamma, tau) = (self.abg.gamma(), self.abg.tau());
        if p == 0.0 {
            return match tau.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Less) => f64::INFINITY,
                Some(std::cmp::Ordering::Equal) => gamma * k,
                _ => 0.0,
            };
        }
        let u = (k * p).powf(tau);
        gamma * tau * u / (p * (1.0 + u).powi(2))
    }

    /// Shannon rate at power `p`, bit/s.
    pub fn rate(&self, p: f64) -> f64 {
        self.bandwidth * self.link.snr(p).ln_1p() / std::f64::consts::LN_2
    }

    /// Lower end `P_L` of the feasible power interval, the power at which the
    /// rate floor is met with equality.
    pub fn rate_floor_power(&self) -> Result<f64> {
        if self.link.gain_sq() == 0.0 {
            return Err(Error::ZeroChannel);
        }
        let lower = (self.min_rate / self.bandwidth * std::f64::consts::LN_2).exp_m1()
            / self.link.gain_to_noise();
        if lower > self.p_max {
            return Err(Error::InfeasibleBox {
                lower,
                upper: self.p_max,
            });
        }
        Ok(lower)
    }
}

/// Outcome of maximizing `F(·, v)` over the feasible interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParametricOptimum {
    pub power: f64,
    pub value: f64,
    /// Refined sign changes of `∂F/∂p` inside the interval.
    pub stationary_points: usize,
}

fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let lo_positive = f(lo) > 0.0;
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maximizes `F(p, v)` over `[P_L, P_U]`.
///
/// Sign changes of `∂F/∂p` are bracketed on a log-spaced grid spanning the
/// interval and refined by bisection; the best of those stationary points and
/// the two endpoints is returned. This is the projection of the stationary
/// point onto the interval when `φ` is concave (`τ ≤ 1`) and stays exact for
/// the sigmoid-shaped curves with `τ > 1`.
pub fn maximize_parametric(problem: &EeProblem, v: f64) -> Result<ParametricOptimum> {
    let lower = problem.rate_floor_power()?;
    let upper = problem.p_max;
    let objective = |p: f64| problem.parametric(p, v);
    let slope = |p: f64| problem.quality_slope(p) - v;

    let mut candidates = vec![lower, upper];
    let mut stationary_points = 0;
    let grid_lo = lower.max(1e-9 * upper);
    if grid_lo < upper {
        let ratio = upper / grid_lo;
        let mut points = Vec::with_capacity(BRACKET_POINTS + 1);
        if lower < grid_lo {
            points.push(lower);
        }
        points.extend((0..BRACKET_POINTS).map(|i| {
            if i + 1 == BRACKET_POINTS {
                upper
            } else {
                grid_lo * ratio.powf(i as f64 / (BRACKET_POINTS - 1) as f64)
            }
        }));
        let slopes: Vec<f64> = points.iter().map(|&p| slope(p)).collect();
        for i in 0..points.len() - 1 {
            let (a, b) = (slopes[i], slopes[i + 1]);
            if a == 0.0 && i > 0 {
                // counted as the right end of the previous bracket
                continue;
            }
            if a == 0.0 {
                candidates.push(points[i]);
                stationary_points += 1;
            } else if b == 0.0 {
                candidates.push(points[i + 1]);
                stationary_points += 1;
            } else if (a > 0.0) != (b > 0.0) {
                candidates.push(bisect_root(slope, points[i], points[i + 1]));
                stationary_points += 1;
            }
        }
    }

    let (power, value) = candidates
        .into_iter()
        .map(|p| (p, objective(p)))
        .fold((lower, f64::NEG_INFINITY), |best, cand| {
            if cand.1 > best.1 || (cand.1 == best.1 && cand.0 < best.0) {
                cand
            } else {
                best
            }
        });
    Ok(ParametricOptimum {
        power,
        value,
        stationary_points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DinkelbachStep {
    pub iter: usize,
    pub v: f64,
    pub p: f64,
    #[serde(rename = "F")]
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DinkelbachTrace {
    pub steps: Vec<DinkelbachStep>,
    /// Optimal transmit power `p*`.
    pub power: f64,
    /// Optimal energy efficiency `ψ*`.
    pub efficiency: f64,
    /// Some subproblem had more than one stationary point (non-concave `φ`).
    pub multiple_stationary: bool,
}

impl DinkelbachTrace {
    /// Writes the trace as CSV with header `iter,v,p,F`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for step in &self.steps {
            w.serialize(step)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Dinkelbach's method for `max φ(p)/(p + p_cir)` over the feasible interval.
///
/// Starts from `v = 0`; each iteration maximizes `F(·, v)` and stops once the
/// maximum value is at most `xi`, otherwise sets `v` to the efficiency of the
/// maximizer. A collapsed interval `P_L = P_U` returns after one subproblem.
pub fn dinkelbach(problem: &EeProblem, xi: f64) -> Result<DinkelbachTrace> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::invalid("xi", "must be finite and > 0", xi));
    }
    let lower = problem.rate_floor_power()?;
    let mut trace = DinkelbachTrace {
        steps: Vec::new(),
        power: f64::NAN,
        efficiency: f64::NAN,
        multiple_stationary: false,
    };
    let mut v = 0.0;
    for iter in 1..=MAX_DINKELBACH_ITERATIONS {
        let opt = maximize_parametric(problem, v)?;
        trace.multiple_stationary |= opt.stationary_points > 1;
        trace.steps.push(DinkelbachStep {
            iter,
            v,
            p: opt.power,
            f: opt.value,
        });
        if opt.value <= xi || lower == problem.p_max {
            trace.power = opt.power;
            trace.efficiency = problem.efficiency(opt.power);
            return Ok(trace);
        }
        v = problem.efficiency(opt.power);
    }
    let last = trace.steps.last().map(|s| s.p).unwrap_or(f64::NAN);
    trace.power = last;
    trace.efficiency = problem.efficiency(last);
    Err(Error::IterationLimit {
        limit: MAX_DINKELBACH_ITERATIONS,
        trace: Box::new(trace),
    })
}
