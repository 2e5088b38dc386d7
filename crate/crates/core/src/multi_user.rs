//! Max-min quality power allocation over orthogonal downlink subcarriers.
//!
//! Each user `i` sees its own ABG curve `φ_i` on its own subcarrier, and the
//! base station splits a total budget `P̄`. For a candidate common level `ν`
//! every user's minimal power is available in closed form, and those powers
//! couple only through `Σ p_i ≤ P̄`, so the feasibility question is a single
//! comparison. The optimal level is found by bisection on `ν`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::channel::LinkState;
use crate::error::{Error, Result};
use crate::model::AbgParams;

pub const DEFAULT_DELTA: f64 = 1e-6;
/// Distance kept below the smallest ceiling when capping the bracket.
pub const CEILING_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserLink {
    pub abg: AbgParams,
    #[serde(flatten)]
    pub link: LinkState,
}

impl UserLink {
    pub fn new(abg: AbgParams, link: LinkState) -> Self {
        Self { abg, link }
    }

    /// `φ_i(p)`.
    pub fn quality(&self, power: f64) -> f64 {
        self.abg.eval(self.link.snr(power))
    }
}

/// Minimal power for `user` to reach level `nu`; 0 when the level is met at
/// zero power. `index` names the user in errors.
pub fn min_power_for_level(user: &UserLink, nu: f64, index: usize) -> Result<f64> {
    let required = user.abg.required_snr(nu).map_err(|e| match e {
        Error::TargetUnreachable { target, ceiling } => Error::LevelUnreachable {
            user: index,
            level: target,
            ceiling,
        },
        other => other,
    })?;
    if required.rho == 0.0 {
        return Ok(0.0);
    }
    if user.link.gain_sq() == 0.0 {
        return Err(Error::ZeroChannel);
    }
    Ok(required.rho / user.link.gain_to_noise())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Minimal per-user powers; `+∞` for users that cannot reach the level.
    pub powers: Vec<f64>,
    pub total: f64,
}

/// Whether every user can reach `nu` within `budget` in total.
pub fn feasible(users: &[UserLink], nu: f64, budget: f64) -> Feasibility {
    let powers: Vec<f64> = users
        .iter()
        .enumerate()
        .map(|(i, u)| min_power_for_level(u, nu, i).unwrap_or(f64::INFINITY))
        .collect();
    let total: f64 = powers.iter().sum();
    Feasibility {
        feasible: total <= budget,
        powers,
        total,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    pub powers: Vec<f64>,
    /// Max-min level `ν` the powers were computed for.
    pub nu: f64,
    /// `φ_i(p_i)` per user.
    pub achieved: Vec<f64>,
    pub total: f64,
    pub iterations: usize,
}

#[derive(Serialize)]
struct AllocationRow {
    user: usize,
    power: f64,
    phi: f64,
}

#[derive(Serialize)]
pub struct AllocationSummary {
    pub nu: f64,
    pub total: f64,
    pub iterations: usize,
}

impl Allocation {
    fn from_powers(users: &[UserLink], powers: Vec<f64>, nu: f64, iterations: usize) -> Self {
        let achieved = users.iter().zip(&powers).map(|(u, &p)| u.quality(p)).collect();
        Self {
            total: powers.iter().sum(),
            powers,
            nu,
            achieved,
            iterations,
        }
    }

    pub fn worst(&self) -> f64 {
        self.achieved.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn summary(&self) -> AllocationSummary {
        AllocationSummary {
            nu: self.nu,
            total: self.total,
            iterations: self.iterations,
        }
    }

    /// Writes `user,power,phi` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (user, (&power, &phi)) in self.powers.iter().zip(&self.achieved).enumerate() {
            w.serialize(AllocationRow { user, power, phi })?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_users(users: &[UserLink], budget: f64) -> Result<()> {
    if users.is_empty() {
        return Err(Error::EmptyUserSet);
    }
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::invalid("budget", "must be finite and > 0", budget));
    }
    if users.iter().any(|u| u.link.gain_sq() == 0.0) {
        return Err(Error::ZeroChannel);
    }
    Ok(())
}

/// Splits the budget evenly, the fixed-allocation baseline.
pub fn equal_split(users: &[UserLink], budget: f64) -> Result<Allocation> {
    check_users(users, budget)?;
    let share = budget / users.len() as f64;
    let powers = vec![share; users.len()];
    let mut alloc = Allocation::from_powers(users, powers, 0.0, 0);
    alloc.nu = alloc.worst();
    Ok(alloc)
}

/// Bisection on the common level `ν`.
///
/// The bracket starts at `[0, min(1, min_i α_i − 1e-9)]`. If level 0 is
/// itself out of budget (curves that are negative at low SNR), the lower end
/// drops to `min_i (α_i − γ_i)`, where all-zero powers are feasible. When the
/// upper end is already feasible it is returned directly and the leftover
/// budget stays unallocated. Powers are those of the last feasible level.
pub fn maxmin_bisection(users: &[UserLink], budget: f64, delta: f64) -> Result<Allocation> {
    check_users(users, budget)?;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid("delta", "must be finite and > 0", delta));
    }
    let min_ceiling = users.iter().map(|u| u.abg.alpha()).fold(f64::INFINITY, f64::min);
    let mut hi = (min_ceiling - CEILING_MARGIN).min(1.0);
    let top = feasible(users, hi, budget);
    if top.feasible {
        return Ok(Allocation::from_powers(users, top.powers, hi, 0));
    }

    let mut lo = 0.0;
    let mut best = feasible(users, lo, budget);
    if !best.feasible {
        lo = users.iter().map(|u| u.abg.floor()).fold(f64::INFINITY, f64::min);
        best = feasible(users, lo, budget);
    }
    let mut iterations = 0;
    while hi - lo > delta {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let check = feasible(users, mid, budget);
        if check.feasible {
            lo = mid;
            best = check;
        } else {
            hi = mid;
        }
    }
    Ok(Allocation::from_powers(users, best.powers, lo, iterations))
}
