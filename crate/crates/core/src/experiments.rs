//! Monte-Carlo and sweep harnesses.
//!
//! Every scenario is a deterministic function of its configuration and seed.
//! Realization `i` draws from stream `i` of the seeded generator and results
//! are gathered in realization order, so the worker count never changes the
//! output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{make_stream, sample_gain, ChannelModel, LinkState, RNG_ALGORITHM};
use crate::error::{Error, Result};
use crate::fixtures::fixture_digest;
use crate::model::AbgParams;
use crate::multi_user::{equal_split, maxmin_bisection, UserLink, DEFAULT_DELTA};
use crate::single_user::{adaptive_power, dinkelbach, EeProblem, DEFAULT_XI};

pub const DEFAULT_REALIZATIONS: usize = 10_000;

fn default_realizations() -> usize {
    DEFAULT_REALIZATIONS
}

fn default_noise_var() -> f64 {
    1.0
}

fn default_xi() -> f64 {
    DEFAULT_XI
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

/// Runs `f(0..n)` on `workers` threads (1 = current thread), keeping order.
pub fn ordered_map<T, F>(workers: usize, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if workers <= 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(f).collect())
}

fn check_grid(field: &'static str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config(format!("`{field}` must not be empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("`{field}` must be finite")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("`{field}` must be strictly increasing")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Outage CDFs

/// Empirical CDF of per-realization quality values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfTable {
    /// Sorted ascending.
    pub values: Vec<f64>,
    /// `probabilities[i] = (i + 1) / N`.
    pub probabilities: Vec<f64>,
    /// Fraction of realizations with quality strictly below the threshold.
    pub outage: f64,
    pub threshold: f64,
}

impl CdfTable {
    pub fn from_values(mut values: Vec<f64>, threshold: f64) -> Self {
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let probabilities = (1..=values.len()).map(|i| i as f64 / n).collect();
        let below = values.partition_point(|&v| v < threshold);
        Self {
            outage: below as f64 / n,
            values,
            probabilities,
            threshold,
        }
    }

    /// `P(X ≤ x)`, right-continuous.
    pub fn cdf_at(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }

    /// `P(X < x)`.
    pub fn cdf_below(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v < x) as f64 / self.values.len() as f64
    }

    /// Writes `value,cdf` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["value", "cdf"])?;
        for (v, p) in self.values.iter().zip(&self.probabilities) {
            w.write_record([v.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// How the fixed-power baseline picks its level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPower {
    /// An explicit level in watts.
    Watts(f64),
    /// The power meeting the threshold exactly at this quantile of the
    /// channel-gain distribution. Outage of the fixed scheme is then about
    /// `q`; the default 0.03 gives a small nonzero outage.
    Quantile(f64),
}

impl Default for FixedPower {
    fn default() -> Self {
        FixedPower::Quantile(0.03)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageSpec {
    pub abg: AbgParams,
    pub channel: ChannelModel,
    #[serde(default = "default_noise_var")]
    pub noise_var: f64,
    /// Quality threshold `η`.
    pub eta: f64,
    #[serde(default)]
    pub fixed_power: FixedPower,
    /// Optional cap on the adaptive scheme's power.
    #[serde(default)]
    pub power_cap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutageResult {
    pub fixed: CdfTable,
    pub adaptive: CdfTable,
    pub fixed_power: f64,
    pub mean_adaptive_power: f64,
}

/// Power that meets `eta` exactly when the gain sits at quantile `q`.
pub fn calibrate_fixed_power(
    abg: &AbgParams,
    channel: &ChannelModel,
    noise_var: f64,
    eta: f64,
    quantile: f64,
) -> Result<f64> {
    let gain = channel.gain_quantile(quantile)?;
    adaptive_power(abg, &LinkState::new(gain, noise_var)?, eta)
}

/// Quality CDFs of fixed-power and adaptive-power transmission over
/// `realizations` channel draws.
pub fn run_outage_cdf(
    spec: &OutageSpec,
    realizations: usize,
    seed: u64,
    workers: usize,
) -> Result<OutageResult> {
    if realizations == 0 {
        return Err(Error::invalid("realizations", "must be >= 1", 0.0));
    }
    spec.channel.validate()?;
    LinkState::new(1.0, spec.noise_var)?;
    // surfaces TargetUnreachable before any draw
    spec.abg.required_snr(spec.eta)?;
    if let Some(cap) = spec.power_cap {
        if cap.is_nan() || cap < 0.0 {
            return Err(Error::invalid("power_cap", "must be >= 0", cap));
        }
    }
    let fixed_power = match spec.fixed_power {
        FixedPower::Watts(p) if p >= 0.0 && p.is_finite() => p,
        FixedPower::Watts(p) => return Err(Error::invalid("fixed_power", "must be >= 0", p)),
        FixedPower::Quantile(q) => {
            calibrate_fixed_power(&spec.abg, &spec.channel, spec.noise_var, spec.eta, q)?
        }
    };

    let draws = ordered_map(workers, realizations, |i| {
        let mut stream = make_stream(seed, i as u64);
        let link = LinkState::new(sample_gain(&spec.channel, &mut stream), spec.noise_var)?;
        let fixed = spec.abg.eval(link.snr(fixed_power));
        let mut p = adaptive_power(&spec.abg, &link, spec.eta)?;
        if let Some(cap) = spec.power_cap {
            p = p.min(cap);
        }
        Ok((fixed, spec.abg.eval(link.snr(p)), p))
    })?;

    let mean_adaptive_power = draws.iter().map(|d| d.2).sum::<f64>() / realizations as f64;
    Ok(OutageResult {
        fixed: CdfTable::from_values(draws.iter().map(|d| d.0).collect(), spec.eta),
        adaptive: CdfTable::from_values(draws.iter().map(|d| d.1).collect(), spec.eta),
        fixed_power,
        mean_adaptive_power,
    })
}

// ---------------------------------------------------------------------------
// Energy-efficiency sweeps

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Sweep the power cap `P_U`.
    PowerCap,
    /// Sweep the rate floor `r̄`.
    MinRate,
}

impl SweepAxis {
    fn column(self) -> &'static str {
        match self {
            SweepAxis::PowerCap => "pu",
            SweepAxis::MinRate => "rate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EeSweepSpec {
    pub problem: EeProblem,
    pub grid: Vec<f64>,
    #[serde(default = "default_xi")]
    pub xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub x: f64,
    /// `None` when the grid point makes the problem infeasible.
    pub p_star: Option<f64>,
    pub psi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Writes `pu,p_star,psi` or `rate,p_star,psi`; infeasible rows leave the
    /// last two fields empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([self.axis.column(), "p_star", "psi"])?;
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for row in &self.rows {
            w.write_record([row.x.to_string(), fmt(row.p_star), fmt(row.psi)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs Dinkelbach at every grid point of `axis`.
pub fn run_ee_sweep(spec: &EeSweepSpec, axis: SweepAxis, workers: usize) -> Result<SweepTable> {
    check_grid("grid", &spec.grid)?;
    spec.problem.validate()?;
    let rows = ordered_map(workers, spec.grid.len(), |i| {
        let x = spec.grid[i];
        let problem = match axis {
            SweepAxis::PowerCap => spec.problem.with_p_max(x)?,
            SweepAxis::MinRate => spec.problem.with_min_rate(x)?,
        };
        match dinkelbach(&problem, spec.xi) {
            Ok(trace) => Ok(SweepRow {
                x,
                p_star: Some(trace.power),
                psi: Some(trace.efficiency),
            }),
            Err(Error::InfeasibleBox { .. }) => Ok(SweepRow {
                x,
                p_star: None,
                psi: None,
            }),
            Err(e) => Err(e),
        }
    })?;
    Ok(SweepTable { axis, rows })
}

/// Efficiency-optimal power with the rate floor removed (cap kept).
pub fn unconstrained_maximizer(problem: &EeProblem, xi: f64) -> Result<f64> {
    Ok(dinkelbach(&problem.with_min_rate(0.0)?, xi)?.power)
}

/// Rate floor above which the floor, not efficiency, sets the optimal power:
/// the root of `P_L(r̄) = p̃`.
pub fn rate_crossover(problem: &EeProblem, xi: f64) -> Result<f64> {
    Ok(problem.rate(unconstrained_maximizer(problem, xi)?))
}

// ---------------------------------------------------------------------------
// Max-min versus equal split

/// Users whose gains are drawn per realization from `channel`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDraw {
    /// One curve per user.
    pub abg: Vec<AbgParams>,
    pub channel: ChannelModel,
    #[serde(default = "default_noise_var")]
    pub noise_var: f64,
}

impl UserDraw {
    /// Users of realization `index`: gains from stream `index`, in user order.
    pub fn realize(&self, seed: u64, index: u64) -> Result<Vec<UserLink>> {
        let mut stream = make_stream(seed, index);
        self.abg
            .iter()
            .map(|abg| {
                let gain = sample_gain(&self.channel, &mut stream);
                Ok(UserLink::new(*abg, LinkState::new(gain, self.noise_var)?))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UserSource {
    Fixed(Vec<UserLink>),
    Drawn(UserDraw),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxminSpec {
    pub users: UserSource,
    pub budgets: Vec<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxminRow {
    pub budget: f64,
    /// Worst-user quality under max-min bisection (mean over realizations).
    pub maxmin: f64,
    /// Worst-user quality under the equal split.
    pub equal_split: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxminTable {
    pub rows: Vec<MaxminRow>,
}

impl MaxminTable {
    /// Writes `budget,maxmin,equal_split` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Worst-user quality of both schemes at every budget. Fixed user sets are
/// evaluated once; drawn sets are averaged over `realizations` draws.
pub fn run_maxmin_sweep(
    spec: &MaxminSpec,
    realizations: usize,
    seed: u64,
    workers: usize,
) -> Result<MaxminTable> {
    check_grid("budgets", &spec.budgets)?;
    if spec.budgets[0] <= 0.0 {
        return Err(Error::invalid("budgets", "must be > 0", spec.budgets[0]));
    }
    let runs = match spec.users {
        UserSource::Fixed(_) => 1,
        UserSource::Drawn(_) => realizations,
    };
    if runs == 0 {
        return Err(Error::invalid("realizations", "must be >= 1", 0.0));
    }
    let per_run = ordered_map(workers, runs, |r| {
        let users = match &spec.users {
            UserSource::Fixed(users) => users.clone(),
            UserSource::Drawn(draw) => draw.realize(seed, r as u64)?,
        };
        spec.budgets
            .iter()
            .map(|&b| {
                let best = maxmin_bisection(&users, b, spec.delta)?.worst();
                let equal = equal_split(&users, b)?.worst();
                Ok((best, equal))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let rows = spec
        .budgets
        .iter()
        .enumerate()
        .map(|(j, &budget)| {
            let (sum_best, sum_equal) = per_run
                .iter()
                .fold((0.0, 0.0), |acc, run| (acc.0 + run[j].0, acc.1 + run[j].1));
            MaxminRow {
                budget,
                maxmin: sum_best / runs as f64,
                equal_split: sum_equal / runs as f64,
            }
        })
        .collect();
    Ok(MaxminTable { rows })
}

// ---------------------------------------------------------------------------
// File-driven runs

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum Scenario {
    OutageCdf(OutageSpec),
    EeSweepPu(EeSweepSpec),
    EeSweepRate(EeSweepSpec),
    MaxminSweep(MaxminSpec),
}

/// An experiment document. The seed may come from the file or be supplied
/// by the caller; running without one is an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub crate_version: &'static str,
    pub rng_algorithm: &'static str,
    pub fixture_sha256: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
struct OutageSummary {
    eta: f64,
    fixed_power: f64,
    fixed_outage: f64,
    adaptive_outage: f64,
    mean_adaptive_power: f64,
}

fn write_file(dir: &Path, name: &str, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    let path = dir.join(name);
    fs::write(&path, buf)?;
    Ok(path)
}

/// Runs `config` and writes its tables plus `manifest.json` into `out_dir`.
/// Returns the manifest.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path, workers: usize) -> Result<RunManifest> {
    let seed = config
        .seed
        .ok_or_else(|| Error::Config("`seed` is required for experiments".into()))?;
    if config.realizations == 0 {
        return Err(Error::invalid("realizations", "must be >= 1", 0.0));
    }
    fs::create_dir_all(out_dir)?;
    let mut outputs = Vec::new();
    match &config.scenario {
        Scenario::OutageCdf(spec) => {
            let result = run_outage_cdf(spec, config.realizations, seed, workers)?;
            write_file(out_dir, "cdf_fixed.csv", |b| result.fixed.write_csv(b))?;
            write_file(out_dir, "cdf_adaptive.csv", |b| result.adaptive.write_csv(b))?;
            let summary = OutageSummary {
                eta: spec.eta,
                fixed_power: result.fixed_power,
                fixed_outage: result.fixed.outage,
                adaptive_outage: result.adaptive.outage,
                mean_adaptive_power: result.mean_adaptive_power,
            };
            write_file(out_dir, "outage.json", |b| {
                serde_json::to_writer_pretty(&mut *b, &summary)?;
                Ok(())
            })?;
            outputs.extend(["cdf_fixed.csv", "cdf_adaptive.csv", "outage.json"].map(String::from));
        }
        Scenario::EeSweepPu(spec) | Scenario::EeSweepRate(spec) => {
            let axis = if matches!(config.scenario, Scenario::EeSweepPu(_)) {
                SweepAxis::PowerCap
            } else {
                SweepAxis::MinRate
            };
            let table = run_ee_sweep(spec, axis, workers)?;
            write_file(out_dir, "ee_sweep.csv", |b| table.write_csv(b))?;
            outputs.push("ee_sweep.csv".into());
        }
        Scenario::MaxminSweep(spec) => {
            let table = run_maxmin_sweep(spec, config.realizations, seed, workers)?;
            write_file(out_dir, "maxmin.csv", |b| table.write_csv(b))?;
            outputs.push("maxmin.csv".into());
        }
    }
    outputs.push("manifest.json".into());
    let manifest = RunManifest {
        crate_version: env!("CARGO_PKG_VERSION"),
        rng_algorithm: RNG_ALGORITHM,
        fixture_sha256: fixture_digest(),
        seed,
        config: ExperimentConfig {
            seed: Some(seed),
            ..config.clone()
        },
        outputs,
    };
    write_file(out_dir, "manifest.json", |b| {
        serde_json::to_writer_pretty(&mut *b, &manifest)?;
        Ok(())
    })?;
    Ok(manifest)
}
