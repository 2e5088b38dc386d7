//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Tolerances and time limits are fixed here.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use abg_core::channel::{make_stream, sample_gain, ChannelModel};
use abg_core::experiments::{
    run_ee_sweep, run_experiment, run_outage_cdf, unconstrained_maximizer, EeSweepSpec, ExperimentConfig, FixedPower,
    OutageSpec, SweepAxis, SweepRow,
};
use abg_core::fit::{fit_abg, fit_upper_bound, FitOptions};
use abg_core::fixtures::{abg_row, published_records, CurveKind, Task};
use abg_core::multi_user::{equal_split, maxmin_bisection, UserLink};
use abg_core::single_user::{dinkelbach, EeProblem};
use abg_core::{AbgParams, LinkState, MetricSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Check = Result<String, String>;

struct Gate {
    failures: usize,
}

impl Gate {
    fn run(&mut self, id: u32, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let mut outcome = f();
        let elapsed = start.elapsed();
        if let (Ok(detail), Some(limit)) = (&outcome, limit) {
            if elapsed > limit {
                outcome = Err(format!("{detail}; took {elapsed:.2?} > {limit:.2?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS  {id:>2}  {name}: {detail} [{elapsed:.2?}]"),
            Err(detail) => {
                self.failures += 1;
                println!("FAIL  {id:>2}  {name}: {detail} [{elapsed:.2?}]");
            }
        }
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn abg_coefficients(p: &AbgParams) -> [f64; 4] {
    [p.alpha(), p.beta(), p.gamma(), p.tau()]
}

fn noiseless_recovery() -> Check {
    let options = FitOptions::with_seed(0);
    let mut worst_rel = 0.0f64;
    let mut worst_sse = 0.0f64;
    let records = published_records();
    for record in &records {
        let truth = record.coefficients().map_err(|e| e.to_string())?;
        let (got, sse) = match record.kind {
            CurveKind::Abg => {
                let abg = record.abg().map_err(|e| e.to_string())?;
                let samples: Vec<_> = log_grid(1e-2, 1e2, 40)
                    .into_iter()
                    .map(|x| MetricSample::new(x, abg.eval(x)))
                    .collect();
                let fit = fit_abg(&samples, &options).map_err(|e| e.to_string())?;
                (abg_coefficients(&fit.params), fit.sse)
            }
            CurveKind::BitScaling => {
                let bits = record.bit_scaling().map_err(|e| e.to_string())?;
                let samples: Vec<_> = log_grid(1.0, 4096.0, 40)
                    .into_iter()
                    .map(|n| MetricSample::new(n, bits.eval(n)))
                    .collect();
                let fit = fit_upper_bound(&samples, &options).map_err(|e| e.to_string())?;
                let p = fit.params;
                ([p.c1(), p.c2(), p.c3(), p.c4()], fit.sse)
            }
        };
        let r = (0..4).map(|k| rel(got[k], truth[k])).fold(0.0, f64::max);
        ensure(r <= 5e-3, || format!("{} {:?}: relative error {r:.3e}", record.model, record.kind))?;
        ensure(sse <= 1e-10, || format!("{} {:?}: sse {sse:.3e}", record.model, record.kind))?;
        worst_rel = worst_rel.max(r);
        worst_sse = worst_sse.max(sse);
    }
    Ok(format!(
        "{} rows, worst relative error {worst_rel:.2e} (<= 5e-3), worst sse {worst_sse:.2e} (<= 1e-10)",
        records.len()
    ))
}

fn noisy_recovery() -> Check {
    let truth = abg_row("CNN", Task::Reconstruction).ok_or("missing CNN row")?;
    let t = abg_coefficients(&truth);
    let noise = Normal::new(0.0, 0.005).unwrap();
    let xs = log_grid(1e-2, 1e2, 40);
    let mut hits = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<_> = xs
            .iter()
            .map(|&x| MetricSample::new(x, truth.eval(x) + noise.sample(&mut rng)))
            .collect();
        let fit = fit_abg(&samples, &FitOptions::with_seed(seed)).map_err(|e| e.to_string())?;
        let got = abg_coefficients(&fit.params);
        if (0..4).all(|k| rel(got[k], t[k]) <= 0.05) {
            hits += 1;
        }
    }
    ensure(hits >= 95, || format!("{hits}/100 runs within 5%"))?;
    Ok(format!("{hits}/100 runs within 5% (>= 95)"))
}

fn adaptive_exactness() -> Check {
    let spec = OutageSpec {
        abg: abg_row("Swin Transformer", Task::Reconstruction).ok_or("missing Swin row")?,
        channel: ChannelModel::RayleighUnitPower,
        noise_var: 1.0,
        eta: 0.90,
        fixed_power: FixedPower::Quantile(0.03),
        power_cap: None,
    };
    let result = run_outage_cdf(&spec, 10_000, 2024, 1).map_err(|e| e.to_string())?;
    let violation = spec.eta - result.adaptive.values[0];
    ensure(violation <= 1e-9, || format!("max violation {violation:.3e}"))?;
    ensure(result.adaptive.outage == 0.0, || format!("adaptive outage {}", result.adaptive.outage))?;
    ensure(result.fixed.outage > 0.0, || "fixed outage is 0".into())?;
    Ok(format!(
        "10000 draws, adaptive outage 0, max violation {:.1e} (<= 1e-9); fixed p = {:.3} W outage {:.4} (> 0)",
        violation.max(0.0),
        result.fixed_power,
        result.fixed.outage
    ))
}

fn dinkelbach_analytic() -> Check {
    let problem = EeProblem::new(
        AbgParams::new(1.0, 1.0, 1.0, 1.0).unwrap(),
        LinkState::unit(),
        1.0,
        1.0,
        0.0,
        10.0,
    )
    .map_err(|e| e.to_string())?;
    let trace = dinkelbach(&problem, 1e-10).map_err(|e| e.to_string())?;
    let (dp, dpsi) = ((trace.power - 1.0).abs(), (trace.efficiency - 0.25).abs());
    ensure(dp <= 1e-8 && dpsi <= 1e-8, || format!("p* = {}, psi* = {}", trace.power, trace.efficiency))?;
    Ok(format!("|p* - 1| = {dp:.1e}, |psi* - 0.25| = {dpsi:.1e} (<= 1e-8)"))
}

fn random_problem(rng: &mut ChaCha8Rng) -> EeProblem {
    let alpha = rng.random_range(0.8..1.0);
    let abg = AbgParams::new(
        alpha,
        10f64.powf(rng.random_range(-0.5..1.0)),
        alpha * rng.random_range(0.5..2.0),
        rng.random_range(0.5..2.0),
    )
    .unwrap();
    let link = LinkState::new(10f64.powf(rng.random_range(-1.0..1.0)), 1.0).unwrap();
    let p_max = rng.random_range(1.0..20.0);
    let bandwidth = 1000.0;
    let floor = rng.random_range(0.0..0.6) * p_max;
    let min_rate = if rng.random_bool(0.5) {
        bandwidth * (1.0 + floor * link.gain_to_noise()).log2()
    } else {
        0.0
    };
    EeProblem::new(abg, link, rng.random_range(0.1..5.0), bandwidth, min_rate, p_max).unwrap()
}

fn dinkelbach_grid() -> Check {
    const POINTS: usize = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let problem = random_problem(&mut rng);
        let trace = dinkelbach(&problem, 1e-10).map_err(|e| format!("case {case}: {e}"))?;
        let lo = problem.rate_floor_power().map_err(|e| e.to_string())?;
        let hi = problem.p_max;
        let grid_best = (0..POINTS)
            .map(|i| problem.efficiency(lo + (hi - lo) * i as f64 / (POINTS - 1) as f64))
            .fold(f64::NEG_INFINITY, f64::max);
        let gap = (trace.efficiency - grid_best).abs();
        ensure(gap <= 1e-6, || format!("case {case}: |psi* - grid| = {gap:.3e}"))?;
        ensure(trace.steps.windows(2).all(|w| w[1].v >= w[0].v), || {
            format!("case {case}: v decreased")
        })?;
        worst = worst.max(gap);
    }
    Ok(format!("100 instances, worst |psi* - grid max| {worst:.2e} (<= 1e-6), v nondecreasing"))
}

fn sweep_shapes() -> Check {
    const TOL: f64 = 1e-9;
    let problem = EeProblem::new(
        abg_row("Swin Transformer", Task::Reconstruction).unwrap(),
        LinkState::unit(),
        1.0,
        1000.0,
        0.0,
        10.0,
    )
    .map_err(|e| e.to_string())?;
    let xi = 1e-12;
    let p_tilde = unconstrained_maximizer(&problem, xi).map_err(|e| e.to_string())?;

    let caps: Vec<f64> = (1..=100).map(|i| 0.05 * i as f64).collect();
    let by_cap = run_ee_sweep(&EeSweepSpec { problem, grid: caps, xi }, SweepAxis::PowerCap, 1)
        .map_err(|e| e.to_string())?;
    let p: Vec<f64> = by_cap.rows.iter().map(|r| r.p_star.unwrap()).collect();
    let psi: Vec<f64> = by_cap.rows.iter().map(|r| r.psi.unwrap()).collect();
    ensure(p.windows(2).all(|w| w[1] >= w[0] - TOL), || "p*(P_U) decreased".into())?;
    ensure(psi.windows(2).all(|w| w[1] >= w[0] - TOL), || "psi*(P_U) decreased".into())?;
    let flat: Vec<_> = by_cap.rows.iter().filter(|r| r.x > p_tilde).collect();
    ensure(!flat.is_empty(), || "grid never passes the unconstrained maximizer".into())?;
    ensure(
        flat.windows(2).all(|w| {
            (w[1].p_star.unwrap() - w[0].p_star.unwrap()).abs() <= TOL
                && (w[1].psi.unwrap() - w[0].psi.unwrap()).abs() <= TOL
        }),
        || "p*, psi* not constant beyond the maximizer".into(),
    )?;

    // crossover r_c solves P_L(r_c) = p_tilde
    let crossover = problem.rate(p_tilde);
    let rates: Vec<f64> = (0..60).map(|i| 50.0 * i as f64).collect();
    let by_rate = run_ee_sweep(&EeSweepSpec { problem, grid: rates, xi }, SweepAxis::MinRate, 1)
        .map_err(|e| e.to_string())?;
    let feasible: Vec<_> = by_rate.rows.iter().filter(|r| r.p_star.is_some()).collect();
    let (before, after): (Vec<&SweepRow>, Vec<&SweepRow>) = feasible.iter().copied().partition(|r| r.x <= crossover);
    ensure(!before.is_empty() && !after.is_empty(), || "crossover outside the rate grid".into())?;
    ensure(
        before.windows(2).all(|w| (w[1].p_star.unwrap() - w[0].p_star.unwrap()).abs() <= TOL),
        || "p*(r) not constant below the crossover".into(),
    )?;
    ensure(
        after.windows(2).all(|w| w[1].p_star.unwrap() > w[0].p_star.unwrap() - TOL),
        || "p*(r) not increasing above the crossover".into(),
    )?;
    for r in &after {
        let floor = problem
            .with_min_rate(r.x)
            .and_then(|q| q.rate_floor_power())
            .map_err(|e| e.to_string())?;
        let p = r.p_star.unwrap();
        ensure((p - floor).abs() <= TOL * floor.max(1.0), || {
            format!("rate {}: p* = {p} but floor power {floor}", r.x)
        })?;
    }
    Ok(format!(
        "P_U sweep flat beyond p~ = {p_tilde:.6} W; rate sweep flat then rising, crossover {crossover:.3} bit/s"
    ))
}

fn maxmin_closed_form() -> Check {
    const DELTA: f64 = 1e-6;
    let abg = AbgParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
    let users = [
        UserLink::new(abg, LinkState::new(1.0, 1.0).unwrap()),
        UserLink::new(abg, LinkState::new(4.0, 1.0).unwrap()),
    ];
    let alloc = maxmin_bisection(&users, 5.0, DELTA).map_err(|e| e.to_string())?;
    let dnu = (alloc.nu - 0.8).abs();
    ensure(dnu <= 2.0 * DELTA, || format!("nu* = {}", alloc.nu))?;
    // power error scales with dp/dnu = 1/(1-nu)^2 = 25 at the optimum
    let bound = 25.0 * 2.0 * DELTA;
    let dp = (alloc.powers[0] - 4.0).abs().max((alloc.powers[1] - 1.0).abs());
    ensure(dp <= bound, || format!("powers {:?}", alloc.powers))?;
    Ok(format!(
        "nu* error {dnu:.1e} (<= 2e-6), power error {dp:.1e} (<= 25 * 2e-6), {} steps",
        alloc.iterations
    ))
}

fn maxmin_dominance() -> Check {
    const DELTA: f64 = 1e-6;
    let rows: Vec<AbgParams> = ["CNN", "SCUNet", "Vision Transformer", "Swin Transformer"]
        .iter()
        .map(|m| abg_row(m, Task::Reconstruction).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8080);
    let budgets = log_grid(0.1, 100.0, 10);
    let mut cases = 0;
    for instance in 0..50 {
        let k = rng.random_range(2..=6);
        let users: Vec<_> = (0..k)
            .map(|_| {
                let abg = rows[rng.random_range(0..rows.len())];
                let gain = 10f64.powf(rng.random_range(-1.0..1.0));
                UserLink::new(abg, LinkState::new(gain, 1.0).unwrap())
            })
            .collect();
        for &b in &budgets {
            let best = maxmin_bisection(&users, b, DELTA).map_err(|e| e.to_string())?.worst();
            let equal = equal_split(&users, b).map_err(|e| e.to_string())?.worst();
            ensure(best >= equal - DELTA, || format!("instance {instance}, budget {b}: {best} < {equal}"))?;
            cases += 1;
        }
    }

    // three users with published curves on one seeded Rayleigh draw
    let mut stream = make_stream(6, 0);
    let users: Vec<_> = [rows[0], rows[1], rows[3]]
        .into_iter()
        .map(|abg| {
            let gain = sample_gain(&ChannelModel::RayleighUnitPower, &mut stream);
            UserLink::new(abg, LinkState::new(gain, 1.0).unwrap())
        })
        .collect();
    let budget = 30.0;
    let best = maxmin_bisection(&users, budget, DELTA).map_err(|e| e.to_string())?.worst();
    let equal = equal_split(&users, budget).map_err(|e| e.to_string())?.worst();
    ensure(best > equal, || format!("three-user ordering: proposed {best} <= equal {equal}"))?;
    Ok(format!(
        "{cases} cases dominate; three users at {budget} W: proposed {best:.3} > equal split {equal:.3} \
         (ordering only; absolute values depend on the channel draw)"
    ))
}

fn channel_statistics() -> Check {
    let mut stream = make_stream(9, 0);
    let model = ChannelModel::RayleighUnitPower;
    let n = 1_000_000;
    let (mut sum, mut below) = (0.0, 0usize);
    for _ in 0..n {
        let g = sample_gain(&model, &mut stream);
        sum += g;
        below += (g <= 1.0) as usize;
    }
    let mean = sum / n as f64;
    let p1 = below as f64 / n as f64;
    ensure((0.99..=1.01).contains(&mean), || format!("mean {mean}"))?;
    ensure((0.630..=0.634).contains(&p1), || format!("P(g <= 1) = {p1}"))?;
    Ok(format!("mean {mean:.5} in [0.99, 1.01], P(g <= 1) = {p1:.5} in [0.630, 0.634]"))
}

fn determinism() -> Check {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let mut compared = 0;
    for name in ["outage_cdf.json", "ee_sweep_pu.json", "ee_sweep_rate.json", "maxmin_sweep.json"] {
        let text = fs::read_to_string(data.join(name)).map_err(|e| e.to_string())?;
        let config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let one = tempfile::tempdir().map_err(|e| e.to_string())?;
        let eight = tempfile::tempdir().map_err(|e| e.to_string())?;
        let a = run_experiment(&config, one.path(), 1).map_err(|e| e.to_string())?;
        run_experiment(&config, eight.path(), 8).map_err(|e| e.to_string())?;
        for file in &a.outputs {
            let x = fs::read(one.path().join(file)).map_err(|e| e.to_string())?;
            let y = fs::read(eight.path().join(file)).map_err(|e| e.to_string())?;
            ensure(x == y, || format!("{name}: {file} differs"))?;
            compared += 1;
        }
    }
    Ok(format!("{compared} output files byte-identical at 1 and 8 workers"))
}

fn main() {
    let mut gate = Gate { failures: 0 };
    let secs = Duration::from_secs_f64;
    gate.run(1, "noiseless fit recovery", Some(secs(5.0)), noiseless_recovery);
    gate.run(2, "noisy fit recovery", Some(secs(30.0)), noisy_recovery);
    gate.run(3, "adaptive power exactness", Some(secs(2.0)), adaptive_exactness);
    gate.run(4, "Dinkelbach analytic oracle", Some(secs(0.1)), dinkelbach_analytic);
    gate.run(5, "Dinkelbach grid oracle", Some(secs(60.0)), dinkelbach_grid);
    gate.run(6, "EE sweep shapes", None, sweep_shapes);
    gate.run(7, "max-min closed form", Some(secs(0.1)), maxmin_closed_form);
    gate.run(8, "max-min dominance", Some(secs(30.0)), maxmin_dominance);
    gate.run(9, "channel statistics", Some(secs(2.0)), channel_statistics);
    gate.run(10, "determinism across workers", None, determinism);
    if gate.failures > 0 {
        println!("{} criteria failed", gate.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
