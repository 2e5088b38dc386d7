use abg_core::experiments::{rate_crossover, run_ee_sweep, unconstrained_maximizer, EeSweepSpec, SweepAxis};
use abg_core::single_user::{adaptive_power, dinkelbach, EeProblem};
use abg_core::{AbgParams, Error, LinkState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn swin() -> AbgParams {
    AbgParams::new(0.97, 1.91, 1.36, 1.79).unwrap()
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
    // floor power between 0 and 60% of the cap
    let floor = rng.random_range(0.0..0.6) * p_max;
    let min_rate = if rng.random_bool(0.5) {
        bandwidth * (1.0 + floor * link.gain_to_noise()).log2()
    } else {
        0.0
    };
    EeProblem::new(abg, link, rng.random_range(0.1..5.0), bandwidth, min_rate, p_max).unwrap()
}

fn grid_max(problem: &EeProblem, points: usize) -> f64 {
    let lo = problem.rate_floor_power().unwrap();
    let hi = problem.p_max;
    (0..=points)
        .map(|i| problem.efficiency(lo + (hi - lo) * i as f64 / points as f64))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn dinkelbach_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..25 {
        let problem = random_problem(&mut rng);
        let trace = dinkelbach(&problem, 1e-10).unwrap();
        let best = grid_max(&problem, 200_000);
        assert!(trace.efficiency >= best - 1e-6, "case {case}: {} < {best}", trace.efficiency);
        assert!(trace.efficiency <= best + 1e-6, "case {case}: {} > {best}", trace.efficiency);
        assert!(trace.steps.windows(2).all(|w| w[1].v >= w[0].v));
    }
}

#[test]
fn power_cap_sweep_rises_then_flattens() {
    let problem = EeProblem::new(swin(), LinkState::unit(), 1.0, 1000.0, 0.0, 10.0).unwrap();
    let p_tilde = unconstrained_maximizer(&problem, 1e-10).unwrap();
    let grid: Vec<f64> = (1..=60).map(|i| 0.1 * i as f64).collect();
    let table = run_ee_sweep(&EeSweepSpec { problem, grid, xi: 1e-10 }, SweepAxis::PowerCap, 1).unwrap();
    for w in table.rows.windows(2) {
        assert!(w[1].p_star.unwrap() >= w[0].p_star.unwrap() - 1e-9);
        assert!(w[1].psi.unwrap() >= w[0].psi.unwrap() - 1e-9);
    }
    for row in &table.rows {
        let p = row.p_star.unwrap();
        if row.x <= p_tilde {
            assert!((p - row.x).abs() <= 1e-9 * row.x.max(1.0), "cap {}: {p}", row.x);
        } else {
            assert!((p - p_tilde).abs() <= 1e-6, "cap {}: {p} vs {p_tilde}", row.x);
        }
    }
}

#[test]
fn rate_sweep_is_flat_then_rising() {
    let problem = EeProblem::new(swin(), LinkState::unit(), 1.0, 1000.0, 0.0, 10.0).unwrap();
    let p_tilde = unconstrained_maximizer(&problem, 1e-10).unwrap();
    let crossover = rate_crossover(&problem, 1e-10).unwrap();
    let grid: Vec<f64> = (0..40).map(|i| 90.0 * i as f64).collect();
    let table = run_ee_sweep(&EeSweepSpec { problem, grid, xi: 1e-10 }, SweepAxis::MinRate, 1).unwrap();
    for row in &table.rows {
        let Some(p) = row.p_star else {
            let floor = problem.with_min_rate(row.x).unwrap().rate_floor_power();
            assert!(matches!(floor, Err(Error::InfeasibleBox { .. })), "rate {}", row.x);
            continue;
        };
        if row.x <= crossover {
            assert!((p - p_tilde).abs() <= 1e-6, "rate {}: {p}", row.x);
        } else {
            let floor = problem.with_min_rate(row.x).unwrap().rate_floor_power().unwrap();
            assert!((p - floor).abs() <= 1e-9 * floor, "rate {}: {p} vs {floor}", row.x);
        }
    }
    let ps: Vec<f64> = table.rows.iter().filter_map(|r| r.p_star).collect();
    assert!(ps.windows(2).all(|w| w[1] >= w[0] - 1e-9));
}

#[test]
fn infeasible_rate_floor_is_reported() {
    let problem = EeProblem::new(swin(), LinkState::unit(), 1.0, 1000.0, 10_000.0, 10.0).unwrap();
    assert!(matches!(dinkelbach(&problem, 1e-8), Err(Error::InfeasibleBox { .. })));
}

proptest! {
    #[test]
    fn adaptive_power_is_monotone(
        eta in 0.70f64..0.95,
        d_eta in 1e-4f64..0.01,
        gain in 0.05f64..20.0,
        noise in 0.1f64..5.0,
    ) {
        let abg = swin();
        let link = LinkState::new(gain, noise).unwrap();
        let p = adaptive_power(&abg, &link, eta).unwrap();
        prop_assert!(adaptive_power(&abg, &link, eta + d_eta).unwrap() > p);
        prop_assert!(adaptive_power(&abg, &LinkState::new(gain, noise * 1.1).unwrap(), eta).unwrap() > p);
        prop_assert!(adaptive_power(&abg, &LinkState::new(gain * 1.1, noise).unwrap(), eta).unwrap() < p);
        prop_assert!(abg.eval(link.snr(p)) >= eta);
        prop_assert!((abg.eval(link.snr(p)) - eta).abs() <= 1e-10 * eta);
    }

    #[test]
    fn dinkelbach_values_never_decrease(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = random_problem(&mut rng);
        let trace = dinkelbach(&problem, 1e-8).unwrap();
        prop_assert!(trace.steps.windows(2).all(|w| w[1].v >= w[0].v));
        let lo = problem.rate_floor_power().unwrap();
        prop_assert!(trace.power >= lo && trace.power <= problem.p_max);
    }
}
