//! Optimal power and efficiency across power caps and rate floors.
//!
//! Raising the cap helps until it passes the efficiency-optimal power;
//! raising the rate floor changes nothing until the floor's power exceeds
//! that optimum.
//!
//! ```text
//! cargo run --example ee_sweep
//! ```

use abg_core::experiments::{rate_crossover, run_ee_sweep, unconstrained_maximizer, EeSweepSpec, SweepAxis};
use abg_core::single_user::{EeProblem, DEFAULT_XI};
use abg_core::{AbgParams, LinkState};

fn main() -> abg_core::Result<()> {
    let problem = EeProblem::new(
        AbgParams::new(0.97, 1.91, 1.36, 1.79)?,
        LinkState::new(1.0, 1.0)?,
        1.0,
        1000.0,
        0.0,
        10.0,
    )?;
    let p_tilde = unconstrained_maximizer(&problem, DEFAULT_XI)?;
    let crossover = rate_crossover(&problem, DEFAULT_XI)?;
    println!("efficiency-optimal power {p_tilde:.6} W, rate crossover {crossover:.3} bit/s\n");

    let caps = vec![0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0];
    let by_cap = run_ee_sweep(&EeSweepSpec { problem, grid: caps, xi: DEFAULT_XI }, SweepAxis::PowerCap, 1)?;
    println!("{:>8} {:>10} {:>10}", "P_U", "p*", "psi*");
    for row in &by_cap.rows {
        println!("{:>8.2} {:>10.5} {:>10.5}", row.x, row.p_star.unwrap(), row.psi.unwrap());
    }

    let rates: Vec<f64> = (0..12).map(|i| 300.0 * i as f64).collect();
    let by_rate = run_ee_sweep(&EeSweepSpec { problem, grid: rates, xi: DEFAULT_XI }, SweepAxis::MinRate, 1)?;
    println!("\n{:>8} {:>10} {:>10}", "r_min", "p*", "psi*");
    for row in &by_rate.rows {
        match (row.p_star, row.psi) {
            (Some(p), Some(psi)) => println!("{:>8.0} {:>10.5} {:>10.5}", row.x, p, psi),
            _ => println!("{:>8.0} {:>10} {:>10}", row.x, "-", "-"),
        }
    }
    Ok(())
}
