//! Energy-efficiency maximization on one link.
//!
//! ```text
//! cargo run --example dinkelbach
//! ```

use abg_core::single_user::{dinkelbach, EeProblem, DEFAULT_XI};
use abg_core::{AbgParams, LinkState};

fn main() -> abg_core::Result<()> {
    let problem = EeProblem::new(
        AbgParams::new(0.97, 1.91, 1.36, 1.79)?,
        LinkState::new(1.0, 1.0)?,
        1.0,
        1000.0,
        500.0,
        10.0,
    )?;
    println!(
        "feasible powers: [{:.4}, {}] W",
        problem.rate_floor_power()?,
        problem.p_max
    );

    let trace = dinkelbach(&problem, DEFAULT_XI)?;
    println!("\niter  {:>14} {:>12} {:>12}", "v", "p", "F(p, v)");
    for s in &trace.steps {
        println!("{:>4}  {:>14.10} {:>12.8} {:>12.3e}", s.iter, s.v, s.p, s.f);
    }
    println!(
        "\np* = {:.8} W, psi* = {:.8} per W, quality {:.6}",
        trace.power,
        trace.efficiency,
        problem.quality(trace.power)
    );

    trace.write_csv(std::io::stdout().lock())?;
    Ok(())
}
