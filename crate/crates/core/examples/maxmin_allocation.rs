//! Max-min quality allocation for three users versus an equal split.
//!
//! ```text
//! cargo run --example maxmin_allocation
//! ```

use abg_core::multi_user::{equal_split, maxmin_bisection, UserLink, DEFAULT_DELTA};
use abg_core::{AbgParams, LinkState};

fn main() -> abg_core::Result<()> {
    let users = vec![
        UserLink::new(AbgParams::new(0.92, 7.28, 2.08, 0.97)?, LinkState::new(0.35, 1.0)?),
        UserLink::new(AbgParams::new(0.94, 2.70, 1.29, 1.06)?, LinkState::new(1.20, 1.0)?),
        UserLink::new(AbgParams::new(0.97, 1.91, 1.36, 1.79)?, LinkState::new(2.40, 1.0)?),
    ];

    let budget = 6.0;
    let best = maxmin_bisection(&users, budget, DEFAULT_DELTA)?;
    let fixed = equal_split(&users, budget)?;
    println!("budget {budget} W, {} bisection steps\n", best.iterations);
    println!("user   max-min p    phi    | equal p    phi");
    for i in 0..users.len() {
        println!(
            "{:>4}   {:>9.5} {:>7.4}  | {:>7.3} {:>7.4}",
            i, best.powers[i], best.achieved[i], fixed.powers[i], fixed.achieved[i]
        );
    }
    println!("worst  {:>17.4}  | {:>15.4}", best.worst(), fixed.worst());

    println!("\nworst-user quality against the budget:");
    for budget in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        println!(
            "  {budget:>5.1} W   max-min {:.4}   equal {:.4}",
            maxmin_bisection(&users, budget, DEFAULT_DELTA)?.worst(),
            equal_split(&users, budget)?.worst()
        );
    }
    Ok(())
}
