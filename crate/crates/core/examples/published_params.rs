//! Lists the bundled published curves and evaluates each at a few SNRs.
//!
//! ```text
//! cargo run --example published_params
//! ```

use abg_core::fit::FourParamCurve;
use abg_core::fixtures::{published_records, CurveKind};
use abg_core::model::{db_to_linear, linear_to_db};

fn main() -> abg_core::Result<()> {
    println!("{:<18} {:<15} {:<11} {:>36}", "model", "task", "kind", "coefficients");
    for record in published_records() {
        let c = record.coefficients()?;
        println!(
            "{:<18} {:<15} {:<11} {:>8.2} {:>8.2} {:>8.2} {:>8.2}",
            record.model,
            format!("{:?}", record.task),
            format!("{:?}", record.kind),
            c[0],
            c[1],
            c[2],
            c[3]
        );
    }

    println!("\nmetric at 0, 5, 10, 20 dB:");
    for record in published_records().into_iter().filter(|r| r.kind == CurveKind::Abg) {
        let abg = record.abg()?;
        let values: Vec<String> = [0.0, 5.0, 10.0, 20.0]
            .iter()
            .map(|&db| format!("{:.4}", abg.eval_at(db_to_linear(db))))
            .collect();
        let needed = abg.required_snr(0.9 * abg.alpha())?;
        println!(
            "  {:<18} {}   (90% of ceiling at {:.2} dB)",
            record.model,
            values.join("  "),
            linear_to_db(needed.rho)
        );
    }

    println!("\nbit-scaling ceilings at 1..4096 bits:");
    for record in published_records().into_iter().filter(|r| r.kind == CurveKind::BitScaling) {
        let bits = record.bit_scaling()?;
        let values: Vec<String> = [1u32, 16, 256, 4096]
            .iter()
            .map(|&n| bits.upper_bound(n).map(|v| format!("{v:.4}")))
            .collect::<abg_core::Result<_>>()?;
        println!("  {:<18} {}", record.model, values.join("  "));
    }
    Ok(())
}
