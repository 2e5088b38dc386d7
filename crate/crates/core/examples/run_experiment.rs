//! Runs an experiment document and writes its tables and manifest.
//!
//! ```text
//! cargo run --release --example run_experiment -- crates/core/data/maxmin_sweep.json out/
//! ```

use std::path::PathBuf;

use abg_core::experiments::{run_experiment, ExperimentConfig};

fn main() -> abg_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/outage_cdf.json"));
    let out_dir = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("abg-experiment"));

    let config: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(&config)?)?;
    let manifest = run_experiment(&config, &out_dir, 4)?;
    println!("seed {} ({}), fixture {}", manifest.seed, manifest.rng_algorithm, &manifest.fixture_sha256[..12]);
    for name in &manifest.outputs {
        println!("  {}", out_dir.join(name).display());
    }
    Ok(())
}
