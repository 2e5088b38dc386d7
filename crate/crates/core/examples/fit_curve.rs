//! Fits four-parameter curves to noisy samples.
//!
//! Generates samples from a known curve, adds Gaussian noise and refits.
//! Pass a CSV path (`x,y[,weight]`, linear SNR) to fit your own data instead.
//!
//! ```text
//! cargo run --example fit_curve
//! cargo run --example fit_curve -- crates/core/data/cnn_samples.csv
//! ```

use abg_core::cli::read_samples;
use abg_core::fit::{fit_abg, fit_upper_bound, FitOptions};
use abg_core::{AbgParams, BitScalingParams, MetricSample};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn main() -> abg_core::Result<()> {
    let options = FitOptions::with_seed(11);

    if let Some(path) = std::env::args().nth(1) {
        let samples = read_samples(path.as_ref(), false)?;
        let fit = fit_abg(&samples, &options)?;
        println!("{path}: {:?}", fit.params);
        println!("sse = {:.3e} over {} samples", fit.sse, samples.len());
        return Ok(());
    }

    let truth = AbgParams::new(0.92, 7.28, 2.08, 0.97)?;
    let noise = Normal::new(0.0, 0.005).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let samples: Vec<MetricSample> = log_grid(1e-2, 1e2, 40)
        .into_iter()
        .map(|x| MetricSample::new(x, truth.eval(x) + noise.sample(&mut rng)))
        .collect();

    let fit = fit_abg(&samples, &options)?;
    let p = fit.params;
    println!("ABG fit to 40 noisy samples (sigma = 0.005)");
    println!("           alpha     beta    gamma      tau");
    println!("truth   {:>8.4} {:>8.4} {:>8.4} {:>8.4}", truth.alpha(), truth.beta(), truth.gamma(), truth.tau());
    println!("fitted  {:>8.4} {:>8.4} {:>8.4} {:>8.4}", p.alpha(), p.beta(), p.gamma(), p.tau());
    println!(
        "sse = {:.3e} (noise floor ~ {:.3e}), {} iterations, converged = {}",
        fit.sse,
        40.0 * 0.005f64.powi(2),
        fit.iterations,
        fit.converged
    );

    let bits = BitScalingParams::new(0.96, 0.89, 0.01, 0.75)?;
    let samples: Vec<MetricSample> = log_grid(1.0, 4096.0, 40)
        .into_iter()
        .map(|n| MetricSample::new(n, bits.eval(n)))
        .collect();
    let fit = fit_upper_bound(&samples, &options)?;
    let q = fit.params;
    println!("\nbit-scaling fit to 40 noiseless samples");
    println!("fitted  c1={:.6} c2={:.6} c3={:.6} c4={:.6}  sse = {:.1e}", q.c1(), q.c2(), q.c3(), q.c4(), fit.sse);
    Ok(())
}
