//! Smoothing means for the linear-Gaussian benchmark: exact Kalman values
//! next to WRS at several window lengths and SIR.
//!
//! cargo run --release --example linear_gaussian_smoothing

use wrs_smc::models::{simulate, LinearGaussian, LinearGaussianParams};
use wrs_smc::oracle::kalman_smoother;
use wrs_smc::rejection::DEFAULT_MAX_ATTEMPTS;
use wrs_smc::rng::{RngStream, SIMULATION_STREAM};
use wrs_smc::smc::{sir_run, ResamplePolicy};
use wrs_smc::wrs::wrs_run;

fn main() -> wrs_smc::Result<()> {
    let params = LinearGaussianParams::default();
    let model = LinearGaussian::new(params)?;
    let (_, y) = simulate(&model, 10, &mut RngStream::new(3, SIMULATION_STREAM))?;
    let n_particles = 20_000;

    let exact = kalman_smoother(&params, &y);
    let windows = [1, 2, 3, 5];
    let wrs: Vec<_> = windows
        .iter()
        .map(|&w| wrs_run(&model, &y, w, n_particles, w as u64, DEFAULT_MAX_ATTEMPTS))
        .collect::<Result<_, _>>()?;
    let sir = sir_run(&model, &y, n_particles, ResamplePolicy::Always, 9)?;

    print!("{:>3} {:>9}", "i", "kalman");
    for w in windows {
        print!(" {:>9}", format!("wrs w={w}"));
    }
    println!(" {:>9}", "sir");
    for i in 0..=y.len() {
        print!("{i:>3} {:>9.4}", exact.means[i]);
        for run in &wrs {
            print!(" {:>9.4}", run.ensemble.marginal_mean(i)?);
        }
        println!(" {:>9.4}", sir.ensemble.marginal_mean(i)?);
    }
    for (w, run) in windows.iter().zip(&wrs) {
        let total: f64 = run.mean_attempts.iter().sum();
        println!("w={w}: {total:.1} proposals per trajectory");
    }
    Ok(())
}
