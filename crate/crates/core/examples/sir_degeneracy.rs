//! Path degeneracy: after 1000 steps SIR keeps a handful of distinct early
//! states while every WRS trajectory is distinct.
//!
//! cargo run --release --example sir_degeneracy

use wrs_smc::models::{simulate, LinearGaussian, LinearGaussianParams};
use wrs_smc::oracle::{kalman_filter_mean, kalman_smoother};
use wrs_smc::rejection::DEFAULT_MAX_ATTEMPTS;
use wrs_smc::rng::{RngStream, SIMULATION_STREAM};
use wrs_smc::smc::{sir_run, ResamplePolicy};
use wrs_smc::wrs::wrs_run;
use wrs_smc::Coordinate;

fn main() -> wrs_smc::Result<()> {
    let params = LinearGaussianParams::default();
    let model = LinearGaussian::new(params)?;
    let n = 1000;
    let (_, y) = simulate(&model, n, &mut RngStream::new(1, SIMULATION_STREAM))?;
    let n_particles = 2_000;

    let sir = sir_run(
        &model,
        &y,
        n_particles,
        ResamplePolicy::EssBelow(1.0 / 3.0),
        1,
    )?;
    let wrs = wrs_run(&model, &y, 3, n_particles, 2, DEFAULT_MAX_ATTEMPTS)?.ensemble;
    println!("SIR resampled at {} of {n} steps", sir.resample_steps.len());

    println!("{:>5} {:>12} {:>12}", "i", "SIR distinct", "WRS distinct");
    for i in [0, 100, 300, 600, 900, 990, 1000] {
        println!(
            "{i:>5} {:>11.2}% {:>11.2}%",
            100.0 * sir.ensemble.distinct_fraction(Coordinate::Index(i))?,
            100.0 * wrs.distinct_fraction(Coordinate::Index(i))?
        );
    }

    let smoother = kalman_smoother(&params, &y);
    println!(
        "E[x_300 | y_1:1000]: kalman {:.4}, SIR {:.4}, WRS {:.4}",
        smoother.means[300],
        sir.ensemble.marginal_mean(300)?,
        wrs.marginal_mean(300)?
    );
    println!(
        "E[x_1000 | y_1:1000]: kalman {:.4}, SIR {:.4}, WRS {:.4}",
        kalman_filter_mean(&params, &y, n)?,
        sir.ensemble.marginal_mean(n)?,
        wrs.marginal_mean(n)?
    );
    Ok(())
}
