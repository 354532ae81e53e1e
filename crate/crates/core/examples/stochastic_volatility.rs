//! Stochastic volatility: calibrate a window against exact draws, then
//! compare marginal means and a histogram of x_5.
//!
//! cargo run --release --example stochastic_volatility

use wrs_smc::models::{simulate, StochVolParams, StochasticVolatility};
use wrs_smc::oracle::{mean_z_scores, Reference};
use wrs_smc::rejection::{full_trajectory_rejection, DEFAULT_MAX_ATTEMPTS};
use wrs_smc::report::Histogram;
use wrs_smc::rng::{RngStream, SIMULATION_STREAM};
use wrs_smc::smc::{sir_run, ResamplePolicy};
use wrs_smc::wrs::{calibrate_window, wrs_run, CalibrationSettings};
use wrs_smc::Coordinate;

fn main() -> wrs_smc::Result<()> {
    let model = StochasticVolatility::new(StochVolParams::default())?;
    let (_, y) = simulate(&model, 8, &mut RngStream::new(1, SIMULATION_STREAM))?;
    let n_particles = 5_000;

    let exact = full_trajectory_rejection(&model, &y, n_particles, 1, DEFAULT_MAX_ATTEMPTS)?;
    println!(
        "full rejection: {:.0} proposals per draw",
        exact.mean_attempts[0]
    );
    let settings = CalibrationSettings {
        n_particles,
        max_attempts: 1_000_000,
        ..CalibrationSettings::default()
    };
    let plan = calibrate_window(&model, &y, &exact.ensemble, &settings)?;
    println!("calibrated window length: {}", plan.w);

    let wrs = wrs_run(&model, &y, plan.w, n_particles, 2, DEFAULT_MAX_ATTEMPTS)?.ensemble;
    let sir = sir_run(&model, &y, n_particles, ResamplePolicy::default(), 3)?.ensemble;
    let z = mean_z_scores(&wrs, Reference::Sample(&exact.ensemble))?;
    println!(
        "{:>3} {:>9} {:>9} {:>9} {:>7} {:>9}",
        "i", "exact", "wrs", "sir", "z", "sir uniq"
    );
    for (i, z_i) in z.iter().enumerate() {
        println!(
            "{i:>3} {:>9.4} {:>9.4} {:>9.4} {:>7.2} {:>8.1}%",
            exact.ensemble.marginal_mean(i)?,
            wrs.marginal_mean(i)?,
            sir.marginal_mean(i)?,
            z_i,
            100.0 * sir.distinct_fraction(Coordinate::Index(i))?
        );
    }

    let hist = Histogram::of_marginal(&wrs, 5, 20)?;
    let peak = hist.counts.iter().copied().fold(0.0, f64::max);
    println!("\nWRS histogram of x_5:");
    for (k, c) in hist.counts.iter().enumerate() {
        let bar = "#".repeat((40.0 * c / peak).round() as usize);
        println!("{:>7.2} {bar}", hist.edges[k]);
    }
    Ok(())
}
