//! The nonlinear benchmark with its bimodal posteriors: WRS against exact
//! rejection draws, one window length at a time.
//!
//! cargo run --release --example nonlinear_model

use wrs_smc::models::{simulate, Nonlinear, NonlinearParams};
use wrs_smc::oracle::{ks_critical_value, ks_statistic, mean_z_scores, Reference};
use wrs_smc::rejection::{full_trajectory_rejection, DEFAULT_MAX_ATTEMPTS};
use wrs_smc::rng::{RngStream, SIMULATION_STREAM};
use wrs_smc::wrs::wrs_run;

fn main() -> wrs_smc::Result<()> {
    let model = Nonlinear::new(NonlinearParams::default())?;
    let (x, y) = simulate(&model, 6, &mut RngStream::new(4, SIMULATION_STREAM))?;
    let n_particles = 2_000;
    println!("latent path: {:.2?}", x.values());
    println!("observations: {y:.2?}");

    let exact = full_trajectory_rejection(&model, &y, n_particles, 10, DEFAULT_MAX_ATTEMPTS)?;
    let critical = ks_critical_value(0.01, n_particles, n_particles);
    for w in 1..=5 {
        let run = wrs_run(
            &model,
            &y,
            w,
            n_particles,
            20 + w as u64,
            DEFAULT_MAX_ATTEMPTS,
        )?;
        let z = mean_z_scores(&run.ensemble, Reference::Sample(&exact.ensemble))?;
        let worst_z = z.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let worst_ks = (0..=y.len())
            .map(|i| ks_statistic(&run.ensemble.marginal(i)?, &exact.ensemble.marginal(i)?))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        println!(
            "w={w}: max |z| {worst_z:6.2}, max KS {worst_ks:.4} (1% critical {critical:.4}), {:.0} proposals per trajectory",
            run.mean_attempts.iter().sum::<f64>()
        );
    }
    Ok(())
}
