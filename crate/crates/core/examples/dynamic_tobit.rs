//! Dynamic tobit: censored observations, the probit weight at z = 0, and a
//! persistent latent chain that needs long windows.
//!
//! cargo run --release --example dynamic_tobit

use wrs_smc::models::{simulate, Tobit, TobitParams};
use wrs_smc::oracle::{mean_z_scores, Reference};
use wrs_smc::rejection::{full_trajectory_rejection, DEFAULT_MAX_ATTEMPTS};
use wrs_smc::rng::{RngStream, SIMULATION_STREAM};
use wrs_smc::smc::{incremental_log_weight, sir_run, ProposalDensity, ResamplePolicy};
use wrs_smc::wrs::{calibrate_window, wrs_run, CalibrationSettings};
use wrs_smc::StateSpaceModel;

fn main() -> wrs_smc::Result<()> {
    let params = TobitParams::default();
    let model = Tobit::new(params)?;
    let (_, z) = simulate(&model, 10, &mut RngStream::new(7, SIMULATION_STREAM))?;
    println!("observations (0 = censored): {z:.3?}");

    for x in [-1.0, 0.0, 1.0] {
        let w = incremental_log_weight(&model, 1, 0.0, 0.0, x, ProposalDensity::Bootstrap);
        println!(
            "log weight at z=0, x={x:+.1}: {w:.5}  (bound {:.1})",
            model.measurement_logbound(1, 0.0)?
        );
    }

    let n_particles = 10_000;
    let exact = full_trajectory_rejection(&model, &z, n_particles, 1, DEFAULT_MAX_ATTEMPTS)?;
    let settings = CalibrationSettings {
        n_particles,
        max_attempts: 1_000_000,
        ..CalibrationSettings::default()
    };
    let plan = calibrate_window(&model, &z, &exact.ensemble, &settings)?;
    for c in &plan.calibration.as_ref().expect("calibrated").candidates {
        match &c.infeasible {
            Some(e) => println!("w={:>2}: infeasible ({e})", c.w),
            None => println!("w={:>2}: max |z| {:.2}", c.w, c.worst().1.abs()),
        }
    }

    let wrs = wrs_run(&model, &z, plan.w, n_particles, 2, DEFAULT_MAX_ATTEMPTS)?.ensemble;
    let sir = sir_run(&model, &z, n_particles, ResamplePolicy::default(), 3)?.ensemble;
    let zs = mean_z_scores(&wrs, Reference::Sample(&exact.ensemble))?;
    println!(
        "{:>3} {:>9} {:>9} {:>9} {:>7}",
        "i", "exact", "wrs", "sir", "z"
    );
    for (i, z_i) in zs.iter().enumerate() {
        println!(
            "{i:>3} {:>9.4} {:>9.4} {:>9.4} {:>7.2}",
            exact.ensemble.marginal_mean(i)?,
            wrs.marginal_mean(i)?,
            sir.marginal_mean(i)?,
            z_i
        );
    }
    Ok(())
}
