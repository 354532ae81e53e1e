//! The calibration loop on its own: grow w from 1 until every WRS marginal
//! mean lies within two standard errors of exact draws.
//!
//! cargo run --release --example window_calibration

use wrs_smc::models::{simulate, LinearGaussian, LinearGaussianParams};
use wrs_smc::rejection::{full_trajectory_rejection, DEFAULT_MAX_ATTEMPTS};
use wrs_smc::rng::{RngStream, SIMULATION_STREAM};
use wrs_smc::wrs::{calibrate_window, CalibrationSettings};

fn main() -> wrs_smc::Result<()> {
    let model = LinearGaussian::new(LinearGaussianParams::default())?;
    // full rejection gets expensive fast in n; six observations keep it quick
    let (_, y) = simulate(&model, 6, &mut RngStream::new(5, SIMULATION_STREAM))?;
    let settings = CalibrationSettings {
        n_particles: 20_000,
        w_max: 7,
        ..CalibrationSettings::default()
    };
    let reference =
        full_trajectory_rejection(&model, &y, settings.n_particles, 99, DEFAULT_MAX_ATTEMPTS)?;
    let plan = calibrate_window(&model, &y, &reference.ensemble, &settings)?;
    let table = plan.calibration.as_ref().expect("calibration table");
    for c in &table.candidates {
        let (index, z) = c.worst();
        let zs: Vec<String> = c.z_scores.iter().map(|z| format!("{z:+.1}")).collect();
        println!(
            "w={}: worst z {z:+.2} at index {index}  [{}]",
            c.w,
            zs.join(" ")
        );
    }
    println!("chosen w = {}", plan.w);
    Ok(())
}
