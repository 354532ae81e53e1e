#![allow(dead_code)]

use wrs_smc::models::{simulate, LinearGaussian, LinearGaussianParams};
use wrs_smc::rng::{RngStream, SIMULATION_STREAM};
use wrs_smc::StateSpaceModel;

pub fn lg() -> LinearGaussian {
    LinearGaussian::new(LinearGaussianParams::default()).unwrap()
}

/// Observations simulated from `model` on the dedicated simulation stream.
pub fn observations<M: StateSpaceModel>(model: &M, n: usize, seed: u64) -> Vec<f64> {
    simulate(model, n, &mut RngStream::new(seed, SIMULATION_STREAM))
        .unwrap()
        .1
}

pub fn max_abs(z: &[f64]) -> f64 {
    z.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
