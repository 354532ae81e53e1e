//! The exact references for the linear-Gaussian model: filter, smoother,
//! log evidence, and the marginals that WRS itself targets at window `w`.
//!
//! cargo run --release --example kalman_oracle

use wrs_smc::models::{simulate, LinearGaussian, LinearGaussianParams};
use wrs_smc::oracle::{kalman_filter, kalman_smoother, windowed_marginals};
use wrs_smc::rng::{RngStream, SIMULATION_STREAM};

fn main() -> wrs_smc::Result<()> {
    let params = LinearGaussianParams::default();
    let model = LinearGaussian::new(params)?;
    let (x, y) = simulate(&model, 10, &mut RngStream::new(0, SIMULATION_STREAM))?;

    let filter = kalman_filter(&params, &y);
    let smoother = kalman_smoother(&params, &y);
    println!("log p(y_1:10) = {:.6}", smoother.log_marginal_likelihood);
    println!(
        "{:>3} {:>9} {:>9} {:>9} {:>9}",
        "i", "x_true", "filter", "smoother", "sd"
    );
    for i in 0..=y.len() {
        println!(
            "{i:>3} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            x.values()[i],
            filter.means[i],
            smoother.means[i],
            smoother.variances[i].sqrt()
        );
    }

    // Windowing trades accuracy for speed: the gap to the smoother shrinks
    // geometrically in w. Scale it by the standard error at N = 1e5 to see
    // which w a 2-SE calibration at that N would accept.
    println!("\nmax |WRS mean - smoother mean| / SE(N = 1e5)");
    for w in 1..=8 {
        let g = windowed_marginals(&params, &y, w)?;
        let worst = (0..=y.len())
            .map(|i| (g.means[i] - smoother.means[i]).abs() / (g.variances[i] / 1e5).sqrt())
            .fold(0.0, f64::max);
        println!("w={w}: {worst:.3}");
    }
    Ok(())
}
