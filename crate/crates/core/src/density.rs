//! Scalar Gaussian densities in log space.

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

/// Log of the standard normal density at its mode for standard deviation `sd`.
#[inline]
pub fn normal_log_mode(sd: f64) -> f64 {
    -sd.ln() - LN_SQRT_2PI
}

/// `log Φ(t)` for the standard normal CDF, accurate far into the lower tail.
pub fn log_std_normal_cdf(t: f64) -> f64 {
    if t > -30.0 {
        (0.5 * libm::erfc(-t / std::f64::consts::SQRT_2)).ln()
    } else {
        // Mills-ratio expansion; erfc underflows past here.
        let t2 = t * t;
        let series = 1.0 - 1.0 / t2 + 3.0 / (t2 * t2) - 15.0 / (t2 * t2 * t2);
        -0.5 * t2 - (-t).ln() - LN_SQRT_2PI + series.ln()
    }
}
