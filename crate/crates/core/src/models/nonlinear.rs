use crate::density::{normal_log_mode, normal_logpdf};
use crate::error::{Error, Result};
use crate::hmm::StateSpaceModel;
use crate::rng::RngStream;

/// The classic "highly nonlinear" benchmark:
/// `X_0 ~ N(mu, sigma2)`, `X_i = m_i(X_{i-1}) + ε_i` with `ε_i ~ N(0, sigma_x2)`,
/// `Y_i = 0.05 X_i² + ν_i` with `ν_i ~ N(0, sigma_y2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearParams {
    pub mu: f64,
    pub sigma2: f64,
    pub sigma_x2: f64,
    pub sigma_y2: f64,
}

impl Default for NonlinearParams {
    fn default() -> Self {
        Self {
            mu: 0.0,
            sigma2: 5.0,
            sigma_x2: 10.0,
            sigma_y2: 10.0,
        }
    }
}

impl NonlinearParams {
    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::InvalidParameter {
                name: "mu",
                reason: format!("must be finite, got {}", self.mu),
            });
        }
        for (name, v) in [
            ("sigma2", self.sigma2),
            ("sigma_x2", self.sigma_x2),
            ("sigma_y2", self.sigma_y2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("variance must be strictly positive, got {v}"),
                });
            }
        }
        Ok(())
    }
}

const OBS_SCALE: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct Nonlinear {
    params: NonlinearParams,
    sd0: f64,
    sd_x: f64,
    sd_y: f64,
}

impl Nonlinear {
    pub fn new(params: NonlinearParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            sd0: params.sigma2.sqrt(),
            sd_x: params.sigma_x2.sqrt(),
            sd_y: params.sigma_y2.sqrt(),
        })
    }

    pub fn params(&self) -> &NonlinearParams {
        &self.params
    }

    /// Conditional mean of `x_i` given `x_{i-1} = prev`; the forcing term uses
    /// `cos(1.2 (i - 1))`.
    pub fn transition_mean(i: usize, prev: f64) -> f64 {
        0.5 * prev + 25.0 * prev / (1.0 + prev * prev) + 8.0 * (1.2 * (i as f64 - 1.0)).cos()
    }

    /// A maximizer of `π(y | x)`: `0` for negative `y`, otherwise the
    /// nonnegative root `sqrt(y / 0.05)` (the negative root is equally valid).
    pub fn measurement_argmax(y: f64) -> f64 {
        if y < 0.0 {
            0.0
        } else {
            (y / OBS_SCALE).sqrt()
        }
    }
}

impl StateSpaceModel for Nonlinear {
    fn sample_initial(&self, rng: &mut RngStream) -> f64 {
        rng.normal(self.params.mu, self.sd0)
    }

    fn sample_transition(&self, i: usize, prev: f64, rng: &mut RngStream) -> f64 {
        rng.normal(Self::transition_mean(i, prev), self.sd_x)
    }

    fn transition_log_density(&self, i: usize, prev: f64, x: f64) -> f64 {
        normal_logpdf(x, Self::transition_mean(i, prev), self.sd_x)
    }

    fn measurement_loglik(&self, _i: usize, y: f64, x: f64) -> f64 {
        normal_logpdf(y, OBS_SCALE * x * x, self.sd_y)
    }

    fn measurement_logbound(&self, _i: usize, y: f64) -> Result<f64> {
        if y < 0.0 {
            Ok(normal_logpdf(y, 0.0, self.sd_y))
        } else {
            Ok(normal_log_mode(self.sd_y))
        }
    }

    fn sample_observation(&self, _i: usize, x: f64, rng: &mut RngStream) -> f64 {
        rng.normal(OBS_SCALE * x * x, self.sd_y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_observation_bound_at_zero() {
        let m = Nonlinear::new(NonlinearParams::default()).unwrap();
        assert_eq!(Nonlinear::measurement_argmax(-3.0), 0.0);
        let expected = normal_logpdf(-3.0, 0.0, 10f64.sqrt());
        assert_eq!(m.measurement_logbound(1, -3.0).unwrap(), expected);
    }

    #[test]
    fn positive_observation_bound_is_mode() {
        let m = Nonlinear::new(NonlinearParams::default()).unwrap();
        let x = Nonlinear::measurement_argmax(0.2);
        assert!((x - 2.0).abs() < 1e-12);
        let expected = -(10f64.sqrt() * (2.0 * std::f64::consts::PI).sqrt()).ln();
        let bound = m.measurement_logbound(1, 0.2).unwrap();
        assert!((bound - expected).abs() < 1e-14);
        assert!((m.measurement_loglik(1, 0.2, x) - bound).abs() < 1e-12);
        assert!((m.measurement_loglik(1, 0.2, -x) - bound).abs() < 1e-12);
    }

    #[test]
    fn transition_mean_uses_previous_time_index() {
        assert_eq!(Nonlinear::transition_mean(1, 0.0), 8.0);
        assert!((Nonlinear::transition_mean(2, 0.0) - 8.0 * 1.2f64.cos()).abs() < 1e-14);
        let x = 1.5;
        let expected = 0.75 + 25.0 * 1.5 / 3.25 + 8.0 * (1.2f64 * 3.0).cos();
        assert!((Nonlinear::transition_mean(4, x) - expected).abs() < 1e-12);
    }
}
