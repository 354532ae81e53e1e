use crate::density::{log_std_normal_cdf, normal_log_mode, normal_logpdf};
use crate::error::{Error, Result};
use crate::hmm::StateSpaceModel;
use crate::rng::RngStream;

/// Dynamic tobit model: an AR(1) chain observed through a censored Gaussian,
/// `Z_i = max(0, X_i + sigma_y ν_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TobitParams {
    pub phi: f64,
    pub sigma_x2: f64,
    pub sigma_y2: f64,
}

impl Default for TobitParams {
    fn default() -> Self {
        Self {
            phi: 0.99,
            sigma_x2: 0.05,
            sigma_y2: 0.30,
        }
    }
}

impl TobitParams {
    pub fn validate(&self) -> Result<()> {
        if self.phi.is_nan() || self.phi.abs() >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "phi",
                reason: format!("|phi| must be < 1, got {}", self.phi),
            });
        }
        for (name, v) in [("sigma_x2", self.sigma_x2), ("sigma_y2", self.sigma_y2)] {
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

#[derive(Debug, Clone)]
pub struct Tobit {
    params: TobitParams,
    sd0: f64,
    sd_x: f64,
    sd_y: f64,
}

impl Tobit {
    pub fn new(params: TobitParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            sd0: (params.sigma_x2 / (1.0 - params.phi * params.phi)).sqrt(),
            sd_x: params.sigma_x2.sqrt(),
            sd_y: params.sigma_y2.sqrt(),
        })
    }

    pub fn params(&self) -> &TobitParams {
        &self.params
    }
}

impl StateSpaceModel for Tobit {
    fn sample_initial(&self, rng: &mut RngStream) -> f64 {
        rng.normal(0.0, self.sd0)
    }

    fn sample_transition(&self, _i: usize, prev: f64, rng: &mut RngStream) -> f64 {
        rng.normal(self.params.phi * prev, self.sd_x)
    }

    fn transition_log_density(&self, _i: usize, prev: f64, x: f64) -> f64 {
        normal_logpdf(x, self.params.phi * prev, self.sd_x)
    }

    fn measurement_loglik(&self, _i: usize, z: f64, x: f64) -> f64 {
        if z == 0.0 {
            // P(Y < 0 | x) = Φ(-x / sigma_y)
            log_std_normal_cdf(-x / self.sd_y)
        } else {
            normal_logpdf(z, x, self.sd_y)
        }
    }

    fn measurement_logbound(&self, i: usize, z: f64) -> Result<f64> {
        self.check_observation(i, z)?;
        if z == 0.0 {
            Ok(0.0)
        } else {
            Ok(normal_log_mode(self.sd_y))
        }
    }

    fn sample_observation(&self, _i: usize, x: f64, rng: &mut RngStream) -> f64 {
        rng.normal(x, self.sd_y).max(0.0)
    }

    fn check_observation(&self, i: usize, z: f64) -> Result<()> {
        if z < 0.0 || z.is_nan() {
            return Err(Error::NegativeObservation { index: i, value: z });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn censored_loglik_at_zero_state() {
        let m = Tobit::new(TobitParams::default()).unwrap();
        assert!((m.measurement_loglik(1, 0.0, 0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(m.measurement_logbound(1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn uncensored_bound() {
        let m = Tobit::new(TobitParams::default()).unwrap();
        let expected = -0.5 * (2.0 * std::f64::consts::PI * 0.30).ln();
        let bound = m.measurement_logbound(2, 0.4).unwrap();
        assert!((bound - expected).abs() < 1e-14);
        assert!((bound - (-0.316_96)).abs() < 1e-4);
        assert!((m.measurement_loglik(2, 0.4, 0.4) - bound).abs() < 1e-14);
    }

    #[test]
    fn negative_observation_rejected() {
        let m = Tobit::new(TobitParams::default()).unwrap();
        assert!(matches!(
            m.measurement_logbound(3, -0.1),
            Err(Error::NegativeObservation { index: 3, .. })
        ));
    }

    #[test]
    fn observations_are_censored() {
        let m = Tobit::new(TobitParams::default()).unwrap();
        let mut rng = RngStream::new(11, 0);
        let mut zeros = 0;
        for _ in 0..10_000 {
            let z = m.sample_observation(1, -0.2, &mut rng);
            assert!(z >= 0.0);
            if z == 0.0 {
                zeros += 1;
            }
        }
        // P(z = 0) = Φ(0.2 / sqrt(0.3)) ≈ 0.6425
        assert!((zeros as f64 / 1e4 - 0.6425).abs() < 0.02, "{zeros}");
    }
}
