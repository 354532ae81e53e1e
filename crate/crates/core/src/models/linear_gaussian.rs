use crate::density::{normal_log_mode, normal_logpdf};
use crate::error::{Error, Result};
use crate::hmm::StateSpaceModel;
use crate::rng::RngStream;

/// `X_0 ~ N(mu0, sigma0²)`, `X_i = a X_{i-1} + sigma_x ε_i`, `Y_i = b X_i + sigma_y ν_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearGaussianParams {
    pub mu0: f64,
    pub sigma0: f64,
    pub a: f64,
    pub b: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl Default for LinearGaussianParams {
    fn default() -> Self {
        Self {
            mu0: 3.0,
            sigma0: 2.0,
            a: 0.9,
            b: 1.2,
            sigma_x: 3.0,
            sigma_y: 2.3,
        }
    }
}

impl LinearGaussianParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu0", self.mu0), ("a", self.a), ("b", self.b)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        for (name, v) in [
            ("sigma0", self.sigma0),
            ("sigma_x", self.sigma_x),
            ("sigma_y", self.sigma_y),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be strictly positive, got {v}"),
                });
            }
        }
        if self.b == 0.0 {
            return Err(Error::InvalidParameter {
                name: "b",
                reason: "must be nonzero (measurement argmax y/b undefined)".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LinearGaussian {
    params: LinearGaussianParams,
    log_bound: f64,
}

impl LinearGaussian {
    pub fn new(params: LinearGaussianParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            log_bound: normal_log_mode(params.sigma_y),
        })
    }

    pub fn params(&self) -> &LinearGaussianParams {
        &self.params
    }

    /// Maximizer of `π(y | x)` over `x`.
    pub fn measurement_argmax(&self, y: f64) -> f64 {
        y / self.params.b
    }
}

impl StateSpaceModel for LinearGaussian {
    fn sample_initial(&self, rng: &mut RngStream) -> f64 {
        rng.normal(self.params.mu0, self.params.sigma0)
    }

    fn sample_transition(&self, _i: usize, prev: f64, rng: &mut RngStream) -> f64 {
        rng.normal(self.params.a * prev, self.params.sigma_x)
    }

    fn transition_log_density(&self, _i: usize, prev: f64, x: f64) -> f64 {
        normal_logpdf(x, self.params.a * prev, self.params.sigma_x)
    }

    fn measurement_loglik(&self, _i: usize, y: f64, x: f64) -> f64 {
        normal_logpdf(y, self.params.b * x, self.params.sigma_y)
    }

    fn measurement_logbound(&self, _i: usize, _y: f64) -> Result<f64> {
        Ok(self.log_bound)
    }

    fn sample_observation(&self, _i: usize, x: f64, rng: &mut RngStream) -> f64 {
        rng.normal(self.params.b * x, self.params.sigma_y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_is_density_at_mode() {
        let m = LinearGaussian::new(LinearGaussianParams::default()).unwrap();
        let expected = (1.0 / (2.3 * (2.0 * std::f64::consts::PI).sqrt())).ln();
        let bound = m.measurement_logbound(1, 0.4).unwrap();
        assert!((bound - expected).abs() < 1e-14);
        assert!((bound - (-1.751848)).abs() < 1e-6);
    }

    #[test]
    fn loglik_at_argmax_equals_bound() {
        let m = LinearGaussian::new(LinearGaussianParams::default()).unwrap();
        for y in [-7.5, 0.0, 0.3, 12.0] {
            let x = m.measurement_argmax(y);
            assert_eq!(
                m.measurement_loglik(1, y, x),
                m.measurement_logbound(1, y).unwrap()
            );
        }
    }

    #[test]
    fn transition_from_zero_has_zero_mean() {
        let m = LinearGaussian::new(LinearGaussianParams::default()).unwrap();
        let mut rng = RngStream::new(5, 0);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| m.sample_transition(1, 0.0, &mut rng))
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 3.0 * 3.0 / (n as f64).sqrt(), "mean = {mean}");
        // density is symmetric about a·0 = 0
        assert_eq!(
            m.transition_log_density(1, 0.0, 1.3),
            m.transition_log_density(1, 0.0, -1.3)
        );
    }

    #[test]
    fn zero_b_rejected() {
        let p = LinearGaussianParams {
            b: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            LinearGaussian::new(p),
            Err(Error::InvalidParameter { name: "b", .. })
        ));
        let p = LinearGaussianParams {
            sigma_y: 0.0,
            ..Default::default()
        };
        assert!(LinearGaussian::new(p).is_err());
    }
}
