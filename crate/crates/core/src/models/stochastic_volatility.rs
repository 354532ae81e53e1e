use crate::density::{normal_logpdf, LN_SQRT_2PI};
use crate::error::{Error, Result};
use crate::hmm::StateSpaceModel;
use crate::rng::RngStream;

/// `X_0 ~ N(0, sigma²/(1-alpha²))`, `X_i = alpha X_{i-1} + sigma ε_i`,
/// `Y_i = beta exp(X_i / 2) ν_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochVolParams {
    pub alpha: f64,
    pub sigma: f64,
    pub beta: f64,
}

impl Default for StochVolParams {
    fn default() -> Self {
        Self {
            alpha: 0.91,
            sigma: 1.0,
            beta: 0.5,
        }
    }
}

impl StochVolParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_nan() || self.alpha.abs() >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("|alpha| must be < 1, got {}", self.alpha),
            });
        }
        for (name, v) in [("sigma", self.sigma), ("beta", self.beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be strictly positive, got {v}"),
                });
            }
        }
        Ok(())
    }

    pub fn stationary_sd(&self) -> f64 {
        self.sigma / (1.0 - self.alpha * self.alpha).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct StochasticVolatility {
    params: StochVolParams,
    initial_sd: f64,
}

impl StochasticVolatility {
    pub fn new(params: StochVolParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            initial_sd: params.stationary_sd(),
        })
    }

    pub fn params(&self) -> &StochVolParams {
        &self.params
    }

    /// `ln(y² / beta²)`; infinite at `y = 0`.
    pub fn measurement_argmax(&self, y: f64) -> f64 {
        (y * y / (self.params.beta * self.params.beta)).ln()
    }
}

impl StateSpaceModel for StochasticVolatility {
    fn sample_initial(&self, rng: &mut RngStream) -> f64 {
        rng.normal(0.0, self.initial_sd)
    }

    fn sample_transition(&self, _i: usize, prev: f64, rng: &mut RngStream) -> f64 {
        rng.normal(self.params.alpha * prev, self.params.sigma)
    }

    fn transition_log_density(&self, _i: usize, prev: f64, x: f64) -> f64 {
        normal_logpdf(x, self.params.alpha * prev, self.params.sigma)
    }

    fn measurement_loglik(&self, _i: usize, y: f64, x: f64) -> f64 {
        // N(y; 0, beta² e^x)
        let beta = self.params.beta;
        -LN_SQRT_2PI - beta.ln() - 0.5 * x - 0.5 * y * y / (beta * beta) * (-x).exp()
    }

    fn measurement_logbound(&self, i: usize, y: f64) -> Result<f64> {
        if y == 0.0 || !y.is_finite() {
            return Err(Error::InfiniteBound { index: i });
        }
        // Variance beta² e^{x*} equals y², so the bound is N(y; 0, y²).
        Ok(-LN_SQRT_2PI - y.abs().ln() - 0.5)
    }

    fn sample_observation(&self, _i: usize, x: f64, rng: &mut RngStream) -> f64 {
        self.params.beta * (0.5 * x).exp() * rng.standard_normal()
    }
}
