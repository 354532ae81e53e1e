//! The four benchmark models and a data simulator.

mod linear_gaussian;
mod nonlinear;
mod stochastic_volatility;
mod tobit;

pub use linear_gaussian::{LinearGaussian, LinearGaussianParams};
pub use nonlinear::{Nonlinear, NonlinearParams};
pub use stochastic_volatility::{StochVolParams, StochasticVolatility};
pub use tobit::{Tobit, TobitParams};

use crate::error::{Error, Result};
use crate::hmm::{StateSpaceModel, Trajectory};
use crate::rng::RngStream;

/// Any of the shipped benchmark models, dispatched by value.
#[derive(Debug, Clone)]
pub enum BenchmarkModel {
    LinearGaussian(LinearGaussian),
    StochasticVolatility(StochasticVolatility),
    Nonlinear(Nonlinear),
    Tobit(Tobit),
}

impl BenchmarkModel {
    pub fn name(&self) -> &'static str {
        match self {
            BenchmarkModel::LinearGaussian(_) => "lg",
            BenchmarkModel::StochasticVolatility(_) => "sv",
            BenchmarkModel::Nonlinear(_) => "nl",
            BenchmarkModel::Tobit(_) => "tobit",
        }
    }

    fn inner(&self) -> &dyn StateSpaceModel {
        match self {
            BenchmarkModel::LinearGaussian(m) => m,
            BenchmarkModel::StochasticVolatility(m) => m,
            BenchmarkModel::Nonlinear(m) => m,
            BenchmarkModel::Tobit(m) => m,
        }
    }
}

impl From<LinearGaussian> for BenchmarkModel {
    fn from(m: LinearGaussian) -> Self {
        BenchmarkModel::LinearGaussian(m)
    }
}

impl From<StochasticVolatility> for BenchmarkModel {
    fn from(m: StochasticVolatility) -> Self {
        BenchmarkModel::StochasticVolatility(m)
    }
}

impl From<Nonlinear> for BenchmarkModel {
    fn from(m: Nonlinear) -> Self {
        BenchmarkModel::Nonlinear(m)
    }
}

impl From<Tobit> for BenchmarkModel {
    fn from(m: Tobit) -> Self {
        BenchmarkModel::Tobit(m)
    }
}

impl StateSpaceModel for BenchmarkModel {
    fn sample_initial(&self, rng: &mut RngStream) -> f64 {
        self.inner().sample_initial(rng)
    }
    fn sample_transition(&self, i: usize, prev: f64, rng: &mut RngStream) -> f64 {
        self.inner().sample_transition(i, prev, rng)
    }
    fn transition_log_density(&self, i: usize, prev: f64, x: f64) -> f64 {
        self.inner().transition_log_density(i, prev, x)
    }
    fn measurement_loglik(&self, i: usize, y: f64, x: f64) -> f64 {
        self.inner().measurement_loglik(i, y, x)
    }
    fn measurement_logbound(&self, i: usize, y: f64) -> Result<f64> {
        self.inner().measurement_logbound(i, y)
    }
    fn sample_observation(&self, i: usize, x: f64, rng: &mut RngStream) -> f64 {
        self.inner().sample_observation(i, x, rng)
    }
    fn check_observation(&self, i: usize, y: f64) -> Result<()> {
        self.inner().check_observation(i, y)
    }
}

/// Runs the chain forward for `n` steps and emits `y_1..y_n`.
pub fn simulate<M: StateSpaceModel + ?Sized>(
    model: &M,
    n: usize,
    rng: &mut RngStream,
) -> Result<(Trajectory, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "must be at least 1".into(),
        });
    }
    let mut xs = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n);
    xs.push(model.sample_initial(rng));
    for i in 1..=n {
        let x = model.sample_transition(i, xs[i - 1], rng);
        xs.push(x);
        ys.push(model.sample_observation(i, x, rng));
    }
    Ok((Trajectory::new(xs), ys))
}
