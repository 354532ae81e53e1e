//! Hidden Markov model abstraction, trajectories and weighted ensembles.
//!
//! Time is indexed from 0. The latent chain is `x_0, x_1, ..., x_n`; the
//! observation slice `y` holds `y_1..y_n` at positions `0..n`, so `y[i - 1]`
//! is the datum attached to `x_i`.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// A hidden Markov model with scalar latent state.
///
/// All densities are in log space. Implementations must be pure: the samplers
/// depend only on their arguments and the stream state.
pub trait StateSpaceModel: Send + Sync {
    fn state_dim(&self) -> usize {
        1
    }

    /// Draws `x_0 ~ π(x_0)`.
    fn sample_initial(&self, rng: &mut RngStream) -> f64;

    /// Draws `x_i ~ π(x_i | x_{i-1} = prev)`.
    fn sample_transition(&self, i: usize, prev: f64, rng: &mut RngStream) -> f64;

    /// `log π(x_i = x | x_{i-1} = prev)`.
    fn transition_log_density(&self, i: usize, prev: f64, x: f64) -> f64;

    /// `log π(y_i = y | x_i = x)`.
    fn measurement_loglik(&self, i: usize, y: f64, x: f64) -> f64;

    /// An upper bound on `log π(y_i = y | x_i)` over all `x_i`.
    fn measurement_logbound(&self, i: usize, y: f64) -> Result<f64>;

    /// Draws an observation `y_i` given `x_i = x`.
    fn sample_observation(&self, i: usize, x: f64, rng: &mut RngStream) -> f64;

    /// Rejects observations outside the model's support.
    fn check_observation(&self, _i: usize, _y: f64) -> Result<()> {
        Ok(())
    }
}

impl<M: StateSpaceModel + ?Sized> StateSpaceModel for &M {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn sample_initial(&self, rng: &mut RngStream) -> f64 {
        (**self).sample_initial(rng)
    }
    fn sample_transition(&self, i: usize, prev: f64, rng: &mut RngStream) -> f64 {
        (**self).sample_transition(i, prev, rng)
    }
    fn transition_log_density(&self, i: usize, prev: f64, x: f64) -> f64 {
        (**self).transition_log_density(i, prev, x)
    }
    fn measurement_loglik(&self, i: usize, y: f64, x: f64) -> f64 {
        (**self).measurement_loglik(i, y, x)
    }
    fn measurement_logbound(&self, i: usize, y: f64) -> Result<f64> {
        (**self).measurement_logbound(i, y)
    }
    fn sample_observation(&self, i: usize, x: f64, rng: &mut RngStream) -> f64 {
        (**self).sample_observation(i, x, rng)
    }
    fn check_observation(&self, i: usize, y: f64) -> Result<()> {
        (**self).check_observation(i, y)
    }
}

impl<M: StateSpaceModel + ?Sized> StateSpaceModel for Box<M> {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn sample_initial(&self, rng: &mut RngStream) -> f64 {
        (**self).sample_initial(rng)
    }
    fn sample_transition(&self, i: usize, prev: f64, rng: &mut RngStream) -> f64 {
        (**self).sample_transition(i, prev, rng)
    }
    fn transition_log_density(&self, i: usize, prev: f64, x: f64) -> f64 {
        (**self).transition_log_density(i, prev, x)
    }
    fn measurement_loglik(&self, i: usize, y: f64, x: f64) -> f64 {
        (**self).measurement_loglik(i, y, x)
    }
    fn measurement_logbound(&self, i: usize, y: f64) -> Result<f64> {
        (**self).measurement_logbound(i, y)
    }
    fn sample_observation(&self, i: usize, x: f64, rng: &mut RngStream) -> f64 {
        (**self).sample_observation(i, x, rng)
    }
    fn check_observation(&self, i: usize, y: f64) -> Result<()> {
        (**self).check_observation(i, y)
    }
}

/// Log-bounds for every observation, `out[i - 1]` for `y_i`.
pub fn observation_logbounds<M: StateSpaceModel + ?Sized>(
    model: &M,
    y: &[f64],
) -> Result<Vec<f64>> {
    y.iter()
        .enumerate()
        .map(|(k, &yi)| model.measurement_logbound(k + 1, yi))
        .collect()
}

/// One realization `x_{0:n}` of the latent chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory(pub Vec<f64>);

impl Trajectory {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Number of observation steps `n` (the trajectory holds `n + 1` states).
    pub fn horizon(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleKind {
    /// Independent, equally weighted draws.
    Iid,
    /// Importance-weighted particles.
    Weighted,
    /// Equally weighted but dependent particles, straight out of resampling.
    Resampled,
}

/// Which coordinates a distinctness count looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    Index(usize),
    All,
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    trajectories: Vec<Trajectory>,
    log_weights: Vec<f64>,
    weights: Vec<f64>,
    kind: EnsembleKind,
}

impl Ensemble {
    /// Equally weighted ensemble of the given kind.
    pub fn uniform(trajectories: Vec<Trajectory>, kind: EnsembleKind) -> Result<Self> {
        let n = trajectories.len();
        Self::check_shape(&trajectories)?;
        Ok(Self {
            trajectories,
            log_weights: vec![0.0; n],
            weights: vec![1.0 / n as f64; n],
            kind,
        })
    }

    pub fn iid(trajectories: Vec<Trajectory>) -> Result<Self> {
        Self::uniform(trajectories, EnsembleKind::Iid)
    }

    pub fn weighted(trajectories: Vec<Trajectory>, log_weights: Vec<f64>) -> Result<Self> {
        Self::check_shape(&trajectories)?;
        if log_weights.len() != trajectories.len() {
            return Err(Error::LengthMismatch {
                left: trajectories.len(),
                right: log_weights.len(),
            });
        }
        let weights = normalize_log_weights(&log_weights)?;
        Ok(Self {
            trajectories,
            log_weights,
            weights,
            kind: EnsembleKind::Weighted,
        })
    }

    fn check_shape(trajectories: &[Trajectory]) -> Result<()> {
        let first = trajectories.first().ok_or(Error::Empty("ensemble"))?;
        if let Some(bad) = trajectories.iter().find(|t| t.len() != first.len()) {
            return Err(Error::LengthMismatch {
                left: first.len(),
                right: bad.len(),
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// Number of states per trajectory (`n + 1`).
    pub fn trajectory_len(&self) -> usize {
        self.trajectories[0].len()
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn normalized_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_uniform(&self) -> bool {
        self.kind != EnsembleKind::Weighted
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.trajectory_len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.trajectory_len(),
            });
        }
        Ok(())
    }

    /// All particle values at time index `i`.
    pub fn marginal(&self, i: usize) -> Result<Vec<f64>> {
        self.check_index(i)?;
        Ok(self.trajectories.iter().map(|t| t.0[i]).collect())
    }

    /// Weighted mean of `x_i`.
    pub fn marginal_mean(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        if self.is_uniform() {
            let sum: f64 = self.trajectories.iter().map(|t| t.0[i]).sum();
            return Ok(sum / self.len() as f64);
        }
        Ok(self
            .trajectories
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * t.0[i])
            .sum())
    }

    /// Weighted (plug-in) variance of `x_i`; for uniform ensembles with more than
    /// one member this is the unbiased sample variance.
    pub fn marginal_variance(&self, i: usize) -> Result<f64> {
        let mean = self.marginal_mean(i)?;
        let n = self.len();
        if self.is_uniform() {
            if n < 2 {
                return Ok(0.0);
            }
            let ss: f64 = self
                .trajectories
                .iter()
                .map(|t| (t.0[i] - mean).powi(2))
                .sum();
            return Ok(ss / (n - 1) as f64);
        }
        Ok(self
            .trajectories
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * (t.0[i] - mean).powi(2))
            .sum())
    }

    /// Sample size to use for standard errors: `N` for equally weighted
    /// ensembles, the effective sample size otherwise.
    pub fn effective_size(&self) -> f64 {
        if self.is_uniform() {
            self.len() as f64
        } else {
            1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
        }
    }

    /// Fraction of distinct values (bitwise) at index `i`, or of distinct
    /// whole trajectories.
    pub fn distinct_fraction(&self, at: Coordinate) -> Result<f64> {
        let distinct = match at {
            Coordinate::Index(i) => {
                self.check_index(i)?;
                self.trajectories
                    .iter()
                    .map(|t| t.0[i].to_bits())
                    .collect::<HashSet<_>>()
                    .len()
            }
            Coordinate::All => self
                .trajectories
                .iter()
                .map(|t| t.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>())
                .collect::<HashSet<_>>()
                .len(),
        };
        Ok(distinct as f64 / self.len() as f64)
    }
}

/// `log Σ exp(lw)`, computed with max subtraction. Returns `-inf` when every
/// entry is `-inf`.
pub fn log_sum_exp(lw: &[f64]) -> f64 {
    let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + lw.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// Turns log-weights into probabilities summing to one.
pub fn normalize_log_weights(lw: &[f64]) -> Result<Vec<f64>> {
    if lw.is_empty() {
        return Err(Error::Empty("log-weights"));
    }
    let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return Err(Error::AllWeightsZero);
    }
    let mut w: Vec<f64> = lw.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    Ok(w)
}
