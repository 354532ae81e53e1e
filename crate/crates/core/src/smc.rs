//! Sequential importance sampling with optional multinomial resampling.
//!
//! Particles are extended with the bootstrap proposal (the prior transition),
//! so the incremental log-weight at step `i` is just `log π(y_i | x_i)`.
//! Particle slot `k` draws its extensions from stream `(seed, k)` and all
//! resampling uses the dedicated stream `(seed, RESAMPLE_STREAM)`, so the
//! extension draws stay aligned whatever the resampling policy does.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hmm::{
    log_sum_exp, normalize_log_weights, Ensemble, EnsembleKind, StateSpaceModel, Trajectory,
};
use crate::rng::{RngStream, RESAMPLE_STREAM};

/// Allowed deviation of a weight vector's sum from one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResamplePolicy {
    Never,
    Always,
    /// Resample when the effective sample size drops below `fraction · N`.
    EssBelow(f64),
}

impl Default for ResamplePolicy {
    fn default() -> Self {
        ResamplePolicy::EssBelow(1.0 / 3.0)
    }
}

impl ResamplePolicy {
    pub fn validate(&self) -> Result<()> {
        if let ResamplePolicy::EssBelow(f) = *self {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidParameter {
                    name: "threshold",
                    reason: format!("ESS threshold fraction must lie in (0, 1], got {f}"),
                });
            }
        }
        Ok(())
    }

    fn triggers(&self, ess: f64, n: usize) -> bool {
        match *self {
            ResamplePolicy::Never => false,
            ResamplePolicy::Always => true,
            ResamplePolicy::EssBelow(f) => ess < f * n as f64,
        }
    }
}

/// Density of the proposal used to draw `x_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProposalDensity {
    /// The prior transition; transition and proposal terms cancel.
    Bootstrap,
    /// `log q(x_i | x_{i-1}, ...)` evaluated at the drawn `x_i`.
    LogDensity(f64),
}

/// `log α = log π(y_i | x_i) + log π(x_i | x_{i-1}) − log q(x_i | ...)`.
pub fn incremental_log_weight<M: StateSpaceModel + ?Sized>(
    model: &M,
    i: usize,
    y_i: f64,
    prev: f64,
    x_i: f64,
    proposal: ProposalDensity,
) -> f64 {
    let loglik = model.measurement_loglik(i, y_i, x_i);
    match proposal {
        ProposalDensity::Bootstrap => loglik,
        ProposalDensity::LogDensity(lq) => loglik + model.transition_log_density(i, prev, x_i) - lq,
    }
}

/// `1 / Σ W²` for normalized weights.
pub fn ess(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::Empty("weights"));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE || weights.iter().any(|&w| w < 0.0) {
        return Err(Error::Unnormalized { sum });
    }
    Ok(1.0 / weights.iter().map(|w| w * w).sum::<f64>())
}

/// `log((1/N) Σ exp(lw))`.
pub fn estimate_log_z(unnormalized_log_weights: &[f64]) -> Result<f64> {
    if unnormalized_log_weights.is_empty() {
        return Err(Error::Empty("log-weights"));
    }
    Ok(log_sum_exp(unnormalized_log_weights) - (unnormalized_log_weights.len() as f64).ln())
}

/// `count` iid draws of indices with probabilities `weights`.
pub(crate) fn multinomial_indices(
    weights: &[f64],
    count: usize,
    rng: &mut RngStream,
) -> Vec<usize> {
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for &w in weights {
        acc += w;
        cumulative.push(acc);
    }
    let last = weights.len() - 1;
    (0..count)
        .map(|_| {
            let u = rng.uniform() * acc;
            // first slot whose cumulative weight exceeds u
            cumulative.partition_point(|&c| c <= u).min(last)
        })
        .collect()
}

/// Draws `N` trajectories with replacement according to the normalized weights.
pub fn multinomial_resample(e: &Ensemble, rng: &mut RngStream) -> Result<Ensemble> {
    let idx = multinomial_indices(e.normalized_weights(), e.len(), rng);
    let trajectories = idx
        .into_iter()
        .map(|k| e.trajectories()[k].clone())
        .collect();
    Ensemble::uniform(trajectories, EnsembleKind::Resampled)
}

#[derive(Debug, Clone)]
pub struct SmcRun {
    pub ensemble: Ensemble,
    /// ESS after the weight update of step `i`, at position `i - 1`.
    pub ess_trace: Vec<f64>,
    /// Steps `i` after whose weighting the particles were resampled.
    pub resample_steps: Vec<usize>,
    /// Running estimate of `log Z_n = log p(y_{1:n})`.
    pub log_evidence: f64,
}

/// SIS with resampling according to `policy`.
pub fn sir_run<M: StateSpaceModel + ?Sized>(
    model: &M,
    y: &[f64],
    n_particles: usize,
    policy: ResamplePolicy,
    seed: u64,
) -> Result<SmcRun> {
    policy.validate()?;
    if y.is_empty() {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "at least one observation is required".into(),
        });
    }
    if n_particles == 0 {
        return Err(Error::Empty("particle count"));
    }
    for (k, &yi) in y.iter().enumerate() {
        model.check_observation(k + 1, yi)?;
    }
    let n = y.len();
    let mut rngs: Vec<RngStream> = (0..n_particles)
        .map(|k| RngStream::new(seed, k as u64))
        .collect();
    let mut resample_rng = RngStream::new(seed, RESAMPLE_STREAM);

    // states[i][k] is slot k's value at time i; parents[i][k] its slot at time i - 1.
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut parents: Vec<Vec<u32>> = Vec::with_capacity(n + 1);
    states.push(
        rngs.par_iter_mut()
            .map(|r| model.sample_initial(r))
            .collect(),
    );
    parents.push(Vec::new());

    let mut log_w = vec![0.0; n_particles];
    let mut ess_trace = Vec::with_capacity(n);
    let mut resample_steps = Vec::new();
    let mut log_evidence = 0.0;
    let mut resampled_last = false;

    for i in 1..=n {
        let yi = y[i - 1];
        let prev = &states[i - 1];
        let (xs, incr): (Vec<f64>, Vec<f64>) = rngs
            .par_iter_mut()
            .zip(prev.par_iter())
            .map(|(r, &xp)| {
                let x = model.sample_transition(i, xp, r);
                (
                    x,
                    incremental_log_weight(model, i, yi, xp, x, ProposalDensity::Bootstrap),
                )
            })
            .unzip();
        for (lw, a) in log_w.iter_mut().zip(&incr) {
            *lw += a;
        }
        let weights =
            normalize_log_weights(&log_w).map_err(|_| Error::WeightDegeneracy { step: i })?;
        let current_ess = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        ess_trace.push(current_ess);

        let mut xs = xs;
        let mut par: Vec<u32> = (0..n_particles as u32).collect();
        resampled_last = policy.triggers(current_ess, n_particles);
        if resampled_last {
            log_evidence += estimate_log_z(&log_w)?;
            let idx = multinomial_indices(&weights, n_particles, &mut resample_rng);
            xs = idx.iter().map(|&k| xs[k]).collect();
            par = idx.iter().map(|&k| k as u32).collect();
            log_w.iter_mut().for_each(|v| *v = 0.0);
            resample_steps.push(i);
        }
        states.push(xs);
        parents.push(par);
    }
    if !resampled_last {
        log_evidence += estimate_log_z(&log_w)?;
    }

    let trajectories: Vec<Trajectory> = (0..n_particles)
        .into_par_iter()
        .map(|k| {
            let mut path = vec![0.0; n + 1];
            let mut slot = k;
            for i in (0..=n).rev() {
                path[i] = states[i][slot];
                if i > 0 {
                    slot = parents[i][slot] as usize;
                }
            }
            Trajectory::new(path)
        })
        .collect();
    let ensemble = if resampled_last {
        Ensemble::uniform(trajectories, EnsembleKind::Resampled)?
    } else {
        Ensemble::weighted(trajectories, log_w)?
    };
    Ok(SmcRun {
        ensemble,
        ess_trace,
        resample_steps,
        log_evidence,
    })
}

/// Plain SIS: `sir_run` with resampling switched off.
pub fn sis_run<M: StateSpaceModel + ?Sized>(
    model: &M,
    y: &[f64],
    n_particles: usize,
    seed: u64,
) -> Result<SmcRun> {
    sir_run(model, y, n_particles, ResamplePolicy::Never, seed)
}
