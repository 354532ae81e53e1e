//! Accept-reject sampling, generic and for whole blocks of the latent chain.
//!
//! Block proposals come from the prior chain and the envelope is the product
//! of per-observation likelihood bounds, so the log acceptance ratio of a
//! proposed block is `Σ_i [log π(y_i | x_i) − logbound_i]`.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hmm::{observation_logbounds, Ensemble, StateSpaceModel, Trajectory};
use crate::rng::RngStream;

pub const DEFAULT_MAX_ATTEMPTS: u64 = 100_000_000;

/// Slack allowed for a log acceptance ratio above zero before the envelope is
/// declared invalid.
pub const BOUND_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionOutcome<T> {
    pub draw: T,
    /// Number of proposals made, including the accepted one.
    pub attempts: u64,
}

/// Draws from `π ∝ h` given a proposal `q` and `log_ratio(x) = log h(x) − log M − log q(x) ≤ 0`.
pub fn rejection_sample<T>(
    mut proposal: impl FnMut(&mut RngStream) -> T,
    log_ratio: impl Fn(&T) -> f64,
    rng: &mut RngStream,
    max_attempts: u64,
) -> Result<RejectionOutcome<T>> {
    for attempts in 1..=max_attempts {
        let x = proposal(rng);
        let lr = log_ratio(&x);
        if lr > BOUND_TOLERANCE {
            return Err(Error::BoundViolated { log_ratio: lr });
        }
        let u = rng.uniform_open0();
        if u.ln() <= lr {
            return Ok(RejectionOutcome { draw: x, attempts });
        }
    }
    Err(Error::AcceptanceTooRare {
        attempts: max_attempts,
    })
}

/// Where a block of the chain starts.
#[derive(Debug, Clone, Copy)]
pub(crate) enum BlockStart {
    /// The block begins with `x_0` drawn from the initial distribution.
    Prior,
    /// The block begins at time `first` with `x_{first-1} = prev` fixed.
    After { first: usize, prev: f64 },
}

/// Rejection-samples one block of the chain into `out`.
///
/// For `BlockStart::Prior` the block covers times `0..out.len()` and `y`,
/// `bounds` hold the data for times `1..out.len()`. For `BlockStart::After`
/// the block covers `first..first + out.len()` and `y`, `bounds` are aligned
/// with it. The uniform is drawn first so a proposal can be dropped as soon as
/// its partial ratio falls below it; every term is nonpositive.
pub(crate) fn draw_block<M: StateSpaceModel + ?Sized>(
    model: &M,
    start: BlockStart,
    y: &[f64],
    bounds: &[f64],
    out: &mut [f64],
    rng: &mut RngStream,
    max_attempts: u64,
) -> Result<u64> {
    let len = out.len();
    let (first, offset) = match start {
        BlockStart::Prior => (0, 1),
        BlockStart::After { first, .. } => (first, 0),
    };
    debug_assert_eq!(y.len() + offset, len);
    debug_assert_eq!(bounds.len(), y.len());

    'attempt: for attempts in 1..=max_attempts {
        let log_u = rng.uniform_open0().ln();
        let mut cum = 0.0;
        let mut prev = match start {
            BlockStart::Prior => {
                out[0] = model.sample_initial(rng);
                out[0]
            }
            BlockStart::After { prev, .. } => prev,
        };
        for k in offset..len {
            let t = first + k;
            let x = model.sample_transition(t, prev, rng);
            out[k] = x;
            prev = x;
            let term = model.measurement_loglik(t, y[k - offset], x) - bounds[k - offset];
            if term > BOUND_TOLERANCE {
                return Err(Error::BoundViolated { log_ratio: term });
            }
            cum += term.min(0.0);
            if cum < log_u {
                continue 'attempt;
            }
        }
        return Ok(attempts);
    }
    Err(Error::AcceptanceTooRare {
        attempts: max_attempts,
    })
}

/// Runs `particle(j)` for `j = 0..n` in parallel.
///
/// On failure the error of the lowest failing index is returned, whatever the
/// scheduling, so error messages are as reproducible as the draws. Particles
/// above a known failure are skipped.
pub(crate) fn par_particles<T: Send>(
    n: usize,
    particle: impl Fn(usize) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let first_failure = AtomicUsize::new(usize::MAX);
    let results: Vec<Option<Result<T>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            if j > first_failure.load(Ordering::Relaxed) {
                return None;
            }
            let r = particle(j);
            if r.is_err() {
                first_failure.fetch_min(j, Ordering::Relaxed);
            }
            Some(r)
        })
        .collect();
    // every index below the lowest failure ran, so that failure is met first
    let mut out = Vec::with_capacity(n);
    for r in results {
        match r {
            Some(Ok(t)) => out.push(t),
            Some(Err(e)) => return Err(e),
            None => {}
        }
    }
    Ok(out)
}

/// Output of an iid rejection-based sampler.
#[derive(Debug, Clone)]
pub struct RejectionRun {
    pub ensemble: Ensemble,
    /// Mean number of proposals per particle, one entry per window.
    pub mean_attempts: Vec<f64>,
}

/// Exact iid draws from `π(x_{0:n} | y_{1:n})` using the prior chain as
/// proposal. Particle `j` uses stream `(seed, j)`.
pub fn full_trajectory_rejection<M: StateSpaceModel + ?Sized>(
    model: &M,
    y: &[f64],
    n_particles: usize,
    seed: u64,
    max_attempts: u64,
) -> Result<RejectionRun> {
    if n_particles == 0 {
        return Err(Error::Empty("particle count"));
    }
    let bounds = observation_logbounds(model, y)?;
    let draws: Vec<(Vec<f64>, u64)> = par_particles(n_particles, |j| {
        let mut rng = RngStream::new(seed, j as u64);
        let mut out = vec![0.0; y.len() + 1];
        let attempts = draw_block(
            model,
            BlockStart::Prior,
            y,
            &bounds,
            &mut out,
            &mut rng,
            max_attempts,
        )?;
        Ok((out, attempts))
    })?;
    let total: u64 = draws.iter().map(|d| d.1).sum();
    let ensemble = Ensemble::iid(draws.into_iter().map(|d| Trajectory::new(d.0)).collect())?;
    Ok(RejectionRun {
        ensemble,
        mean_attempts: vec![total as f64 / n_particles as f64],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::normal_logpdf;
    use crate::hmm::Coordinate;
    use crate::models::{LinearGaussian, LinearGaussianParams};

    #[test]
    fn exact_envelope_accepts_first_time() {
        let mut rng = RngStream::new(1, 0);
        for _ in 0..100 {
            let out = rejection_sample(|r| r.standard_normal(), |_| 0.0, &mut rng, 10).unwrap();
            assert_eq!(out.attempts, 1);
        }
    }

    #[test]
    fn constant_half_acceptance_is_geometric() {
        let mut rng = RngStream::new(2, 0);
        let runs = 100_000;
        let total: u64 = (0..runs)
            .map(|_| {
                rejection_sample(|_| (), |_| 0.5f64.ln(), &mut rng, 1000)
                    .unwrap()
                    .attempts
            })
            .sum();
        let mean = total as f64 / runs as f64;
        // Geometric(1/2): mean 2, variance (1-p)/p² = 2
        let se = (2.0f64 / runs as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * se, "mean attempts {mean}");
    }

    #[test]
    fn normal_target_from_wider_normal() {
        // h = N(0,1), q = N(0, 2²); sup h/q = 2 at x = 0.
        let log_m = 2f64.ln();
        let mut rng = RngStream::new(3, 0);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| {
                rejection_sample(
                    |r| r.normal(0.0, 2.0),
                    |&x| normal_logpdf(x, 0.0, 1.0) - log_m - normal_logpdf(x, 0.0, 2.0),
                    &mut rng,
                    1000,
                )
                .unwrap()
                .draw
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 3.0 / (n as f64).sqrt(), "mean {mean}");
        assert!(
            (var - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt(),
            "var {var}"
        );
    }

    #[test]
    fn violated_bound_is_reported() {
        let mut rng = RngStream::new(4, 0);
        let err = rejection_sample(|_| (), |_| 0.1, &mut rng, 10).unwrap_err();
        assert!(matches!(err, Error::BoundViolated { .. }));
        // within tolerance is fine
        assert!(rejection_sample(|_| (), |_| 1e-12, &mut rng, 10).is_ok());
    }

    #[test]
    fn exhausted_attempts_are_reported() {
        let mut rng = RngStream::new(5, 0);
        let err = rejection_sample(|_| (), |_| -50.0, &mut rng, 100).unwrap_err();
        assert_eq!(err, Error::AcceptanceTooRare { attempts: 100 });
    }

    #[test]
    fn zero_length_data_draws_from_prior() {
        let p = LinearGaussianParams::default();
        let m = LinearGaussian::new(p).unwrap();
        let n = 100_000;
        let run = full_trajectory_rejection(&m, &[], n, 8, DEFAULT_MAX_ATTEMPTS).unwrap();
        assert_eq!(run.mean_attempts, vec![1.0]);
        let mean = run.ensemble.marginal_mean(0).unwrap();
        assert!((mean - p.mu0).abs() < 3.0 * p.sigma0 / (n as f64).sqrt());
    }

    #[test]
    fn full_rejection_is_iid_and_reproducible() {
        let m = LinearGaussian::new(LinearGaussianParams::default()).unwrap();
        let y = [1.0, 4.0, 2.5];
        let a = full_trajectory_rejection(&m, &y, 2000, 10, DEFAULT_MAX_ATTEMPTS).unwrap();
        let b = full_trajectory_rejection(&m, &y, 2000, 10, DEFAULT_MAX_ATTEMPTS).unwrap();
        assert_eq!(a.ensemble.trajectories(), b.ensemble.trajectories());
        assert_eq!(a.ensemble.distinct_fraction(Coordinate::All).unwrap(), 1.0);
        assert!(a.mean_attempts[0] >= 1.0);
    }
}
