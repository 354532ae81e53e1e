//! Windowed rejection sampling.
//!
//! Each particle is built left to right. The first window rejection-samples
//! `x_{0:w-1} | y_{1:w-1}` from the prior chain and keeps `x_0`; every later
//! window starting at `m` rejection-samples `x_{m:m+w-1} | x_{m-1}, y_{m:m+w-1}`
//! and keeps `x_m`, except the last one (`m + w - 1 = n`) which keeps its
//! whole block. With `w ≥ n + 1` the first window already spans the data and
//! the run reduces to exact full-trajectory rejection.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::hmm::{observation_logbounds, Ensemble, StateSpaceModel, Trajectory};
use crate::oracle::{mean_z_scores, Reference};
use crate::rejection::{
    draw_block, par_particles, BlockStart, RejectionOutcome, RejectionRun, DEFAULT_MAX_ATTEMPTS,
};
use crate::rng::{derive_seed, RngStream};

/// Number of windows a run with `n` observations and window length `w` visits.
pub fn window_count(n: usize, w: usize) -> usize {
    if w > n {
        1
    } else {
        n - w + 2
    }
}

fn check_window(w: usize) -> Result<()> {
    if w == 0 {
        return Err(Error::InvalidParameter {
            name: "w",
            reason: "window length must be at least 1".into(),
        });
    }
    Ok(())
}

fn is_too_rare(e: &Error) -> bool {
    match e {
        Error::AcceptanceTooRare { .. } => true,
        Error::Window { source, .. } => is_too_rare(source),
        _ => false,
    }
}

/// Builds one WRS trajectory, adding per-window attempt counts to `attempts`.
fn wrs_particle<M: StateSpaceModel + ?Sized>(
    model: &M,
    y: &[f64],
    bounds: &[f64],
    w: usize,
    rng: &mut RngStream,
    max_attempts: u64,
    attempts: &[AtomicU64],
) -> Result<Vec<f64>> {
    let n = y.len();
    let mut traj = vec![0.0; n + 1];
    if w > n {
        let a = draw_block(
            model,
            BlockStart::Prior,
            y,
            bounds,
            &mut traj,
            rng,
            max_attempts,
        )
        .map_err(|e| e.in_window(0))?;
        attempts[0].fetch_add(a, Ordering::Relaxed);
        return Ok(traj);
    }

    let mut block = vec![0.0; w];
    let a = draw_block(
        model,
        BlockStart::Prior,
        &y[..w - 1],
        &bounds[..w - 1],
        &mut block,
        rng,
        max_attempts,
    )
    .map_err(|e| e.in_window(0))?;
    attempts[0].fetch_add(a, Ordering::Relaxed);
    traj[0] = block[0];

    let last = n - w + 1;
    for m in 1..=last {
        let window = m - 1..m + w - 1;
        let a = draw_block(
            model,
            BlockStart::After {
                first: m,
                prev: traj[m - 1],
            },
            &y[window.clone()],
            &bounds[window],
            &mut block,
            rng,
            max_attempts,
        )
        .map_err(|e| e.in_window(m))?;
        attempts[m].fetch_add(a, Ordering::Relaxed);
        if m == last {
            traj[m..].copy_from_slice(&block);
        } else {
            traj[m] = block[0];
        }
    }
    Ok(traj)
}

/// `n_particles` iid trajectories from the windowed approximation to
/// `π(x_{0:n} | y_{1:n})`. Particle `j` uses stream `(seed, j)`.
pub fn wrs_run<M: StateSpaceModel + ?Sized>(
    model: &M,
    y: &[f64],
    w: usize,
    n_particles: usize,
    seed: u64,
    max_attempts: u64,
) -> Result<RejectionRun> {
    check_window(w)?;
    if y.is_empty() {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "at least one observation is required".into(),
        });
    }
    if n_particles == 0 {
        return Err(Error::Empty("particle count"));
    }
    let bounds = observation_logbounds(model, y)?;
    let windows = window_count(y.len(), w);
    let attempts: Vec<AtomicU64> = (0..windows).map(|_| AtomicU64::new(0)).collect();
    let trajectories: Vec<Trajectory> = par_particles(n_particles, |j| {
        let mut rng = RngStream::new(seed, j as u64);
        wrs_particle(model, y, &bounds, w, &mut rng, max_attempts, &attempts).map(Trajectory::new)
    })?;
    Ok(RejectionRun {
        ensemble: Ensemble::iid(trajectories)?,
        mean_attempts: attempts
            .iter()
            .map(|a| a.load(Ordering::Relaxed) as f64 / n_particles as f64)
            .collect(),
    })
}

/// One window of the sampler: draws `x_{m:m+w-1} | x_{m-1} = x_prev, y_{m:m+w-1}`
/// where `w = y_window.len()`. Callers keep `block[0]`, or the whole block
/// at the final window.
pub fn wrs_block_step<M: StateSpaceModel + ?Sized>(
    model: &M,
    m: usize,
    x_prev: f64,
    y_window: &[f64],
    rng: &mut RngStream,
    max_attempts: u64,
) -> Result<RejectionOutcome<Vec<f64>>> {
    check_window(y_window.len())?;
    if m == 0 {
        return Err(Error::InvalidParameter {
            name: "m",
            reason: "windows after the first start at m >= 1".into(),
        });
    }
    let bounds: Vec<f64> = y_window
        .iter()
        .enumerate()
        .map(|(k, &yi)| model.measurement_logbound(m + k, yi))
        .collect::<Result<_>>()?;
    let mut block = vec![0.0; y_window.len()];
    let attempts = draw_block(
        model,
        BlockStart::After {
            first: m,
            prev: x_prev,
        },
        y_window,
        &bounds,
        &mut block,
        rng,
        max_attempts,
    )
    .map_err(|e| e.in_window(m))?;
    Ok(RejectionOutcome {
        draw: block,
        attempts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSettings {
    pub n_particles: usize,
    /// Largest window length tried.
    pub w_max: usize,
    /// A candidate passes when every `|z_i|` is at most this.
    pub z_bound: f64,
    pub seed: u64,
    pub max_attempts: u64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            n_particles: 10_000,
            w_max: 25,
            z_bound: 2.0,
            seed: 0,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }
}

/// Marginal summaries of one candidate window length.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateWindow {
    pub w: usize,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub z_scores: Vec<f64>,
    pub mean_attempts: Vec<f64>,
    /// Set when some window at this length exceeded the attempt limit; the
    /// candidate then counts as failed with infinite z-scores.
    pub infeasible: Option<Error>,
}

impl CandidateWindow {
    /// Index and value of the z-score with the largest magnitude.
    pub fn worst(&self) -> (usize, f64) {
        self.z_scores
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap_or((0, 0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub reference_means: Vec<f64>,
    pub candidates: Vec<CandidateWindow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowPlan {
    pub w: usize,
    pub calibration: Option<Calibration>,
}

impl WindowPlan {
    pub fn fixed(w: usize) -> Result<Self> {
        check_window(w)?;
        Ok(Self {
            w,
            calibration: None,
        })
    }
}

/// Smallest window length whose WRS marginal means all sit within
/// `z_bound` standard errors of an exact reference ensemble.
///
/// Candidate `w` runs with seed `derive_seed(settings.seed, w)`. The standard
/// error combines the WRS sample and the reference sample. A length at which
/// some window exceeds `settings.max_attempts` is recorded as infeasible and
/// the search moves on to the next length.
pub fn calibrate_window<M: StateSpaceModel + ?Sized>(
    model: &M,
    y: &[f64],
    reference: &Ensemble,
    settings: &CalibrationSettings,
) -> Result<WindowPlan> {
    check_window(settings.w_max)?;
    if reference.trajectory_len() != y.len() + 1 {
        return Err(Error::LengthMismatch {
            left: reference.trajectory_len(),
            right: y.len() + 1,
        });
    }
    let reference_means = (0..=y.len())
        .map(|i| reference.marginal_mean(i))
        .collect::<Result<Vec<_>>>()?;
    let mut candidates = Vec::new();
    for w in 1..=settings.w_max {
        let run = match wrs_run(
            model,
            y,
            w,
            settings.n_particles,
            derive_seed(settings.seed, w as u64),
            settings.max_attempts,
        ) {
            Ok(run) => run,
            Err(e) if is_too_rare(&e) => {
                candidates.push(CandidateWindow {
                    w,
                    means: vec![f64::NAN; y.len() + 1],
                    sds: vec![f64::NAN; y.len() + 1],
                    z_scores: vec![f64::INFINITY; y.len() + 1],
                    mean_attempts: Vec::new(),
                    infeasible: Some(e),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let e = &run.ensemble;
        let z_scores = mean_z_scores(e, Reference::Sample(reference))?;
        let passed = z_scores.iter().all(|z| z.abs() <= settings.z_bound);
        candidates.push(CandidateWindow {
            w,
            means: (0..=y.len())
                .map(|i| e.marginal_mean(i))
                .collect::<Result<_>>()?,
            sds: (0..=y.len())
                .map(|i| e.marginal_variance(i).map(f64::sqrt))
                .collect::<Result<_>>()?,
            z_scores,
            mean_attempts: run.mean_attempts,
            infeasible: None,
        });
        if passed {
            return Ok(WindowPlan {
                w,
                calibration: Some(Calibration {
                    reference_means,
                    candidates,
                }),
            });
        }
    }
    let (index, z) = candidates
        .last()
        .map(CandidateWindow::worst)
        .unwrap_or((0, 0.0));
    Err(Error::CalibrationExhausted {
        w_max: settings.w_max,
        index,
        z,
    })
}
