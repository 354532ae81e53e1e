//! Windowed rejection sampling (WRS) for hidden Markov models, alongside the
//! classical SIS/SIR particle filters it is measured against.
//!
//! The crate is organised bottom-up:
//!
//! - [`hmm`]: the [`StateSpaceModel`] trait, trajectories and weighted ensembles.
//! - [`models`]: linear-Gaussian, stochastic volatility, the "highly
//!   nonlinear" benchmark and the dynamic tobit model, plus [`simulate`].
//! - [`rejection`]: accept-reject sampling and exact full-trajectory draws.
//! - [`wrs`]: the windowed sampler and window-length calibration.
//! - [`smc`]: SIS/SIR, effective sample size, multinomial resampling.
//! - [`oracle`]: Kalman filter/smoother and z-score / KS comparators.
//! - [`experiment`]: the experiment runner behind the `wrs-smc` binary.
//!
//! Every sampler takes a `seed`; particle `j` draws from the counter-based
//! stream `(seed, j)`, so results do not depend on the thread count.

pub mod density;
pub mod error;
pub mod experiment;
pub mod hmm;
pub mod models;
pub mod oracle;
pub mod rejection;
pub mod report;
pub mod rng;
pub mod smc;
pub mod wrs;

pub use error::{Error, Result};
pub use hmm::{Coordinate, Ensemble, EnsembleKind, StateSpaceModel, Trajectory};
pub use models::simulate;
pub use rng::RngStream;
