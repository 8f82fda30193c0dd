//! Bayesian CMA-ES.
//!
//! A derivative-free minimizer that keeps a conjugate prior (normal-inverse-
//! Wishart, normal-Wishart, or a mixture of the two) over the mean and
//! covariance of a Gaussian search distribution. Each iteration samples from
//! the prior's expected moments, corrects them using the fitness ranking of
//! the samples, and performs the closed-form posterior update.

pub mod benchmarks;
pub mod cli;
pub mod correction;
pub mod error;
pub mod optimizer;
pub mod prior;
pub mod sampler;
pub mod spd;

pub use error::{Error, Result};
pub use optimizer::{run, Optimizer, RunConfig, RunResult, StopReason, Strategy};
pub use prior::{PriorHyperparams, PriorVariant};
pub use sampler::GaussianMoments;
pub use spd::SpdMatrix;
