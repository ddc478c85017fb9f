//! Gaussian-process surrogate.
//!
//! Models are immutable: [`fit`] factorizes `K + σ²I` once and every
//! [`GpModel::posterior`] query reuses that factorization. Observations are
//! centred before each fit, the empirical mean is folded into the constant
//! bias and the centred best observation `y⁺` becomes the scale of the
//! regularizing penalty (see [`PriorMean`]).

mod gp;
mod kernel;
mod prior_mean;
mod slice;

pub(crate) use gp::improvement_target;
pub use gp::{fit, fit_with_jitter, log_marginal_likelihood, Dataset, GpModel, JITTER_START, JITTER_MAX};
pub use kernel::{se_kernel, HyperParams};
pub use prior_mean::{PriorMean, Regularizer};
pub use slice::{
    slice_sample_hyperparams, slice_sample_with, HyperPrior, SliceSamples, SLICE_MAX_STEP_OUT,
    SLICE_WIDTH,
};
