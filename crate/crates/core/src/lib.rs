//! Bayesian optimization without a fixed bounding box.
//!
//! Two ways of letting the search leave the user's initial box are provided
//! next to vanilla expected improvement (EI):
//!
//! * **EI-V** grows the search box isotropically about its centre, doubling
//!   its volume every few evaluations.
//! * **EI-H / EI-Q** drop the box altogether and instead regularize EI through
//!   a non-stationary Gaussian-process prior mean `b - y⁺·ξ(x)`, where `ξ` is a
//!   hinge-quadratic or quadratic penalty centred on the initial box. The
//!   resulting acquisition decays far from the data, so it can be maximized
//!   without bounds.
//!
//! The crate is organised bottom-up:
//!
//! * [`surrogate`]: GP regression, squared-exponential ARD kernel, evidence and
//!   slice sampling over kernel hyperparameters.
//! * [`acquisition`]: EI, its average over hyperparameter draws and bounded or
//!   unbounded maximization.
//! * [`strategy`]: the sequential optimization loop and its search boxes.
//! * [`problems`]: benchmark objectives and an external-command adapter.
//! * [`harness`]: seeded multi-run experiments, trace files and summaries.

pub mod acquisition;
pub mod error;
pub mod harness;
pub mod problems;
pub mod strategy;
pub mod surrogate;

pub use error::{Error, EvalError, Result};
pub use strategy::{Method, SearchBox, StrategyConfig, Trace};
