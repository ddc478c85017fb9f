//! The sequential optimization loop.
//!
//! A run starts with a Latin hypercube design on the initial box, then
//! alternates refitting the surrogate (one model per slice-sampled
//! hyperparameter draw) with maximizing the averaged acquisition. The
//! [`Method`] decides where the acquisition may be maximized:
//!
//! | method | search region | prior mean |
//! |--------|---------------|------------|
//! | `EI`   | initial box   | constant |
//! | `EI-V` | box grown ×γ in volume every `doubling_period` evaluations | constant |
//! | `EI-H` | unbounded     | hinge-quadratic penalty |
//! | `EI-Q` | unbounded     | quadratic penalty |

mod lhs;
mod run;
mod search_box;

pub use lhs::latin_hypercube;
pub use run::{incumbent, run, run_observed, Observer};
pub(crate) use run::incumbent_unchecked;
pub use search_box::{expand_box, SearchBox};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surrogate::Regularizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "EI")]
    Ei,
    #[serde(rename = "EI-V")]
    EiV,
    #[serde(rename = "EI-H")]
    EiH,
    #[serde(rename = "EI-Q")]
    EiQ,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ei, Method::EiV, Method::EiH, Method::EiQ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Ei => "EI",
            Method::EiV => "EI-V",
            Method::EiH => "EI-H",
            Method::EiQ => "EI-Q",
        }
    }

    pub fn is_regularized(self) -> bool {
        matches!(self, Method::EiH | Method::EiQ)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('_', "-").as_str() {
            "EI" => Ok(Method::Ei),
            "EI-V" | "EIV" => Ok(Method::EiV),
            "EI-H" | "EIH" => Ok(Method::EiH),
            "EI-Q" | "EIQ" => Ok(Method::EiQ),
            _ => Err(Error::Config(format!("unknown method `{s}` (expected EI, EI-V, EI-H or EI-Q)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub method: Method,
    pub initial_box: SearchBox,
    /// Total number of objective evaluations N.
    pub budget: usize,
    pub init_count: usize,
    pub mcmc_draws: usize,
    /// Burn-in sweeps of the first fit.
    pub mcmc_burn_in: usize,
    /// Burn-in sweeps of later fits, warm-started from the previous draw.
    pub mcmc_warm_burn_in: usize,
    pub growth_factor: f64,
    pub doubling_period: usize,
    /// Hinge curvature β.
    pub curvature: f64,
    pub seed: u64,
    /// Record wall-clock seconds per iteration. Off by default so that
    /// traces are byte-for-byte reproducible.
    #[serde(default)]
    pub record_time: bool,
}

impl StrategyConfig {
    /// Defaults: N = 30d, 3d initial points, γ = 2 every 3d evaluations,
    /// β = 1, 10 draws with 50 burn-in sweeps (10 when warm-started).
    pub fn new(method: Method, initial_box: SearchBox, seed: u64) -> Self {
        let d = initial_box.dim();
        StrategyConfig {
            method,
            initial_box,
            budget: 30 * d,
            init_count: 3 * d,
            mcmc_draws: 10,
            mcmc_burn_in: 50,
            mcmc_warm_burn_in: 10,
            growth_factor: 2.0,
            doubling_period: 3 * d,
            curvature: 1.0,
            seed,
            record_time: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.initial_box.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.budget == 0 {
            return fail("budget must be positive".into());
        }
        if self.init_count == 0 || self.init_count > self.budget {
            return fail(format!(
                "init_count must be in 1..={}, got {}",
                self.budget, self.init_count
            ));
        }
        if self.mcmc_draws == 0 {
            return fail("mcmc_draws must be positive".into());
        }
        if !(self.growth_factor > 1.0 && self.growth_factor.is_finite()) {
            return fail(format!("growth_factor must exceed 1, got {}", self.growth_factor));
        }
        if self.doubling_period == 0 {
            return fail("doubling_period must be positive".into());
        }
        if !(self.curvature > 0.0 && self.curvature.is_finite()) {
            return fail(format!("curvature must be positive, got {}", self.curvature));
        }
        Ok(())
    }
}

/// One objective evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub best_y: f64,
    /// Box the point was selected from; `None` for unbounded selections.
    pub search_box: Option<SearchBox>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub method: Method,
    pub seed: u64,
    pub records: Vec<TraceRecord>,
    pub recommendation: Vec<f64>,
    /// Search box after the last evaluation (EI and EI-V only).
    pub final_box: Option<SearchBox>,
    /// Frozen regularizer parameters (EI-H and EI-Q only).
    pub regularizer: Option<Regularizer>,
    /// Iterations at which the maximizer fell back to pure exploration.
    #[serde(default)]
    pub fallback_iterations: Vec<usize>,
    /// Iterations whose hyperparameter sampler failed and reused its start.
    #[serde(default)]
    pub degraded_iterations: Vec<usize>,
}

impl Trace {
    pub fn dim(&self) -> usize {
        self.recommendation.len()
    }

    pub fn best_so_far(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best_y).collect()
    }

    pub fn best(&self) -> Option<f64> {
        self.records.last().map(|r| r.best_y)
    }
}
