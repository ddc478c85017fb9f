//! Expected improvement over one or more GP posteriors.
//!
//! An [`AcquisitionContext`] bundles the models fitted under each
//! hyperparameter draw with the improvement target and the search mode. Its
//! value at `x` is the average of the per-draw EI values.
//!
//! Two equivalent-in-spirit ways of regularizing EI are expressible:
//!
//! * prior-mean view: models carry a regularized prior mean and the target
//!   is the constant `ȳ + y⁺` ([`Target::Fixed`]);
//! * minimum-improvement view: models carry a constant prior mean and the
//!   target grows with the penalty, `ȳ + y⁺(1 + ξ(x))`
//!   ([`Target::MinImprovement`]).
//!
//! [`duality_gap`] measures how far apart the two are at a point.

mod ei;
mod maximize;

pub use ei::expected_improvement;
pub(crate) use ei::ei_unchecked;
pub use maximize::{
    coordinate_search, maximize, maximize_bounded, Maximum, LocalSearch, BOUNDED_PROBES_PER_DIM,
    LOCAL_EVALS_PER_DIM, PERTURBATION_SCALES,
};

use crate::error::{Error, Result};
use crate::strategy::SearchBox;
use crate::surrogate::{GpModel, Regularizer};

/// Improvement threshold `τ`.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Fixed(f64),
    /// `offset + scale·(1 + ξ(x))`.
    MinImprovement {
        offset: f64,
        scale: f64,
        regularizer: Regularizer,
    },
}

impl Target {
    #[inline]
    pub fn at(&self, x: &[f64]) -> f64 {
        match self {
            Target::Fixed(t) => *t,
            Target::MinImprovement {
                offset,
                scale,
                regularizer,
            } => crate::surrogate::improvement_target(*offset, *scale, regularizer.value(x)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SearchMode {
    Bounded(SearchBox),
    /// No bounds; `anchor` (normally the user's initial box) seeds the
    /// multi-start search.
    Unbounded { anchor: SearchBox },
}

#[derive(Debug, Clone)]
pub struct AcquisitionContext {
    models: Vec<GpModel>,
    target: Target,
    mode: SearchMode,
}

impl AcquisitionContext {
    pub fn new(models: Vec<GpModel>, target: Target, mode: SearchMode) -> Result<Self> {
        let Some(first) = models.first() else {
            return Err(Error::invalid("acquisition needs at least one model"));
        };
        let d = first.dim();
        if models
            .iter()
            .any(|m| m.dim() != d || m.data().outputs() != first.data().outputs())
        {
            return Err(Error::invalid("all models must share the same dataset"));
        }
        let box_dim = match &mode {
            SearchMode::Bounded(b) | SearchMode::Unbounded { anchor: b } => b.dim(),
        };
        if box_dim != d {
            return Err(Error::invalid(format!("search box has dimension {box_dim}, models have {d}")));
        }
        if let Target::MinImprovement { regularizer, .. } = &target {
            if regularizer.dim().is_some_and(|rd| rd != d) {
                return Err(Error::invalid("regularizer dimension does not match the models"));
            }
        }
        Ok(AcquisitionContext { models, target, mode })
    }

    /// Prior-mean view: target `ȳ + y⁺` taken from the (shared) data.
    pub fn expected_improvement(models: Vec<GpModel>, mode: SearchMode) -> Result<Self> {
        let target = models
            .first()
            .map(|m| Target::Fixed(m.target()))
            .ok_or_else(|| Error::invalid("acquisition needs at least one model"))?;
        AcquisitionContext::new(models, target, mode)
    }

    /// Minimum-improvement view over constant-mean `models`, penalized by
    /// `regularizer`.
    pub fn min_improvement(
        models: Vec<GpModel>,
        regularizer: Regularizer,
        mode: SearchMode,
    ) -> Result<Self> {
        let first = models
            .first()
            .ok_or_else(|| Error::invalid("acquisition needs at least one model"))?;
        let target = Target::MinImprovement {
            offset: first.offset(),
            scale: first.penalty_scale(),
            regularizer,
        };
        AcquisitionContext::new(models, target, mode)
    }

    pub fn models(&self) -> &[GpModel] {
        &self.models
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn mode(&self) -> &SearchMode {
        &self.mode
    }

    pub fn dim(&self) -> usize {
        self.models[0].dim()
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "query has dimension {}, acquisition has {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        let tau = self.target.at(x);
        let total: f64 = self
            .models
            .iter()
            .map(|m| {
                let (mean, var) = m.posterior_unchecked(x);
                ei_unchecked(mean, var.sqrt(), tau)
            })
            .sum();
        total / self.models.len() as f64
    }

    /// Posterior variance averaged over draws.
    pub(crate) fn mean_variance(&self, x: &[f64]) -> f64 {
        self.models.iter().map(|m| m.posterior_unchecked(x).1).sum::<f64>() / self.models.len() as f64
    }

    /// Observed input with the largest draw-averaged posterior mean.
    pub fn incumbent(&self) -> Vec<f64> {
        crate::strategy::incumbent_unchecked(&self.models)
    }
}

/// Draw-averaged EI at `x`.
pub fn acquisition_value(ctx: &AcquisitionContext, x: &[f64]) -> Result<f64> {
    ctx.value(x)
}

/// Signed difference `a(x) - b(x)`, normally prior-mean view minus
/// minimum-improvement view.
pub fn duality_gap(a: &AcquisitionContext, b: &AcquisitionContext, x: &[f64]) -> Result<f64> {
    Ok(a.value(x)? - b.value(x)?)
}
