use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the penalty `ξ(x) ≥ 0` subtracted from the constant prior mean.
///
/// The parameters (centre, widths, radius) are fixed at construction and are
/// never refit from data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    None,
    /// `ξ_Q(x) = Σ_i (x_i - c_i)² / w_i²`
    Quadratic { center: Vec<f64>, widths: Vec<f64> },
    /// `ξ_H(x) = max(‖x - c‖ - R, 0) / (β R)`
    HingeQuadratic {
        center: Vec<f64>,
        radius: f64,
        curvature: f64,
    },
}

impl Regularizer {
    pub fn center(&self) -> Option<&[f64]> {
        match self {
            Regularizer::None => None,
            Regularizer::Quadratic { center, .. } | Regularizer::HingeQuadratic { center, .. } => {
                Some(center)
            }
        }
    }

    pub fn dim(&self) -> Option<usize> {
        self.center().map(<[f64]>::len)
    }

    /// Penalty value; callers guarantee the dimension.
    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        match self {
            Regularizer::None => 0.0,
            Regularizer::Quadratic { center, widths } => x
                .iter()
                .zip(center)
                .zip(widths)
                .map(|((xi, ci), wi)| {
                    let t = (xi - ci) / wi;
                    t * t
                })
                .sum(),
            Regularizer::HingeQuadratic {
                center,
                radius,
                curvature,
            } => {
                let dist = x
                    .iter()
                    .zip(center)
                    .map(|(xi, ci)| (xi - ci) * (xi - ci))
                    .sum::<f64>()
                    .sqrt();
                if dist > *radius {
                    (dist - radius) / (curvature * radius)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Prior mean `μ̃0(x) = b - y⁺·ξ(x)`.
///
/// `bias` and `penalty_scale` are resolved by [`fit`](super::fit) from the
/// data; the regularizer itself is frozen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorMean {
    regularizer: Regularizer,
    bias: f64,
    penalty_scale: f64,
}

impl PriorMean {
    pub fn constant(bias: f64) -> Self {
        PriorMean {
            regularizer: Regularizer::None,
            bias,
            penalty_scale: 0.0,
        }
    }

    pub fn quadratic(center: Vec<f64>, widths: Vec<f64>) -> Result<Self> {
        if center.len() != widths.len() || center.is_empty() {
            return Err(Error::invalid("quadratic prior mean needs matching non-empty center and widths"));
        }
        if widths.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::invalid("quadratic widths must be positive"));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("center must be finite"));
        }
        Ok(PriorMean {
            regularizer: Regularizer::Quadratic { center, widths },
            bias: 0.0,
            penalty_scale: 0.0,
        })
    }

    pub fn hinge_quadratic(center: Vec<f64>, radius: f64, curvature: f64) -> Result<Self> {
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("center must be non-empty and finite"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("hinge radius must be positive, got {radius}")));
        }
        if !(curvature > 0.0 && curvature.is_finite()) {
            return Err(Error::invalid(format!("hinge curvature must be positive, got {curvature}")));
        }
        Ok(PriorMean {
            regularizer: Regularizer::HingeQuadratic {
                center,
                radius,
                curvature,
            },
            bias: 0.0,
            penalty_scale: 0.0,
        })
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias = bias;
        self
    }

    pub fn with_penalty_scale(mut self, scale: f64) -> Self {
        self.penalty_scale = scale;
        self
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.regularizer
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn penalty_scale(&self) -> f64 {
        self.penalty_scale
    }

    pub fn is_regularized(&self) -> bool {
        !matches!(self.regularizer, Regularizer::None)
    }

    /// The same prior with the regularizer removed (constant mean `b`).
    pub fn without_regularizer(&self) -> Self {
        PriorMean {
            regularizer: Regularizer::None,
            bias: self.bias,
            penalty_scale: self.penalty_scale,
        }
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        match self.regularizer.dim() {
            Some(d) if d != x.len() => Err(Error::invalid(format!(
                "prior mean has dimension {d}, point has {}",
                x.len()
            ))),
            _ => Ok(()),
        }
    }

    /// `ξ(x)`.
    pub fn penalty(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.regularizer.value(x))
    }

    /// `b - y⁺·ξ(x)`; exactly `b` for the constant variant.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.value(x))
    }

    #[inline]
    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        match self.regularizer {
            Regularizer::None => self.bias,
            _ => self.bias - self.penalty_scale * self.regularizer.value(x),
        }
    }
}
