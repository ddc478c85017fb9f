use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One draw of the kernel hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Signal variance θ0.
    pub amplitude: f64,
    /// Per-axis length scales, in input units.
    pub length_scales: Vec<f64>,
    /// Observation noise variance σ².
    pub noise_variance: f64,
    /// Constant prior-mean offset, added on top of the empirical mean.
    pub bias: f64,
}

impl HyperParams {
    pub fn new(amplitude: f64, length_scales: Vec<f64>, noise_variance: f64) -> Result<Self> {
        let hp = HyperParams {
            amplitude,
            length_scales,
            noise_variance,
            bias: 0.0,
        };
        hp.validate(hp.dim())?;
        Ok(hp)
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::invalid(format!("amplitude must be positive, got {}", self.amplitude)));
        }
        if self.length_scales.len() != dim {
            return Err(Error::invalid(format!(
                "expected {dim} length scales, got {}",
                self.length_scales.len()
            )));
        }
        if let Some(l) = self.length_scales.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::invalid(format!("length scales must be positive, got {l}")));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::invalid(format!(
                "noise variance must be non-negative, got {}",
                self.noise_variance
            )));
        }
        if !self.bias.is_finite() {
            return Err(Error::invalid("bias must be finite"));
        }
        Ok(())
    }

    pub(crate) fn inverse_sq_lengths(&self) -> Vec<f64> {
        self.length_scales.iter().map(|l| 1.0 / (l * l)).collect()
    }
}

/// Squared-exponential ARD covariance `θ0·exp(-½ Σ (x_i - x2_i)² / ℓ_i²)`.
pub fn se_kernel(x: &[f64], x2: &[f64], hp: &HyperParams) -> Result<f64> {
    if x.len() != hp.dim() || x2.len() != hp.dim() {
        return Err(Error::invalid(format!(
            "kernel inputs of dimension {} and {} do not match {} length scales",
            x.len(),
            x2.len(),
            hp.dim()
        )));
    }
    Ok(se_scaled(x, x2, &hp.inverse_sq_lengths(), hp.amplitude))
}

#[inline]
pub(crate) fn se_scaled(x: &[f64], x2: &[f64], inv_sq: &[f64], amplitude: f64) -> f64 {
    // (a - b)² is symmetric bit-for-bit, so the kernel is too.
    let r2: f64 = x
        .iter()
        .zip(x2)
        .zip(inv_sq)
        .map(|((a, b), w)| {
            let diff = a - b;
            diff * diff * w
        })
        .sum();
    amplitude * (-0.5 * r2).exp()
}
