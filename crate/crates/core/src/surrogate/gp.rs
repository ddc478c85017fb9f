use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::kernel::{se_scaled, HyperParams};
use super::prior_mean::PriorMean;
use crate::error::{Error, Result};

/// Initial diagonal jitter, relative to the amplitude.
pub const JITTER_START: f64 = 1e-10;
/// Largest jitter tried before giving up, relative to the amplitude.
pub const JITTER_MAX: f64 = 1e-4;

/// Observed inputs and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    inputs: Vec<Vec<f64>>,
    outputs: Vec<f64>,
}

impl Dataset {
    pub fn empty(dim: usize) -> Self {
        Dataset {
            dim,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn new(dim: usize, inputs: Vec<Vec<f64>>, outputs: Vec<f64>) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::invalid(format!(
                "{} inputs but {} observations",
                inputs.len(),
                outputs.len()
            )));
        }
        let mut data = Dataset::empty(dim);
        for (x, y) in inputs.into_iter().zip(outputs) {
            data.push(x, y)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "input has dimension {}, dataset has {}",
                x.len(),
                self.dim
            )));
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("observations and inputs must be finite"));
        }
        self.inputs.push(x);
        self.outputs.push(y);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn mean(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.outputs.iter().sum::<f64>() / self.len() as f64
        }
    }

    /// Sample variance (n - 1 denominator); `None` below two points.
    pub fn variance(&self) -> Option<f64> {
        if self.len() < 2 {
            return None;
        }
        let m = self.mean();
        let ss: f64 = self.outputs.iter().map(|y| (y - m) * (y - m)).sum();
        Some(ss / (self.len() - 1) as f64)
    }

    /// Centred best observation `y⁺`, floored so that it stays positive.
    pub fn centred_best(&self) -> f64 {
        let m = self.mean();
        let best = self.outputs.iter().fold(f64::NEG_INFINITY, |a, y| a.max(y - m));
        if best > 0.0 {
            best
        } else {
            let spread = self.outputs.iter().fold(0.0f64, |a, y| a.max((y - m).abs()));
            1e-6 * (spread + 1.0)
        }
    }

    /// Index of the largest observation, earliest on ties.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, y) in self.outputs.iter().enumerate() {
            if best.map_or(true, |b| *y > self.outputs[b]) {
                best = Some(i);
            }
        }
        best
    }
}

/// Fitted GP: immutable, rebuilt rather than updated.
#[derive(Debug, Clone)]
pub struct GpModel {
    data: Dataset,
    hp: HyperParams,
    prior: PriorMean,
    offset: f64,
    inv_sq: Vec<f64>,
    jitter: f64,
    chol: Option<Cholesky<f64, Dyn>>,
    weights: DVector<f64>,
}

/// Fits `data` under `hp` and the prior-mean shape of `prior`.
///
/// The empirical mean ȳ of the observations is added to `hp.bias` to form the
/// constant part of the prior and `prior`'s penalty scale is set to the
/// centred best observation. With no data the model is the prior itself and
/// `prior` is used unchanged.
pub fn fit(data: &Dataset, hp: &HyperParams, prior: &PriorMean) -> Result<GpModel> {
    fit_with_jitter(data, hp, prior, JITTER_START)
}

/// [`fit`] with the first jitter level (relative to the amplitude) given
/// explicitly. Escalates ×10 up to `max(start, JITTER_MAX)`.
pub fn fit_with_jitter(
    data: &Dataset,
    hp: &HyperParams,
    prior: &PriorMean,
    start: f64,
) -> Result<GpModel> {
    hp.validate(data.dim())?;
    if let Some(d) = prior.regularizer().dim() {
        if d != data.dim() {
            return Err(Error::invalid(format!(
                "prior mean has dimension {d}, data has {}",
                data.dim()
            )));
        }
    }
    let offset = data.mean();
    let prior = if data.is_empty() {
        prior.clone()
    } else {
        prior
            .clone()
            .with_bias(offset + hp.bias)
            .with_penalty_scale(data.centred_best())
    };
    let inv_sq = hp.inverse_sq_lengths();
    let residual = residuals(data, &prior);
    let (chol, jitter) = if data.is_empty() {
        (None, 0.0)
    } else {
        let (c, j) = factorize(data, hp, &inv_sq, start)?;
        (Some(c), j)
    };
    let weights = match &chol {
        Some(c) => c.solve(&residual),
        None => DVector::zeros(0),
    };
    Ok(GpModel {
        data: data.clone(),
        hp: hp.clone(),
        prior,
        offset,
        inv_sq,
        jitter,
        chol,
        weights,
    })
}

/// `log N(y; m, K + σ²I)` with the same centring and jitter policy as [`fit`].
pub fn log_marginal_likelihood(data: &Dataset, hp: &HyperParams, prior: &PriorMean) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::invalid("marginal likelihood needs at least one observation"));
    }
    hp.validate(data.dim())?;
    let prior = prior
        .clone()
        .with_bias(data.mean() + hp.bias)
        .with_penalty_scale(data.centred_best());
    let inv_sq = hp.inverse_sq_lengths();
    let (chol, _) = factorize(data, hp, &inv_sq, JITTER_START)?;
    Ok(evidence(&chol, &residuals(data, &prior)))
}

fn residuals(data: &Dataset, prior: &PriorMean) -> DVector<f64> {
    DVector::from_iterator(
        data.len(),
        data.inputs()
            .iter()
            .zip(data.outputs())
            .map(|(x, y)| y - prior.value(x)),
    )
}

fn evidence(chol: &Cholesky<f64, Dyn>, residual: &DVector<f64>) -> f64 {
    let n = residual.len();
    let alpha = chol.solve(residual);
    let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
    -0.5 * residual.dot(&alpha) - log_det_half - 0.5 * n as f64 * (2.0 * PI).ln()
}

fn factorize(
    data: &Dataset,
    hp: &HyperParams,
    inv_sq: &[f64],
    start: f64,
) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = data.len();
    let xs = data.inputs();
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        gram[(i, i)] = hp.amplitude + hp.noise_variance;
        for j in 0..i {
            let k = se_scaled(&xs[i], &xs[j], inv_sq, hp.amplitude);
            gram[(i, j)] = k;
            gram[(j, i)] = k;
        }
    }
    let max_rel = start.max(JITTER_MAX);
    let mut rel = start;
    loop {
        let jitter = rel * hp.amplitude;
        let mut a = gram.clone();
        for i in 0..n {
            a[(i, i)] += jitter;
        }
        if let Some(c) = a.cholesky() {
            if c.l_dirty().diagonal().iter().all(|v| v.is_finite() && *v > 0.0) {
                return Ok((c, jitter));
            }
        }
        if rel >= max_rel * (1.0 - 1e-12) {
            return Err(Error::IllConditioned { jitter });
        }
        rel = (rel * 10.0).min(max_rel);
    }
}

impl GpModel {
    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn hyperparams(&self) -> &HyperParams {
        &self.hp
    }

    /// Prior mean with bias and penalty scale resolved for this dataset.
    pub fn prior_mean(&self) -> &PriorMean {
        &self.prior
    }

    /// Empirical mean ȳ subtracted before fitting.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Centred best observation `y⁺` (the penalty scale).
    pub fn penalty_scale(&self) -> f64 {
        self.prior.penalty_scale()
    }

    /// EI target `ȳ + y⁺` in output units.
    pub fn target(&self) -> f64 {
        improvement_target(self.offset, self.penalty_scale(), 0.0)
    }

    /// Diagonal jitter actually added to `K + σ²I`.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Residual weights `(K + σ²I + jitter)^{-1}(y - m)`.
    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// `log N(y; m, K + σ²I)` for the stored data.
    pub fn log_evidence(&self) -> Option<f64> {
        self.chol
            .as_ref()
            .map(|c| evidence(c, &residuals(&self.data, &self.prior)))
    }

    /// Cross-covariances `k(x)` between `x` and the stored inputs.
    pub fn cross_covariance(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        Ok(self.cross_cov(x))
    }

    fn cross_cov(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.data.len(),
            self.data
                .inputs()
                .iter()
                .map(|xi| se_scaled(x, xi, &self.inv_sq, self.hp.amplitude)),
        )
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "query has dimension {}, model has {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Posterior mean and variance at `x`; variance is clamped to `[0, θ0]`.
    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.check_dim(x)?;
        Ok(self.posterior_unchecked(x))
    }

    pub(crate) fn posterior_unchecked(&self, x: &[f64]) -> (f64, f64) {
        let prior = self.prior.value(x);
        let amp = self.hp.amplitude;
        let Some(chol) = &self.chol else {
            return (prior, amp);
        };
        let k = self.cross_cov(x);
        let mean = prior + k.dot(&self.weights);
        let mut v = k;
        chol.l_dirty().solve_lower_triangular_mut(&mut v);
        let var = (amp - v.norm_squared()).clamp(0.0, amp);
        (mean, var)
    }

    pub(crate) fn posterior_mean_unchecked(&self, x: &[f64]) -> f64 {
        let prior = self.prior.value(x);
        if self.chol.is_none() {
            return prior;
        }
        prior + self.cross_cov(x).dot(&self.weights)
    }
}

#[inline]
pub(crate) fn improvement_target(offset: f64, scale: f64, penalty: f64) -> f64 {
    offset + scale * (1.0 + penalty)
}
