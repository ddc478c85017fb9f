use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gp::{log_marginal_likelihood, Dataset};
use super::kernel::HyperParams;
use super::prior_mean::PriorMean;
use crate::error::{Error, Result};

/// Initial bracket width in natural-log units (one decade).
pub const SLICE_WIDTH: f64 = std::f64::consts::LN_10;
/// Maximum number of step-out expansions per coordinate update.
pub const SLICE_MAX_STEP_OUT: usize = 100;

/// Independent log-uniform priors on amplitude, length scales and noise.
///
/// Bounds are in natural units; the bias is not sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperPrior {
    pub amplitude: (f64, f64),
    pub length_scales: Vec<(f64, f64)>,
    pub noise_variance: (f64, f64),
}

impl HyperPrior {
    /// Scale-free default: θ0 ∈ [1e-4, 1e4]·Var(y), ℓ_i ∈ [1e-3, 1e1]·width_i,
    /// σ² ∈ [1e-8, 1]·Var(y). Var(y) falls back to 1 below two distinct
    /// observations.
    pub fn scaled(output_variance: f64, widths: &[f64]) -> Self {
        let v = if output_variance > 0.0 && output_variance.is_finite() {
            output_variance
        } else {
            1.0
        };
        HyperPrior {
            amplitude: (1e-4 * v, 1e4 * v),
            length_scales: widths.iter().map(|w| (1e-3 * w, 1e1 * w)).collect(),
            noise_variance: (1e-8 * v, v),
        }
    }

    pub fn for_data(data: &Dataset, widths: &[f64]) -> Self {
        HyperPrior::scaled(data.variance().unwrap_or(1.0), widths)
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }

    /// Geometric midpoint of every range, with the noise pulled down to
    /// 1e-3 of its upper bound.
    pub fn default_init(&self) -> HyperParams {
        let mid = |(lo, hi): (f64, f64)| (lo * hi).sqrt();
        HyperParams {
            amplitude: mid(self.amplitude),
            length_scales: self
                .length_scales
                .iter()
                .map(|&(lo, hi)| (lo * hi).sqrt().max(lo).min(hi))
                .collect(),
            noise_variance: (self.noise_variance.1 * 1e-3).max(self.noise_variance.0),
            bias: 0.0,
        }
    }

    fn log_bounds(&self) -> Vec<(f64, f64)> {
        std::iter::once(self.amplitude)
            .chain(self.length_scales.iter().copied())
            .chain(std::iter::once(self.noise_variance))
            .map(|(lo, hi)| (lo.ln(), hi.ln()))
            .collect()
    }

    /// Projects `hp` into the support, keeping its bias.
    pub fn clamp(&self, hp: &HyperParams) -> HyperParams {
        let clip = |v: f64, (lo, hi): (f64, f64)| v.clamp(lo, hi);
        HyperParams {
            amplitude: clip(hp.amplitude, self.amplitude),
            length_scales: hp
                .length_scales
                .iter()
                .zip(&self.length_scales)
                .map(|(l, b)| clip(*l, *b))
                .collect(),
            noise_variance: clip(hp.noise_variance, self.noise_variance),
            bias: hp.bias,
        }
    }

    pub fn contains(&self, hp: &HyperParams) -> bool {
        hp.length_scales.len() == self.dim()
            && to_log(hp)
                .iter()
                .zip(self.log_bounds())
                .all(|(v, (lo, hi))| *v >= lo && *v <= hi)
    }
}

fn to_log(hp: &HyperParams) -> Vec<f64> {
    std::iter::once(hp.amplitude)
        .chain(hp.length_scales.iter().copied())
        .chain(std::iter::once(hp.noise_variance))
        .map(f64::ln)
        .collect()
}

fn from_log(coords: &[f64], bias: f64) -> HyperParams {
    let d = coords.len() - 2;
    HyperParams {
        amplitude: coords[0].exp(),
        length_scales: coords[1..=d].iter().map(|c| c.exp()).collect(),
        noise_variance: coords[d + 1].exp(),
        bias,
    }
}

#[derive(Debug, Clone)]
pub struct SliceSamples {
    pub draws: Vec<HyperParams>,
    /// Every likelihood evaluation failed; `draws` are copies of the start.
    pub degraded: bool,
}

/// Draws `count` hyperparameter vectors from `p(θ | data)` after discarding
/// `burn_in` sweeps. The prior mean (including any regularizer) enters the
/// likelihood.
pub fn slice_sample_hyperparams<R: Rng + ?Sized>(
    data: &Dataset,
    init: &HyperParams,
    prior_mean: &PriorMean,
    prior: &HyperPrior,
    count: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<SliceSamples> {
    if data.is_empty() {
        return Err(Error::invalid("cannot sample hyperparameters without data"));
    }
    init.validate(data.dim())?;
    if prior.dim() != data.dim() {
        return Err(Error::invalid("hyperprior dimension does not match the data"));
    }
    slice_sample_with(
        |hp| log_marginal_likelihood(data, hp, prior_mean).ok(),
        init,
        prior,
        count,
        burn_in,
        rng,
    )
}

/// Coordinate-wise slice sampler in log space over an arbitrary
/// log-likelihood; `None` marks a failed evaluation (treated as zero density).
pub fn slice_sample_with<F, R>(
    mut log_likelihood: F,
    init: &HyperParams,
    prior: &HyperPrior,
    count: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<SliceSamples>
where
    F: FnMut(&HyperParams) -> Option<f64>,
    R: Rng + ?Sized,
{
    if count == 0 {
        return Err(Error::invalid("count must be positive"));
    }
    if !prior.contains(init) {
        return Err(Error::invalid("initial hyperparameters lie outside the prior support"));
    }
    let bias = init.bias;
    let bounds = prior.log_bounds();
    let mut any_ok = false;
    let mut log_density = |coords: &[f64]| -> f64 {
        if coords.iter().zip(&bounds).any(|(c, (lo, hi))| c < lo || c > hi) {
            return f64::NEG_INFINITY;
        }
        match log_likelihood(&from_log(coords, bias)) {
            Some(v) if !v.is_nan() => {
                any_ok = true;
                v
            }
            _ => f64::NEG_INFINITY,
        }
    };

    let mut coords = to_log(init);
    let mut current = log_density(&coords);
    if current == f64::NEG_INFINITY {
        return Ok(SliceSamples {
            draws: vec![init.clone(); count],
            degraded: true,
        });
    }

    let mut draws = Vec::with_capacity(count);
    for sweep in 0..burn_in + count {
        for i in 0..coords.len() {
            current = update_coordinate(&mut coords, i, current, bounds[i], &mut log_density, rng);
        }
        if sweep >= burn_in {
            draws.push(from_log(&coords, bias));
        }
    }
    Ok(SliceSamples {
        draws,
        degraded: !any_ok,
    })
}

/// One univariate slice-sampling update with step-out and shrinkage.
fn update_coordinate<F, R>(
    coords: &mut [f64],
    i: usize,
    current: f64,
    (lo, hi): (f64, f64),
    log_density: &mut F,
    rng: &mut R,
) -> f64
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let x0 = coords[i];
    let level = current + rng.gen::<f64>().ln();
    let mut eval_at = |coords: &mut [f64], v: f64| {
        coords[i] = v;
        log_density(coords)
    };

    let mut left = x0 - SLICE_WIDTH * rng.gen::<f64>();
    let mut right = left + SLICE_WIDTH;
    let mut steps_left = (SLICE_MAX_STEP_OUT as f64 * rng.gen::<f64>()).floor() as usize;
    let mut steps_right = SLICE_MAX_STEP_OUT - 1 - steps_left;
    while steps_left > 0 && left > lo && eval_at(coords, left) > level {
        left -= SLICE_WIDTH;
        steps_left -= 1;
    }
    while steps_right > 0 && right < hi && eval_at(coords, right) > level {
        right += SLICE_WIDTH;
        steps_right -= 1;
    }
    left = left.max(lo);
    right = right.min(hi);

    loop {
        let proposal = left + rng.gen::<f64>() * (right - left);
        let value = eval_at(coords, proposal);
        if value > level {
            return value;
        }
        if proposal < x0 {
            left = proposal;
        } else {
            right = proposal;
        }
        if right - left < 1e-12 {
            coords[i] = x0;
            return current;
        }
    }
}
