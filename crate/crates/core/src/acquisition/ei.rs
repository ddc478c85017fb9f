use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Below this z the Mills-ratio continued fraction replaces the direct form.
const TAIL_Z: f64 = -5.0;
/// Values smaller than this are reported as exactly zero.
const EI_FLOOR: f64 = 1e-300;

fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// `z Φ(z) + φ(z)`, the standardized expected improvement.
fn standardized_ei(z: f64) -> f64 {
    if z >= TAIL_Z {
        return z * norm_cdf(z) + norm_pdf(z);
    }
    // With t = -z, Φ(z) = φ(t) M(t) for the Mills ratio M, so
    // zΦ(z) + φ(z) = φ(t) M(t) (1/M(t) - t). Both factors come from the
    // continued fraction M(t) = 1/(t + 1/(t + 2/(t + 3/(t + ...)))) without
    // subtracting nearly equal numbers.
    let t = -z;
    let pdf = norm_pdf(t);
    if pdf == 0.0 {
        return 0.0;
    }
    let mut tail = t;
    for k in (2..=80).rev() {
        tail = t + k as f64 / tail;
    }
    // tail = t + 2/(t + 3/(...)); 1/M(t) = t + 1/tail, 1/M(t) - t = 1/tail
    let inv_mills = t + 1.0 / tail;
    pdf / inv_mills / tail
}

/// Expected improvement of `N(mean, std²)` over `target`.
///
/// Zero variance reduces to `max(mean - target, 0)`. Results below 1e-300
/// are clamped to 0.
pub fn expected_improvement(mean: f64, std: f64, target: f64) -> Result<f64> {
    if mean.is_nan() || std.is_nan() || target.is_nan() {
        return Err(Error::invalid("expected improvement received NaN"));
    }
    if std < 0.0 {
        return Err(Error::invalid(format!("standard deviation must be non-negative, got {std}")));
    }
    Ok(ei_unchecked(mean, std, target))
}

#[inline]
pub(crate) fn ei_unchecked(mean: f64, std: f64, target: f64) -> f64 {
    let gap = mean - target;
    let value = if std > 0.0 {
        let z = gap / std;
        if z.is_finite() {
            std * standardized_ei(z)
        } else {
            gap.max(0.0)
        }
    } else {
        gap.max(0.0)
    };
    if value >= EI_FLOOR {
        value
    } else {
        0.0
    }
}
