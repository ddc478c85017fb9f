use crate::error::{Error, Result};

/// Heights of the three modes.
pub const MODE_HEIGHTS: [f64; 3] = [1.0, 2.0, 3.0];

/// Centres and common width of the Gaussian-mode fixture in `d` dimensions.
pub fn mode_layout(d: usize) -> Result<(Vec<Vec<f64>>, f64)> {
    match d {
        1 => Ok((vec![vec![-1.5], vec![1.0], vec![4.0]], 0.4)),
        2 => Ok((vec![vec![-1.5, -1.5], vec![1.0, 1.0], vec![3.5, 3.0]], 0.8)),
        _ => Err(Error::invalid(format!("gaussian modes are defined for d = 1 or 2, got {d}"))),
    }
}

/// `Σ_j h_j exp(-‖x - c_j‖² / (2 s²))`.
pub fn gaussian_modes_value(centers: &[Vec<f64>], width: f64, x: &[f64]) -> f64 {
    centers
        .iter()
        .zip(MODE_HEIGHTS)
        .map(|(c, h)| {
            let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
            h * (-r2 / (2.0 * width * width)).exp()
        })
        .sum()
}
