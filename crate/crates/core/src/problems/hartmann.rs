use crate::error::{Error, Result};

const ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];

const A3: [[f64; 3]; 4] = [
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
];

const P3: [[f64; 3]; 4] = [
    [0.3689, 0.1170, 0.2673],
    [0.4699, 0.4387, 0.7470],
    [0.1091, 0.8732, 0.5547],
    [0.0381, 0.5743, 0.8828],
];

const A6: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];

const P6: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

/// Maximizer of [`hartmann3`] on the unit cube (refined by local search).
pub const HARTMANN3_ARGMAX: [f64; 3] = [0.114588872601206, 0.555648895087038, 0.852546984445236];
pub const HARTMANN3_MAX: f64 = 3.862779787332663;
/// Maximizer of [`hartmann6`] on the unit cube (refined by local search).
pub const HARTMANN6_ARGMAX: [f64; 6] = [
    0.201689509491637, 0.150010692155619, 0.476873976677128, 0.275332428291410, 0.311651613792672,
    0.657300532130599,
];
pub const HARTMANN6_MAX: f64 = 3.322368011415515;

fn hartmann<const D: usize>(x: &[f64], a: &[[f64; D]; 4], p: &[[f64; D]; 4]) -> Result<f64> {
    if x.len() != D {
        return Err(Error::invalid(format!("hartmann{D} expects {D} inputs, got {}", x.len())));
    }
    Ok((0..4)
        .map(|i| {
            let inner: f64 = (0..D).map(|j| a[i][j] * (x[j] - p[i][j]).powi(2)).sum();
            ALPHA[i] * (-inner).exp()
        })
        .sum())
}

/// Hartmann 3-D function in maximization form (maximum ≈ 3.86278).
pub fn hartmann3(x: &[f64]) -> Result<f64> {
    hartmann(x, &A3, &P3)
}

/// Hartmann 6-D function in maximization form (maximum ≈ 3.32237).
pub fn hartmann6(x: &[f64]) -> Result<f64> {
    hartmann(x, &A6, &P6)
}
