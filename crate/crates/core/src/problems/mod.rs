//! Benchmark objectives, all in maximization form.

mod external;
mod hartmann;
mod toys;

pub use external::ExternalCommand;
pub use hartmann::{hartmann3, hartmann6, HARTMANN3_ARGMAX, HARTMANN3_MAX, HARTMANN6_ARGMAX, HARTMANN6_MAX};
pub use toys::{gaussian_modes_value, mode_layout, MODE_HEIGHTS};

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, EvalError, Result};
use crate::strategy::SearchBox;

type Evaluator = Arc<dyn Fn(&[f64]) -> Result<f64, EvalError> + Send + Sync>;

/// A named objective with its reference domain.
#[derive(Clone)]
pub struct Problem {
    name: String,
    dim: usize,
    reference_box: SearchBox,
    initial_box: SearchBox,
    known_best: Option<(f64, Vec<f64>)>,
    evaluator: Evaluator,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("reference_box", &self.reference_box)
            .field("initial_box", &self.initial_box)
            .field("known_best", &self.known_best)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new<F>(name: impl Into<String>, reference_box: SearchBox, evaluator: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64, EvalError> + Send + Sync + 'static,
    {
        Problem {
            name: name.into(),
            dim: reference_box.dim(),
            initial_box: reference_box.clone(),
            reference_box,
            known_best: None,
            evaluator: Arc::new(evaluator),
        }
    }

    pub fn with_initial_box(mut self, b: SearchBox) -> Self {
        self.initial_box = b;
        self
    }

    pub fn with_known_best(mut self, value: f64, argmax: Vec<f64>) -> Self {
        self.known_best = Some((value, argmax));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn reference_box(&self) -> &SearchBox {
        &self.reference_box
    }

    /// Default starting box for an optimizer.
    pub fn initial_box(&self) -> &SearchBox {
        &self.initial_box
    }

    pub fn known_best(&self) -> Option<(f64, &[f64])> {
        self.known_best.as_ref().map(|(v, x)| (*v, x.as_slice()))
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64, EvalError> {
        if x.len() != self.dim {
            return Err(EvalError::Other(format!(
                "{} expects {} inputs, got {}",
                self.name,
                self.dim,
                x.len()
            )));
        }
        (self.evaluator)(x)
    }
}

/// Hartmann 3 on the unit cube.
pub fn hartmann3_problem() -> Problem {
    Problem::new("hartmann3", unit_cube(3), |x: &[f64]| {
        hartmann3(x).map_err(|e| EvalError::Other(e.to_string()))
    })
    .with_known_best(HARTMANN3_MAX, HARTMANN3_ARGMAX.to_vec())
}

/// Hartmann 6 on the unit cube.
pub fn hartmann6_problem() -> Problem {
    Problem::new("hartmann6", unit_cube(6), |x: &[f64]| {
        hartmann6(x).map_err(|e| EvalError::Other(e.to_string()))
    })
    .with_known_best(HARTMANN6_MAX, HARTMANN6_ARGMAX.to_vec())
}

fn unit_cube(d: usize) -> SearchBox {
    SearchBox::cube(d, 0.0, 1.0).expect("unit cube is valid")
}

/// Three Gaussian modes of heights 1, 2 and 3 in one or two dimensions. The
/// default initial box `[-2, 2]^d` contains the two lower modes but not the
/// highest one.
pub fn gaussian_modes(d: usize) -> Result<Problem> {
    let (centers, width) = mode_layout(d)?;
    let reference = SearchBox::cube(d, -4.0, 7.0)?;
    let best = centers[2].clone();
    let value = gaussian_modes_value(&centers, width, &best);
    Ok(Problem::new(format!("gaussian{d}d"), reference, move |x: &[f64]| {
        Ok(gaussian_modes_value(&centers, width, x))
    })
    .with_initial_box(SearchBox::cube(d, -2.0, 2.0)?)
    .with_known_best(value, best))
}

/// Uniformly placed box of the given side length inside the problem's
/// reference box.
pub fn random_small_box<R: Rng + ?Sized>(problem: &Problem, side: f64, rng: &mut R) -> Result<SearchBox> {
    let reference = problem.reference_box();
    if !(side > 0.0) || reference.widths().iter().any(|w| side > *w) {
        return Err(Error::invalid(format!(
            "side {side} must be positive and no larger than every reference width"
        )));
    }
    let (lower, upper) = reference
        .lower()
        .iter()
        .zip(reference.widths())
        .map(|(lo, w)| {
            let slack = w - side;
            let start = if slack > 0.0 { lo + slack * rng.gen::<f64>() } else { *lo };
            (start, start + side)
        })
        .unzip();
    SearchBox::new(lower, upper)
}

/// Adds independent `N(0, σ²)` noise to every evaluation.
#[derive(Debug, Clone)]
pub struct NoisyProblem {
    inner: Problem,
    noise_std: f64,
    rng: ChaCha8Rng,
}

impl NoisyProblem {
    pub fn new(inner: Problem, noise_std: f64, seed: u64) -> Result<Self> {
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::invalid(format!("noise std must be non-negative, got {noise_std}")));
        }
        Ok(NoisyProblem {
            inner,
            noise_std,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn inner(&self) -> &Problem {
        &self.inner
    }

    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64, EvalError> {
        let y = self.inner.evaluate(x)?;
        if self.noise_std == 0.0 {
            return Ok(y);
        }
        let noise = Normal::new(0.0, self.noise_std).expect("validated std");
        Ok(y + noise.sample(&mut self.rng))
    }
}
