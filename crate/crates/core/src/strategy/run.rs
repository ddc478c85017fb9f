use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{latin_hypercube, Method, SearchBox, StrategyConfig, Trace, TraceRecord};
use crate::acquisition::{maximize, AcquisitionContext, SearchMode};
use crate::error::{Error, EvalError, Result};
use crate::surrogate::{
    fit, fit_with_jitter, slice_sample_hyperparams, Dataset, GpModel, HyperParams, HyperPrior,
    PriorMean, Regularizer,
};

/// First jitter level of the single retry after an ill-conditioned fit.
const RETRY_JITTER: f64 = 1e-6;

const DESIGN_STREAM: u64 = 1;
const SEARCH_STREAM: u64 = 2;

/// State exposed to an observer right before each acquisition-driven
/// evaluation.
#[derive(Debug)]
pub struct Observer<'a> {
    pub iteration: usize,
    pub context: &'a AcquisitionContext,
    pub selected: &'a [f64],
    pub regularizer: Option<&'a Regularizer>,
}

/// Runs one optimization of `objective` (maximization).
pub fn run<F>(objective: F, config: &StrategyConfig) -> Result<Trace>
where
    F: FnMut(&[f64]) -> Result<f64, EvalError>,
{
    run_observed(objective, config, |_| {})
}

/// [`run`] with a callback invoked at every model-based iteration.
pub fn run_observed<F, O>(mut objective: F, config: &StrategyConfig, mut observe: O) -> Result<Trace>
where
    F: FnMut(&[f64]) -> Result<f64, EvalError>,
    O: FnMut(&Observer<'_>),
{
    config.validate()?;
    let d = config.dim();
    let initial = &config.initial_box;

    let mut design_rng = ChaCha8Rng::seed_from_u64(config.seed);
    design_rng.set_stream(DESIGN_STREAM);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(SEARCH_STREAM);

    let prior_shape = match config.method {
        Method::EiH => PriorMean::hinge_quadratic(initial.center(), initial.circumradius(), config.curvature)?,
        Method::EiQ => PriorMean::quadratic(initial.center(), initial.widths())?,
        Method::Ei | Method::EiV => PriorMean::constant(0.0),
    };
    let regularizer = prior_shape
        .is_regularized()
        .then(|| prior_shape.regularizer().clone());

    let mut data = Dataset::empty(d);
    let mut records: Vec<TraceRecord> = Vec::with_capacity(config.budget);
    let mut best = f64::NEG_INFINITY;
    let mut current_box = initial.clone();
    let mut expansions = 0i32;
    let mut draws: Option<Vec<HyperParams>> = None;
    let mut fallback_iterations = Vec::new();
    let mut degraded_iterations = Vec::new();

    let mut evaluate = |iteration: usize,
                        x: Vec<f64>,
                        search_box: Option<SearchBox>,
                        started: Instant,
                        data: &mut Dataset,
                        records: &mut Vec<TraceRecord>|
     -> Result<()> {
        let y = objective(&x).map_err(|source| Error::Evaluation { iteration, source })?;
        if !y.is_finite() {
            return Err(Error::Evaluation {
                iteration,
                source: EvalError::NonFinite { iteration, value: y },
            });
        }
        data.push(x.clone(), y)?;
        best = best.max(y);
        let wall_seconds = if config.record_time {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        };
        records.push(TraceRecord {
            iteration,
            x,
            y,
            best_y: best,
            search_box,
            wall_seconds,
        });
        Ok(())
    };

    let design_started = Instant::now();
    for (i, x) in latin_hypercube(initial, config.init_count, &mut design_rng)
        .into_iter()
        .enumerate()
    {
        evaluate(i, x, Some(initial.clone()), design_started, &mut data, &mut records)?;
    }

    for iteration in config.init_count..config.budget {
        let started = Instant::now();
        let (models, degraded) = refit(&data, &prior_shape, &mut draws, config, &mut rng)?;
        if degraded {
            degraded_iterations.push(iteration);
        }
        let (mode, search_box) = match config.method {
            Method::Ei => (SearchMode::Bounded(initial.clone()), Some(initial.clone())),
            Method::EiV => (SearchMode::Bounded(current_box.clone()), Some(current_box.clone())),
            Method::EiH | Method::EiQ => (
                SearchMode::Unbounded {
                    anchor: initial.clone(),
                },
                None,
            ),
        };
        let ctx = AcquisitionContext::expected_improvement(models, mode)?;
        let best_point = maximize(&ctx, &mut rng);
        if best_point.fallback {
            fallback_iterations.push(iteration);
        }
        observe(&Observer {
            iteration,
            context: &ctx,
            selected: &best_point.point,
            regularizer: regularizer.as_ref(),
        });
        evaluate(iteration, best_point.point, search_box, started, &mut data, &mut records)?;

        if config.method == Method::EiV {
            let after_design = iteration + 1 - config.init_count;
            if after_design % config.doubling_period == 0 {
                expansions += 1;
                current_box = initial.scaled(config.growth_factor.powf(expansions as f64 / d as f64));
            }
        }
    }

    let (models, _) = refit(&data, &prior_shape, &mut draws, config, &mut rng)?;
    let recommendation = incumbent_unchecked(&models);
    let final_box = match config.method {
        Method::Ei => Some(initial.clone()),
        Method::EiV => Some(current_box),
        Method::EiH | Method::EiQ => None,
    };
    Ok(Trace {
        method: config.method,
        seed: config.seed,
        records,
        recommendation,
        final_box,
        regularizer,
        fallback_iterations,
        degraded_iterations,
    })
}

/// Samples hyperparameters (warm-starting from the last draw) and fits one
/// model per draw.
fn refit(
    data: &Dataset,
    prior_shape: &PriorMean,
    draws: &mut Option<Vec<HyperParams>>,
    config: &StrategyConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<GpModel>, bool)> {
    let hyper_prior = HyperPrior::for_data(data, &config.initial_box.widths());
    let (init, burn_in) = match draws.as_ref().and_then(|d| d.last()) {
        Some(last) => (hyper_prior.clamp(last), config.mcmc_warm_burn_in),
        None => (hyper_prior.default_init(), config.mcmc_burn_in),
    };
    let samples = slice_sample_hyperparams(
        data,
        &init,
        prior_shape,
        &hyper_prior,
        config.mcmc_draws,
        burn_in,
        rng,
    )?;
    let models = samples
        .draws
        .iter()
        .map(|hp| {
            fit(data, hp, prior_shape).or_else(|err| match err {
                Error::IllConditioned { .. } => fit_with_jitter(data, hp, prior_shape, RETRY_JITTER),
                other => Err(other),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    *draws = Some(samples.draws);
    Ok((models, samples.degraded))
}

/// Observed input maximizing the draw-averaged posterior mean, earliest on
/// ties.
pub fn incumbent(models: &[GpModel], data: &Dataset) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::invalid("incumbent needs at least one observation"));
    }
    if models.is_empty() {
        return Err(Error::invalid("incumbent needs at least one model"));
    }
    if models.iter().any(|m| m.dim() != data.dim()) {
        return Err(Error::invalid("model and data dimensions differ"));
    }
    Ok(argmax_mean(models, data.inputs()).to_vec())
}

pub(crate) fn incumbent_unchecked(models: &[GpModel]) -> Vec<f64> {
    let inputs = models[0].data().inputs();
    if inputs.is_empty() {
        return vec![0.0; models[0].dim()];
    }
    argmax_mean(models, inputs).to_vec()
}

fn argmax_mean<'a>(models: &[GpModel], inputs: &'a [Vec<f64>]) -> &'a [f64] {
    let mut best: Option<(usize, f64)> = None;
    for (i, x) in inputs.iter().enumerate() {
        let mean = models.iter().map(|m| m.posterior_mean_unchecked(x)).sum::<f64>() / models.len() as f64;
        if best.map_or(true, |(_, b)| mean > b) {
            best = Some((i, mean));
        }
    }
    &inputs[best.map_or(0, |(i, _)| i)]
}
