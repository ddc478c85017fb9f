use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{AcquisitionContext, SearchMode};
use crate::strategy::SearchBox;

/// Uniform probes per dimension in bounded mode.
pub const BOUNDED_PROBES_PER_DIM: usize = 500;
/// Evaluation budget of one local refinement, per dimension.
pub const LOCAL_EVALS_PER_DIM: usize = 200;
/// Perturbation scales around the incumbent, in median length scales.
pub const PERTURBATION_SCALES: [f64; 3] = [0.1, 1.0, 10.0];

const PERTURBATIONS_PER_SCALE_PER_DIM: usize = 10;
const ANCHOR_INFLATION: f64 = 4.0;
const ANCHOR_SAMPLES_PER_DIM: usize = 100;
const REFINED_STARTS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub point: Vec<f64>,
    pub value: f64,
    /// The acquisition was zero at every probe; `point` is the probe with
    /// the largest posterior variance instead.
    pub fallback: bool,
}

/// Settings for [`coordinate_search`].
#[derive(Debug, Clone)]
pub struct LocalSearch {
    pub initial_steps: Vec<f64>,
    pub max_evals: usize,
    /// Stop once two consecutive step levels each improve by less than this
    /// fraction of the current value.
    pub rel_tol: f64,
    /// Stop once every step falls below this fraction of its initial value.
    pub min_step_ratio: f64,
}

impl LocalSearch {
    pub fn new(initial_steps: Vec<f64>) -> Self {
        let max_evals = LOCAL_EVALS_PER_DIM * initial_steps.len();
        LocalSearch {
            initial_steps,
            max_evals,
            rel_tol: 1e-8,
            min_step_ratio: 1e-10,
        }
    }
}

/// Compass search: try `±step` along each axis, move on the first
/// improvement, halve all steps after a sweep without one. Points are
/// clamped into `bounds` when given. Returns the final point, its value
/// and the number of evaluations used.
pub fn coordinate_search<F>(
    f: &mut F,
    start: Vec<f64>,
    start_value: f64,
    cfg: &LocalSearch,
    bounds: Option<&SearchBox>,
) -> (Vec<f64>, f64, usize)
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x = start;
    let mut fx = start_value;
    let mut steps = cfg.initial_steps.clone();
    let mut evals = 0;
    let mut level_start = fx;
    let mut quiet_levels = 0;
    let mut trial = x.clone();

    'outer: while evals < cfg.max_evals {
        let mut moved = false;
        for i in 0..x.len() {
            for sign in [1.0, -1.0] {
                trial.copy_from_slice(&x);
                trial[i] += sign * steps[i];
                if let Some(b) = bounds {
                    b.clamp(&mut trial);
                }
                if trial[i] == x[i] {
                    continue;
                }
                let ft = f(&trial);
                evals += 1;
                if ft > fx {
                    x.copy_from_slice(&trial);
                    fx = ft;
                    moved = true;
                    break;
                }
                if evals >= cfg.max_evals {
                    break 'outer;
                }
            }
        }
        if moved {
            continue;
        }
        // step level exhausted
        let gain = fx - level_start;
        if gain <= cfg.rel_tol * fx.abs() {
            quiet_levels += 1;
            if quiet_levels >= 2 && fx != 0.0 {
                break;
            }
        } else {
            quiet_levels = 0;
        }
        level_start = fx;
        for (s, s0) in steps.iter_mut().zip(&cfg.initial_steps) {
            *s *= 0.5;
            if *s < cfg.min_step_ratio * s0 {
                break 'outer;
            }
        }
    }
    (x, fx, evals)
}

/// Ranks `seeds` by value (stable) and refines the best few distinct ones.
fn multistart<F>(
    f: &mut F,
    seeds: Vec<Vec<f64>>,
    steps: Vec<f64>,
    bounds: Option<&SearchBox>,
) -> (Vec<f64>, f64, Vec<(Vec<f64>, f64)>)
where
    F: FnMut(&[f64]) -> f64,
{
    let scored: Vec<(Vec<f64>, f64)> = seeds
        .into_iter()
        .map(|s| {
            let v = f(&s);
            (s, v)
        })
        .collect();
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[b].1.total_cmp(&scored[a].1));

    let cfg = LocalSearch::new(steps);
    let (mut best_x, mut best_v) = scored[order[0]].clone();
    let mut starts: Vec<usize> = Vec::new();
    for &i in &order {
        if starts.len() == REFINED_STARTS {
            break;
        }
        if starts.iter().all(|&j| scored[j].0 != scored[i].0) {
            starts.push(i);
        }
    }
    for i in starts {
        let (x, v, _) = coordinate_search(f, scored[i].0.clone(), scored[i].1, &cfg, bounds);
        if v > best_v {
            best_x = x;
            best_v = v;
        }
    }
    (best_x, best_v, scored)
}

/// Maximizes an arbitrary function over a box: `500·d` uniform probes, then
/// local refinement of the best ones. The result is never worse than the
/// best probe and always lies inside `b`.
pub fn maximize_bounded<F, R>(mut f: F, b: &SearchBox, rng: &mut R) -> Maximum
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let seeds = (0..BOUNDED_PROBES_PER_DIM * b.dim())
        .map(|_| b.sample_uniform(rng))
        .collect();
    let steps = b.widths().iter().map(|w| 0.1 * w).collect();
    let (point, value, _) = multistart(&mut f, seeds, steps, Some(b));
    Maximum {
        point,
        value,
        fallback: false,
    }
}

/// Maximizes the averaged acquisition of `ctx`.
///
/// Bounded mode probes the box uniformly. Unbounded mode seeds from the
/// observed inputs, Gaussian perturbations of the incumbent at 0.1, 1 and 10
/// median length scales, and uniform samples from the anchor box inflated
/// four-fold. If every probe has zero acquisition the probe with the largest
/// posterior variance is returned with `fallback` set.
pub fn maximize<R: Rng + ?Sized>(ctx: &AcquisitionContext, rng: &mut R) -> Maximum {
    let d = ctx.dim();
    let lengths = median_length_scales(ctx);
    let (seeds, steps, bounds) = match ctx.mode() {
        SearchMode::Bounded(b) => {
            let seeds: Vec<Vec<f64>> = (0..BOUNDED_PROBES_PER_DIM * d)
                .map(|_| b.sample_uniform(rng))
                .collect();
            let steps = b
                .widths()
                .iter()
                .zip(&lengths)
                .map(|(w, l)| (0.1 * w).min(*l))
                .collect();
            (seeds, steps, Some(b))
        }
        SearchMode::Unbounded { anchor } => {
            let mut seeds: Vec<Vec<f64>> = ctx.models()[0].data().inputs().to_vec();
            let incumbent = ctx.incumbent();
            for scale in PERTURBATION_SCALES {
                for _ in 0..PERTURBATIONS_PER_SCALE_PER_DIM * d {
                    seeds.push(
                        incumbent
                            .iter()
                            .zip(&lengths)
                            .map(|(c, l)| {
                                let z: f64 = StandardNormal.sample(rng);
                                c + scale * l * z
                            })
                            .collect(),
                    );
                }
            }
            let inflated = anchor.scaled(ANCHOR_INFLATION);
            seeds.extend((0..ANCHOR_SAMPLES_PER_DIM * d).map(|_| inflated.sample_uniform(rng)));
            (seeds, lengths.clone(), None)
        }
    };

    let mut f = |x: &[f64]| ctx.value_unchecked(x);
    let (point, value, scored) = multistart(&mut f, seeds, steps, bounds);
    if value > 0.0 {
        return Maximum {
            point,
            value,
            fallback: false,
        };
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, (x, _)) in scored.iter().enumerate() {
        let v = ctx.mean_variance(x);
        if best.map_or(true, |(_, bv)| v > bv) {
            best = Some((i, v));
        }
    }
    let idx = best.map_or(0, |(i, _)| i);
    Maximum {
        point: scored[idx].0.clone(),
        value: scored[idx].1,
        fallback: true,
    }
}

/// Per-axis median length scale over the context's draws.
fn median_length_scales(ctx: &AcquisitionContext) -> Vec<f64> {
    (0..ctx.dim())
        .map(|i| {
            let mut v: Vec<f64> = ctx
                .models()
                .iter()
                .map(|m| m.hyperparams().length_scales[i])
                .collect();
            v.sort_by(f64::total_cmp);
            let n = v.len();
            if n % 2 == 1 {
                v[n / 2]
            } else {
                0.5 * (v[n / 2 - 1] + v[n / 2])
            }
        })
        .collect()
}
