//! Oracles, fixtures and per-criterion checks shared by the integration and
//! acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use ubo::acquisition::{expected_improvement, AcquisitionContext, SearchMode};
use ubo::harness::{report, run_experiment, ExperimentConfig, ProblemConfig, Seeds};
use ubo::problems::{gaussian_modes, hartmann3_problem, random_small_box};
use ubo::strategy::{expand_box, run, run_observed, Method, SearchBox, StrategyConfig};
use ubo::surrogate::{
    fit, log_marginal_likelihood, slice_sample_hyperparams, slice_sample_with, Dataset, GpModel, HyperParams,
    HyperPrior, PriorMean,
};

/// Outcome of one acceptance check.
#[derive(Debug, Clone)]
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Check {
            passed,
            detail: detail.into(),
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.gen_range(lo.log10()..hi.log10()))
}

// ---------------------------------------------------------------------------
// Dense-inverse GP oracle
// ---------------------------------------------------------------------------

/// Prior-mean shape, evaluated independently of the library.
#[derive(Debug, Clone)]
pub enum Shape {
    Constant,
    Quadratic { center: Vec<f64>, widths: Vec<f64> },
    Hinge { center: Vec<f64>, radius: f64, beta: f64 },
}

impl Shape {
    pub fn xi(&self, x: &[f64]) -> f64 {
        match self {
            Shape::Constant => 0.0,
            Shape::Quadratic { center, widths } => (0..x.len()).map(|i| ((x[i] - center[i]) / widths[i]).powi(2)).sum(),
            Shape::Hinge { center, radius, beta } => {
                let r = (0..x.len()).map(|i| (x[i] - center[i]).powi(2)).sum::<f64>().sqrt();
                if r <= *radius {
                    0.0
                } else {
                    (r - radius) / (beta * radius)
                }
            }
        }
    }

    pub fn prior(&self) -> PriorMean {
        match self {
            Shape::Constant => PriorMean::constant(0.0),
            Shape::Quadratic { center, widths } => PriorMean::quadratic(center.clone(), widths.clone()).unwrap(),
            Shape::Hinge { center, radius, beta } => PriorMean::hinge_quadratic(center.clone(), *radius, *beta).unwrap(),
        }
    }
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for row in 0..n {
            if row != col {
                let f = m[row][col];
                if f != 0.0 {
                    for k in 0..2 * n {
                        m[row][k] -= f * m[col][k];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `log|det a|` by LU elimination with partial pivoting.
pub fn log_abs_det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut total = 0.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        total += p.abs().ln();
        for row in col + 1..n {
            let f = m[row][col] / p;
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    total
}

pub struct Oracle {
    xs: Vec<Vec<f64>>,
    amp: f64,
    ls: Vec<f64>,
    shape: Shape,
    offset: f64,
    scale: f64,
    inverse: Vec<Vec<f64>>,
    residual: Vec<f64>,
    gram: Vec<Vec<f64>>,
}

impl Oracle {
    /// Builds the oracle with the same centring as the library: constant
    /// part `ȳ + bias`, penalty scale `max(y - ȳ)` (floored), and the
    /// absolute diagonal jitter the library reports.
    pub fn new(xs: &[Vec<f64>], ys: &[f64], hp: &HyperParams, shape: Shape, jitter: f64) -> Self {
        let n = ys.len();
        let ybar = ys.iter().sum::<f64>() / n as f64;
        let mut scale = ys.iter().map(|y| y - ybar).fold(f64::NEG_INFINITY, f64::max);
        if scale <= 0.0 {
            scale = 1e-6 * (ys.iter().map(|y| (y - ybar).abs()).fold(0.0, f64::max) + 1.0);
        }
        let offset = ybar + hp.bias;
        let k = |a: &[f64], b: &[f64]| {
            let r2: f64 = (0..a.len()).map(|i| ((a[i] - b[i]) / hp.length_scales[i]).powi(2)).sum();
            hp.amplitude * (-0.5 * r2).exp()
        };
        let gram: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| k(&xs[i], &xs[j]) + if i == j { hp.noise_variance + jitter } else { 0.0 })
                    .collect()
            })
            .collect();
        let residual = (0..n).map(|i| ys[i] - (offset - scale * shape.xi(&xs[i]))).collect();
        Oracle {
            xs: xs.to_vec(),
            amp: hp.amplitude,
            ls: hp.length_scales.clone(),
            shape,
            offset,
            scale,
            inverse: dense_inverse(&gram),
            residual,
            gram,
        }
    }

    pub fn posterior(&self, x: &[f64]) -> (f64, f64) {
        let kx: Vec<f64> = self
            .xs
            .iter()
            .map(|xi| {
                let r2: f64 = (0..x.len()).map(|i| ((x[i] - xi[i]) / self.ls[i]).powi(2)).sum();
                self.amp * (-0.5 * r2).exp()
            })
            .collect();
        let n = kx.len();
        let mut mean = self.offset - self.scale * self.shape.xi(x);
        let mut var = self.amp;
        for i in 0..n {
            for j in 0..n {
                mean += kx[i] * self.inverse[i][j] * self.residual[j];
                var -= kx[i] * self.inverse[i][j] * kx[j];
            }
        }
        (mean, var)
    }

    pub fn log_evidence(&self) -> f64 {
        let n = self.residual.len();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += self.residual[i] * self.inverse[i][j] * self.residual[j];
            }
        }
        -0.5 * quad - 0.5 * log_abs_det(&self.gram) - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
    }
}

fn random_shape(rng: &mut ChaCha8Rng, kind: usize, d: usize) -> Shape {
    let center: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
    match kind % 3 {
        0 => Shape::Constant,
        1 => Shape::Quadratic {
            center,
            widths: (0..d).map(|_| rng.gen_range(0.5..1.5)).collect(),
        },
        _ => Shape::Hinge {
            center,
            radius: rng.gen_range(0.2..0.6),
            beta: rng.gen_range(0.5..2.0),
        },
    }
}

/// Worst relative errors (mean, variance, evidence) over `count` random
/// instances with n ≤ 20, d ≤ 6 and all three prior shapes.
pub fn oracle_errors(count: usize, seed: u64) -> (f64, f64, f64) {
    let mut rng = rng(seed);
    let (mut em, mut ev, mut el) = (0.0f64, 0.0f64, 0.0f64);
    for inst in 0..count {
        let d = 1 + inst % 6;
        let n = rng.gen_range(1..=20);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen()).collect()).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| x.iter().map(|v| (3.0 * v).sin()).sum::<f64>() + 0.1 * rng.gen::<f64>())
            .collect();
        let amp = log_uniform(&mut rng, 0.1, 10.0);
        let mut hp = HyperParams::new(
            amp,
            (0..d).map(|_| log_uniform(&mut rng, 0.2, 2.0)).collect(),
            amp * log_uniform(&mut rng, 1e-3, 1e-1),
        )
        .unwrap();
        hp.bias = rng.gen_range(-1.0..1.0);
        let shape = random_shape(&mut rng, inst, d);
        let data = Dataset::new(d, xs.clone(), ys.clone()).unwrap();
        let model = fit(&data, &hp, &shape.prior()).unwrap();
        let oracle = Oracle::new(&xs, &ys, &hp, shape.clone(), model.jitter());

        let mut tests: Vec<Vec<f64>> = (0..10).map(|_| (0..d).map(|_| rng.gen_range(-0.5..1.5)).collect()).collect();
        tests.push(xs[0].clone());
        for x in &tests {
            let (m, v) = model.posterior(x).unwrap();
            let (mo, vo) = oracle.posterior(x);
            em = em.max((m - mo).abs() / mo.abs().max(amp.sqrt()));
            ev = ev.max((v - vo.max(0.0)).abs() / amp);
        }
        let l = log_marginal_likelihood(&data, &hp, &shape.prior()).unwrap();
        let lo = oracle.log_evidence();
        el = el.max((l - lo).abs() / lo.abs().max(1.0));
    }
    (em, ev, el)
}

pub fn criterion_oracle() -> Check {
    let (em, ev, el) = oracle_errors(50, 2024);
    let tol = 1e-8;
    Check::new(
        em <= tol && ev <= tol && el <= tol,
        format!("max rel err mean {em:.2e}, var {ev:.2e}, evidence {el:.2e} (tol {tol:.0e})"),
    )
}

// ---------------------------------------------------------------------------
// EI versus Monte Carlo
// ---------------------------------------------------------------------------

/// Largest |analytic - MC| over a 5×5×5 grid of (mean, std, target).
pub fn ei_monte_carlo_error(draws: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let z: Vec<f64> = (0..draws).map(|_| StandardNormal.sample(&mut rng)).collect();
    let means = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let stds = [0.1, 0.3, 0.6, 1.0, 1.5];
    let targets = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut worst = 0.0f64;
    for &m in &means {
        for &s in &stds {
            for &t in &targets {
                let mc = z.iter().map(|z| (m + s * z - t).max(0.0)).sum::<f64>() / draws as f64;
                let ei = expected_improvement(m, s, t).unwrap();
                worst = worst.max((mc - ei).abs());
            }
        }
    }
    worst
}

pub fn criterion_ei() -> Check {
    let err = ei_monte_carlo_error(10_000_000, 7);
    Check::new(err <= 3e-3, format!("max |EI - MC| = {err:.2e} over 125 cells, 1e7 draws (tol 3e-3)"))
}

// ---------------------------------------------------------------------------
// Duality of the two regularized-EI views
// ---------------------------------------------------------------------------

pub struct DualityFixture {
    pub data: Dataset,
    pub anchor: SearchBox,
    pub hps: Vec<HyperParams>,
}

impl DualityFixture {
    pub fn random(index: usize) -> Self {
        let mut rng = rng(500 + index as u64);
        let d = 1 + index % 2;
        let center: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let half: Vec<f64> = (0..d).map(|_| rng.gen_range(0.5..1.5)).collect();
        let anchor = SearchBox::new(
            center.iter().zip(&half).map(|(c, h)| c - h).collect(),
            center.iter().zip(&half).map(|(c, h)| c + h).collect(),
        )
        .unwrap();
        let n = 4 + 3 * d;
        let xs: Vec<Vec<f64>> = (0..n).map(|_| anchor.sample_uniform(&mut rng)).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| x.iter().map(|v| (2.0 * v).cos()).sum::<f64>() + 0.05 * rng.gen::<f64>())
            .collect();
        let hps = (0..3)
            .map(|_| {
                let amp = log_uniform(&mut rng, 0.3, 3.0);
                HyperParams::new(amp, (0..d).map(|_| log_uniform(&mut rng, 0.1, 0.4)).collect(), 1e-4 * amp).unwrap()
            })
            .collect();
        DualityFixture {
            data: Dataset::new(d, xs, ys).unwrap(),
            anchor,
            hps,
        }
    }

    pub fn views(&self, prior: &PriorMean) -> (AcquisitionContext, AcquisitionContext) {
        let mode = SearchMode::Unbounded {
            anchor: self.anchor.clone(),
        };
        let regularized: Vec<GpModel> = self.hps.iter().map(|hp| fit(&self.data, hp, prior).unwrap()).collect();
        let plain: Vec<GpModel> = self
            .hps
            .iter()
            .map(|hp| fit(&self.data, hp, &prior.without_regularizer()).unwrap())
            .collect();
        (
            AcquisitionContext::expected_improvement(regularized, mode.clone()).unwrap(),
            AcquisitionContext::min_improvement(plain, prior.regularizer().clone(), mode).unwrap(),
        )
    }

    pub fn max_amplitude(&self) -> f64 {
        self.hps.iter().map(|h| h.amplitude).fold(0.0, f64::max)
    }

    pub fn max_length(&self) -> f64 {
        self.hps.iter().flat_map(|h| h.length_scales.iter().copied()).fold(0.0, f64::max)
    }

    /// Points at least `lengths` of the longest length scale away from every
    /// observation.
    pub fn far_points(&self, lengths: f64, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let l = self.max_length();
        let c = self.anchor.center();
        let mut out = Vec::new();
        let mut radius = self.anchor.circumradius() + lengths * l;
        while out.len() < count {
            let u = unit_vector(c.len(), rng);
            let x: Vec<f64> = c.iter().zip(&u).map(|(ci, ui)| ci + radius * ui).collect();
            let min_dist = self
                .data
                .inputs()
                .iter()
                .map(|xi| xi.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min);
            if min_dist >= lengths * l {
                out.push(x);
                radius *= 1.15;
            }
        }
        out
    }
}

pub fn unit_vector(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / norm).collect()
}

/// (inside-ball points with non-zero gap, worst far-field gap / θ0).
pub fn duality_gaps(fixtures: usize) -> (usize, f64) {
    let mut nonzero = 0;
    let mut worst_far = 0.0f64;
    for i in 0..fixtures {
        let fx = DualityFixture::random(i);
        let mut rng = rng(900 + i as u64);
        let c = fx.anchor.center();
        let radius = fx.anchor.circumradius();
        let hinge = PriorMean::hinge_quadratic(c.clone(), radius, 1.0).unwrap();
        let quad = PriorMean::quadratic(c.clone(), fx.anchor.widths()).unwrap();

        let (a, b) = fx.views(&hinge);
        for _ in 0..50 {
            let u = unit_vector(c.len(), &mut rng);
            let r = radius * rng.gen::<f64>();
            let x: Vec<f64> = c.iter().zip(&u).map(|(ci, ui)| ci + r * ui).collect();
            if a.value(&x).unwrap() != b.value(&x).unwrap() {
                nonzero += 1;
            }
        }
        for prior in [&hinge, &quad] {
            let (a, b) = fx.views(prior);
            for x in fx.far_points(10.0, 20, &mut rng) {
                let gap = (a.value(&x).unwrap() - b.value(&x).unwrap()).abs();
                worst_far = worst_far.max(gap / fx.max_amplitude());
            }
        }
    }
    (nonzero, worst_far)
}

pub fn criterion_duality() -> Check {
    let (nonzero, far) = duality_gaps(20);
    Check::new(
        nonzero == 0 && far <= 1e-6,
        format!("inside-hinge mismatches {nonzero}/1000, max far-field gap {far:.2e}·θ0 (tol 1e-6)"),
    )
}

// ---------------------------------------------------------------------------
// Decay at infinity
// ---------------------------------------------------------------------------

/// Fitted EI-H (even index) or EI-Q (odd index) context on sampled
/// hyperparameters, with the hinge radius (or circumradius).
pub fn regularized_context(index: usize) -> (AcquisitionContext, f64) {
    let mut rng = rng(1300 + index as u64);
    let d = 1 + index % 3;
    let lo: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..0.0)).collect();
    let anchor = SearchBox::new(lo.clone(), lo.iter().map(|l| l + rng.gen_range(0.5..2.0)).collect()).unwrap();
    let n = 5 * d;
    let xs: Vec<Vec<f64>> = (0..n).map(|_| anchor.sample_uniform(&mut rng)).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x.iter().map(|v| (1.7 * v).sin() - 0.2 * v * v).sum()).collect();
    let data = Dataset::new(d, xs, ys).unwrap();
    let r = anchor.circumradius();
    let prior = if index % 2 == 0 {
        PriorMean::hinge_quadratic(anchor.center(), r, 1.0).unwrap()
    } else {
        PriorMean::quadratic(anchor.center(), anchor.widths()).unwrap()
    };
    let hyper = HyperPrior::for_data(&data, &anchor.widths());
    let draws = slice_sample_hyperparams(&data, &hyper.default_init(), &prior, &hyper, 5, 30, &mut rng).unwrap();
    let models = draws.draws.iter().map(|hp| fit(&data, hp, &prior).unwrap()).collect();
    let ctx = AcquisitionContext::expected_improvement(models, SearchMode::Unbounded { anchor }).unwrap();
    (ctx, r)
}

/// Context maximized at the last iteration of an EI-H (even index) or EI-Q
/// (odd index) run, with the circumradius of the run's initial box.
pub fn run_context(index: usize) -> (AcquisitionContext, f64) {
    let method = if index % 2 == 0 { Method::EiH } else { Method::EiQ };
    let seed = index as u64;
    let problem = match (index / 2) % 5 {
        0 | 4 => gaussian_modes(1).unwrap(),
        1 => gaussian_modes(2).unwrap(),
        2 => hartmann3_problem(),
        _ => {
            let p = hartmann3_problem();
            let b = random_small_box(&p, 0.2, &mut rng(seed)).unwrap();
            p.with_initial_box(b)
        }
    };
    let cfg = StrategyConfig::new(method, problem.initial_box().clone(), seed);
    let mut last = None;
    run_observed(|x: &[f64]| problem.evaluate(x), &cfg, |obs| last = Some(obs.context.clone())).unwrap();
    (last.unwrap(), problem.initial_box().circumradius())
}

/// (neighbourhood maximum, far-field maximum) of a fitted context.
pub fn decay_ratio(ctx: &AcquisitionContext, radius: f64, seed: u64) -> (f64, f64) {
    decay_ratio_at(ctx, 32.0, radius, seed)
}

/// As [`decay_ratio`] with the far field at `multiple`·max(radius,
/// circumradius of the anchor box).
pub fn decay_ratio_at(ctx: &AcquisitionContext, multiple: f64, radius: f64, seed: u64) -> (f64, f64) {
    let mut rng = rng(seed);
    let d = ctx.dim();
    let mut lengths: Vec<f64> = ctx.models().iter().flat_map(|m| m.hyperparams().length_scales.clone()).collect();
    lengths.sort_by(f64::total_cmp);
    let ell = lengths[lengths.len() / 2];
    let inc = ctx.incumbent();
    let near = (0..2000)
        .map(|_| {
            let x: Vec<f64> = inc.iter().map(|v| v + ell * rng.gen_range(-1.0..1.0)).collect();
            ctx.value(&x).unwrap()
        })
        .fold(0.0, f64::max);
    let anchor = match ctx.mode() {
        SearchMode::Unbounded { anchor } | SearchMode::Bounded(anchor) => anchor.clone(),
    };
    let c = anchor.center();
    let rho = multiple * radius.max(anchor.circumradius());
    let far = (0..200)
        .map(|_| {
            let u = unit_vector(d, &mut rng);
            let x: Vec<f64> = c.iter().zip(&u).map(|(ci, ui)| ci + rho * ui).collect();
            ctx.value(&x).unwrap()
        })
        .fold(0.0, f64::max);
    (near, far)
}

pub fn criterion_decay() -> Check {
    let mut worst = 0.0f64;
    let mut min_near = f64::INFINITY;
    for i in 0..10 {
        let (ctx, r) = run_context(i);
        let (near, far) = decay_ratio(&ctx, r, 77 + i as u64);
        min_near = min_near.min(near);
        worst = worst.max(if near > 0.0 { far / near } else { f64::INFINITY });
    }
    Check::new(
        worst <= 1e-8 && min_near > 0.0,
        format!("10 final-iteration EI-H/EI-Q contexts: max far/near ratio at 32R {worst:.2e} (tol 1e-8), min neighbourhood max {min_near:.2e}"),
    )
}

// ---------------------------------------------------------------------------
// Volume-doubling schedule
// ---------------------------------------------------------------------------

/// Worst relative volume and centre errors over EI-V runs in 1-3 dimensions
/// and over nine explicit expansions.
pub fn schedule_errors() -> (f64, f64, usize) {
    let mut vol_err = 0.0f64;
    let mut center_err = 0.0f64;
    let mut max_k = 0;
    let mut check = |b: &SearchBox, initial: &SearchBox, k: usize| {
        let expected = 2f64.powi(k as i32) * initial.volume();
        vol_err = vol_err.max((b.volume() / expected - 1.0).abs());
        let scale = initial.widths().iter().fold(0.0f64, |a, w| a.max(*w));
        for (c, c0) in b.center().iter().zip(initial.center()) {
            center_err = center_err.max((c - c0).abs() / c0.abs().max(scale));
        }
        max_k = max_k.max(k);
    };
    for d in 1..=3 {
        let mut r = rng(40 + d as u64);
        let lo: Vec<f64> = (0..d).map(|_| r.gen_range(-3.0..3.0)).collect();
        let initial = SearchBox::new(lo.clone(), lo.iter().map(|l| l + r.gen_range(0.1..2.0)).collect()).unwrap();
        let mut b = initial.clone();
        for k in 1..=9 {
            b = expand_box(&b, 2.0).unwrap();
            check(&b, &initial, k);
        }

        let mut cfg = StrategyConfig::new(Method::EiV, initial.clone(), d as u64);
        cfg.mcmc_draws = 2;
        cfg.mcmc_burn_in = 10;
        cfg.mcmc_warm_burn_in = 2;
        let target: Vec<f64> = initial.center().iter().map(|c| c + 0.3).collect();
        let trace = run(
            |x: &[f64]| Ok(-x.iter().zip(&target).map(|(a, t)| (a - t).powi(2)).sum::<f64>()),
            &cfg,
        )
        .unwrap();
        for rec in &trace.records {
            let k = rec.iteration.saturating_sub(cfg.init_count) / cfg.doubling_period;
            let k = if rec.iteration < cfg.init_count { 0 } else { k };
            check(rec.search_box.as_ref().unwrap(), &initial, k);
        }
        let final_k = (cfg.budget - cfg.init_count) / cfg.doubling_period;
        check(trace.final_box.as_ref().unwrap(), &initial, final_k);
    }
    (vol_err, center_err, max_k)
}

pub fn criterion_schedule() -> Check {
    let (v, c, k) = schedule_errors();
    Check::new(
        v <= 1e-9 && c <= 1e-9 && k >= 9,
        format!("max rel volume err {v:.2e}, centre err {c:.2e}, up to k = {k} (tol 1e-9)"),
    )
}

// ---------------------------------------------------------------------------
// Outward exploration on the Gaussian-mode fixtures
// ---------------------------------------------------------------------------

/// Largest value of the fixture on a dense grid of its initial box.
pub fn in_box_grid_max(d: usize) -> f64 {
    let p = gaussian_modes(d).unwrap();
    let b = p.initial_box().clone();
    let per_axis = if d == 1 { 10_001 } else { 1_001 };
    let coord = |axis: usize, i: usize| b.lower()[axis] + b.widths()[axis] * i as f64 / (per_axis - 1) as f64;
    let mut best = f64::NEG_INFINITY;
    if d == 1 {
        for i in 0..per_axis {
            best = best.max(p.evaluate(&[coord(0, i)]).unwrap());
        }
    } else {
        for i in 0..per_axis {
            for j in 0..per_axis {
                best = best.max(p.evaluate(&[coord(0, i), coord(1, j)]).unwrap());
            }
        }
    }
    best
}

/// (fraction of seeds leaving the box, fraction beating the in-box max).
pub fn exploration_rates(d: usize, seeds: u64) -> (f64, f64, f64) {
    let p = gaussian_modes(d).unwrap();
    let inside = in_box_grid_max(d);
    let (mut left, mut beat) = (0, 0);
    for seed in 0..seeds {
        let cfg = StrategyConfig::new(Method::EiH, p.initial_box().clone(), seed);
        let trace = run(|x: &[f64]| p.evaluate(x), &cfg).unwrap();
        if trace.records.iter().any(|r| !p.initial_box().contains(&r.x)) {
            left += 1;
        }
        if trace.best().unwrap() > inside {
            beat += 1;
        }
    }
    (left as f64 / seeds as f64, beat as f64 / seeds as f64, inside)
}

pub fn criterion_exploration() -> Check {
    let mut passed = true;
    let mut parts = Vec::new();
    for d in [1, 2] {
        let (left, beat, inside) = exploration_rates(d, 20);
        passed &= left >= 0.8 && beat >= 0.6;
        parts.push(format!("{d}-D: outside {:.0}%, beat in-box max {inside:.4} {:.0}%", 100.0 * left, 100.0 * beat));
    }
    Check::new(passed, parts.join("; ") + " (need 80% / 60%)")
}

// ---------------------------------------------------------------------------
// Hartmann comparison
// ---------------------------------------------------------------------------

pub fn criterion_hartmann(root: &Path, seeds: u64) -> Check {
    let mut parts = Vec::new();
    let mut passed = true;
    let mut finals: BTreeMap<&str, BTreeMap<Method, f64>> = BTreeMap::new();
    let mut paired = 0.0;
    for (name, sub) in [("hartmann3", "h3"), ("hartmann3*", "h3star")] {
        let cfg = ExperimentConfig::new(ProblemConfig::named(name), Method::ALL.to_vec(), Seeds::Count(seeds), root.join(sub));
        let outcome = run_experiment(&cfg).unwrap();
        if !outcome.is_complete() {
            return Check::new(false, format!("{name}: {} runs failed", outcome.failures.len()));
        }
        let summary = report(&cfg.out_dir).unwrap();
        for m in Method::ALL {
            finals.entry(name).or_default().insert(m, summary.final_stat(m).unwrap().mean);
        }
        if name == "hartmann3*" {
            let best = |m: Method| -> BTreeMap<u64, f64> {
                summary.recommendations.iter().filter(|r| r.method == m).map(|r| (r.seed, r.best_y)).collect()
            };
            let (h, e) = (best(Method::EiH), best(Method::Ei));
            paired = e.iter().filter(|(s, v)| h[s] > **v).count() as f64 / e.len() as f64;
        }
    }
    let h3 = &finals["hartmann3"];
    let all_reach = h3.values().all(|v| *v >= 3.5);
    passed &= all_reach;
    parts.push(format!(
        "hartmann3 final means {}",
        h3.iter().map(|(m, v)| format!("{m}={v:.4}")).collect::<Vec<_>>().join(" ")
    ));
    let star = &finals["hartmann3*"];
    let beats = star[&Method::EiH] > star[&Method::Ei] && star[&Method::EiV] > star[&Method::Ei];
    passed &= beats && paired >= 0.7;
    parts.push(format!(
        "hartmann3* final means {}; EI-H beats EI on {:.0}% of seeds",
        star.iter().map(|(m, v)| format!("{m}={v:.4}")).collect::<Vec<_>>().join(" "),
        100.0 * paired
    ));
    Check::new(passed, parts.join("; "))
}

// ---------------------------------------------------------------------------
// Slice sampler
// ---------------------------------------------------------------------------

/// One-sample KS statistic against the uniform distribution on [lo, hi].
pub fn ks_uniform(mut values: Vec<f64>, lo: f64, hi: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let cdf = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max)
}

/// KS critical value at the 1% level for large samples.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Largest KS statistic over the log coordinates of constant-likelihood draws.
pub fn constant_likelihood_ks(draws: usize, seed: u64) -> (f64, f64) {
    let prior = HyperPrior::scaled(2.0, &[1.0, 3.0]);
    let mut rng = rng(seed);
    let out = slice_sample_with(|_| Some(0.0), &prior.default_init(), &prior, draws, 0, &mut rng).unwrap();
    let mut coords: Vec<(Vec<f64>, (f64, f64))> = vec![(out.draws.iter().map(|h| h.amplitude.ln()).collect(), prior.amplitude)];
    for (i, b) in prior.length_scales.iter().enumerate() {
        coords.push((out.draws.iter().map(|h| h.length_scales[i].ln()).collect(), *b));
    }
    coords.push((out.draws.iter().map(|h| h.noise_variance.ln()).collect(), prior.noise_variance));
    let worst = coords
        .into_iter()
        .map(|(v, (lo, hi))| ks_uniform(v, lo.ln(), hi.ln()))
        .fold(0.0, f64::max);
    (worst, ks_critical_1pct(draws))
}

pub const TRUE_AMPLITUDE: f64 = 1.0;
pub const TRUE_LENGTH: f64 = 0.3;
pub const TRUE_NOISE: f64 = 0.01;

/// Posterior-median (amplitude, length scale, noise) for GP-generated 1-D
/// data on [0, RECOVERY_DOMAIN].
pub fn recover_hyperparams(seed: u64) -> (f64, f64, f64) {
    recover_hyperparams_with(seed, RECOVERY_POINTS, RECOVERY_DOMAIN)
}

pub const RECOVERY_POINTS: usize = 150;
pub const RECOVERY_DOMAIN: f64 = 15.0;

pub fn recover_hyperparams_with(seed: u64, n: usize, domain: f64) -> (f64, f64, f64) {
    let mut rng = rng(3000 + seed);
    let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(0.0..domain)]).collect();
    let cov = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let r = (xs[i][0] - xs[j][0]) / TRUE_LENGTH;
        TRUE_AMPLITUDE * (-0.5 * r * r).exp() + if i == j { TRUE_NOISE } else { 0.0 }
    });
    let l = cov.cholesky().unwrap().unpack();
    let z = nalgebra::DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let y = l * z;
    let data = Dataset::new(1, xs, y.iter().copied().collect()).unwrap();
    let prior = HyperPrior::for_data(&data, &[domain]);
    let out = slice_sample_hyperparams(&data, &prior.default_init(), &PriorMean::constant(0.0), &prior, 200, 100, &mut rng).unwrap();
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    (
        median(out.draws.iter().map(|h| h.amplitude).collect()),
        median(out.draws.iter().map(|h| h.length_scales[0]).collect()),
        median(out.draws.iter().map(|h| h.noise_variance).collect()),
    )
}

pub fn within_factor(estimate: f64, truth: f64, factor: f64) -> bool {
    estimate >= truth / factor && estimate <= truth * factor
}

pub fn criterion_slice() -> Check {
    let (ks, crit) = constant_likelihood_ks(2000, 11);
    let mut recovered = 0;
    let mut worst = (1.0f64, 1.0f64, 1.0f64);
    for seed in 0..10 {
        let (a, l, s) = recover_hyperparams(seed);
        let ok = within_factor(a, TRUE_AMPLITUDE, 2.0) && within_factor(l, TRUE_LENGTH, 2.0) && within_factor(s, TRUE_NOISE, 2.0);
        recovered += ok as usize;
        let ratio = |e: f64, t: f64| (e / t).max(t / e);
        worst = (
            worst.0.max(ratio(a, TRUE_AMPLITUDE)),
            worst.1.max(ratio(l, TRUE_LENGTH)),
            worst.2.max(ratio(s, TRUE_NOISE)),
        );
    }
    Check::new(
        ks < crit && recovered == 10,
        format!(
            "prior KS {ks:.4} (crit {crit:.4}); recovered {recovered}/10 seeds, worst ratio θ0 {:.2}, ℓ {:.2}, σ² {:.2} (tol ×2)",
            worst.0, worst.1, worst.2
        ),
    )
}

// ---------------------------------------------------------------------------
// Determinism
// ---------------------------------------------------------------------------

/// Byte-level comparison of every file in two directories.
pub fn identical_dirs(a: &Path, b: &Path) -> Result<usize, String> {
    let list = |p: &Path| -> Vec<String> {
        let mut v: Vec<String> = fs::read_dir(p)
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_file())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .collect();
        v.sort();
        v
    };
    let (la, lb) = (list(a), list(b));
    if la != lb {
        return Err(format!("file sets differ: {la:?} vs {lb:?}"));
    }
    for name in &la {
        if fs::read(a.join(name)).unwrap() != fs::read(b.join(name)).unwrap() {
            return Err(format!("{name} differs"));
        }
    }
    Ok(la.len())
}

pub fn determinism_configs(root: &Path, tag: &str, jobs: usize) -> Vec<ExperimentConfig> {
    let mut star = ProblemConfig::named("hartmann3*");
    star.noise_std = 0.05;
    let mut a = ExperimentConfig::new(star, Method::ALL.to_vec(), Seeds::List(vec![3, 11]), root.join(tag).join("h3star"));
    a.overrides.budget = Some(20);
    a.jobs = Some(jobs);
    let mut b = ExperimentConfig::new(ProblemConfig::named("gaussian2d"), vec![Method::EiH, Method::EiV], Seeds::Count(2), root.join(tag).join("g2"));
    b.overrides.budget = Some(20);
    b.jobs = Some(jobs);
    vec![a, b]
}

pub fn criterion_determinism(root: &Path) -> Check {
    let mut files = 0;
    let first = determinism_configs(root, "first", 1);
    let second = determinism_configs(root, "second", 2);
    for (a, b) in first.iter().zip(&second) {
        for cfg in [a, b] {
            let out = run_experiment(cfg).unwrap();
            if !out.is_complete() {
                return Check::new(false, format!("runs failed: {:?}", out.failures));
            }
        }
        match identical_dirs(&a.out_dir, &b.out_dir) {
            Ok(n) => files += n,
            Err(e) => return Check::new(false, e),
        }
    }
    Check::new(true, format!("{files} trace files byte-identical across two executions (1 and 2 workers)"))
}
