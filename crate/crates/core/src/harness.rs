//! Seeded multi-run experiments, trace files and summaries.
//!
//! Every run writes `<METHOD>_seed<SEED>.csv` with the header
//! `iter,x_0..x_{d-1},y,best_y,box_lo_0..,box_hi_0..,wall_s` (box columns empty
//! for unbounded selections) and a JSON sidecar `<METHOD>_seed<SEED>.json`
//! holding the problem, the fully resolved strategy configuration, the
//! recommendation and the frozen regularizer. A failed run leaves
//! `<METHOD>_seed<SEED>.error.json` instead.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{self, ExternalCommand, NoisyProblem, Problem};
use crate::strategy::{self, Method, SearchBox, StrategyConfig, Trace, TraceRecord};
use crate::surrogate::Regularizer;

/// Problem names accepted in configurations. A trailing `*` selects a random
/// small initial box per seed inside the reference domain.
pub const PROBLEM_NAMES: [&str; 7] = [
    "hartmann3",
    "hartmann6",
    "hartmann3*",
    "hartmann6*",
    "gaussian1d",
    "gaussian2d",
    "external",
];

/// Side length of the random initial box of starred problems.
pub const DEFAULT_SMALL_BOX_SIDE: f64 = 0.2;
/// Parallelism cap read from the environment when the config sets none.
pub const JOBS_ENV: &str = "UBO_JOBS";

const SMALL_BOX_STREAM: u64 = 3;
const NOISE_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalConfig {
    /// Shell command template; see [`ExternalCommand`].
    pub command: String,
    pub parameters: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: f64,
}

fn default_timeout() -> f64 {
    3600.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    /// Standard deviation of additive Gaussian observation noise.
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default = "default_side")]
    pub small_box_side: f64,
    /// Overrides the problem's default initial box (not for starred problems).
    #[serde(default)]
    pub initial_box: Option<SearchBox>,
    #[serde(default)]
    pub external: Option<ExternalConfig>,
}

fn default_side() -> f64 {
    DEFAULT_SMALL_BOX_SIDE
}

impl ProblemConfig {
    pub fn named(name: impl Into<String>) -> Self {
        ProblemConfig {
            name: name.into(),
            noise_std: 0.0,
            small_box_side: DEFAULT_SMALL_BOX_SIDE,
            initial_box: None,
            external: None,
        }
    }

    pub fn is_starred(&self) -> bool {
        self.name.ends_with('*')
    }

    /// Builds the objective; `workdir` hosts external-command evaluations.
    pub fn build(&self, workdir: &Path) -> Result<Problem> {
        let problem = match self.name.as_str() {
            "hartmann3" | "hartmann3*" => problems::hartmann3_problem(),
            "hartmann6" | "hartmann6*" => problems::hartmann6_problem(),
            "gaussian1d" => problems::gaussian_modes(1)?,
            "gaussian2d" => problems::gaussian_modes(2)?,
            "external" => {
                let ext = self
                    .external
                    .as_ref()
                    .ok_or_else(|| Error::Config("problem `external` needs an `external` section".into()))?;
                let reference = SearchBox::new(ext.lower.clone(), ext.upper.clone())?;
                let command = ExternalCommand {
                    template: ext.command.clone(),
                    parameters: ext.parameters.clone(),
                    workdir: workdir.to_path_buf(),
                    timeout_seconds: ext.timeout_seconds,
                };
                Problem::new("external", reference, move |x: &[f64]| command.evaluate(x))
            }
            other => return Err(unknown_problem(other)),
        };
        Ok(match &self.initial_box {
            Some(b) => problem.with_initial_box(b.clone()),
            None => problem,
        })
    }

    /// Initial box of the run with the given seed; starred problems draw a
    /// random small box shared by all methods.
    pub fn initial_box(&self, problem: &Problem, seed: u64) -> Result<SearchBox> {
        if self.is_starred() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(SMALL_BOX_STREAM);
            problems::random_small_box(problem, self.small_box_side, &mut rng)
        } else {
            Ok(problem.initial_box().clone())
        }
    }

    fn validate(&self) -> Result<()> {
        if !PROBLEM_NAMES.contains(&self.name.as_str()) {
            return Err(unknown_problem(&self.name));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config(format!("noise_std must be non-negative, got {}", self.noise_std)));
        }
        if self.is_starred() && self.initial_box.is_some() {
            return Err(Error::Config("starred problems draw their own initial box".into()));
        }
        if let Some(b) = &self.initial_box {
            SearchBox::new(b.lower().to_vec(), b.upper().to_vec()).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(ext) = &self.external {
            if ext.parameters.len() != ext.lower.len() {
                return Err(Error::Config("external: parameters, lower and upper must have equal length".into()));
            }
        }
        let problem = self.build(Path::new("."))?;
        if let Some(b) = &self.initial_box {
            if b.dim() != problem.dim() {
                return Err(Error::Config(format!(
                    "initial_box has dimension {}, problem has {}",
                    b.dim(),
                    problem.dim()
                )));
            }
        }
        if self.is_starred() {
            self.initial_box(&problem, 0).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}

fn unknown_problem(name: &str) -> Error {
    Error::Config(format!("unknown problem `{name}` (expected one of {})", PROBLEM_NAMES.join(", ")))
}

/// Seeds as a count (`0..K`) or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Seeds {
    pub fn values(&self) -> Vec<u64> {
        match self {
            Seeds::Count(k) => (0..*k).collect(),
            Seeds::List(v) => v.clone(),
        }
    }
}

/// Optional replacements for [`StrategyConfig`] defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub budget: Option<usize>,
    pub init_count: Option<usize>,
    pub mcmc_draws: Option<usize>,
    pub mcmc_burn_in: Option<usize>,
    pub mcmc_warm_burn_in: Option<usize>,
    pub growth_factor: Option<f64>,
    pub doubling_period: Option<usize>,
    pub curvature: Option<f64>,
    pub record_time: Option<bool>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut StrategyConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.$f = v; } )* };
        }
        set!(budget, init_count, mcmc_draws, mcmc_burn_in, mcmc_warm_burn_in, growth_factor, doubling_period, curvature, record_time);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub methods: Vec<Method>,
    pub seeds: Seeds,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Maximum number of concurrent runs; falls back to `UBO_JOBS`, then to
    /// the number of available cores.
    #[serde(default)]
    pub jobs: Option<usize>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn new(problem: ProblemConfig, methods: Vec<Method>, seeds: Seeds, out_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            problem,
            methods,
            seeds,
            overrides: Overrides::default(),
            out_dir: out_dir.into(),
            jobs: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.seeds.values().is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be positive".into()));
        }
        self.problem.validate()?;
        let problem = self.problem.build(Path::new("."))?;
        for &method in &self.methods {
            self.strategy_config(&problem, method, 0)?.validate()?;
        }
        Ok(())
    }

    /// Fully resolved configuration of one run.
    pub fn strategy_config(&self, problem: &Problem, method: Method, seed: u64) -> Result<StrategyConfig> {
        let mut cfg = StrategyConfig::new(method, self.problem.initial_box(problem, seed)?, seed);
        self.overrides.apply(&mut cfg);
        Ok(cfg)
    }

    fn jobs(&self) -> usize {
        self.jobs
            .or_else(|| std::env::var(JOBS_ENV).ok().and_then(|v| v.trim().parse().ok()))
            .filter(|j| *j > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

/// Provenance stored next to each CSV trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub problem: ProblemConfig,
    pub config: StrategyConfig,
    pub method: Method,
    pub seed: u64,
    pub recommendation: Vec<f64>,
    pub final_box: Option<SearchBox>,
    pub regularizer: Option<Regularizer>,
    #[serde(default)]
    pub fallback_iterations: Vec<usize>,
    #[serde(default)]
    pub degraded_iterations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStub {
    pub method: Method,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub method: Method,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutcome {
    /// CSV paths of completed runs, in (method, seed) order.
    pub traces: Vec<PathBuf>,
    pub failures: Vec<RunFailure>,
}

impl ExperimentOutcome {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn run_file_stem(method: Method, seed: u64) -> String {
    format!("{}_seed{seed}", method.label())
}

/// Runs every (method, seed) pair, writing one trace per completed run and an
/// error stub per failed one.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    run_experiment_with(cfg, |_, _, workdir| cfg.problem.build(workdir))
}

/// [`run_experiment`] with the objective of each `(method, seed)` run built by
/// `build` (given the run's scratch directory) instead of from
/// `cfg.problem`. The problem config still decides the initial box and noise.
pub fn run_experiment_with<B>(cfg: &ExperimentConfig, build: B) -> Result<ExperimentOutcome>
where
    B: Fn(Method, u64, &Path) -> Result<Problem> + Sync,
{
    cfg.validate()?;
    let out = &cfg.out_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let probe = out.join(".write-test");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    let _ = fs::remove_file(&probe);

    let jobs: Vec<(Method, u64)> = cfg
        .methods
        .iter()
        .flat_map(|&m| cfg.seeds.values().into_iter().map(move |s| (m, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs().min(jobs.len()).max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let results: Vec<Result<std::result::Result<PathBuf, RunFailure>>> =
        pool.install(|| jobs.par_iter().map(|&(m, s)| execute_run(cfg, &build, m, s)).collect());

    let mut outcome = ExperimentOutcome::default();
    for r in results {
        match r? {
            Ok(path) => outcome.traces.push(path),
            Err(failure) => outcome.failures.push(failure),
        }
    }
    Ok(outcome)
}

fn execute_run<B>(cfg: &ExperimentConfig, build: &B, method: Method, seed: u64) -> Result<std::result::Result<PathBuf, RunFailure>>
where
    B: Fn(Method, u64, &Path) -> Result<Problem>,
{
    let stem = run_file_stem(method, seed);
    let csv_path = cfg.out_dir.join(format!("{stem}.csv"));
    let json_path = cfg.out_dir.join(format!("{stem}.json"));
    let stub_path = cfg.out_dir.join(format!("{stem}.error.json"));
    for stale in [&csv_path, &json_path, &stub_path] {
        let _ = fs::remove_file(stale);
    }

    let workdir = cfg.out_dir.join("work").join(&stem);
    let attempt = (|| -> Result<(StrategyConfig, Trace)> {
        let problem = build(method, seed, &workdir)?;
        let strategy_cfg = cfg.strategy_config(&problem, method, seed)?;
        let mut noisy = NoisyProblem::new(problem, cfg.problem.noise_std, seed ^ NOISE_SEED_SALT)?;
        let trace = strategy::run(|x: &[f64]| noisy.evaluate(x), &strategy_cfg)?;
        Ok((strategy_cfg, trace))
    })();
    let _ = fs::remove_dir_all(&workdir);

    match attempt {
        Ok((strategy_cfg, trace)) => {
            write_trace(&csv_path, &cfg.problem, &strategy_cfg, &trace)?;
            Ok(Ok(csv_path))
        }
        Err(err) => {
            let stub = ErrorStub {
                method,
                seed,
                error: err.to_string(),
            };
            let text = serde_json::to_string_pretty(&stub)?;
            fs::write(&stub_path, text + "\n").map_err(|e| Error::io(&stub_path, e))?;
            Ok(Err(RunFailure {
                method,
                seed,
                message: stub.error,
            }))
        }
    }
}

/// Path of the JSON sidecar belonging to a CSV trace.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn trace_header(dim: usize) -> Vec<String> {
    let mut header = vec!["iter".to_string()];
    header.extend((0..dim).map(|i| format!("x_{i}")));
    header.push("y".into());
    header.push("best_y".into());
    header.extend((0..dim).map(|i| format!("box_lo_{i}")));
    header.extend((0..dim).map(|i| format!("box_hi_{i}")));
    header.push("wall_s".into());
    header
}

/// Writes the CSV trace and its sidecar.
pub fn write_trace(csv_path: &Path, problem: &ProblemConfig, config: &StrategyConfig, trace: &Trace) -> Result<()> {
    let d = config.dim();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(trace_header(d))?;
    for r in &trace.records {
        let mut row = vec![r.iteration.to_string()];
        row.extend(r.x.iter().map(f64::to_string));
        row.push(r.y.to_string());
        row.push(r.best_y.to_string());
        match &r.search_box {
            Some(b) => {
                row.extend(b.lower().iter().map(f64::to_string));
                row.extend(b.upper().iter().map(f64::to_string));
            }
            None => row.extend(std::iter::repeat(String::new()).take(2 * d)),
        }
        row.push(r.wall_seconds.to_string());
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(csv_path, e.into_error()))?;
    fs::write(csv_path, bytes).map_err(|e| Error::io(csv_path, e))?;

    let sidecar = Sidecar {
        problem: problem.clone(),
        config: config.clone(),
        method: trace.method,
        seed: trace.seed,
        recommendation: trace.recommendation.clone(),
        final_box: trace.final_box.clone(),
        regularizer: trace.regularizer.clone(),
        fallback_iterations: trace.fallback_iterations.clone(),
        degraded_iterations: trace.degraded_iterations.clone(),
    };
    let path = sidecar_path(csv_path);
    let text = serde_json::to_string_pretty(&sidecar)? + "\n";
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Reads a CSV trace and its sidecar back into a [`Trace`].
pub fn read_trace(csv_path: &Path) -> Result<(Sidecar, Trace)> {
    let malformed = |message: String| Error::MalformedTrace {
        path: csv_path.to_path_buf(),
        message,
    };
    let side_path = sidecar_path(csv_path);
    let text = fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| malformed(format!("sidecar: {e}")))?;
    let d = sidecar.config.dim();

    let mut reader = csv::Reader::from_path(csv_path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != trace_header(d) {
        return Err(malformed(format!("unexpected header {header:?}")));
    }
    let num = |s: &str, col: usize| s.parse::<f64>().map_err(|_| malformed(format!("column {} is not a number: {s:?}", header[col])));
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let iteration = row[0].parse::<usize>().map_err(|_| malformed(format!("bad iteration {:?}", &row[0])))?;
        let x = (1..=d).map(|c| num(&row[c], c)).collect::<Result<Vec<_>>>()?;
        let y = num(&row[d + 1], d + 1)?;
        let best_y = num(&row[d + 2], d + 2)?;
        let box_cols = d + 3..3 * d + 3;
        let search_box = if box_cols.clone().all(|c| row[c].is_empty()) {
            None
        } else {
            let v = box_cols.map(|c| num(&row[c], c)).collect::<Result<Vec<_>>>()?;
            Some(SearchBox::new(v[..d].to_vec(), v[d..].to_vec()).map_err(|e| malformed(e.to_string()))?)
        };
        let wall_seconds = num(&row[3 * d + 3], 3 * d + 3)?;
        records.push(TraceRecord {
            iteration,
            x,
            y,
            best_y,
            search_box,
            wall_seconds,
        });
    }
    let trace = Trace {
        method: sidecar.method,
        seed: sidecar.seed,
        records,
        recommendation: sidecar.recommendation.clone(),
        final_box: sidecar.final_box.clone(),
        regularizer: sidecar.regularizer.clone(),
        fallback_iterations: sidecar.fallback_iterations.clone(),
        degraded_iterations: sidecar.degraded_iterations.clone(),
    };
    Ok((sidecar, trace))
}

/// Aggregate of best-so-far at one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationStat {
    pub mean: f64,
    /// Sample standard deviation over √count; 0 for a single run.
    pub stderr: f64,
    pub count: usize,
}

impl IterationStat {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        IterationStat { mean, stderr, count: n }
    }
}

/// Final outcome of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub method: Method,
    pub seed: u64,
    pub best_y: f64,
    /// Observation at the recommended input.
    pub recommended_y: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub per_method: BTreeMap<Method, Vec<IterationStat>>,
    pub recommendations: Vec<Recommendation>,
    /// Files that could not be parsed, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
}

impl Summary {
    pub fn from_traces(traces: &[Trace]) -> Summary {
        let mut grouped: BTreeMap<Method, Vec<&Trace>> = BTreeMap::new();
        for t in traces {
            grouped.entry(t.method).or_default().push(t);
        }
        let per_method = grouped
            .into_iter()
            .map(|(method, runs)| {
                let len = runs.iter().map(|t| t.records.len()).max().unwrap_or(0);
                let stats = (0..len)
                    .map(|i| {
                        let values: Vec<f64> = runs.iter().filter_map(|t| t.records.get(i)).map(|r| r.best_y).collect();
                        IterationStat::from_values(&values)
                    })
                    .collect();
                (method, stats)
            })
            .collect();
        let mut recommendations: Vec<Recommendation> = traces
            .iter()
            .map(|t| Recommendation {
                method: t.method,
                seed: t.seed,
                best_y: t.best().unwrap_or(f64::NAN),
                recommended_y: t
                    .records
                    .iter()
                    .find(|r| r.x == t.recommendation)
                    .map_or(f64::NAN, |r| r.y),
                x: t.recommendation.clone(),
            })
            .collect();
        recommendations.sort_by_key(|r| (r.method, r.seed));
        Summary {
            per_method,
            recommendations,
            skipped: Vec::new(),
        }
    }

    pub fn final_stat(&self, method: Method) -> Option<IterationStat> {
        self.per_method.get(&method).and_then(|s| s.last().copied())
    }

    /// Long-format CSV: `method,iter,mean,stderr,count`.
    pub fn to_long_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method", "iter", "mean", "stderr", "count"])?;
        for (method, stats) in &self.per_method {
            for (i, s) in stats.iter().enumerate() {
                w.write_record([
                    method.label().to_string(),
                    i.to_string(),
                    s.mean.to_string(),
                    s.stderr.to_string(),
                    s.count.to_string(),
                ])?;
            }
        }
        csv_string(w)
    }

    /// `method,seed,best_y,recommended_y,x_0..`.
    pub fn recommendations_csv(&self) -> Result<String> {
        let d = self.recommendations.iter().map(|r| r.x.len()).max().unwrap_or(0);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = ["method", "seed", "best_y", "recommended_y"].map(String::from).to_vec();
        header.extend((0..d).map(|i| format!("x_{i}")));
        w.write_record(&header)?;
        for r in &self.recommendations {
            let mut row = vec![r.method.label().to_string(), r.seed.to_string(), r.best_y.to_string(), r.recommended_y.to_string()];
            row.extend(r.x.iter().map(f64::to_string));
            row.resize(header.len(), String::new());
            w.write_record(row)?;
        }
        csv_string(w)
    }

    /// Human-readable final table.
    pub fn render(&self) -> String {
        let mut s = String::from("method  runs  iters  final mean ± stderr\n");
        for (method, stats) in &self.per_method {
            if let Some(last) = stats.last() {
                s += &format!(
                    "{:<6}  {:>4}  {:>5}  {:.6} ± {:.6}\n",
                    method.label(),
                    last.count,
                    stats.len(),
                    last.mean,
                    last.stderr
                );
            }
        }
        s
    }

    /// Writes the long-format CSV to `path` and the recommendation table
    /// next to it as `<stem>_recommendations.csv`.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(path, self.to_long_csv()?).map_err(|e| Error::io(path, e))?;
        let stem = path.file_stem().map_or("summary".into(), |s| s.to_string_lossy().into_owned());
        let rec_path = path.with_file_name(format!("{stem}_recommendations.csv"));
        let mut f = fs::File::create(&rec_path).map_err(|e| Error::io(&rec_path, e))?;
        f.write_all(self.recommendations_csv()?.as_bytes())
            .map_err(|e| Error::io(&rec_path, e))?;
        Ok(rec_path)
    }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Aggregates every trace in `dir`; malformed files are listed in
/// [`Summary::skipped`].
pub fn report(dir: &Path) -> Result<Summary> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let mut traces = Vec::new();
    let mut skipped = Vec::new();
    for p in paths {
        match read_trace(&p) {
            Ok((_, t)) if !t.records.is_empty() => traces.push(t),
            Ok(_) => skipped.push((p, "trace has no records".into())),
            Err(e) => skipped.push((p, e.to_string())),
        }
    }
    if traces.is_empty() {
        return Err(Error::EmptyInput(dir.to_path_buf()));
    }
    let mut summary = Summary::from_traces(&traces);
    summary.skipped = skipped;
    Ok(summary)
}
