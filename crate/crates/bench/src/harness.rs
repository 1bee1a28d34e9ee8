//! Monte-Carlo trials over paired seeds.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DVector;
use nano_filter::models::{simulate_benchmark, Benchmark, Trajectory};
use nano_filter::FilterKind;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::BenchConfig;
use crate::error::{BenchError, Result};
use crate::stats::{self, Summary, QUANTILE_METHOD};

/// Steps excluded from the per-step timing mean.
pub const TIMING_WARMUP_STEPS: usize = 5;
/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "NANO_BENCH_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    pub filter: String,
    /// `None` for diverged trials.
    pub rmse: Option<f64>,
    /// `x_t − x̂_{t|t}` for `t = 1..M` (fewer when the filter failed).
    pub errors: Vec<DVector<f64>>,
    pub mean_iters: f64,
    /// Wall time of each step in seconds.
    pub step_times: Vec<f64>,
    pub diverged: bool,
    /// Steps whose update diverged and fell back to the initializer belief. The
    /// trial keeps its RMSE; only hard failures mark it `diverged`.
    pub fallbacks: usize,
    /// First error reported by the filter, if any.
    pub failure: Option<String>,
}

impl TrialResult {
    /// Mean step time in milliseconds, excluding warmup steps when possible.
    pub fn mean_step_ms(&self) -> f64 {
        let times = if self.step_times.len() > TIMING_WARMUP_STEPS {
            &self.step_times[TIMING_WARMUP_STEPS..]
        } else {
            &self.step_times[..]
        };
        stats::mean(times) * 1e3
    }

    /// RMSE over the given state coordinates only.
    pub fn rmse_over(&self, dims: &[usize]) -> Option<f64> {
        if self.diverged || self.errors.is_empty() || dims.is_empty() {
            return None;
        }
        let total: f64 = self
            .errors
            .iter()
            .map(|e| dims.iter().map(|&i| e[i] * e[i]).sum::<f64>())
            .sum();
        Some((total / (self.errors.len() * dims.len()) as f64).sqrt())
    }
}

/// `√(Σ_t ‖x_t − x̂_t‖² / (M·n))` over `t = 1..M`; `truth` holds `x_1..x_M`.
pub fn rmse(truth: &[DVector<f64>], estimates: &[DVector<f64>]) -> Result<f64> {
    if truth.len() != estimates.len() || truth.is_empty() {
        return Err(BenchError::LengthMismatch {
            truth: truth.len(),
            estimates: estimates.len(),
        });
    }
    let n = truth[0].len();
    let mut total = 0.0;
    for (x, e) in truth.iter().zip(estimates) {
        if x.len() != e.len() {
            return Err(BenchError::LengthMismatch {
                truth: x.len(),
                estimates: e.len(),
            });
        }
        total += (x - e).norm_squared();
    }
    Ok((total / (truth.len() * n) as f64).sqrt())
}

/// Runs one filter over a simulated trajectory, starting from the benchmark's
/// initial belief. Filter failures mark the trial diverged instead of erroring.
pub fn run_trial(bench: &Benchmark, filter: &FilterKind, traj: &Trajectory) -> TrialResult {
    let m = traj.len();
    let mut belief = bench.initial.clone();
    let mut errors = Vec::with_capacity(m);
    let mut estimates = Vec::with_capacity(m);
    let mut step_times = Vec::with_capacity(m);
    let mut iterations = 0usize;
    let mut fallbacks = 0;
    let mut failure = None;
    for t in 0..m {
        let start = Instant::now();
        let step = filter.step(&belief, &traj.inputs[t], t, &traj.measurements[t], &bench.system);
        step_times.push(start.elapsed().as_secs_f64());
        let step = match step {
            Ok(s) => s,
            Err(e) => {
                failure = Some(format!("step {}: {e}", t + 1));
                break;
            }
        };
        if step.posterior.mean().iter().any(|v| !v.is_finite()) {
            failure = Some(format!("step {}: non-finite estimate", t + 1));
            break;
        }
        iterations += step.iterations;
        fallbacks += usize::from(step.fallback);
        errors.push(&traj.states[t + 1] - step.posterior.mean());
        estimates.push(step.posterior.mean().clone());
        belief = step.posterior;
    }
    let diverged = failure.is_some();
    let rmse = if diverged {
        None
    } else {
        rmse(&traj.states[1..], &estimates).ok()
    };
    TrialResult {
        seed: traj.seed,
        filter: filter.name().to_string(),
        rmse,
        mean_iters: iterations as f64 / errors.len().max(1) as f64,
        errors,
        step_times,
        diverged,
        fallbacks,
        failure,
    }
}

/// Simulates the trajectory for `seed` and runs `filter` on it.
pub fn run_trial_seed(cfg: &BenchConfig, filter: &FilterKind, seed: u64) -> Result<TrialResult> {
    let bench = cfg.benchmark()?;
    let traj = simulate_benchmark(&bench, cfg.horizon, seed)
        .map_err(|source| BenchError::Simulation { seed, source })?;
    Ok(run_trial(&bench, filter, &traj))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterSummary {
    pub trials: usize,
    pub diverged: usize,
    /// Over non-diverged trials.
    pub rmse: Option<Summary>,
    /// Mean of per-dimension RMSE over non-diverged trials.
    pub rmse_per_dim: Vec<f64>,
    pub mean_step_ms: f64,
    pub mean_iters: f64,
    /// Total fallback steps across all trials.
    pub fallbacks: usize,
    /// Trials with at least one fallback step.
    pub trials_with_fallback: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub system: String,
    pub noise: String,
    pub trials: usize,
    pub horizon: usize,
    pub base_seed: u64,
    pub config: String,
    pub version: String,
    pub timestamp: u64,
    pub quantile_method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub filters: BTreeMap<String, FilterSummary>,
    pub metadata: Metadata,
}

/// Aggregates `results` per filter; the outcome is independent of their order.
pub fn summarize(results: &[TrialResult], metadata: Metadata) -> BenchSummary {
    let mut groups: BTreeMap<&str, Vec<&TrialResult>> = BTreeMap::new();
    for r in results {
        groups.entry(&r.filter).or_default().push(r);
    }
    let filters = groups
        .into_iter()
        .map(|(name, mut trials)| {
            trials.sort_by_key(|r| r.seed);
            let ok: Vec<&TrialResult> = trials.iter().copied().filter(|r| !r.diverged).collect();
            let rmses: Vec<f64> = ok.iter().filter_map(|r| r.rmse).collect();
            let dims = ok.first().and_then(|r| r.errors.first()).map_or(0, |e| e.len());
            let rmse_per_dim = (0..dims)
                .map(|i| stats::mean(&ok.iter().filter_map(|r| r.rmse_over(&[i])).collect::<Vec<_>>()))
                .collect();
            let step_ms: Vec<f64> = trials.iter().map(|r| r.mean_step_ms()).collect();
            let iters: Vec<f64> = ok.iter().map(|r| r.mean_iters).collect();
            let summary = FilterSummary {
                trials: trials.len(),
                diverged: trials.len() - ok.len(),
                rmse: stats::summarize(&rmses),
                rmse_per_dim,
                mean_step_ms: stats::mean(&step_ms),
                mean_iters: stats::mean(&iters),
                fallbacks: trials.iter().map(|r| r.fallbacks).sum(),
                trials_with_fallback: trials.iter().filter(|r| r.fallbacks > 0).count(),
            };
            (name.to_string(), summary)
        })
        .collect();
    BenchSummary { filters, metadata }
}

fn metadata(cfg: &BenchConfig) -> Result<Metadata> {
    Ok(Metadata {
        system: cfg.system_name()?.to_string(),
        noise: cfg.noise_case()?.to_string(),
        trials: cfg.trials,
        horizon: cfg.horizon,
        base_seed: cfg.base_seed,
        config: cfg.to_toml(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        quantile_method: QUANTILE_METHOD.to_string(),
    })
}

/// Worker count from [`THREADS_ENV`], defaulting to the number of logical CPUs.
pub fn worker_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every configured filter on every seed. Each seed's trajectory is simulated
/// once and shared by all filters. Results are sorted by `(filter, seed)`.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<(BenchSummary, Vec<TrialResult>)> {
    cfg.validate()?;
    let bench = cfg.benchmark()?;
    let filters = cfg.filter_kinds()?;
    let seeds: Vec<u64> = cfg.seeds().collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads())
        .build()
        .map_err(|e| BenchError::Config(format!("worker pool: {e}")))?;
    let nested: Vec<Vec<TrialResult>> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let traj = simulate_benchmark(&bench, cfg.horizon, seed)
                    .map_err(|source| BenchError::Simulation { seed, source })?;
                Ok(filters.iter().map(|f| run_trial(&bench, f, &traj)).collect())
            })
            .collect::<Result<_>>()
    })?;
    let mut results: Vec<TrialResult> = nested.into_iter().flatten().collect();
    results.sort_by(|a, b| a.filter.cmp(&b.filter).then(a.seed.cmp(&b.seed)));
    let summary = summarize(&results, metadata(cfg)?);
    Ok((summary, results))
}
