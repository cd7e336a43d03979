//! Runs the attack over a sampled test set for several exponents.

use std::path::PathBuf;

use levy_attack::attack::run_attack;
use levy_attack::data::sample_indices;
use levy_attack::metrics::{NormTable, Report};
use levy_attack::{Config, Dataset, Model, Outcome, RngSeed};
use rayon::prelude::*;
use serde::Serialize;

use crate::data_source::DataSource;
use crate::dump::dump_result;

/// Environment variable capping the sweep's worker count.
pub const THREADS_ENV: &str = "LEVY_ATTACK_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub alphas: Vec<f64>,
    pub samples: usize,
    pub max_steps: usize,
    pub psi: f64,
    pub seed: u64,
    /// `None` reads [`THREADS_ENV`], then falls back to rayon's default.
    pub threads: Option<usize>,
    pub dump_dir: Option<PathBuf>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            alphas: vec![2.0, 1.5, 1.0, 0.5],
            samples: 1000,
            max_steps: 5000,
            psi: 1e-7,
            seed: 0,
            threads: None,
            dump_dir: None,
        }
    }
}

/// Everything needed to reproduce a report, embedded in it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub alphas: Vec<f64>,
    pub samples: usize,
    pub max_steps: usize,
    pub psi: f64,
    pub seed: u64,
    pub dataset: DataSource,
    pub model: String,
    pub attack: AttackKnobs,
    pub median_convention: &'static str,
}

/// Attack settings shared by every sample; alpha and seed vary per run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackKnobs {
    pub initial_delta: f64,
    pub initial_epsilon: f64,
    pub adaptation_window: usize,
    pub adaptation_factor: f64,
    pub probe_interval: usize,
    pub max_init_attempts: usize,
    pub orthogonal_target: f64,
    pub shrink_target: f64,
    pub epsilon_cap: f64,
}

impl From<&Config> for AttackKnobs {
    fn from(c: &Config) -> Self {
        Self {
            initial_delta: c.initial_delta,
            initial_epsilon: c.initial_epsilon,
            adaptation_window: c.adaptation_window,
            adaptation_factor: c.adaptation_factor,
            probe_interval: c.probe_interval,
            max_init_attempts: c.max_init_attempts,
            orthogonal_target: c.orthogonal_target,
            shrink_target: c.shrink_target,
            epsilon_cap: c.epsilon_cap,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub report: Report<SweepRecord>,
    /// Dataset indices attacked, in report order.
    pub indices: Vec<usize>,
    /// `results[a][i]` is sample `indices[i]` attacked at `alphas[a]`.
    pub results: Vec<Vec<Outcome>>,
    /// Sum of the per-worker oracle counters.
    pub oracle_queries: u64,
}

/// Attack configuration of one sample: defaults plus the sweep's knobs and
/// a seed that depends only on the master seed and the dataset index.
pub fn sample_config(opts: &SweepOptions, alpha: f64, index: usize) -> Config {
    Config {
        alpha,
        max_steps: opts.max_steps,
        psi: opts.psi,
        seed: RngSeed(opts.seed).derive(index as u64),
        ..Config::default()
    }
}

pub fn thread_count(opts: &SweepOptions) -> Option<usize> {
    opts.threads.or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
    })
}

pub fn run_sweep(
    oracle: &Model,
    data: &Dataset,
    source: &DataSource,
    model_desc: &str,
    opts: &SweepOptions,
) -> Result<SweepOutcome, String> {
    if data.is_empty() {
        return Err("dataset is empty".into());
    }
    if data.dim() != oracle.input_dim() {
        return Err(format!(
            "model expects {}-dimensional inputs, dataset has {}",
            oracle.input_dim(),
            data.dim()
        ));
    }
    for &a in &opts.alphas {
        sample_config(opts, a, 0)
            .validate()
            .map_err(|e| e.to_string())?;
    }
    // Index draw uses a stream no sample seed can collide with.
    let indices = sample_indices(
        data.len(),
        opts.samples,
        RngSeed(opts.seed).derive(u64::MAX),
    );

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(opts) {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| e.to_string())?;

    let mut results = Vec::with_capacity(opts.alphas.len());
    let mut rows = Vec::with_capacity(opts.alphas.len());
    let mut oracle_queries = 0u64;
    for &alpha in &opts.alphas {
        let runs: Vec<Result<(Outcome, u64), String>> = pool.install(|| {
            indices
                .par_iter()
                .map(|&i| {
                    let mut worker = oracle.fork();
                    let cfg = sample_config(opts, alpha, i);
                    let r = run_attack(&mut worker, &data.points[i], data.labels[i], &cfg)
                        .map_err(|e| e.to_string())?;
                    Ok((r, worker.query_count()))
                })
                .collect()
        });
        let mut row = Vec::with_capacity(runs.len());
        for run in runs {
            let (r, q) = run?;
            oracle_queries += q;
            row.push(r);
        }
        rows.push(NormTable::from_results(alpha, &row));
        results.push(row);
    }

    if let Some(dir) = &opts.dump_dir {
        let (h, w) = source.image_shape(data.dim());
        for (a, row) in results.iter().enumerate() {
            for (&i, r) in indices.iter().zip(row) {
                dump_result(
                    dir,
                    h,
                    w,
                    &data.bounds,
                    &data.points[i],
                    data.labels[i].0,
                    r,
                    opts.alphas[a],
                    i,
                )?;
            }
        }
    }

    let record = SweepRecord {
        alphas: opts.alphas.clone(),
        samples: indices.len(),
        max_steps: opts.max_steps,
        psi: opts.psi,
        seed: opts.seed,
        dataset: source.clone(),
        model: model_desc.to_string(),
        attack: AttackKnobs::from(&sample_config(opts, 2.0, 0)),
        median_convention: "lower",
    };
    Ok(SweepOutcome {
        report: Report {
            config: record,
            per_alpha: rows,
        },
        indices,
        results,
        oracle_queries,
    })
}

pub fn report_json(report: &Report<SweepRecord>) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}
