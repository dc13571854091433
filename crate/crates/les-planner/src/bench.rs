//! Multi-trial benchmark harness: seeded runs per sampler dispatched to a
//! worker pool, CSV emission for the time series, per-trial finals and
//! per-bucket aggregate summaries.
//!
//! Aggregation order is fixed (sampler order as given, then trial id), so
//! re-running with the same base seed reproduces the CSVs byte for byte in
//! iteration-budget mode.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::planner::{plan, PlannerConfig, PlannerMetrics, SamplerKind};
use crate::stats::{mean, median, sample_std};

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub samplers: Vec<SamplerKind>,
    pub trials: u32,
    pub base_seed: u64,
    /// Worker threads for trial dispatch; 0 picks the rayon default.
    pub workers: usize,
    /// Template for every run; sampler and seed are overwritten per trial.
    pub planner: PlannerConfig,
}

#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub env: String,
    pub trial_id: u32,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub metrics: PlannerMetrics,
}

pub struct BenchOutcome {
    /// Completed records in deterministic order.
    pub records: Vec<TrialRecord>,
    /// First error, if any trial failed; completed records are still
    /// returned so partial results can be flushed.
    pub failure: Option<Error>,
}

/// Run `trials` seeded runs per sampler. Trial `t` uses seed
/// `base_seed + t` for every sampler, pairing the comparisons.
pub fn run_benchmark(env: &Environment, config: &BenchConfig) -> Result<BenchOutcome> {
    if config.trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if config.samplers.is_empty() {
        return Err(Error::InvalidConfig("no samplers selected".into()));
    }
    let mut template = config.planner.clone();
    template.validate()?;
    env.validate()?;

    let tasks: Vec<(SamplerKind, u32)> = config
        .samplers
        .iter()
        .flat_map(|&s| (0..config.trials).map(move |t| (s, t)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;

    let results: Vec<(SamplerKind, u32, Result<PlannerMetrics>)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(sampler, trial)| {
                let mut run_config = template.clone();
                run_config.sampler = sampler;
                run_config.seed = config.base_seed + trial as u64;
                (sampler, trial, plan(env, &run_config))
            })
            .collect()
    });

    let mut records = Vec::with_capacity(results.len());
    let mut failure = None;
    for (sampler, trial, outcome) in results {
        match outcome {
            Ok(metrics) => records.push(TrialRecord {
                env: env.name.clone(),
                trial_id: trial,
                sampler,
                seed: config.base_seed + trial as u64,
                metrics,
            }),
            Err(e) => failure = failure.or(Some(e)),
        }
    }
    Ok(BenchOutcome { records, failure })
}

fn fmt_cost(cost: f64) -> String {
    if cost.is_infinite() {
        "inf".to_string()
    } else {
        format!("{cost}")
    }
}

fn fmt_elapsed(elapsed: f64) -> String {
    if elapsed.is_nan() {
        String::new()
    } else {
        format!("{elapsed:.3}")
    }
}

/// Time-series CSV, one row per recorded metrics sample.
pub fn records_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from("trial_id,sampler,elapsed_s,iterations,best_cost,rewires\n");
    for record in records {
        for row in &record.metrics.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                record.trial_id,
                record.sampler,
                fmt_elapsed(row.elapsed_s),
                row.iterations,
                fmt_cost(row.best_cost),
                row.rewires
            );
        }
    }
    out
}

/// Final per-trial outcomes.
pub fn finals_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from("trial_id,sampler,seed,final_cost,iterations,rewires,vertices\n");
    for record in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            record.trial_id,
            record.sampler,
            record.seed,
            fmt_cost(record.metrics.final_cost),
            record.metrics.iterations,
            record.metrics.rewires,
            record.metrics.vertices
        );
    }
    out
}

/// Per-(sampler, bucket) aggregates of the three tracked quantities. Under
/// a time budget the bucket axis is elapsed seconds; under an iteration
/// budget it is the iteration count. Unsolved trials feed the miss-rate
/// column and are excluded from the cost statistics.
pub fn emit_plot_data(records: &[TrialRecord], bucket: f64) -> Result<String> {
    if records.is_empty() {
        return Err(Error::InvalidRecords("no trial records".into()));
    }
    if !(bucket > 0.0) {
        return Err(Error::InvalidRecords("bucket must be positive".into()));
    }
    let env = &records[0].env;
    if records.iter().any(|r| &r.env != env) {
        return Err(Error::InvalidRecords(
            "records come from different environments".into(),
        ));
    }
    let time_axis = records
        .iter()
        .flat_map(|r| r.metrics.rows.first())
        .map(|row| !row.elapsed_s.is_nan())
        .next()
        .unwrap_or(true);
    let axis_of = |row: &crate::planner::MetricsRow| {
        if time_axis {
            row.elapsed_s
        } else {
            row.iterations as f64
        }
    };
    for record in records {
        if record
            .metrics
            .rows
            .iter()
            .any(|row| row.elapsed_s.is_nan() == time_axis)
        {
            return Err(Error::InvalidRecords(
                "records mix time-budget and iteration-budget runs".into(),
            ));
        }
    }

    let max_axis = records
        .iter()
        .flat_map(|r| r.metrics.rows.last())
        .map(axis_of)
        .fold(0.0f64, f64::max);
    let buckets = (max_axis / bucket).ceil().max(1.0) as usize;

    let mut samplers: Vec<SamplerKind> = Vec::new();
    for record in records {
        if !samplers.contains(&record.sampler) {
            samplers.push(record.sampler);
        }
    }

    let mut out = String::from(
        "sampler,bucket,trials,miss_rate,cost_mean,cost_median,cost_std,\
         rewires_mean,rewires_median,rewires_std,\
         iterations_mean,iterations_median,iterations_std\n",
    );
    for sampler in samplers {
        let group: Vec<&TrialRecord> =
            records.iter().filter(|r| r.sampler == sampler).collect();
        for k in 1..=buckets {
            let edge = bucket * k as f64;
            let mut costs = Vec::new();
            let mut misses = 0usize;
            let mut rewires = Vec::new();
            let mut iterations = Vec::new();
            for record in &group {
                // step-function value: last row at or before the bucket edge
                let row = record
                    .metrics
                    .rows
                    .iter()
                    .take_while(|row| axis_of(row) <= edge)
                    .last();
                let (cost, rw, it) = match row {
                    Some(row) => (row.best_cost, row.rewires as f64, row.iterations as f64),
                    None => (f64::INFINITY, 0.0, 0.0),
                };
                if cost.is_finite() {
                    costs.push(cost);
                } else {
                    misses += 1;
                }
                rewires.push(rw);
                iterations.push(it);
            }
            let n = group.len();
            let miss_rate = misses as f64 / n as f64;
            let cost_cells = if costs.is_empty() {
                ",,".to_string()
            } else {
                format!(
                    "{},{},{}",
                    mean(&costs),
                    median(&costs),
                    sample_std(&costs)
                )
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                sampler,
                edge,
                n,
                miss_rate,
                cost_cells,
                mean(&rewires),
                median(&rewires),
                sample_std(&rewires),
                mean(&iterations),
                median(&iterations),
                sample_std(&iterations)
            );
        }
    }
    Ok(out)
}
