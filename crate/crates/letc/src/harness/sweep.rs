//! Scenario-by-configuration sweeps with a delimited results table.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::dataset::{GraphOptions, SpeedDataset};
use crate::harness::scenario::{apply_scenario, MaskScenario};
use crate::solver::{evaluate, solve, Metrics, SolverConfig, TemporalModel};

/// One sweep cell result. Failed cells carry the error text instead of
/// metrics so a sweep never aborts halfway.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub scenario: String,
    pub seed: u64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub tau: usize,
    pub metrics: Option<Metrics>,
    pub iterations: usize,
    pub converged: bool,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

/// Mean and standard deviation of the metrics across the seeds of one
/// scenario/configuration group.
#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub scenario: String,
    pub lambda1: f64,
    pub lambda2: f64,
    pub tau: usize,
    pub runs: usize,
    pub failures: usize,
    pub mae_mean: f64,
    pub mae_std: f64,
    pub rmse_mean: f64,
    pub rmse_std: f64,
}

const TABLE_HEADER: &str = "scenario,seed,lambda1,lambda2,tau,mae,rmse,wmape,iters,seconds";

impl SweepReport {
    /// Delimited results table. Metric cells use the shortest exact decimal
    /// representation so parsing them back recovers the value bit for bit;
    /// failed cells leave the metric columns empty.
    pub fn to_table(&self) -> String {
        let mut out = String::from(TABLE_HEADER);
        out.push('\n');
        for row in &self.rows {
            let (mae, rmse, wmape) = match &row.metrics {
                Some(m) => (
                    format!("{}", m.mae),
                    format!("{}", m.rmse),
                    m.wmape.map(|w| format!("{w}")).unwrap_or_default(),
                ),
                None => (String::new(), String::new(), String::new()),
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                row.scenario,
                row.seed,
                row.lambda1,
                row.lambda2,
                row.tau,
                mae,
                rmse,
                wmape,
                row.iterations,
                row.seconds
            )
            .expect("writing to a string cannot fail");
        }
        out
    }

    /// Aggregates rows over seeds. Groups follow first-appearance order.
    pub fn summaries(&self) -> Vec<SweepSummary> {
        let mut order: Vec<(String, u64)> = Vec::new();
        let mut groups: std::collections::HashMap<(String, u64), Vec<&SweepRow>> =
            std::collections::HashMap::new();
        for row in &self.rows {
            let key = (
                row.scenario.clone(),
                config_fingerprint(row.lambda1, row.lambda2, row.tau),
            );
            if !groups.contains_key(&key) {
                order.push(key.clone());
            }
            groups.entry(key).or_default().push(row);
        }
        order
            .into_iter()
            .map(|key| {
                let rows = &groups[&key];
                let ok: Vec<&&SweepRow> = rows.iter().filter(|r| r.metrics.is_some()).collect();
                let maes: Vec<f64> = ok.iter().map(|r| r.metrics.unwrap().mae).collect();
                let rmses: Vec<f64> = ok.iter().map(|r| r.metrics.unwrap().rmse).collect();
                SweepSummary {
                    scenario: rows[0].scenario.clone(),
                    lambda1: rows[0].lambda1,
                    lambda2: rows[0].lambda2,
                    tau: rows[0].tau,
                    runs: rows.len(),
                    failures: rows.len() - ok.len(),
                    mae_mean: mean(&maes),
                    mae_std: std_dev(&maes),
                    rmse_mean: mean(&rmses),
                    rmse_std: std_dev(&rmses),
                }
            })
            .collect()
    }
}

fn config_fingerprint(lambda1: f64, lambda2: f64, tau: usize) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    use std::hash::{Hash, Hasher};
    lambda1.to_bits().hash(&mut h);
    lambda2.to_bits().hash(&mut h);
    tau.hash(&mut h);
    h.finish()
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Runs the Cartesian product of scenarios and configurations. Cells run in
/// parallel; each owns an independent solve. Row order is scenario-major
/// and deterministic regardless of thread count.
pub fn run_sweep(
    ds: &SpeedDataset,
    scenarios: &[MaskScenario],
    configs: &[SolverConfig],
    graph_options: &GraphOptions,
) -> Result<SweepReport> {
    if scenarios.is_empty() || configs.is_empty() {
        return Err(Error::parameter("sweep grids must be nonempty"));
    }
    let spatial = ds.spatial_graph(graph_options)?;
    let cells: Vec<(usize, usize)> = (0..scenarios.len())
        .flat_map(|s| (0..configs.len()).map(move |c| (s, c)))
        .collect();
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(si, ci)| {
            let scenario = &scenarios[si];
            let config = &configs[ci];
            let started = Instant::now();
            let outcome = (|| -> Result<(Option<Metrics>, usize, bool)> {
                let (obs, truth) = apply_scenario(ds, scenario)?;
                let temporal = TemporalModel::from_config(config, ds.intervals_per_day, ds.days)?;
                let solution = solve(&obs, &spatial, &temporal, config, ds.intervals_per_day)?;
                let metrics = if obs.holdout().is_empty() {
                    None
                } else {
                    Some(evaluate(&solution.z_hat, &truth, obs.holdout())?)
                };
                Ok((metrics, solution.iterations, solution.converged))
            })();
            let seconds = started.elapsed().as_secs_f64();
            match outcome {
                Ok((metrics, iterations, converged)) => SweepRow {
                    scenario: scenario.label(),
                    seed: scenario.seed,
                    lambda1: config.lambda1,
                    lambda2: config.lambda2,
                    tau: config.tau,
                    metrics,
                    iterations,
                    converged,
                    seconds,
                    error: None,
                },
                Err(e) => SweepRow {
                    scenario: scenario.label(),
                    seed: scenario.seed,
                    lambda1: config.lambda1,
                    lambda2: config.lambda2,
                    tau: config.tau,
                    metrics: None,
                    iterations: 0,
                    converged: false,
                    seconds,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(SweepReport { rows })
}
