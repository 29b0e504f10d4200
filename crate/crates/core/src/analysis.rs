//! Run summaries computed from traces, and seeded batches of runs.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine;
use crate::preference::Distance;
use crate::ratio::ratio_to_f64;
use crate::scenario::{Scenario, ScenarioConfig};
use crate::trace::{EventBody, ScenarioHeader, StopReason, Trace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("gini is undefined when every power is zero")]
    UndefinedMetric,
    #[error("negative power in gini input")]
    NegativePower,
    #[error("trace has no scenario header")]
    MissingHeader,
    #[error("trace ends without a stop event")]
    Truncated,
    #[error("trace is inconsistent: {0}")]
    Inconsistent(String),
}

/// Gini coefficient of a power vector, computed exactly and rounded once.
pub fn gini(powers: &[BigRational]) -> Result<f64, AnalysisError> {
    if powers.iter().any(Signed::is_negative) {
        return Err(AnalysisError::NegativePower);
    }
    let total: BigRational = powers.iter().sum();
    if total.is_zero() {
        return Err(AnalysisError::UndefinedMetric);
    }
    let mut sorted = powers.to_vec();
    sorted.sort();
    let n = sorted.len() as i64;
    // sum over i of (2i - n - 1) p_(i), 1-based ranks
    let weighted: BigRational = sorted
        .iter()
        .enumerate()
        .map(|(i, p)| p * BigRational::from_integer((2 * (i as i64 + 1) - n - 1).into()))
        .sum();
    Ok(ratio_to_f64(
        &(weighted / (total * BigRational::from_integer(n.into()))),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalDistance {
    /// Euclidean distance to the unweighted mean of all optima.
    pub mean: f64,
    /// Euclidean distance to the mean weighted by initial power.
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    #[serde(rename = "T")]
    pub terminal_iteration: usize,
    pub stop_reason: StopReason,
    pub gini_series: Vec<f64>,
    pub top_share_series: Vec<f64>,
    pub total_power_series: Vec<f64>,
    pub final_proposal: Vec<f64>,
    pub final_distance: FinalDistance,
}

impl RunSummary {
    pub fn final_gini(&self) -> f64 {
        self.gini_series.last().copied().unwrap_or(0.0)
    }

    pub fn max_top_share(&self) -> f64 {
        self.top_share_series.iter().copied().fold(0.0, f64::max)
    }
}

fn centroid(points: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let dim = points.first().map_or(0, Vec::len);
    let total: f64 = weights.iter().sum();
    (0..dim)
        .map(|m| {
            points
                .iter()
                .zip(weights)
                .map(|(p, w)| p[m] * w)
                .sum::<f64>()
                / total
        })
        .collect()
}

/// Summary of a completed run, read back from its trace alone.
pub fn summarize(trace: &Trace) -> Result<RunSummary, AnalysisError> {
    let mut header: Option<&ScenarioHeader> = None;
    let mut gini_series = Vec::new();
    let mut total_power_series = Vec::new();
    let mut totals: Vec<BigRational> = Vec::new();
    let mut top_share_series: Vec<f64> = Vec::new();
    let mut final_proposal: Option<Vec<f64>> = None;
    let mut stop: Option<(StopReason, usize)> = None;

    for event in trace.events() {
        match &event.body {
            EventBody::Scenario(h) => header = Some(h),
            EventBody::Stage(report) => {
                if event.t != gini_series.len() {
                    return Err(AnalysisError::Inconsistent(format!(
                        "stage report for iteration {} out of order",
                        event.t
                    )));
                }
                gini_series.push(match gini(&report.powers) {
                    Ok(g) => g,
                    Err(AnalysisError::UndefinedMetric) => 0.0,
                    Err(e) => return Err(e),
                });
                total_power_series.push(ratio_to_f64(&report.total_power));
                totals.push(report.total_power.clone());
                top_share_series.push(0.0);
            }
            EventBody::Committee(c) => {
                let total = totals.get(event.t).ok_or_else(|| {
                    AnalysisError::Inconsistent(format!("committee before stage report at {}", event.t))
                })?;
                let seated: BigRational = c.members.iter().map(|s| s.power.clone()).sum();
                top_share_series[event.t] = ratio_to_f64(&(seated / total));
            }
            EventBody::Proposal(p) => final_proposal = Some(p.after.clone()),
            EventBody::Stop(s) => stop = Some((s.reason, s.terminal_iteration)),
            _ => {}
        }
    }

    let header = header.ok_or(AnalysisError::MissingHeader)?;
    let (stop_reason, terminal_iteration) = stop.ok_or(AnalysisError::Truncated)?;
    if gini_series.len() != terminal_iteration + 1 {
        return Err(AnalysisError::Truncated);
    }
    let final_proposal = final_proposal.unwrap_or_else(|| header.initial_proposal.clone());
    let ones = vec![1.0; header.optima.len()];
    let weights: Vec<f64> = header.initial_powers.iter().map(ratio_to_f64).collect();
    let mean = centroid(&header.optima, &ones);
    let weighted = centroid(&header.optima, &weights);
    let final_distance = FinalDistance {
        mean: Distance::Euclidean.distance(&final_proposal, &mean),
        weighted: Distance::Euclidean.distance(&final_proposal, &weighted),
    };
    Ok(RunSummary {
        seed: header.seed,
        terminal_iteration,
        stop_reason,
        gini_series,
        top_share_series,
        total_power_series,
        final_proposal,
        final_distance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchRow {
    pub seed: u64,
    /// The summary, or why the run failed.
    pub outcome: Result<RunSummary, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchAggregate {
    pub runs: usize,
    pub failed: usize,
    pub mean_t: Option<f64>,
    pub median_t: Option<f64>,
    pub stop_reasons: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchTable {
    pub rows: Vec<BatchRow>,
}

pub const CSV_HEADER: [&str; 7] = [
    "seed",
    "T",
    "stop_reason",
    "final_gini",
    "max_top_share",
    "final_distance_mean",
    "final_distance_weighted",
];

impl BatchTable {
    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(|r| r.outcome.is_err())
    }

    /// Aggregates over the rows; independent of row order.
    pub fn aggregate(&self) -> BatchAggregate {
        let mut ts: Vec<usize> = self
            .rows
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().map(|s| s.terminal_iteration))
            .collect();
        ts.sort_unstable();
        let mut stop_reasons = BTreeMap::new();
        for r in &self.rows {
            let key = match &r.outcome {
                Ok(s) => s.stop_reason.as_str().to_string(),
                Err(_) => "failed".to_string(),
            };
            *stop_reasons.entry(key).or_insert(0) += 1;
        }
        let mean_t = (!ts.is_empty()).then(|| ts.iter().sum::<usize>() as f64 / ts.len() as f64);
        let median_t = (!ts.is_empty()).then(|| {
            let mid = ts.len() / 2;
            if ts.len() % 2 == 1 {
                ts[mid] as f64
            } else {
                (ts[mid - 1] + ts[mid]) as f64 / 2.0
            }
        });
        BatchAggregate {
            runs: self.rows.len(),
            failed: self.rows.iter().filter(|r| r.outcome.is_err()).count(),
            mean_t,
            median_t,
            stop_reasons,
        }
    }

    /// CSV rows in seed order. Failed runs keep their seed and report
    /// `failed` with empty metric columns.
    pub fn csv_records(&self) -> Vec<[String; 7]> {
        self.rows
            .iter()
            .map(|r| match &r.outcome {
                Ok(s) => [
                    r.seed.to_string(),
                    s.terminal_iteration.to_string(),
                    s.stop_reason.to_string(),
                    s.final_gini().to_string(),
                    s.max_top_share().to_string(),
                    s.final_distance.mean.to_string(),
                    s.final_distance.weighted.to_string(),
                ],
                Err(_) => [
                    r.seed.to_string(),
                    String::new(),
                    "failed".to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ],
            })
            .collect()
    }
}

/// Runs one seed start to finish and summarizes its trace.
pub fn run_seed(config: &ScenarioConfig) -> Result<(engine::RunOutcome, RunSummary), String> {
    let scenario = Scenario::from_config(config).map_err(|e| e.to_string())?;
    let outcome = engine::run(&scenario).map_err(|e| e.to_string())?;
    let summary = summarize(&outcome.trace).map_err(|e| e.to_string())?;
    Ok((outcome, summary))
}

/// Runs `make(seed)` for every seed on a pool of `jobs` threads (0 picks
/// the core count). Rows come
/// back in the order of `seeds` whatever the scheduling.
pub fn batch_with<F>(seeds: &[u64], jobs: usize, make: F) -> BatchTable
where
    F: Fn(u64) -> ScenarioConfig + Sync,
{
    let work = || {
        seeds
            .par_iter()
            .map(|&seed| BatchRow {
                seed,
                outcome: run_seed(&make(seed)).map(|(_, s)| s),
            })
            .collect()
    };
    let rows = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    };
    BatchTable { rows }
}

/// The template re-run under each seed.
pub fn batch(template: &ScenarioConfig, seeds: &[u64], jobs: usize) -> BatchTable {
    batch_with(seeds, jobs, |seed| template.with_seed(seed))
}
