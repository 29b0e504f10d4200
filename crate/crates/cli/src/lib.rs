//! Commands behind the `deliberate` binary.
//!
//! Every command writes its artifacts into a staging directory first and
//! moves them into place only once all of them exist, so a failed command
//! leaves the output directory as it found it.

use std::fs;
use std::io;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use liquid_deliberation::analysis::{self, AnalysisError, BatchAggregate, BatchTable, RunSummary, CSV_HEADER};
use liquid_deliberation::engine::{self, EngineError};
use liquid_deliberation::scenario::{load_config, ConfigError, Scenario, ScenarioConfig};
use liquid_deliberation::StopReason;
use thiserror::Error;

pub const TRACE_FILE: &str = "trace.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PROPOSAL_FILE: &str = "final_proposal.json";
pub const CSV_FILE: &str = "batch.csv";
pub const AGGREGATE_FILE: &str = "aggregate.json";
pub const SEEDS_DIR: &str = "seeds";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("run hit the safety cap: {0}")]
    SafetyCap(EngineError),
    #[error("engine failure: {0}")]
    Engine(EngineError),
    #[error("cannot summarize trace: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("{failed} of {total} batch runs failed")]
    RowsFailed { failed: usize, total: usize },
    #[error("bad seed range {0:?}, expected A..B or A..=B or a single seed")]
    SeedRange(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    /// 1 config, 3 safety cap or failed batch rows, 4 IO, 5 other engine
    /// failures. 2 is left to argument parsing.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::SeedRange(_) => 1,
            CliError::SafetyCap(_) | CliError::RowsFailed { .. } => 3,
            CliError::Io { .. } => 4,
            CliError::Engine(_) | CliError::Analysis(_) => 5,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::SafetyCap(_) => CliError::SafetyCap(e),
            other => CliError::Engine(other),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `files` into `dir` all together or not at all.
pub fn publish(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let staging = tempfile::Builder::new()
        .prefix(".staging-")
        .tempdir_in(dir)
        .map_err(io_err(dir))?;
    for (name, bytes) in files {
        let path = staging.path().join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
    }
    let mut placed: Vec<PathBuf> = Vec::new();
    for (name, _) in files {
        let target = dir.join(name);
        if let Err(source) = fs::rename(staging.path().join(name), &target) {
            for p in &placed {
                let _ = fs::remove_file(p);
            }
            return Err(CliError::Io { path: target, source });
        }
        placed.push(target);
    }
    Ok(())
}

fn pretty<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("plain data serializes");
    out.push(b'\n');
    out
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub terminal_iteration: usize,
    pub stop_reason: StopReason,
    pub summary: RunSummary,
}

pub fn cmd_run(config: &Path, out: &Path) -> Result<RunReport, CliError> {
    let config = load_config(config)?;
    let scenario = Scenario::from_config(&config)?;
    let outcome = engine::run(&scenario)?;
    let summary = analysis::summarize(&outcome.trace)?;
    publish(
        out,
        &[
            (TRACE_FILE, outcome.trace.to_jsonl().into_bytes()),
            (SUMMARY_FILE, pretty(&summary)),
            (PROPOSAL_FILE, pretty(&outcome.final_proposal.values())),
        ],
    )?;
    Ok(RunReport {
        terminal_iteration: outcome.terminal_iteration,
        stop_reason: outcome.stop_reason,
        summary,
    })
}

/// Parses `A..B` (both ends included), `A..=B`, or a single seed.
pub fn parse_seed_range(text: &str) -> Result<RangeInclusive<u64>, CliError> {
    let bad = || CliError::SeedRange(text.to_string());
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
    let range = match text.split_once("..") {
        Some((a, b)) => num(a)?..=num(b.strip_prefix('=').unwrap_or(b))?,
        None => {
            let seed = num(text)?;
            seed..=seed
        }
    };
    if range.is_empty() {
        return Err(bad());
    }
    Ok(range)
}

#[derive(Debug, Clone)]
pub struct BatchReport {
    pub table: BatchTable,
    pub aggregate: BatchAggregate,
}

impl BatchReport {
    /// `Err` when any row failed.
    pub fn status(&self) -> Result<(), CliError> {
        match self.aggregate.failed {
            0 => Ok(()),
            failed => Err(CliError::RowsFailed {
                failed,
                total: self.aggregate.runs,
            }),
        }
    }
}

pub fn csv_bytes(table: &BatchTable) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER).expect("writing to memory");
    for record in table.csv_records() {
        writer.write_record(&record).expect("writing to memory");
    }
    writer.into_inner().expect("writing to memory")
}

/// Runs the template under every seed in `seeds`. Failed rows are part of
/// the report; see [`BatchReport::status`].
pub fn cmd_batch(
    template: &Path,
    seeds: RangeInclusive<u64>,
    out: &Path,
    jobs: usize,
) -> Result<BatchReport, CliError> {
    let template: ScenarioConfig = load_config(template)?;
    let seeds: Vec<u64> = seeds.collect();
    let table = analysis::batch(&template, &seeds, jobs);
    let aggregate = table.aggregate();

    for row in &table.rows {
        let dir = out.join(SEEDS_DIR).join(row.seed.to_string());
        match &row.outcome {
            Ok(summary) => publish(&dir, &[(SUMMARY_FILE, pretty(summary))])?,
            Err(message) => publish(&dir, &[("error.txt", format!("{message}\n").into_bytes())])?,
        }
    }
    publish(
        out,
        &[
            (CSV_FILE, csv_bytes(&table)),
            (AGGREGATE_FILE, pretty(&aggregate)),
        ],
    )?;
    Ok(BatchReport { table, aggregate })
}

pub fn cmd_validate(config: &Path) -> Result<ScenarioConfig, CliError> {
    let config = load_config(config)?;
    Scenario::from_config(&config)?;
    Ok(config)
}
