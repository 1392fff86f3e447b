use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::records::{FailureRecord, ResultRecord};
use super::summary::{write_summary_csv, write_traces_csv, Aggregator, Summary};
use super::{ExperimentConfig, ExperimentError};
use crate::agents::{load_dataset, Agent, QARecord};
use crate::engine::{run_debate, DebateConfig};
use crate::rng::derive_seed;

pub const RESULTS_FILE: &str = "results.jsonl";
pub const ERRORS_FILE: &str = "errors.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TRACES_FILE: &str = "traces.csv";

#[derive(Debug)]
pub struct ExperimentOutput {
    pub records: Vec<ResultRecord>,
    pub failures: Vec<FailureRecord>,
    /// Summary accumulated while records were produced.
    pub summary: Option<Summary>,
    pub files: Vec<PathBuf>,
}

struct Job<'a> {
    topology: usize,
    seed: u64,
    item: &'a QARecord,
}

/// Debates every (topology, seed, item) triple in memory, in that nesting
/// order, on a pool of `cfg.threads()` workers.
pub fn run_items(
    cfg: &ExperimentConfig,
    items: &[QARecord],
) -> Result<(Vec<ResultRecord>, Vec<FailureRecord>), ExperimentError> {
    cfg.validate()?;
    let agents: Vec<Vec<Box<dyn Agent>>> = cfg.topologies.iter().map(|t| cfg.build_agents(t.n)).collect();
    let jobs: Vec<Job> = (0..cfg.topologies.len())
        .flat_map(|topology| cfg.seeds.iter().map(move |&seed| (topology, seed)))
        .flat_map(|(topology, seed)| items.iter().map(move |item| Job { topology, seed, item }))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads())
        .build()
        .map_err(|e| ExperimentError::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<ResultRecord, FailureRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let entry = &cfg.topologies[job.topology];
                let label = entry.label();
                let debate = DebateConfig {
                    topology: entry.spec(job.seed),
                    rounds: cfg.rounds,
                    seed: derive_seed(job.seed, &[], &format!("item:{}", job.item.id)),
                    rewire: entry.policy(),
                    uq_samples: cfg.uq_samples,
                };
                run_debate(&debate, &agents[job.topology], job.item)
                    .map(|state| ResultRecord::from_state(&state, job.item, &label, job.seed))
                    .map_err(|e| FailureRecord {
                        item: job.item.id.clone(),
                        topology: label.clone(),
                        seed: job.seed,
                        error: e.to_string(),
                    })
            })
            .collect()
    });
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }
    Ok((records, failures))
}

fn write_jsonl<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<(), ExperimentError> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut w, row).map_err(|e| ExperimentError::Records(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the configured sweep and writes its result files into
/// `cfg.output`. Records of successful debates are always written; if any
/// debate failed, diagnostics go to `errors.jsonl` and an error is returned
/// after everything has been flushed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    cfg.validate()?;
    let mut items = load_dataset(&cfg.dataset)?;
    if let Some(max) = cfg.max_items {
        items.truncate(max);
    }
    let (records, failures) = run_items(cfg, &items)?;

    fs::create_dir_all(&cfg.output)?;
    let mut files = Vec::new();
    let results_path = cfg.output.join(RESULTS_FILE);
    write_jsonl(&results_path, &records)?;
    files.push(results_path);

    let mut agg = Aggregator::new();
    for r in &records {
        agg.add(r);
    }
    let summary = if agg.is_empty() { None } else { Some(agg.finish()?) };
    if let Some(summary) = &summary {
        let path = cfg.output.join(SUMMARY_FILE);
        write_summary_csv(File::create(&path)?, summary)?;
        files.push(path);
        let path = cfg.output.join(TRACES_FILE);
        write_traces_csv(File::create(&path)?, summary)?;
        files.push(path);
    }

    let errors_path = cfg.output.join(ERRORS_FILE);
    if failures.is_empty() {
        if errors_path.exists() {
            fs::remove_file(&errors_path)?;
        }
    } else {
        write_jsonl(&errors_path, &failures)?;
        let first = &failures[0];
        return Err(ExperimentError::Failures {
            failed: failures.len(),
            first: format!("{} / seed {} / {}: {}", first.topology, first.seed, first.item, first.error),
        });
    }
    Ok(ExperimentOutput { records, failures, summary, files })
}
