//! Seeded experiment sweeps and their on-disk outputs.
//!
//! `run_experiment` debates every (topology, seed, item) triple and writes
//! `results.jsonl` (one [`ResultRecord`] per line), `summary.csv` and
//! `traces.csv`. Output bytes depend only on the config and dataset, never
//! on thread count or completion order.

mod config;
mod records;
mod run;
mod stats;
mod summary;

use thiserror::Error;

pub use config::{
    AgentSettings, Backend, ExperimentConfig, RewireSettings, RolesSettings, TopologyEntry, TopologyStatsSettings,
};
pub use records::{read_records, FailureRecord, ResultRecord, RoundUncertainty, TokenColumns};
pub use run::{run_experiment, run_items, ExperimentOutput, ERRORS_FILE, RESULTS_FILE, SUMMARY_FILE, TRACES_FILE};
pub use stats::{
    roles_sweep, topology_stats, write_roles_summary_csv, write_topology_stats_csv, RoleSummaryRow, TopologyStatsRow,
};
pub use summary::{summarize, write_summary_csv, write_traces_csv, Aggregator, Summary, SummaryRow, TraceRow};

use crate::agents::DatasetError;
use crate::engine::EngineError;
use crate::graph::GraphError;
use crate::roles::RolesError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("malformed results file: {0}")]
    Records(String),
    #[error("no records to summarize")]
    EmptyInput,
    #[error("{failed} debate(s) failed; first: {first}")]
    Failures { failed: usize, first: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Roles(#[from] RolesError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parses a seed list: comma-separated values and half-open `a..b` ranges,
/// e.g. `0..3,10` → `[0, 1, 2, 10]`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, ExperimentError> {
    let bad = |part: &str| ExperimentError::Config(format!("bad seed list entry `{part}`"));
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: u64 = lo.trim().parse().map_err(|_| bad(part))?;
            let hi: u64 = hi.trim().parse().map_err(|_| bad(part))?;
            seeds.extend(lo..hi);
        } else {
            seeds.push(part.parse().map_err(|_| bad(part))?);
        }
    }
    if seeds.is_empty() {
        return Err(ExperimentError::Config("empty seed list".into()));
    }
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..3,10").unwrap(), vec![0, 1, 2, 10]);
        assert_eq!(parse_seeds(" 5 ").unwrap(), vec![5]);
        assert!(parse_seeds("a").is_err());
        assert!(parse_seeds("").is_err());
    }
}
