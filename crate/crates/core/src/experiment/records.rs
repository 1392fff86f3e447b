use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::agents::QARecord;
use crate::engine::{DebateState, ShortcutEvent};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenColumns {
    pub prompt: u64,
    pub completion: u64,
    pub uq_probe: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundUncertainty {
    pub round: usize,
    pub entropy: Vec<f64>,
}

/// One JSONL line: the outcome of one (topology, seed, item) debate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub item: String,
    pub topology: String,
    pub seed: u64,
    pub final_answer: Option<String>,
    pub correct: bool,
    pub agreement: Vec<f64>,
    pub accuracy: Vec<f64>,
    pub tokens: TokenColumns,
    pub shortcuts: Vec<ShortcutEvent>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub uncertainty: Vec<RoundUncertainty>,
}

impl ResultRecord {
    pub fn from_state(state: &DebateState, item: &QARecord, topology: &str, seed: u64) -> Self {
        let uncertainty = state
            .per_round
            .iter()
            .filter_map(|r| {
                r.uncertainty.as_ref().map(|rep| RoundUncertainty {
                    round: r.round,
                    entropy: rep.per_agent.iter().map(|e| e.entropy).collect(),
                })
            })
            .collect();
        ResultRecord {
            item: item.id.clone(),
            topology: topology.to_string(),
            seed,
            final_answer: state.final_answer.clone(),
            correct: state.final_answer.as_deref() == Some(item.gold.as_str()),
            agreement: state.per_round.iter().map(|r| r.consensus.agreement).collect(),
            accuracy: state.per_round.iter().map(|r| r.consensus.accuracy).collect(),
            tokens: TokenColumns {
                prompt: state.tokens_total.prompt,
                completion: state.tokens_total.completion,
                uq_probe: state.uq_probe_tokens.total(),
            },
            shortcuts: state.shortcuts.clone(),
            uncertainty,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

/// Diagnostic line for a debate that could not finish.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub item: String,
    pub topology: String,
    pub seed: u64,
    pub error: String,
}

pub fn read_records(reader: impl BufRead) -> Result<Vec<ResultRecord>, ExperimentError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| ExperimentError::Records(format!("line {}: {e}", idx + 1)))?;
        out.push(record);
    }
    Ok(out)
}
