use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::records::ResultRecord;
use super::ExperimentError;
use crate::engine::{trace_stability, TraceStability};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub topology: String,
    pub records: usize,
    pub accuracy: f64,
    /// Mean prompt + completion tokens per debated question.
    pub tokens_per_question: f64,
    pub uq_probe_tokens_per_question: f64,
    pub mean_abs_round_delta: f64,
    /// Per-round agreement std across runs, averaged over rounds.
    pub mean_round_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub topology: String,
    pub round: usize,
    pub mean_agreement: f64,
    pub std_agreement: f64,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub traces: Vec<TraceRow>,
    pub stability: BTreeMap<String, TraceStability>,
}

#[derive(Debug, Default)]
struct Group {
    correct: usize,
    tokens: u64,
    uq_tokens: u64,
    /// Keyed by (seed, item) so results do not depend on arrival order.
    agreement: BTreeMap<(u64, String), Vec<f64>>,
    accuracy: BTreeMap<(u64, String), Vec<f64>>,
}

/// Order-insensitive accumulation of result records, per topology.
#[derive(Debug, Default)]
pub struct Aggregator {
    groups: BTreeMap<String, Group>,
}

impl Aggregator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, record: &ResultRecord) {
        let group = self.groups.entry(record.topology.clone()).or_default();
        group.correct += usize::from(record.correct);
        group.tokens += record.tokens.prompt + record.tokens.completion;
        group.uq_tokens += record.tokens.uq_probe;
        let key = (record.seed, record.item.clone());
        group.agreement.insert(key.clone(), record.agreement.clone());
        group.accuracy.insert(key, record.accuracy.clone());
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn finish(&self) -> Result<Summary, ExperimentError> {
        if self.groups.is_empty() {
            return Err(ExperimentError::EmptyInput);
        }
        let mut rows = Vec::new();
        let mut traces = Vec::new();
        let mut stability = BTreeMap::new();
        for (topology, group) in &self.groups {
            let records = group.agreement.len();
            let agreement: Vec<Vec<f64>> = group.agreement.values().cloned().collect();
            let stats = stability_of(&agreement)?;
            let accuracy_curve = stability_of(&group.accuracy.values().cloned().collect::<Vec<_>>())?.mean_curve;
            for (round, ((&mean, &std), &acc)) in
                stats.mean_curve.iter().zip(&stats.per_round_std).zip(&accuracy_curve).enumerate()
            {
                traces.push(TraceRow {
                    topology: topology.clone(),
                    round,
                    mean_agreement: mean,
                    std_agreement: std,
                    mean_accuracy: acc,
                });
            }
            let count = records as f64;
            rows.push(SummaryRow {
                topology: topology.clone(),
                records,
                accuracy: group.correct as f64 / count,
                tokens_per_question: group.tokens as f64 / count,
                uq_probe_tokens_per_question: group.uq_tokens as f64 / count,
                mean_abs_round_delta: stats.mean_abs_round_delta,
                mean_round_std: stats.per_round_std.iter().sum::<f64>() / stats.per_round_std.len().max(1) as f64,
            });
            stability.insert(topology.clone(), stats);
        }
        Ok(Summary { rows, traces, stability })
    }
}

/// [`trace_stability`], extended to a single trace (zero spread).
fn stability_of(traces: &[Vec<f64>]) -> Result<TraceStability, ExperimentError> {
    match traces {
        [single] => Ok(trace_stability(&[single.clone(), single.clone()])?),
        _ => Ok(trace_stability(traces)?),
    }
}

/// Groups records by topology: accuracy, tokens per question and the
/// agreement-trace stability statistics.
pub fn summarize(records: &[ResultRecord]) -> Result<Summary, ExperimentError> {
    let mut agg = Aggregator::new();
    for r in records {
        agg.add(r);
    }
    agg.finish()
}

pub fn write_summary_csv<W: Write>(out: W, summary: &Summary) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for row in &summary.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_traces_csv<W: Write>(out: W, summary: &Summary) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for row in &summary.traces {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::records::TokenColumns;

    fn record(topology: &str, seed: u64, item: &str, correct: bool, agreement: Vec<f64>) -> ResultRecord {
        ResultRecord {
            item: item.into(),
            topology: topology.into(),
            seed,
            final_answer: Some("8".into()),
            correct,
            accuracy: agreement.clone(),
            agreement,
            tokens: TokenColumns { prompt: 60, completion: 40, uq_probe: 0 },
            shortcuts: Vec::new(),
            uncertainty: Vec::new(),
        }
    }

    #[test]
    fn all_correct_records() {
        let recs: Vec<_> = (0..3).map(|s| record("ring", s, "q", true, vec![1.0, 1.0])).collect();
        let s = summarize(&recs).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.rows[0].accuracy, 1.0);
        assert_eq!(s.rows[0].tokens_per_question, 100.0);
    }

    #[test]
    fn topologies_are_grouped() {
        let recs = vec![record("ring", 0, "q", true, vec![0.5, 1.0]), record("complete", 0, "q", false, vec![1.0, 1.0])];
        let s = summarize(&recs).unwrap();
        let names: Vec<_> = s.rows.iter().map(|r| r.topology.as_str()).collect();
        assert_eq!(names, vec!["complete", "ring"]);
        assert_eq!(s.rows[0].accuracy, 0.0);
        assert_eq!(s.traces.len(), 4);
    }

    #[test]
    fn stability_reuses_trace_arithmetic() {
        let recs = vec![
            record("sw", 0, "q", true, vec![0.5, 0.75, 1.0]),
            record("sw", 1, "q", true, vec![0.5, 0.85, 0.9]),
        ];
        let s = summarize(&recs).unwrap();
        assert!((s.rows[0].mean_abs_round_delta - 0.225).abs() < 1e-12);
        let means: Vec<f64> = s.traces.iter().map(|t| t.mean_agreement).collect();
        for (got, want) in means.iter().zip([0.5, 0.8, 0.95]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn arrival_order_does_not_matter() {
        let mut recs: Vec<_> = (0..6)
            .map(|s| record(if s % 2 == 0 { "a" } else { "b" }, s, "q", s % 3 == 0, vec![0.1 * s as f64, 0.3, 0.7]))
            .collect();
        let forward = summarize(&recs).unwrap();
        recs.reverse();
        assert_eq!(forward, summarize(&recs).unwrap());
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(summarize(&[]), Err(ExperimentError::EmptyInput)));
    }

    #[test]
    fn csv_headers_are_fixed() {
        let s = summarize(&[record("ring", 0, "q", true, vec![1.0, 1.0])]).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "topology,records,accuracy,tokens_per_question,uq_probe_tokens_per_question,mean_abs_round_delta,mean_round_std"
        );
        let mut buf = Vec::new();
        write_traces_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "topology,round,mean_agreement,std_agreement,mean_accuracy");
    }
}
