//! Per-agent uncertainty from sampled answers.
//!
//! Sampled answers are clustered by exact equality of their normalized form
//! (see [`normalize_answer`]); uncertainty is the Shannon entropy, in nats,
//! of the cluster frequencies. Belief divergence between two agents is the
//! total variation distance between their cluster distributions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentError, QARecord};
use crate::rng::{sub_stream, Stream};

/// Cluster key used for samples from which no answer could be extracted.
pub const UNPARSABLE_CLUSTER: &str = "<unparsable>";

pub const DEFAULT_UQ_SAMPLES: usize = 5;

#[derive(Debug, Error)]
pub enum UqError {
    #[error("answer distribution is empty")]
    EmptyDistribution,
    #[error("answer `{0}` has a zero count")]
    ZeroCount(String),
    #[error("at least one sample is required")]
    NoSamples,
    #[error(transparent)]
    Agent(#[from] AgentError),
}

/// Canonical form of a short answer.
///
/// Numbers are parsed and printed canonically (`"8.0"` and `"8"` agree,
/// thousands separators are dropped); a single letter is upper-cased so
/// option letters compare equal; anything else is lower-cased with
/// punctuation removed and whitespace collapsed. Returns `None` when nothing
/// is left.
pub fn normalize_answer(raw: &str) -> Option<String> {
    let trimmed = raw.trim().trim_end_matches(['.', '!', '?', ';', ':']).trim();
    if let Some(number) = canonical_number(trimmed) {
        return Some(number);
    }
    let cleaned: String = trimmed
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ");
    let mut chars = cleaned.chars();
    match (chars.next(), chars.next()) {
        (None, _) => None,
        (Some(c), None) if c.is_ascii_alphabetic() => Some(c.to_ascii_uppercase().to_string()),
        _ => Some(cleaned.to_lowercase()),
    }
}

/// Parses `s` as a plain decimal number (optional sign, `$` prefix, `%`
/// suffix and comma separators tolerated) and prints it canonically.
pub fn canonical_number(s: &str) -> Option<String> {
    let s = s.trim();
    let s = s.strip_prefix('$').unwrap_or(s);
    let s = s.strip_suffix('%').unwrap_or(s);
    let digits: String = s.chars().filter(|&c| c != ',').collect();
    let body = digits.strip_prefix(['-', '+']).unwrap_or(&digits);
    let valid = !body.is_empty()
        && body.chars().all(|c| c.is_ascii_digit() || c == '.')
        && body.chars().filter(|&c| c == '.').count() <= 1
        && body.chars().any(|c| c.is_ascii_digit());
    if !valid {
        return None;
    }
    let value: f64 = digits.parse().ok()?;
    if !value.is_finite() {
        return None;
    }
    let value = if value == 0.0 { 0.0 } else { value };
    if value.fract() == 0.0 && value.abs() < 1e15 {
        Some(format!("{}", value as i64))
    } else {
        Some(format!("{value}"))
    }
}

/// Tally of normalized answers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerDistribution {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl AnswerDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts<S: Into<String>>(counts: impl IntoIterator<Item = (S, u64)>) -> Result<Self, UqError> {
        let mut d = Self::new();
        for (answer, count) in counts {
            let answer = answer.into();
            if count == 0 {
                return Err(UqError::ZeroCount(answer));
            }
            *d.counts.entry(answer).or_default() += count;
            d.total += count;
        }
        Ok(d)
    }

    pub fn from_answers<S: AsRef<str>>(answers: impl IntoIterator<Item = S>) -> Self {
        let mut d = Self::new();
        for a in answers {
            d.record(a.as_ref());
        }
        d
    }

    pub fn record(&mut self, answer: &str) {
        *self.counts.entry(answer.to_string()).or_default() += 1;
        self.total += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, answer: &str) -> u64 {
        self.counts.get(answer).copied().unwrap_or(0)
    }

    pub fn clusters(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(a, &c)| (a.as_str(), c))
    }

    pub fn probability(&self, answer: &str) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(answer) as f64 / self.total as f64
        }
    }
}

/// Shannon entropy (nats) of the cluster frequencies.
pub fn semantic_entropy(d: &AnswerDistribution) -> Result<f64, UqError> {
    if d.total == 0 {
        return Err(UqError::EmptyDistribution);
    }
    let total = d.total as f64;
    let h: f64 = d
        .counts
        .values()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum();
    // A single cluster gives -1·ln 1 = -0.0; report +0.
    Ok(h.max(0.0))
}

/// Total variation distance `½ Σ |p_a(c) − p_b(c)|` over the union of
/// clusters.
pub fn divergence(a: &AnswerDistribution, b: &AnswerDistribution) -> Result<f64, UqError> {
    if a.total == 0 || b.total == 0 {
        return Err(UqError::EmptyDistribution);
    }
    // Summing over the sorted union keeps the result exactly symmetric.
    let clusters: BTreeSet<&str> = a.counts.keys().chain(b.counts.keys()).map(String::as_str).collect();
    let sum: f64 = clusters.into_iter().map(|c| (a.probability(c) - b.probability(c)).abs()).sum();
    Ok((0.5 * sum).min(1.0))
}

/// Something that can be asked the same question repeatedly.
pub trait AnswerSource {
    /// Produces sample number `index`; `Ok(None)` means the response carried
    /// no extractable answer.
    fn sample(&mut self, item: &QARecord, index: usize, rng: &mut Stream) -> Result<Option<String>, AgentError>;
}

/// Queries `source` `samples` times and tallies the normalized answers.
///
/// Sample `i` draws from its own sub-stream of `seed`, so the tally does not
/// depend on the order in which samples are taken. Unparsable samples are
/// tallied under [`UNPARSABLE_CLUSTER`].
pub fn sample_distribution(
    source: &mut impl AnswerSource,
    item: &QARecord,
    samples: usize,
    seed: u64,
) -> Result<AnswerDistribution, UqError> {
    if samples == 0 {
        return Err(UqError::NoSamples);
    }
    let mut dist = AnswerDistribution::new();
    for i in 0..samples {
        let mut rng = sub_stream(seed, &[i as u64], "uq-sample");
        let answer = source.sample(item, i, &mut rng)?;
        match answer.as_deref().and_then(normalize_answer) {
            Some(a) => dist.record(&a),
            None => dist.record(UNPARSABLE_CLUSTER),
        }
    }
    Ok(dist)
}

/// Uncertainty of one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentUncertainty {
    pub agent: usize,
    pub distribution: AnswerDistribution,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub per_agent: Vec<AgentUncertainty>,
    /// Agents by ascending entropy.
    pub ranking_confident: Vec<usize>,
    /// Agents by descending entropy.
    pub ranking_uncertain: Vec<usize>,
}

impl UncertaintyReport {
    /// Builds a report from one distribution per agent, indexed by position.
    pub fn from_distributions(dists: Vec<AnswerDistribution>) -> Result<Self, UqError> {
        let entries = dists
            .into_iter()
            .enumerate()
            .map(|(agent, distribution)| {
                let entropy = semantic_entropy(&distribution)?;
                Ok(AgentUncertainty { agent, distribution, entropy })
            })
            .collect::<Result<Vec<_>, UqError>>()?;
        Ok(Self::from_entries(entries))
    }

    /// Builds a report from precomputed entries; rankings break ties by lower
    /// agent index.
    pub fn from_entries(per_agent: Vec<AgentUncertainty>) -> Self {
        let mut confident: Vec<(usize, f64)> = per_agent.iter().map(|e| (e.agent, e.entropy)).collect();
        confident.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let mut uncertain = confident.clone();
        uncertain.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        UncertaintyReport {
            per_agent,
            ranking_confident: confident.into_iter().map(|(a, _)| a).collect(),
            ranking_uncertain: uncertain.into_iter().map(|(a, _)| a).collect(),
        }
    }

    pub fn entropy(&self, agent: usize) -> Option<f64> {
        self.per_agent.iter().find(|e| e.agent == agent).map(|e| e.entropy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(pairs: &[(&str, u64)]) -> AnswerDistribution {
        AnswerDistribution::from_counts(pairs.iter().map(|&(a, c)| (a, c))).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(semantic_entropy(&dist(&[("8", 4)])).unwrap(), 0.0);
        let h = semantic_entropy(&dist(&[("8", 2), ("6", 2)])).unwrap();
        assert!((h - std::f64::consts::LN_2).abs() < 1e-12);
        // -(0.75 ln 0.75 + 0.25 ln 0.25), evaluated independently.
        let h = semantic_entropy(&dist(&[("8", 3), ("6", 1)])).unwrap();
        assert!((h - 0.562_335_144_618_808_6).abs() < 1e-12);
        assert!(matches!(semantic_entropy(&AnswerDistribution::new()), Err(UqError::EmptyDistribution)));
    }

    #[test]
    fn divergence_examples() {
        let a = dist(&[("A", 1)]);
        let b = dist(&[("B", 1)]);
        assert_eq!(divergence(&a, &b).unwrap(), 1.0);
        assert_eq!(divergence(&a, &a).unwrap(), 0.0);
        let x = dist(&[("A", 3), ("B", 1)]);
        let y = dist(&[("A", 1), ("B", 3)]);
        assert!((divergence(&x, &y).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(divergence(&a, &AnswerDistribution::new()), Err(UqError::EmptyDistribution)));
    }

    #[test]
    fn zero_counts_are_rejected() {
        assert!(matches!(AnswerDistribution::from_counts([("A", 0)]), Err(UqError::ZeroCount(_))));
    }

    #[test]
    fn normalization_rules() {
        assert_eq!(normalize_answer("8.0").as_deref(), Some("8"));
        assert_eq!(normalize_answer(" 1,234 ").as_deref(), Some("1234"));
        assert_eq!(normalize_answer("$18.50").as_deref(), Some("18.5"));
        assert_eq!(normalize_answer("-3.").as_deref(), Some("-3"));
        assert_eq!(normalize_answer("-0").as_deref(), Some("0"));
        assert_eq!(normalize_answer("b").as_deref(), Some("B"));
        assert_eq!(normalize_answer("(C)").as_deref(), Some("C"));
        assert_eq!(normalize_answer("  The  Mitochondria! ").as_deref(), Some("the mitochondria"));
        assert_eq!(normalize_answer(" ?! "), None);
        assert_eq!(normalize_answer("1.2.3").as_deref(), Some("123"));
    }

    #[test]
    fn rankings_break_ties_by_index() {
        let entries = [0.5, 0.1, 0.5, 0.0]
            .iter()
            .enumerate()
            .map(|(agent, &entropy)| AgentUncertainty { agent, distribution: dist(&[("A", 1)]), entropy })
            .collect();
        let report = UncertaintyReport::from_entries(entries);
        assert_eq!(report.ranking_confident, vec![3, 1, 0, 2]);
        assert_eq!(report.ranking_uncertain, vec![0, 2, 1, 3]);
    }
}
