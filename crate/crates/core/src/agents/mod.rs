//! Answer-producing debate agents.
//!
//! Three backends implement [`Agent`]: a seeded synthetic model
//! ([`SyntheticAgent`]), fixed per-round scripts ([`ScriptedAgent`]), and a
//! chat-completion client ([`RemoteAgent`]).

mod dataset;
mod prompt;
mod remote;
mod synthetic;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Stream;
use crate::uq::{canonical_number, normalize_answer};

pub use dataset::{load_dataset, parse_dataset, DatasetError};
pub use prompt::{first_sentence, render_prompt, SYSTEM_PROMPT};
pub use remote::{RemoteAgent, RemoteConfig, API_KEY_ENV};
pub use synthetic::{synthetic_answer, ScriptedAgent, SyntheticAgent, SyntheticAgentParams};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("request failed after {attempts} attempt(s): {reason}")]
    Http { attempts: usize, reason: String },
    #[error("malformed chat-completion response: {0}")]
    InvalidResponse(String),
    #[error("invalid agent parameters: {0}")]
    InvalidParams(String),
}

/// One benchmark item. `gold` holds the normalized gold answer; for
/// multiple-choice items it is an option letter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QARecord {
    pub id: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    #[serde(rename = "answer")]
    pub gold: String,
}

impl QARecord {
    pub fn numeric(id: &str, question: &str, gold: &str) -> Self {
        QARecord { id: id.into(), question: question.into(), choices: None, gold: gold.into() }
    }

    pub fn multiple_choice(id: &str, question: &str, choices: &[&str], gold: &str) -> Self {
        QARecord {
            id: id.into(),
            question: question.into(),
            choices: Some(choices.iter().map(|c| c.to_string()).collect()),
            gold: gold.into(),
        }
    }

    /// Valid option letters, `A` onwards, for multiple-choice items.
    pub fn option_letters(&self) -> Vec<char> {
        self.choices
            .as_ref()
            .map(|c| (b'A'..).take(c.len().min(26)).map(char::from).collect())
            .unwrap_or_default()
    }

    pub fn is_numeric(&self) -> bool {
        self.choices.is_none() && canonical_number(&self.gold).is_some()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCost {
    pub prompt: u64,
    pub completion: u64,
}

impl TokenCost {
    pub fn new(prompt: u64, completion: u64) -> Self {
        TokenCost { prompt, completion }
    }

    pub fn total(&self) -> u64 {
        self.prompt + self.completion
    }
}

impl std::ops::Add for TokenCost {
    type Output = TokenCost;

    fn add(self, rhs: TokenCost) -> TokenCost {
        TokenCost { prompt: self.prompt + rhs.prompt, completion: self.completion + rhs.completion }
    }
}

impl std::ops::AddAssign for TokenCost {
    fn add_assign(&mut self, rhs: TokenCost) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for TokenCost {
    fn sum<I: Iterator<Item = TokenCost>>(iter: I) -> TokenCost {
        iter.fold(TokenCost::default(), |a, b| a + b)
    }
}

/// One agent's response in one round. `answer` is `None` when the response
/// was unparsable; such messages abstain from voting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentMessage {
    pub round: usize,
    pub sender: usize,
    pub answer: Option<String>,
    pub rationale: String,
    pub token_cost: TokenCost,
}

impl AgentMessage {
    pub fn is_abstention(&self) -> bool {
        self.answer.is_none()
    }
}

/// What an agent sees when asked to answer.
#[derive(Debug, Clone, Copy)]
pub struct Turn<'a> {
    pub item: &'a QARecord,
    pub round: usize,
    pub agent: usize,
    /// Previous-round messages of the agent's current neighbors, by sender.
    pub neighbors: &'a [AgentMessage],
}

pub trait Agent: Send + Sync {
    fn respond(&self, turn: &Turn<'_>, rng: &mut Stream) -> Result<AgentMessage, AgentError>;
}

impl<A: Agent + ?Sized> Agent for Box<A> {
    fn respond(&self, turn: &Turn<'_>, rng: &mut Stream) -> Result<AgentMessage, AgentError> {
        (**self).respond(turn, rng)
    }
}

/// Token proxy used when a backend reports no usage: `ceil(bytes / 4)`.
pub fn count_tokens(text: &str) -> u64 {
    (text.len() as u64).div_ceil(4)
}

/// Most frequent answer and its count; ties go to the lexicographically
/// smallest answer. `None` when there is nothing to count.
pub fn plurality<'a>(answers: impl IntoIterator<Item = &'a str>) -> Option<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for a in answers {
        *counts.entry(a).or_default() += 1;
    }
    let best = counts.values().copied().max()?;
    counts.into_iter().find(|&(_, c)| c == best).map(|(a, c)| (a.to_string(), c))
}

/// Plurality over the parsable answers of `messages`.
pub fn message_plurality(messages: &[AgentMessage]) -> Option<(String, usize)> {
    plurality(messages.iter().filter_map(|m| m.answer.as_deref()))
}

fn letter_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b([A-Z])\b").expect("valid regex"))
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"-?\$?\d[\d,]*(?:\.\d+)?").expect("valid regex"))
}

fn final_answer_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)final answer\s*[:\-]?\s*([^\n]+)").expect("valid regex"))
}

/// Pulls the answer out of a free-text response.
///
/// Multiple-choice items take the last standalone valid option letter;
/// numeric items the last number; other items the text following the last
/// "Final answer:". The result is normalized; `None` marks the response as
/// unparsable.
pub fn extract_answer(raw: &str, item: &QARecord) -> Option<String> {
    if item.choices.is_some() {
        let letters = item.option_letters();
        return letter_re()
            .captures_iter(raw)
            .filter_map(|c| c[1].chars().next())
            .filter(|c| letters.contains(c))
            .last()
            .map(|c| c.to_string());
    }
    if item.is_numeric() {
        return number_re().find_iter(raw).last().and_then(|m| canonical_number(m.as_str()));
    }
    final_answer_re()
        .captures_iter(raw)
        .last()
        .and_then(|c| normalize_answer(&c[1]))
}
