use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{count_tokens, message_plurality, render_prompt, Agent, AgentError, AgentMessage, QARecord, TokenCost, Turn};
use crate::rng::Stream;
use crate::uq::{normalize_answer, AnswerSource};

const INDEPENDENT_RATIONALE: &str = "I worked through the problem on my own.";
const CONFORM_RATIONALE: &str = "I adopted the most common answer among my neighbors.";
const SCRIPTED_RATIONALE: &str = "Scripted response.";

/// Parameters of the synthetic debater.
///
/// `competence` is the chance of answering correctly when answering alone;
/// `conformity` the chance of copying the neighbor plurality once neighbor
/// messages are available; wrong answers are drawn from `wrong1..=wrongD`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticAgentParams {
    pub competence: f64,
    pub conformity: f64,
    pub distractors: u32,
}

impl Default for SyntheticAgentParams {
    fn default() -> Self {
        SyntheticAgentParams { competence: 0.6, conformity: 0.7, distractors: 3 }
    }
}

impl SyntheticAgentParams {
    pub fn new(competence: f64, conformity: f64, distractors: u32) -> Self {
        SyntheticAgentParams { competence, conformity, distractors }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.competence) || !unit.contains(&self.conformity) {
            return Err(AgentError::InvalidParams(format!(
                "competence {} and conformity {} must lie in [0, 1]",
                self.competence, self.conformity
            )));
        }
        if self.distractors == 0 {
            return Err(AgentError::InvalidParams("distractors must be at least 1".into()));
        }
        Ok(())
    }
}

/// One synthetic response.
///
/// With parsable neighbor messages, the agent copies their plurality with
/// probability `conformity`. Otherwise it answers gold with probability
/// `competence`, else a uniformly chosen distractor. Token costs are the
/// byte proxy of the rendered prompt and the response text.
pub fn synthetic_answer(params: &SyntheticAgentParams, turn: &Turn<'_>, rng: &mut Stream) -> AgentMessage {
    let plurality = message_plurality(turn.neighbors);
    let (answer, rationale) = match plurality {
        Some((answer, _)) if rng.random::<f64>() < params.conformity => (answer, CONFORM_RATIONALE),
        _ => (independent_answer(params, turn.item, rng), INDEPENDENT_RATIONALE),
    };
    build_message(turn, Some(answer), rationale)
}

fn independent_answer(params: &SyntheticAgentParams, item: &QARecord, rng: &mut Stream) -> String {
    if rng.random::<f64>() < params.competence {
        item.gold.clone()
    } else {
        format!("wrong{}", rng.random_range(1..=params.distractors.max(1)))
    }
}

fn build_message(turn: &Turn<'_>, answer: Option<String>, rationale: &str) -> AgentMessage {
    let prompt = render_prompt(turn);
    let completion = format!("{} Final answer: {}", rationale, answer.as_deref().unwrap_or("none"));
    AgentMessage {
        round: turn.round,
        sender: turn.agent,
        answer,
        rationale: rationale.to_string(),
        token_cost: TokenCost::new(count_tokens(&prompt), count_tokens(&completion)),
    }
}

/// Synthetic backend with an optional forced round-0 answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticAgent {
    pub params: SyntheticAgentParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opening: Option<String>,
}

impl SyntheticAgent {
    pub fn new(params: SyntheticAgentParams) -> Self {
        SyntheticAgent { params, opening: None }
    }

    pub fn with_opening(params: SyntheticAgentParams, opening: &str) -> Self {
        SyntheticAgent { params, opening: normalize_answer(opening) }
    }
}

impl Agent for SyntheticAgent {
    fn respond(&self, turn: &Turn<'_>, rng: &mut Stream) -> Result<AgentMessage, AgentError> {
        if let (0, Some(opening)) = (turn.round, &self.opening) {
            return Ok(build_message(turn, Some(opening.clone()), SCRIPTED_RATIONALE));
        }
        Ok(synthetic_answer(&self.params, turn, rng))
    }
}

impl AnswerSource for SyntheticAgent {
    fn sample(&mut self, item: &QARecord, _index: usize, rng: &mut Stream) -> Result<Option<String>, AgentError> {
        let turn = Turn { item, round: 0, agent: 0, neighbors: &[] };
        Ok(synthetic_answer(&self.params, &turn, rng).answer)
    }
}

/// Replays a fixed answer sequence: entry `t` is used for round `t` (or
/// sample `t`), the last entry repeats. `None` entries are abstentions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedAgent {
    pub script: Vec<Option<String>>,
}

impl ScriptedAgent {
    pub fn new<S: AsRef<str>>(answers: impl IntoIterator<Item = S>) -> Self {
        ScriptedAgent { script: answers.into_iter().map(|a| normalize_answer(a.as_ref())).collect() }
    }

    fn at(&self, index: usize) -> Option<String> {
        self.script.get(index).or(self.script.last()).cloned().flatten()
    }
}

impl Agent for ScriptedAgent {
    fn respond(&self, turn: &Turn<'_>, _rng: &mut Stream) -> Result<AgentMessage, AgentError> {
        Ok(build_message(turn, self.at(turn.round), SCRIPTED_RATIONALE))
    }
}

impl AnswerSource for ScriptedAgent {
    fn sample(&mut self, _item: &QARecord, index: usize, _rng: &mut Stream) -> Result<Option<String>, AgentError> {
        Ok(self.at(index))
    }
}
