use std::fmt::Write;

use super::Turn;

pub const SYSTEM_PROMPT: &str = "You are one of several agents debating a question. Answer carefully and concisely.";

const ANSWER_INSTRUCTION: &str = "Explain your reasoning in one sentence, then end with \"Final answer: X\".";

/// Renders the debate prompt for a turn.
///
/// Without neighbor messages (round 0, or an isolated node) the prompt holds
/// only the question. Otherwise each neighbor's answer and the first
/// sentence of its rationale are listed, followed by an instruction to
/// reconsider.
pub fn render_prompt(turn: &Turn<'_>) -> String {
    let item = turn.item;
    let mut out = format!("Question: {}\n", item.question);
    if let Some(choices) = &item.choices {
        for (letter, choice) in item.option_letters().iter().zip(choices) {
            let _ = writeln!(out, "{letter}. {choice}");
        }
    }
    if turn.neighbors.is_empty() {
        out.push_str("Answer the question. ");
    } else {
        out.push_str("Answers from your neighbors in the previous round:\n");
        for msg in turn.neighbors {
            let answer = msg.answer.as_deref().unwrap_or("no answer");
            let _ = writeln!(out, "- Agent {}: {}. {}", msg.sender, answer, first_sentence(&msg.rationale));
        }
        out.push_str("Reconsider your answer in light of these responses. ");
    }
    out.push_str(ANSWER_INSTRUCTION);
    out
}

/// Text up to and including the first sentence terminator followed by
/// whitespace (or the end of the text), trimmed.
pub fn first_sentence(text: &str) -> &str {
    let text = text.trim();
    let bytes = text.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if matches!(b, b'.' | b'!' | b'?') && bytes.get(i + 1).is_none_or(|c| c.is_ascii_whitespace()) {
            return &text[..=i];
        }
    }
    text.lines().next().unwrap_or("")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentMessage, QARecord, TokenCost};

    #[test]
    fn first_sentence_cuts_at_terminator() {
        assert_eq!(first_sentence("  It is 8. Then more."), "It is 8.");
        assert_eq!(first_sentence("Pi is 3.14 roughly! ok"), "Pi is 3.14 roughly!");
        assert_eq!(first_sentence("no terminator\nsecond line"), "no terminator");
        assert_eq!(first_sentence(""), "");
    }

    #[test]
    fn round_zero_and_debate_prompts() {
        let item = QARecord::multiple_choice("q", "Pick one?", &["x", "y"], "A");
        let turn = Turn { item: &item, round: 0, agent: 0, neighbors: &[] };
        assert_eq!(
            render_prompt(&turn),
            "Question: Pick one?\nA. x\nB. y\nAnswer the question. Explain your reasoning in one sentence, then end with \"Final answer: X\"."
        );
        let msgs = [AgentMessage {
            round: 0,
            sender: 3,
            answer: Some("B".into()),
            rationale: "Because y. Also more.".into(),
            token_cost: TokenCost::default(),
        }];
        let turn = Turn { item: &item, round: 1, agent: 0, neighbors: &msgs };
        let prompt = render_prompt(&turn);
        assert!(prompt.contains("- Agent 3: B. Because y.\n"));
        assert!(!prompt.contains("Also more"));
        assert!(prompt.contains("Reconsider your answer"));
    }
}
