use std::collections::HashSet;
use std::fs;
use std::path::Path;

use thiserror::Error;

use super::QARecord;
use crate::uq::normalize_answer;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read dataset {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error("dataset has no items")]
    Empty,
}

pub fn load_dataset(path: &Path) -> Result<Vec<QARecord>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    parse_dataset(&text)
}

/// Parses JSONL items (`id`, `question`, optional `choices`, `answer`),
/// normalizing gold answers. A multiple-choice gold may be given as the
/// option letter or as the exact option text.
pub fn parse_dataset(text: &str) -> Result<Vec<QARecord>, DatasetError> {
    let mut seen = HashSet::new();
    let mut items = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let invalid = |reason: String| DatasetError::Invalid { line: line_no, reason };
        let mut item: QARecord =
            serde_json::from_str(line).map_err(|source| DatasetError::Json { line: line_no, source })?;
        if item.id.trim().is_empty() {
            return Err(invalid("empty id".into()));
        }
        if !seen.insert(item.id.clone()) {
            return Err(invalid(format!("duplicate id `{}`", item.id)));
        }
        if let Some(choices) = &item.choices {
            if choices.is_empty() {
                return Err(invalid("empty choices list".into()));
            }
            if let Some(pos) = choices.iter().position(|c| c.trim() == item.gold.trim()) {
                item.gold = item.option_letters()[pos].to_string();
            }
        }
        item.gold = normalize_answer(&item.gold).ok_or_else(|| invalid("empty gold answer".into()))?;
        if item.choices.is_some() {
            let valid = item.gold.chars().count() == 1
                && item.option_letters().contains(&item.gold.chars().next().unwrap_or(' '));
            if !valid {
                return Err(invalid(format!("gold `{}` is not a valid option letter", item.gold)));
            }
        }
        items.push(item);
    }
    if items.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_normalizes() {
        let text = r#"{"id":"g1","question":"2+2?","answer":"4.0"}

{"id":"a1","question":"Pick","choices":["red","blue"],"answer":"b"}
{"id":"a2","question":"Pick","choices":["red","blue"],"answer":"red"}
"#;
        let items = parse_dataset(text).unwrap();
        assert_eq!(items.len(), 3);
        assert_eq!(items[0].gold, "4");
        assert!(items[0].is_numeric());
        assert_eq!(items[1].gold, "B");
        assert_eq!(items[2].gold, "A");
    }

    #[test]
    fn rejects_bad_items() {
        let dup = "{\"id\":\"x\",\"question\":\"q\",\"answer\":\"1\"}\n{\"id\":\"x\",\"question\":\"q\",\"answer\":\"2\"}";
        assert!(matches!(parse_dataset(dup), Err(DatasetError::Invalid { line: 2, .. })));
        let bad_letter = r#"{"id":"x","question":"q","choices":["a","b"],"answer":"D"}"#;
        assert!(matches!(parse_dataset(bad_letter), Err(DatasetError::Invalid { .. })));
        let no_gold = r#"{"id":"x","question":"q","answer":"  "}"#;
        assert!(matches!(parse_dataset(no_gold), Err(DatasetError::Invalid { .. })));
        assert!(matches!(parse_dataset("{not json"), Err(DatasetError::Json { line: 1, .. })));
        assert!(matches!(parse_dataset("\n"), Err(DatasetError::Empty)));
    }
}
