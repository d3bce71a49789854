//! Scored sentence pairs and their JSONL interchange format.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One sentence pair with its model similarity (raw cosine, `[-1, 1]`) and
/// its human similarity rescaled to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub id: String,
    pub model_score: f64,
    pub human_score: f64,
}

impl ScoredPair {
    pub fn new(id: impl Into<String>, model_score: f64, human_score: f64) -> Result<Self> {
        let p = ScoredPair { id: id.into(), model_score, human_score };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.model_score) {
            return Err(Error::InvalidArgument(format!(
                "pair {}: model_score {} outside [-1, 1]",
                self.id, self.model_score
            )));
        }
        if !(0.0..=1.0).contains(&self.human_score) {
            return Err(Error::InvalidArgument(format!(
                "pair {}: human_score {} outside [0, 1]",
                self.id, self.human_score
            )));
        }
        Ok(())
    }
}

/// Builds pairs from parallel score slices with ids `"0"`, `"1"`, ….
/// Scores are not range-checked; this is for already-validated data.
pub fn from_scores(model: &[f64], human: &[f64]) -> Vec<ScoredPair> {
    model
        .iter()
        .zip(human)
        .enumerate()
        .map(|(i, (&m, &h))| ScoredPair { id: i.to_string(), model_score: m, human_score: h })
        .collect()
}

pub fn model_scores(pairs: &[ScoredPair]) -> Vec<f64> {
    pairs.iter().map(|p| p.model_score).collect()
}

pub fn human_scores(pairs: &[ScoredPair]) -> Vec<f64> {
    pairs.iter().map(|p| p.human_score).collect()
}

#[derive(Deserialize)]
struct PairLine {
    id: serde_json::Value,
    model_score: f64,
    human_score: f64,
}

/// Reads a pairs JSONL stream. Out-of-range scores are rejected with their
/// 1-based line number. Blank lines are skipped.
pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<ScoredPair>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: PairLine =
            serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        let id = match raw.id {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) => n.to_string(),
            other => return Err(Error::parse(i + 1, format!("id must be a string, got {other}"))),
        };
        let pair = ScoredPair { id, model_score: raw.model_score, human_score: raw.human_score };
        pair.validate().map_err(|e| Error::parse(i + 1, e.to_string()))?;
        out.push(pair);
    }
    Ok(out)
}

pub fn write_jsonl<W: Write>(pairs: &[ScoredPair], mut w: W) -> Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Vec<ScoredPair>> {
    let f = std::fs::File::open(path)?;
    read_jsonl(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_valid_lines_and_skips_blanks() {
        let text = r#"{"id":"a","model_score":0.8,"human_score":0.6}

{"id":7,"model_score":-0.2,"human_score":0.0}
"#;
        let pairs = read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[1].id, "7");
        assert_eq!(pairs[1].model_score, -0.2);
    }

    #[test]
    fn rejects_out_of_range_with_line_number() {
        let text = concat!(
            r#"{"id":"a","model_score":0.8,"human_score":0.6}"#,
            "\n",
            r#"{"id":"b","model_score":0.8,"human_score":1.2}"#,
            "\n"
        );
        match read_jsonl(text.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("human_score"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let bad_model = r#"{"id":"a","model_score":1.5,"human_score":0.6}"#;
        assert!(matches!(read_jsonl(bad_model.as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn round_trip() {
        let pairs = vec![
            ScoredPair::new("x", 0.123456789012345, 0.4).unwrap(),
            ScoredPair::new("y", -1.0, 1.0).unwrap(),
        ];
        let mut buf = Vec::new();
        write_jsonl(&pairs, &mut buf).unwrap();
        assert_eq!(read_jsonl(&buf[..]).unwrap(), pairs);
    }
}
