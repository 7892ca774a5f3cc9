//! Fixture transcripts: canned prompt/response pairs with expected parses,
//! used by the offline test suite and by the CLI's `--fixtures` replay mode.

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::LlmError;

/// One recorded ambiguity exchange. `expected_parse.parse_mode` is
/// `"structured"`, `"heuristic"`, or `"error"` (the reply defeats both
/// parse modes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityTranscript {
    pub id: String,
    pub scene: Vec<String>,
    #[serde(default)]
    pub prompt: Option<String>,
    pub response: String,
    pub expected_parse: ExpectedAmbiguity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedAmbiguity {
    pub a_amb: Option<u8>,
    pub parse_mode: String,
}

/// One recorded confidence-elicitation exchange; `expected_parse` is the
/// confidence in [0, 1], or null when parsing should fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceTranscript {
    pub id: String,
    #[serde(default)]
    pub prompt: Option<String>,
    pub response: String,
    pub expected_parse: Option<f64>,
}

fn load_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, LlmError> {
    let file = std::fs::File::open(path).map_err(|source| LlmError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = std::io::BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| LlmError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line).map_err(|e| LlmError::Fixture {
            path: path.display().to_string(),
            line: idx + 1,
            msg: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn load_ambiguity_transcripts(path: impl AsRef<Path>) -> Result<Vec<AmbiguityTranscript>, LlmError> {
    load_jsonl(path.as_ref())
}

pub fn load_confidence_transcripts(
    path: impl AsRef<Path>,
) -> Result<Vec<ConfidenceTranscript>, LlmError> {
    load_jsonl(path.as_ref())
}
