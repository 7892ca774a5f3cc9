//! Task records, JSONL persistence, synthetic generation, and model
//! checkpoints.
//!
//! A [`TaskRecord`] is one planning episode: the task encoding vector, the
//! ambiguity label, the (optional) execution outcome, and a train/test split
//! tag. Datasets are immutable once constructed, so every record downstream
//! code sees has already passed validation.

mod checkpoint;
pub mod synth;

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta, LayerBlob, ModelKind, NamedNet,
    CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use synth::{make_synthetic, SyntheticConfig};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: embedding dimension {got} does not match dataset dimension {expected}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: field {field} must be 0 or 1, got {value}")]
    LabelOutOfRange {
        line: usize,
        field: &'static str,
        value: i64,
    },
    #[error("line {line}: embedding must be non-empty and finite")]
    BadEmbedding { line: usize },
    #[error("invalid record {id:?}: {msg}")]
    InvalidRecord { id: String, msg: String },
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Test => write!(f, "test"),
        }
    }
}

/// One planning episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: String,
    /// Task encoding vector `T`.
    pub embedding: Vec<f64>,
    /// 1 = ambiguity present, 0 = information complete.
    pub ambiguous: u8,
    /// Execution outcome; absent when the plan was never executed
    /// (e.g. a clarification was requested instead).
    pub success: Option<u8>,
    pub split: Split,
}

impl TaskRecord {
    fn validate(&self) -> Result<(), DataError> {
        if self.embedding.is_empty() || self.embedding.iter().any(|v| !v.is_finite()) {
            return Err(DataError::InvalidRecord {
                id: self.id.clone(),
                msg: "embedding must be non-empty and finite".into(),
            });
        }
        if self.ambiguous > 1 {
            return Err(DataError::InvalidRecord {
                id: self.id.clone(),
                msg: format!("ambiguous must be 0 or 1, got {}", self.ambiguous),
            });
        }
        if let Some(s) = self.success {
            if s > 1 {
                return Err(DataError::InvalidRecord {
                    id: self.id.clone(),
                    msg: format!("success must be 0 or 1, got {s}"),
                });
            }
        }
        Ok(())
    }
}

/// An ordered, validated collection of [`TaskRecord`]s with a common
/// embedding dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<TaskRecord>,
    dim: usize,
}

impl Dataset {
    /// Validates every record invariant; an empty record list yields an
    /// empty dataset with dimension 0.
    pub fn new(records: Vec<TaskRecord>) -> Result<Self, DataError> {
        let dim = records.first().map(|r| r.embedding.len()).unwrap_or(0);
        let mut seen = HashSet::with_capacity(records.len());
        for record in &records {
            record.validate()?;
            if record.embedding.len() != dim {
                return Err(DataError::InvalidRecord {
                    id: record.id.clone(),
                    msg: format!(
                        "embedding dimension {} does not match dataset dimension {dim}",
                        record.embedding.len()
                    ),
                });
            }
            if !seen.insert(record.id.clone()) {
                return Err(DataError::InvalidRecord {
                    id: record.id.clone(),
                    msg: "duplicate id".into(),
                });
            }
        }
        Ok(Self { records, dim })
    }

    pub fn records(&self) -> &[TaskRecord] {
        &self.records
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter_split(&self, split: Split) -> impl Iterator<Item = &TaskRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn split_len(&self, split: Split) -> usize {
        self.iter_split(split).count()
    }

    /// Mean outcome over records that have one, per split.
    pub fn base_success_rate(&self, split: Split) -> Option<f64> {
        let outcomes: Vec<f64> = self
            .iter_split(split)
            .filter_map(|r| r.success.map(f64::from))
            .collect();
        if outcomes.is_empty() {
            None
        } else {
            Some(outcomes.iter().sum::<f64>() / outcomes.len() as f64)
        }
    }
}

/// Raw wire form of a record; labels are widened so out-of-range values can
/// be reported precisely instead of failing as generic type errors.
#[derive(Debug, Deserialize)]
struct RawRecord {
    id: String,
    embedding: Vec<f64>,
    ambiguous: i64,
    #[serde(default)]
    success: Option<i64>,
    split: Split,
}

/// Loads a UTF-8 JSONL dataset, one record object per line. Blank lines are
/// rejected; order is preserved; every invariant violation is reported with
/// its line number.
pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut dim: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| DataError::Malformed {
            line: line_no,
            msg: e.to_string(),
        })?;
        if raw.embedding.is_empty() || raw.embedding.iter().any(|v| !v.is_finite()) {
            return Err(DataError::BadEmbedding { line: line_no });
        }
        let expected = *dim.get_or_insert(raw.embedding.len());
        if raw.embedding.len() != expected {
            return Err(DataError::DimensionMismatch {
                line: line_no,
                expected,
                got: raw.embedding.len(),
            });
        }
        if !(0..=1).contains(&raw.ambiguous) {
            return Err(DataError::LabelOutOfRange {
                line: line_no,
                field: "ambiguous",
                value: raw.ambiguous,
            });
        }
        if let Some(s) = raw.success {
            if !(0..=1).contains(&s) {
                return Err(DataError::LabelOutOfRange {
                    line: line_no,
                    field: "success",
                    value: s,
                });
            }
        }
        if !seen.insert(raw.id.clone()) {
            return Err(DataError::DuplicateId {
                line: line_no,
                id: raw.id,
            });
        }
        records.push(TaskRecord {
            id: raw.id,
            embedding: raw.embedding,
            ambiguous: raw.ambiguous as u8,
            success: raw.success.map(|s| s as u8),
            split: raw.split,
        });
    }
    Dataset::new(records)
}

/// Writes the dataset as JSONL. Floats serialize via shortest round-trip
/// decimals, so `load_jsonl(save_jsonl(d)) == d` exactly.
pub fn save_jsonl(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let io_err = |source| DataError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut writer = BufWriter::new(file);
    for record in &dataset.records {
        let line = serde_json::to_string(record).map_err(|e| DataError::InvalidRecord {
            id: record.id.clone(),
            msg: e.to_string(),
        })?;
        writer.write_all(line.as_bytes()).map_err(io_err)?;
        writer.write_all(b"\n").map_err(io_err)?;
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}
