//! JSONL ingestion for parallel-paragraph datasets.

use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One source paragraph with two human renderings and an optional machine
/// rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParallelParagraph {
    pub source: String,
    pub h1: String,
    pub h2: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mt: Option<String>,
    #[serde(default)]
    pub language: String,
}

impl ParallelParagraph {
    fn check(&self) -> std::result::Result<(), String> {
        for (name, value) in [("source", &self.source), ("h1", &self.h1), ("h2", &self.h2)] {
            if value.is_empty() {
                return Err(format!("field \"{name}\" is empty"));
            }
        }
        Ok(())
    }
}

/// Whether a schema-violating line aborts the load or is skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestMode {
    Strict,
    Lenient,
}

/// Loaded records plus, in lenient mode, the skipped line numbers and
/// reasons (1-based).
#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub paragraphs: Vec<ParallelParagraph>,
    pub skipped: Vec<(usize, String)>,
}

/// Read one JSON object per line, preserving order. Blank lines are ignored.
/// In strict mode any malformed line rejects the whole load, naming the
/// line; in lenient mode it is recorded in `skipped`.
pub fn ingest_jsonl<P: AsRef<Path>>(path: P, mode: IngestMode) -> Result<IngestOutcome> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut outcome = IngestOutcome {
        paragraphs: Vec::new(),
        skipped: Vec::new(),
    };
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: std::result::Result<ParallelParagraph, String> =
            serde_json::from_str::<ParallelParagraph>(&line)
                .map_err(|e| e.to_string())
                .and_then(|p| p.check().map(|()| p));
        match (parsed, mode) {
            (Ok(paragraph), _) => outcome.paragraphs.push(paragraph),
            (Err(reason), IngestMode::Strict) => {
                return Err(Error::DatasetLine {
                    line: line_no,
                    reason,
                });
            }
            (Err(reason), IngestMode::Lenient) => outcome.skipped.push((line_no, reason)),
        }
    }
    Ok(outcome)
}
