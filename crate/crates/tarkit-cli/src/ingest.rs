//! JSONL corpus ingestion with per-line error isolation: a malformed line
//! becomes an error row, never an aborted run.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use tarkit::model::TraceRecord;

/// One record-level failure, attached to its source line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordError {
    pub line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct IngestOutcome {
    /// Valid records with their 1-based source line numbers.
    pub records: Vec<(usize, TraceRecord)>,
    pub errors: Vec<RecordError>,
}

/// Reads one JSON object per line, skipping blank lines. IO failures are
/// fatal; schema failures are isolated per line.
pub fn ingest(path: &Path) -> Result<IngestOutcome> {
    let content = std::fs::read_to_string(path)
        .with_context(|| format!("reading corpus {}", path.display()))?;

    let mut outcome = IngestOutcome::default();
    for (index, raw_line) in content.lines().enumerate() {
        let line = index + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match serde_json::from_str::<TraceRecord>(trimmed) {
            Ok(record) => match record.validate() {
                Ok(()) => outcome.records.push((line, record)),
                Err(e) => outcome.errors.push(RecordError {
                    line,
                    id: Some(record.id.clone()),
                    stage: "schema".to_string(),
                    message: e.to_string(),
                }),
            },
            Err(e) => outcome.errors.push(RecordError {
                line,
                id: None,
                stage: "parse".to_string(),
                message: e.to_string(),
            }),
        }
    }
    Ok(outcome)
}
