//! `extract-claims`: run claim extraction over a corpus and emit one
//! key→sentence object per record, in the extraction judge's native format.

use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use rayon::prelude::*;
use serde::Serialize;

use tarkit::model::ClaimSet;
use tarkit::trace;

use crate::config::{CommonArgs, RunConfig};
use crate::ingest::{ingest, RecordError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExtractSide {
    /// Claims from the candidate response (think block by default).
    Prediction,
    /// Claims from the reference reasoning or pre-extracted reference map.
    Reference,
}

#[derive(Serialize)]
struct ExtractRow<'a> {
    id: &'a str,
    claims: &'a ClaimSet,
}

pub fn run(corpus: &Path, side: ExtractSide, common: &CommonArgs) -> Result<i32> {
    let config = RunConfig::resolve(common)?;
    let outcome = ingest(corpus)?;
    let engine = config.build_engine()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .context("building worker pool")?;
    let results: Vec<Option<ClaimSet>> = pool.install(|| {
        outcome
            .records
            .par_iter()
            .map(|(_, record)| match side {
                ExtractSide::Prediction => {
                    let segment = trace::segment(&record.response_text);
                    Some(engine.predicted_claims(&record.response_text, &segment))
                }
                ExtractSide::Reference => engine.reference_claims(record),
            })
            .collect()
    });

    let mut errors = outcome.errors.clone();
    let mut lines = String::new();
    for ((line, record), claims) in outcome.records.iter().zip(&results) {
        match claims {
            Some(claims) => {
                let row = ExtractRow {
                    id: &record.id,
                    claims,
                };
                lines.push_str(&serde_json::to_string(&row).context("serializing claims row")?);
                lines.push('\n');
            }
            None => errors.push(RecordError {
                line: *line,
                id: Some(record.id.clone()),
                stage: "extract".to_string(),
                message: "record has neither reference claims nor reference reasoning".to_string(),
            }),
        }
    }

    match &common.out {
        Some(path) => std::fs::write(path, &lines)
            .with_context(|| format!("writing claims to {}", path.display()))?,
        None => print!("{lines}"),
    }
    for error in &errors {
        eprintln!(
            "line {}: [{}] {}",
            error.line, error.stage, error.message
        );
    }
    Ok(crate::commands::exit_code(errors.len()))
}
