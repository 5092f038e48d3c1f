//! `oracle-check`: greedy-vs-exact matching gap per sample, with a
//! histogram. The exact matcher is the test oracle; a zero gap everywhere
//! means greedy lost nothing on this corpus.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;

use tarkit::align::{exact_assign, greedy_assign, semantic_matrix, temporal_matrix};
use tarkit::trace;

use crate::config::{CommonArgs, RunConfig};
use crate::ingest::{ingest, RecordError};
use crate::report::{write_json, GapBucket, OracleReport, OracleRow};

pub fn run(corpus: &Path, common: &CommonArgs) -> Result<i32> {
    let config = RunConfig::resolve(common)?;
    let outcome = ingest(corpus)?;
    let engine = config.build_engine()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .context("building worker pool")?;
    let results: Vec<Result<OracleRow, String>> = pool.install(|| {
        outcome
            .records
            .par_iter()
            .map(|(line, record)| {
                let segment = trace::segment(&record.response_text);
                let predicted = engine.predicted_claims(&record.response_text, &segment);
                let reference = engine.reference_claims(record).unwrap_or_default();

                let temporal = temporal_matrix(&predicted, &reference, config.delta_seconds);
                let (semantic, sims) =
                    semantic_matrix(&predicted, &reference, engine.embedder(), config.tau)
                        .map_err(|e| e.to_string())?;
                let greedy = greedy_assign(&temporal, &semantic, &sims).len();
                let exact = exact_assign(&temporal, &semantic).len();
                Ok(OracleRow {
                    id: record.id.clone(),
                    line: *line,
                    n_pred: predicted.len(),
                    m_ref: reference.len(),
                    greedy,
                    exact,
                    gap: exact - greedy,
                })
            })
            .collect()
    });

    let mut errors = outcome.errors.clone();
    let mut rows = Vec::new();
    for ((line, record), result) in outcome.records.iter().zip(results) {
        match result {
            Ok(row) => rows.push(row),
            Err(message) => errors.push(RecordError {
                line: *line,
                id: Some(record.id.clone()),
                stage: "oracle".to_string(),
                message,
            }),
        }
    }

    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for row in &rows {
        *histogram.entry(row.gap).or_insert(0) += 1;
    }
    let max_gap = rows.iter().map(|r| r.gap).max().unwrap_or(0);

    errors.sort_by_key(|e| e.line);
    let report = OracleReport {
        command: "oracle-check".to_string(),
        config,
        samples: rows,
        histogram: histogram
            .into_iter()
            .map(|(gap, count)| GapBucket { gap, count })
            .collect(),
        max_gap,
        errors,
    };
    write_json(&report, common.out.as_deref())?;
    Ok(crate::commands::exit_code(report.errors.len()))
}
