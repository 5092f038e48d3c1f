//! `score`: per-sample reward breakdowns plus group-relative advantages.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;

use tarkit::align::{group_advantages, AlignError, ScoredSample, DEFAULT_ADVANTAGE_EPSILON};
use tarkit::model::TraceRecord;

use crate::config::{CommonArgs, RunConfig};
use crate::ingest::{ingest, RecordError};
use crate::report::{write_json, write_score_csv, GroupRow, ScoreReport, ScoreRow, ScoreSummary};

/// Metadata key that ties candidate generations to their prompt group.
pub const GROUP_META_KEY: &str = "group_id";

pub fn run(corpus: &Path, common: &CommonArgs) -> Result<i32> {
    let config = RunConfig::resolve(common)?;
    let outcome = ingest(corpus)?;
    let engine = config.build_engine()?;
    let match_config = config.match_config();
    let weights = config.weights();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .context("building worker pool")?;
    let results: Vec<Result<ScoredSample, AlignError>> = pool.install(|| {
        outcome
            .records
            .par_iter()
            .map(|(_, record)| {
                engine.score_sample(record, &record.response_text, &match_config, &weights)
            })
            .collect()
    });

    let mut errors = outcome.errors.clone();
    let mut rows: Vec<ScoreRow> = Vec::new();
    let mut scored: Vec<(usize, &TraceRecord, ScoredSample)> = Vec::new();
    for ((line, record), result) in outcome.records.iter().zip(results) {
        match result {
            Ok(sample) => scored.push((*line, record, sample)),
            Err(e) => errors.push(RecordError {
                line: *line,
                id: Some(record.id.clone()),
                stage: "score".to_string(),
                message: e.to_string(),
            }),
        }
    }

    for (line, record, sample) in &scored {
        rows.push(ScoreRow {
            id: record.id.clone(),
            line: *line,
            r_acc: sample.breakdown.r_acc,
            r_fmt: sample.breakdown.r_fmt,
            tar_precision: sample.breakdown.tar_precision,
            tar_recall: sample.breakdown.tar_recall,
            tar_f1: sample.breakdown.tar_f1,
            gate: sample.breakdown.gate,
            gate_source: sample.gate.source,
            tac_bit: sample.breakdown.tac_bit,
            total: sample.breakdown.total,
            n_pred: sample.n_pred,
            m_ref: sample.m_ref,
            extracted_answer: sample.extracted_answer.clone(),
            group: record.meta.get(GROUP_META_KEY).cloned(),
            advantage: None,
        });
    }

    // Group candidates by their prompt and normalize rewards within each
    // group. Row order tracks the corpus, so group member order does too.
    let mut group_members: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (index, row) in rows.iter().enumerate() {
        if let Some(group) = &row.group {
            group_members.entry(group.clone()).or_default().push(index);
        }
    }
    let mut groups: Vec<GroupRow> = Vec::new();
    for (group, members) in &group_members {
        let rewards: Vec<f64> = members.iter().map(|&i| rows[i].total).collect();
        match group_advantages(&rewards, DEFAULT_ADVANTAGE_EPSILON) {
            Ok(advantages) => {
                for (&index, advantage) in members.iter().zip(&advantages) {
                    rows[index].advantage = Some(*advantage);
                }
                groups.push(GroupRow {
                    group: group.clone(),
                    ids: members.iter().map(|&i| rows[i].id.clone()).collect(),
                    rewards,
                    advantages,
                });
            }
            Err(e) => errors.push(RecordError {
                line: members.first().map(|&i| rows[i].line).unwrap_or(0),
                id: None,
                stage: "group".to_string(),
                message: format!("group {group:?}: {e}"),
            }),
        }
    }

    let summary = ScoreSummary {
        corpus: corpus.display().to_string(),
        samples: rows.len(),
        errors: errors.len(),
        mean_total: mean(rows.iter().map(|r| r.total)),
        mean_tar_precision: mean(rows.iter().map(|r| r.tar_precision)),
        gate_pass_rate: mean(rows.iter().map(|r| f64::from(r.gate))),
    };

    errors.sort_by_key(|e| e.line);
    let report = ScoreReport {
        command: "score".to_string(),
        config,
        summary,
        samples: rows,
        groups,
        errors,
    };

    if let Some(csv) = &common.csv {
        write_score_csv(&report.samples, csv)?;
    }
    write_json(&report, common.out.as_deref())?;
    Ok(crate::commands::exit_code(report.errors.len()))
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let collected: Vec<f64> = values.collect();
    if collected.is_empty() {
        None
    } else {
        Some(collected.iter().sum::<f64>() / collected.len() as f64)
    }
}
