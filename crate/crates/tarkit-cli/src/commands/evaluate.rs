//! `evaluate`: corpus-level consistency, attention, and reward aggregates
//! with per-benchmark grouping.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use tarkit::align::VasOutcome;
use tarkit::judge::fallback;
use tarkit::metrics::{self, SampleEval};
use tarkit::model::GateMode;
use tarkit::trace;

use crate::config::{CommonArgs, RunConfig};
use crate::ingest::{ingest, RecordError};
use crate::report::{write_eval_csv, write_json, EvalBucket, EvalRow, EvaluateReport, NamedBucket};

struct SampleOutcome {
    row: EvalRow,
    eval: SampleEval,
}

pub fn run(corpus: &Path, common: &CommonArgs) -> Result<i32> {
    let config = RunConfig::resolve(common)?;
    let outcome = ingest(corpus)?;
    if outcome.records.is_empty() {
        bail!(
            "empty corpus: {} has no valid records ({} line errors)",
            corpus.display(),
            outcome.errors.len()
        );
    }
    let engine = config.build_engine()?;
    let match_config = config.match_config();
    let weights = config.weights();

    // Consistency for the metric needs a real comparison even when the
    // reward gate is disabled; string comparison substitutes there.
    let tac_mode = match config.gate_mode {
        GateMode::Disabled => GateMode::StringCompare,
        other => other,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .context("building worker pool")?;
    let results: Vec<Result<SampleOutcome, String>> = pool.install(|| {
        outcome
            .records
            .par_iter()
            .map(|(line, record)| {
                let segment = trace::segment(&record.response_text);
                let extracted = engine.extract_final_answer(record, &segment);
                let correct = fallback::matches_ground_truth(&extracted, record);

                let gate = engine
                    .consistency_gate(record, &segment, tac_mode)
                    .map_err(|e| e.to_string())?;

                let VasOutcome {
                    raw: vas_raw,
                    note: vas_note,
                    ..
                } = engine.vas_score(record);

                let (total, reward_note) = match engine.score_sample(
                    record,
                    &record.response_text,
                    &match_config,
                    &weights,
                ) {
                    Ok(sample) => (Some(sample.breakdown.total), None),
                    Err(e) => (None, Some(e.to_string())),
                };

                let benchmark = record
                    .meta
                    .get(&config.group_by)
                    .cloned()
                    .unwrap_or_else(|| "unspecified".to_string());
                let eval = SampleEval::new(&record.id, correct, gate.g, vas_raw);
                Ok(SampleOutcome {
                    row: EvalRow {
                        id: record.id.clone(),
                        line: *line,
                        benchmark,
                        correct,
                        tac_bit: gate.g,
                        tac_source: gate.source,
                        vas_raw,
                        vas_norm: eval.vas_norm,
                        vas_note,
                        total,
                        reward_note,
                    },
                    eval,
                })
            })
            .collect()
    });

    let mut errors = outcome.errors.clone();
    let mut rows: Vec<EvalRow> = Vec::new();
    let mut evals: Vec<SampleEval> = Vec::new();
    for ((line, record), result) in outcome.records.iter().zip(results) {
        match result {
            Ok(sample) => {
                rows.push(sample.row);
                evals.push(sample.eval);
            }
            Err(message) => errors.push(RecordError {
                line: *line,
                id: Some(record.id.clone()),
                stage: "evaluate".to_string(),
                message,
            }),
        }
    }
    if rows.is_empty() {
        bail!("no sample could be evaluated; see line errors");
    }

    let overall = bucket_for(&rows, &evals);
    let mut by_benchmark: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (index, row) in rows.iter().enumerate() {
        by_benchmark
            .entry(row.benchmark.clone())
            .or_default()
            .push(index);
    }
    let benchmarks: Vec<NamedBucket> = by_benchmark
        .into_iter()
        .map(|(name, members)| {
            let sub_rows: Vec<EvalRow> = members.iter().map(|&i| rows[i].clone()).collect();
            let sub_evals: Vec<SampleEval> = members.iter().map(|&i| evals[i].clone()).collect();
            NamedBucket {
                name,
                bucket: bucket_for(&sub_rows, &sub_evals),
            }
        })
        .collect();

    errors.sort_by_key(|e| e.line);
    let report = EvaluateReport {
        command: "evaluate".to_string(),
        config,
        overall,
        benchmarks,
        samples: rows,
        errors,
    };
    if let Some(csv) = &common.csv {
        write_eval_csv(&report.samples, csv)?;
    }
    write_json(&report, common.out.as_deref())?;
    Ok(crate::commands::exit_code(report.errors.len()))
}

fn bucket_for(rows: &[EvalRow], evals: &[SampleEval]) -> EvalBucket {
    let correct = rows.iter().filter(|r| r.correct).count();
    let rewarded: Vec<f64> = rows.iter().filter_map(|r| r.total).collect();
    EvalBucket {
        samples: rows.len(),
        accuracy: correct as f64 / rows.len() as f64,
        tac: metrics::tac(evals),
        tac_all: metrics::tac_all(evals).expect("buckets are non-empty"),
        vas: metrics::vas(evals),
        mean_total: if rewarded.is_empty() {
            None
        } else {
            Some(rewarded.iter().sum::<f64>() / rewarded.len() as f64)
        },
        rewarded: rewarded.len(),
    }
}
