//! Report schemas. Field order is part of the contract: adding samples
//! never changes names or nesting, and serialization is deterministic so
//! replayed runs produce byte-identical output.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use tarkit::align::GateSource;
use tarkit::metrics::VasAggregate;

use crate::config::RunConfig;
use crate::ingest::RecordError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub corpus: String,
    pub samples: usize,
    pub errors: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_total: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_tar_precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate_pass_rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRow {
    pub id: String,
    pub line: usize,
    pub r_acc: u8,
    pub r_fmt: u8,
    pub tar_precision: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tar_recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tar_f1: Option<f64>,
    pub gate: u8,
    pub gate_source: GateSource,
    pub tac_bit: u8,
    pub total: f64,
    pub n_pred: usize,
    pub m_ref: usize,
    pub extracted_answer: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advantage: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupRow {
    pub group: String,
    pub ids: Vec<String>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreReport {
    pub command: String,
    pub config: RunConfig,
    pub summary: ScoreSummary,
    pub samples: Vec<ScoreRow>,
    pub groups: Vec<GroupRow>,
    pub errors: Vec<RecordError>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalBucket {
    pub samples: usize,
    pub accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tac: Option<f64>,
    pub tac_all: f64,
    pub vas: VasAggregate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_total: Option<f64>,
    pub rewarded: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedBucket {
    pub name: String,
    #[serde(flatten)]
    pub bucket: EvalBucket,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRow {
    pub id: String,
    pub line: usize,
    pub benchmark: String,
    pub correct: bool,
    pub tac_bit: u8,
    pub tac_source: GateSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vas_raw: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vas_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vas_note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward_note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluateReport {
    pub command: String,
    pub config: RunConfig,
    pub overall: EvalBucket,
    pub benchmarks: Vec<NamedBucket>,
    pub samples: Vec<EvalRow>,
    pub errors: Vec<RecordError>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PccBucket {
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pcc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedPcc {
    pub name: String,
    #[serde(flatten)]
    pub bucket: PccBucket,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub command: String,
    pub left: String,
    pub right: String,
    pub overall: PccBucket,
    pub benchmarks: Vec<NamedPcc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleRow {
    pub id: String,
    pub line: usize,
    pub n_pred: usize,
    pub m_ref: usize,
    pub greedy: usize,
    pub exact: usize,
    pub gap: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapBucket {
    pub gap: usize,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub command: String,
    pub config: RunConfig,
    pub samples: Vec<OracleRow>,
    pub histogram: Vec<GapBucket>,
    pub max_gap: usize,
    pub errors: Vec<RecordError>,
}

/// Writes a report as pretty JSON to the given path, or stdout when none.
pub fn write_json<T: Serialize>(report: &T, out: Option<&Path>) -> Result<()> {
    let mut body = serde_json::to_string_pretty(report).context("serializing report")?;
    body.push('\n');
    match out {
        Some(path) => std::fs::write(path, body)
            .with_context(|| format!("writing report to {}", path.display()))?,
        None => print!("{body}"),
    }
    Ok(())
}

fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

fn fmt_opt_f64(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Per-sample CSV rows for the evaluate report.
pub fn write_eval_csv(rows: &[EvalRow], path: &Path) -> Result<()> {
    let mut out = String::from("id,line,benchmark,correct,tac_bit,vas_raw,vas_norm,total\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            csv_field(&row.id),
            row.line,
            csv_field(&row.benchmark),
            row.correct,
            row.tac_bit,
            row.vas_raw.map(|v| v.to_string()).unwrap_or_default(),
            fmt_opt_f64(row.vas_norm),
            fmt_opt_f64(row.total),
        ));
    }
    std::fs::write(path, out).with_context(|| format!("writing csv to {}", path.display()))
}

/// Per-sample CSV rows for the score report.
pub fn write_score_csv(rows: &[ScoreRow], path: &Path) -> Result<()> {
    let mut out = String::from(
        "id,line,group,r_acc,r_fmt,tar_precision,tar_recall,tar_f1,gate,tac_bit,total,advantage\n",
    );
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            csv_field(&row.id),
            row.line,
            csv_field(row.group.as_deref().unwrap_or("")),
            row.r_acc,
            row.r_fmt,
            row.tar_precision,
            fmt_opt_f64(row.tar_recall),
            fmt_opt_f64(row.tar_f1),
            row.gate,
            row.tac_bit,
            row.total,
            fmt_opt_f64(row.advantage),
        ));
    }
    std::fs::write(path, out).with_context(|| format!("writing csv to {}", path.display()))
}
