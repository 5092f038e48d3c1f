//! `judge-stability`: Pearson correlation between the attention scores of
//! two evaluate runs (typically two different judge models), computed over
//! the intersection of samples scored by both, with the count disclosed.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};

use tarkit::metrics::{self, MetricsError};

use crate::report::{EvaluateReport, NamedPcc, PccBucket, StabilityReport, write_json};

fn load_report(path: &Path) -> Result<EvaluateReport> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("reading report {}", path.display()))?;
    serde_json::from_str(&raw).with_context(|| format!("parsing report {}", path.display()))
}

fn bucket(xs: &[f64], ys: &[f64]) -> PccBucket {
    debug_assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return PccBucket {
            count: xs.len(),
            pcc: None,
            note: Some("fewer than 2 jointly scored samples".to_string()),
        };
    }
    match metrics::pearson(xs, ys) {
        Ok(pcc) => PccBucket {
            count: xs.len(),
            pcc: Some(pcc),
            note: None,
        },
        Err(e @ MetricsError::ZeroVariance { .. }) => PccBucket {
            count: xs.len(),
            pcc: None,
            note: Some(e.to_string()),
        },
        Err(e) => PccBucket {
            count: xs.len(),
            pcc: None,
            note: Some(e.to_string()),
        },
    }
}

pub fn run(left_path: &Path, right_path: &Path, out: Option<&Path>) -> Result<i32> {
    let left = load_report(left_path)?;
    let right = load_report(right_path)?;

    let right_scores: BTreeMap<&str, f64> = right
        .samples
        .iter()
        .filter_map(|row| row.vas_norm.map(|v| (row.id.as_str(), v)))
        .collect();

    // Joint samples keyed by the left report's benchmark assignment.
    let mut overall_left = Vec::new();
    let mut overall_right = Vec::new();
    let mut per_benchmark: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for row in &left.samples {
        let (Some(left_score), Some(right_score)) =
            (row.vas_norm, right_scores.get(row.id.as_str()).copied())
        else {
            continue;
        };
        overall_left.push(left_score);
        overall_right.push(right_score);
        let entry = per_benchmark.entry(row.benchmark.clone()).or_default();
        entry.0.push(left_score);
        entry.1.push(right_score);
    }

    let report = StabilityReport {
        command: "judge-stability".to_string(),
        left: left_path.display().to_string(),
        right: right_path.display().to_string(),
        overall: bucket(&overall_left, &overall_right),
        benchmarks: per_benchmark
            .into_iter()
            .map(|(name, (xs, ys))| NamedPcc {
                name,
                bucket: bucket(&xs, &ys),
            })
            .collect(),
    };
    write_json(&report, out)?;
    // The correlation itself being undefined (too few samples, zero
    // variance) is a disclosed outcome, not a failure.
    Ok(0)
}
