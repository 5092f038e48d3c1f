//! Temporal alignment: match matrices over predicted × reference claims,
//! one-to-one assignment (the production greedy pass plus an exact
//! maximum-matching oracle), precision/recall/F1 alignment scores,
//! consistency gating, total-reward composition, and group-relative
//! advantage normalization.

mod engine;

pub use engine::{ClaimSource, RewardEngine, ScoredSample, VasOutcome};

use serde::{Deserialize, Serialize};

use crate::embed::{cosine, EmbedError, Embedder};
use crate::judge::JudgeError;
use crate::model::{AlignmentResult, ClaimSet, MatchConfig, MatchingMode, ModelError};
use crate::timestamp::span_distance;

#[derive(Debug, thiserror::Error)]
pub enum AlignError {
    #[error("advantage group needs at least 2 rewards, got {len}")]
    GroupTooSmall { len: usize },
    #[error("record {id} has no reference claims or reference reasoning, but the alignment reward is weighted")]
    MissingReference { id: String },
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Default epsilon guarding the advantage normalization denominator.
pub const DEFAULT_ADVANTAGE_EPSILON: f64 = 1e-8;

/// Where the consistency bit came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateSource {
    LlmJudge,
    StringCompare,
    Disabled,
}

/// Sample-level consistency indicator. A disabled source always carries
/// `g == 1`: gating off means the alignment reward passes through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub g: u8,
    pub source: GateSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
}

/// Binary temporal match matrix: entry `(i, j)` is 1 iff the gap between
/// predicted span `i` and reference span `j` is at most `delta` seconds.
/// Either set may be empty, yielding a 0×m or n×0 matrix.
pub fn temporal_matrix(pred: &ClaimSet, reference: &ClaimSet, delta: u32) -> BinaryMatrix {
    pred.iter()
        .map(|p| {
            reference
                .iter()
                .map(|r| u8::from(span_distance(p.span(), r.span()) <= delta))
                .collect()
        })
        .collect()
}

/// Binary 0/1 match matrix, rows = predicted claims, columns = references.
pub type BinaryMatrix = Vec<Vec<u8>>;
/// Raw cosine similarities with the same shape as [`BinaryMatrix`].
pub type SimilarityMatrix = Vec<Vec<f64>>;

/// Binary semantic match matrix plus the raw cosine similarities. The
/// threshold is inclusive: similarity exactly equal to `tau` matches.
/// Degenerate zero-vector embeddings score 0 with a warning instead of
/// failing the pipeline.
pub fn semantic_matrix(
    pred: &ClaimSet,
    reference: &ClaimSet,
    embedder: &dyn Embedder,
    tau: f64,
) -> Result<(BinaryMatrix, SimilarityMatrix), EmbedError> {
    let pred_vectors = pred
        .iter()
        .map(|c| embedder.embed(c.text()))
        .collect::<Result<Vec<_>, _>>()?;
    let ref_vectors = reference
        .iter()
        .map(|c| embedder.embed(c.text()))
        .collect::<Result<Vec<_>, _>>()?;

    let mut binary = Vec::with_capacity(pred_vectors.len());
    let mut sims = Vec::with_capacity(pred_vectors.len());
    for (i, pv) in pred_vectors.iter().enumerate() {
        let mut brow = Vec::with_capacity(ref_vectors.len());
        let mut srow = Vec::with_capacity(ref_vectors.len());
        for (j, rv) in ref_vectors.iter().enumerate() {
            let sim = match cosine(pv, rv) {
                Ok(sim) => sim,
                Err(EmbedError::ZeroVector) => {
                    log::warn!(
                        "zero-vector embedding for claim pair ({i}, {j}); similarity set to 0"
                    );
                    0.0
                }
                Err(other) => return Err(other),
            };
            brow.push(u8::from(sim >= tau));
            srow.push(sim);
        }
        binary.push(brow);
        sims.push(srow);
    }
    Ok((binary, sims))
}

fn dims(matrix: &[Vec<u8>]) -> (usize, usize) {
    let n = matrix.len();
    let m = matrix.first().map_or(0, Vec::len);
    (n, m)
}

/// Greedy one-to-one matching: predicted claims are visited in claim-set
/// order (ascending start time) and each takes the most similar unused
/// feasible reference claim. Similarity ties break toward the earliest
/// reference start time; claim sets are start-sorted, so that is the
/// lowest index.
pub fn greedy_assign(
    temporal: &[Vec<u8>],
    semantic: &[Vec<u8>],
    sims: &[Vec<f64>],
) -> Vec<(usize, usize)> {
    let (n, m) = dims(temporal);
    let mut used_ref = vec![false; m];
    let mut assignment = Vec::new();
    for i in 0..n {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..m {
            if used_ref[j] || temporal[i][j] == 0 || semantic[i][j] == 0 {
                continue;
            }
            if best.is_none_or(|(_, best_sim)| sims[i][j] > best_sim) {
                best = Some((j, sims[i][j]));
            }
        }
        if let Some((j, _)) = best {
            used_ref[j] = true;
            assignment.push((i, j));
        }
    }
    assignment
}

fn augment(
    pred: usize,
    adjacency: &[Vec<usize>],
    visited: &mut [bool],
    matched_ref: &mut [Option<usize>],
) -> bool {
    for &j in &adjacency[pred] {
        if visited[j] {
            continue;
        }
        visited[j] = true;
        if matched_ref[j].is_none()
            || augment(matched_ref[j].unwrap(), adjacency, visited, matched_ref)
        {
            matched_ref[j] = Some(pred);
            return true;
        }
    }
    false
}

/// Maximum-cardinality one-to-one matching on the feasibility graph, via
/// augmenting paths. This is the oracle that bounds and validates the
/// greedy pass; it ignores similarities entirely.
pub fn exact_assign(temporal: &[Vec<u8>], semantic: &[Vec<u8>]) -> Vec<(usize, usize)> {
    let (n, m) = dims(temporal);
    let adjacency: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..m)
                .filter(|&j| temporal[i][j] == 1 && semantic[i][j] == 1)
                .collect()
        })
        .collect();

    let mut matched_ref: Vec<Option<usize>> = vec![None; m];
    for i in 0..n {
        let mut visited = vec![false; m];
        augment(i, &adjacency, &mut visited, &mut matched_ref);
    }

    let mut assignment: Vec<(usize, usize)> = matched_ref
        .iter()
        .enumerate()
        .filter_map(|(j, pred)| pred.map(|i| (i, j)))
        .collect();
    assignment.sort_unstable();
    assignment
}

/// Fraction of predicted claims that found a match. Zero predicted claims
/// yield 0, not an undefined value: timestamp-free reasoning earns nothing.
pub fn tar_precision(matched: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        matched as f64 / n as f64
    }
}

/// Fraction of reference claims that found a match; 0 when there are none.
pub fn tar_recall(matched: usize, m: usize) -> f64 {
    if m == 0 {
        0.0
    } else {
        matched as f64 / m as f64
    }
}

/// Harmonic mean of precision and recall. Equal arguments return the value
/// itself exactly (no rounding through the quotient), and `p + r == 0`
/// yields 0.
pub fn tar_f1(p: f64, r: f64) -> f64 {
    if p == r {
        p
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Builds the full alignment for a claim pair under a config: both match
/// matrices, similarities, and the assignment from the configured matcher.
pub fn align_claims(
    pred: &ClaimSet,
    reference: &ClaimSet,
    embedder: &dyn Embedder,
    cfg: &MatchConfig,
) -> Result<AlignmentResult, AlignError> {
    let temporal = temporal_matrix(pred, reference, cfg.delta_seconds);
    let (semantic, similarity) = semantic_matrix(pred, reference, embedder, cfg.tau)?;
    let assignment = match cfg.matching_mode {
        MatchingMode::Greedy => greedy_assign(&temporal, &semantic, &similarity),
        MatchingMode::ExactOracle => exact_assign(&temporal, &semantic),
    };
    Ok(AlignmentResult {
        n: pred.len(),
        m: reference.len(),
        temporal,
        semantic,
        similarity,
        assignment,
    })
}

/// Group-relative advantages: `(r_i - mean) / (std + epsilon)` with the
/// population standard deviation. Constant groups map to all zeros.
pub fn group_advantages(rewards: &[f64], epsilon: f64) -> Result<Vec<f64>, AlignError> {
    if rewards.len() < 2 {
        return Err(AlignError::GroupTooSmall {
            len: rewards.len(),
        });
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let variance = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let std = variance.sqrt();
    Ok(rewards.iter().map(|r| (r - mean) / (std + epsilon)).collect())
}
