//! Shared domain types: time spans, claims, trace records, and reward
//! configuration. Everything here is immutable after construction and safe
//! to share across concurrent evaluation workers.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::timestamp::{self, TimestampError};

/// Errors produced while validating domain values.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid time span: start {start} > end {end}")]
    InvalidTimeSpan { start: u32, end: u32 },
    #[error("time span end {end} exceeds the maximum representable {max}")]
    SpanOutOfRange { end: u32, max: u32 },
    #[error("claim sentence for key {key:?} is empty after trimming")]
    EmptySentence { key: String },
    #[error("duplicate claim key {key:?} after normalization")]
    DuplicateKey { key: String },
    #[error("claim key {key:?} is out of ascending start-time order (strict mode)")]
    OutOfOrder { key: String },
    #[error("invalid claim key {key:?}: {source}")]
    InvalidKeyFormat {
        key: String,
        source: TimestampError,
    },
    #[error("invalid options: {reason}")]
    InvalidOptions { reason: String },
    #[error("answer_gt must be non-empty")]
    EmptyAnswerGt,
    #[error("invalid config: {reason}")]
    InvalidConfig { reason: String },
}

/// A point or closed interval on the video timeline, in whole seconds.
///
/// A point timestamp is represented as `start == end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimeSpan {
    start: u32,
    end: u32,
}

impl TimeSpan {
    /// Largest representable second: `99:59:59` in the key grammar.
    pub const MAX_SECONDS: u32 = 99 * 3600 + 59 * 60 + 59;

    pub fn new(start: u32, end: u32) -> Result<Self, ModelError> {
        if start > end {
            return Err(ModelError::InvalidTimeSpan { start, end });
        }
        if end > Self::MAX_SECONDS {
            return Err(ModelError::SpanOutOfRange {
                end,
                max: Self::MAX_SECONDS,
            });
        }
        Ok(Self { start, end })
    }

    pub fn point(at: u32) -> Result<Self, ModelError> {
        Self::new(at, at)
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    pub fn end(&self) -> u32 {
        self.end
    }

    pub fn is_point(&self) -> bool {
        self.start == self.end
    }
}

impl fmt::Display for TimeSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&timestamp::format_key(*self))
    }
}

/// A time span paired with one short event sentence; the unit the alignment
/// reward matches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    span: TimeSpan,
    text: String,
}

impl Claim {
    /// Builds a claim, trimming the sentence. Empty sentences are rejected.
    pub fn new(span: TimeSpan, text: &str) -> Result<Self, ModelError> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(ModelError::EmptySentence {
                key: timestamp::format_key(span),
            });
        }
        Ok(Self {
            span,
            text: trimmed.to_string(),
        })
    }

    pub fn span(&self) -> TimeSpan {
        self.span
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Canonical key string for this claim's span.
    pub fn key(&self) -> String {
        timestamp::format_key(self.span)
    }
}

/// Key normalization and ordering policy for [`validate_claimset`].
///
/// `Strict` is meant for reference files: keys must already be canonical and
/// in ascending start-time order. `Lenient` is meant for model and judge
/// output: whitespace and dash variants are normalized and out-of-order keys
/// are re-sorted instead of rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strictness {
    Strict,
    Lenient,
}

/// An ordered set of claims, sorted ascending by span start (ties by end),
/// with the normalized key strings retained in their original input order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClaimSet {
    claims: Vec<Claim>,
    raw_keys: Vec<String>,
}

impl ClaimSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn claims(&self) -> &[Claim] {
        &self.claims
    }

    /// Normalized key strings in the order they appeared in the input.
    pub fn raw_keys(&self) -> &[String] {
        &self.raw_keys
    }

    pub fn len(&self) -> usize {
        self.claims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.claims.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Claim> {
        self.claims.iter()
    }

    /// Serializes back to `(key, sentence)` entries in claim (sorted) order.
    pub fn to_entries(&self) -> Vec<(String, String)> {
        self.claims
            .iter()
            .map(|c| (c.key(), c.text().to_string()))
            .collect()
    }
}

impl<'a> IntoIterator for &'a ClaimSet {
    type Item = &'a Claim;
    type IntoIter = std::slice::Iter<'a, Claim>;

    fn into_iter(self) -> Self::IntoIter {
        self.claims.iter()
    }
}

/// Validates an ordered key→sentence map into a [`ClaimSet`].
///
/// Keys are parsed through the timestamp grammar (leniently or strictly per
/// `mode`), normalized-key uniqueness is enforced, and claims are sorted
/// ascending by span start. In strict mode an input that is not already in
/// ascending order is an error; in lenient mode it is re-sorted.
pub fn validate_claimset(
    entries: &[(String, String)],
    mode: Strictness,
) -> Result<ClaimSet, ModelError> {
    let mut claims: Vec<Claim> = Vec::with_capacity(entries.len());
    let mut raw_keys: Vec<String> = Vec::with_capacity(entries.len());
    let mut seen: HashSet<String> = HashSet::with_capacity(entries.len());

    for (key, sentence) in entries {
        let parsed = match mode {
            Strictness::Strict => timestamp::parse_key(key),
            Strictness::Lenient => timestamp::parse_key_lenient(key),
        }
        .map_err(|source| ModelError::InvalidKeyFormat {
            key: key.clone(),
            source,
        })?;

        let normalized = parsed.text().to_string();
        if !seen.insert(normalized.clone()) {
            return Err(ModelError::DuplicateKey { key: normalized });
        }

        if mode == Strictness::Strict {
            if let Some(prev) = claims.last() {
                let prev_key = (prev.span().start(), prev.span().end());
                let this_key = (parsed.span().start(), parsed.span().end());
                if this_key < prev_key {
                    return Err(ModelError::OutOfOrder { key: normalized });
                }
            }
        }

        let claim = Claim::new(parsed.span(), sentence).map_err(|_| ModelError::EmptySentence {
            key: normalized.clone(),
        })?;
        claims.push(claim);
        raw_keys.push(normalized);
    }

    claims.sort_by_key(|c| (c.span().start(), c.span().end()));
    Ok(ClaimSet { claims, raw_keys })
}

impl Serialize for ClaimSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.claims.len()))?;
        for claim in &self.claims {
            map.serialize_entry(&claim.key(), claim.text())?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for ClaimSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ClaimSetVisitor;

        impl<'de> Visitor<'de> for ClaimSetVisitor {
            type Value = ClaimSet;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a timestamp-key to sentence map")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut entries = Vec::new();
                while let Some((key, value)) = access.next_entry::<String, String>()? {
                    entries.push((key, value));
                }
                validate_claimset(&entries, Strictness::Strict).map_err(serde::de::Error::custom)
            }
        }

        deserializer.deserialize_map(ClaimSetVisitor)
    }
}

/// One multiple-choice option.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McqOption {
    pub letter: char,
    pub text: String,
}

/// One evaluation sample: question, optional MCQ options, ground-truth
/// answer, the raw model response, and optional reference reasoning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub id: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<McqOption>>,
    pub answer_gt: String,
    pub response_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_reasoning: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_claims: Option<ClaimSet>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl TraceRecord {
    /// Checks record-level invariants: distinct uppercase option letters and
    /// a non-empty ground-truth answer.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.answer_gt.trim().is_empty() {
            return Err(ModelError::EmptyAnswerGt);
        }
        if let Some(options) = &self.options {
            let mut seen = Vec::new();
            for opt in options {
                if !opt.letter.is_ascii_uppercase() {
                    return Err(ModelError::InvalidOptions {
                        reason: format!("option letter {:?} is not uppercase A-Z", opt.letter),
                    });
                }
                if seen.contains(&opt.letter) {
                    return Err(ModelError::InvalidOptions {
                        reason: format!("duplicate option letter {:?}", opt.letter),
                    });
                }
                seen.push(opt.letter);
            }
        }
        Ok(())
    }

    pub fn is_mcq(&self) -> bool {
        self.options.as_ref().is_some_and(|o| !o.is_empty())
    }

    /// Finds the letter whose option text equals `text` (case-insensitive,
    /// trimmed).
    pub fn option_letter_for_text(&self, text: &str) -> Option<char> {
        let needle = text.trim().to_lowercase();
        self.options.as_ref()?.iter().find_map(|opt| {
            (opt.text.trim().to_lowercase() == needle).then_some(opt.letter)
        })
    }
}

/// Assignment strategy for the one-to-one claim matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchingMode {
    Greedy,
    ExactOracle,
}

/// Which alignment variant feeds the gated reward term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TarVariant {
    Precision,
    F1,
}

/// How the consistency gate is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateMode {
    LlmJudge,
    StringCompare,
    Disabled,
}

/// Matching thresholds and mode switches for the alignment reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    /// Temporal tolerance in seconds.
    pub delta_seconds: u32,
    /// Semantic similarity threshold in `[0, 1]` (inclusive match at the
    /// boundary).
    pub tau: f64,
    pub matching_mode: MatchingMode,
    pub tar_variant: TarVariant,
    pub gate_mode: GateMode,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            delta_seconds: 2,
            tau: 0.75,
            matching_mode: MatchingMode::Greedy,
            tar_variant: TarVariant::Precision,
            gate_mode: GateMode::LlmJudge,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.tau.is_finite() || !(0.0..=1.0).contains(&self.tau) {
            return Err(ModelError::InvalidConfig {
                reason: format!("tau must be in [0, 1], got {}", self.tau),
            });
        }
        Ok(())
    }
}

/// Weighting coefficients for the total reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub lambda_acc: f64,
    pub lambda_fmt: f64,
    pub lambda_tar: f64,
    pub lambda_tac: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            lambda_acc: 1.0,
            lambda_fmt: 1.0,
            lambda_tar: 1.0,
            lambda_tac: 0.0,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [
            ("lambda_acc", self.lambda_acc),
            ("lambda_fmt", self.lambda_fmt),
            ("lambda_tar", self.lambda_tar),
            ("lambda_tac", self.lambda_tac),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(ModelError::InvalidConfig {
                    reason: format!("{name} must be finite and >= 0, got {value}"),
                });
            }
        }
        Ok(())
    }
}

/// Every component of one candidate's reward, plus the weighted total.
///
/// The total is recomputable from the other fields and a [`RewardWeights`]
/// value; [`RewardBreakdown::verify`] checks that identity bit-exactly. The
/// gated alignment value is `tar_f1` when present (F1 variant runs) and
/// `tar_precision` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_acc: u8,
    pub r_fmt: u8,
    pub tar_precision: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tar_recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tar_f1: Option<f64>,
    pub gate: u8,
    pub tac_bit: u8,
    pub total: f64,
}

impl RewardBreakdown {
    /// The alignment value selected by the active variant, before gating.
    pub fn tar_variant_value(&self) -> f64 {
        self.tar_f1.unwrap_or(self.tar_precision)
    }

    /// The gated alignment contribution (zero whenever the gate is zero).
    pub fn gated_tar(&self) -> f64 {
        if self.gate == 0 {
            0.0
        } else {
            self.tar_variant_value()
        }
    }

    /// The single composition routine shared by construction and
    /// verification, so recomputation is bit-identical.
    pub fn compose_total(
        r_acc: u8,
        r_fmt: u8,
        gate: u8,
        tar_value: f64,
        tac_bit: u8,
        weights: &RewardWeights,
    ) -> f64 {
        let gated = if gate == 0 { 0.0 } else { tar_value };
        weights.lambda_acc * f64::from(r_acc)
            + weights.lambda_fmt * f64::from(r_fmt)
            + weights.lambda_tar * gated
            + weights.lambda_tac * f64::from(tac_bit)
    }

    pub fn recompute_total(&self, weights: &RewardWeights) -> f64 {
        Self::compose_total(
            self.r_acc,
            self.r_fmt,
            self.gate,
            self.tar_variant_value(),
            self.tac_bit,
            weights,
        )
    }

    /// Bit-exact recomposition check.
    pub fn verify(&self, weights: &RewardWeights) -> bool {
        self.total.to_bits() == self.recompute_total(weights).to_bits()
    }
}

/// The temporal, semantic, and similarity matrices plus the one-to-one
/// assignment for a single sample. Rows are predicted claims, columns are
/// reference claims.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub n: usize,
    pub m: usize,
    pub temporal: Vec<Vec<u8>>,
    pub semantic: Vec<Vec<u8>>,
    pub similarity: Vec<Vec<f64>>,
    pub assignment: Vec<(usize, usize)>,
}

impl AlignmentResult {
    /// Checks that every assignment pair is feasible under both matrices and
    /// that the assignment is one-to-one.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut used_pred = vec![false; self.n];
        let mut used_ref = vec![false; self.m];
        for &(i, j) in &self.assignment {
            if i >= self.n || j >= self.m {
                return Err(format!("assignment pair ({i},{j}) out of bounds"));
            }
            if self.temporal[i][j] != 1 || self.semantic[i][j] != 1 {
                return Err(format!("assignment pair ({i},{j}) is infeasible"));
            }
            if used_pred[i] {
                return Err(format!("predicted claim {i} assigned twice"));
            }
            if used_ref[j] {
                return Err(format!("reference claim {j} assigned twice"));
            }
            used_pred[i] = true;
            used_ref[j] = true;
        }
        Ok(())
    }
}
