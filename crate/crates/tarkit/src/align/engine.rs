//! Reward orchestration: wires segmentation, claim extraction, matching,
//! and gating into per-sample reward breakdowns.
//!
//! Judge-dependent steps follow a fallback ladder so rewards stay
//! computable inside an RL loop even with no endpoint: answer extraction
//! falls back to the offline scanners, claim extraction to the regex claim
//! scanner, and an LLM-judged gate to string comparison. Attention scoring
//! has no offline stand-in and is reported absent instead of fabricated.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::embed::Embedder;
use crate::judge::{
    fallback, render_prompt, JudgeError, JudgeGateway, PromptKind, VerdictPayload,
};
use crate::model::{
    AlignmentResult, ClaimSet, GateMode, MatchConfig, RewardBreakdown, RewardWeights, TarVariant,
    TraceRecord,
};
use crate::trace::{self, SegmentedTrace};

use super::{align_claims, tar_f1, tar_precision, tar_recall, AlignError, GateDecision, GateSource};

/// Which text predicted claims are extracted from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimSource {
    /// The reasoning trace only (default: that is what gets aligned).
    ThinkBlock,
    /// The whole raw response.
    FullResponse,
}

/// Everything produced while scoring one candidate response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub breakdown: RewardBreakdown,
    pub gate: GateDecision,
    pub extracted_answer: String,
    pub n_pred: usize,
    pub m_ref: usize,
    pub alignment: AlignmentResult,
}

/// Outcome of attention scoring for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VasOutcome {
    /// Raw 0-10 judge score; absent when no judge could score the sample.
    pub raw: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    /// Why the score is absent or rule-derived, when applicable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub struct RewardEngine {
    embedder: Arc<dyn Embedder>,
    judge: Option<Arc<JudgeGateway>>,
    claim_source: ClaimSource,
    /// When false, judge transport failures in the gate propagate instead
    /// of degrading to string comparison.
    gate_fallback: bool,
}

impl RewardEngine {
    pub fn new(embedder: Arc<dyn Embedder>) -> Self {
        Self {
            embedder,
            judge: None,
            claim_source: ClaimSource::ThinkBlock,
            gate_fallback: true,
        }
    }

    pub fn with_judge(mut self, judge: Arc<JudgeGateway>) -> Self {
        self.judge = Some(judge);
        self
    }

    pub fn with_claim_source(mut self, source: ClaimSource) -> Self {
        self.claim_source = source;
        self
    }

    pub fn with_gate_fallback(mut self, enabled: bool) -> Self {
        self.gate_fallback = enabled;
        self
    }

    fn judge(&self) -> Option<&JudgeGateway> {
        self.judge
            .as_deref()
            .filter(|gateway| gateway.is_configured())
    }

    pub fn embedder(&self) -> &dyn Embedder {
        self.embedder.as_ref()
    }

    /// Answer extracted from the answer block: parsing judge when
    /// available, offline scanner otherwise.
    pub fn extract_final_answer(&self, record: &TraceRecord, segment: &SegmentedTrace) -> String {
        if let Some(gateway) = self.judge() {
            match render_prompt(PromptKind::AnswerFromAnswer, record, segment) {
                Ok(req) => match gateway.invoke(&req) {
                    Ok(verdict) => {
                        if let VerdictPayload::ExtractedAnswer { answer } = verdict.payload {
                            return answer;
                        }
                        log::warn!("answer judge reply malformed; using offline scanner");
                    }
                    Err(e) => log::warn!("answer judge unavailable ({e}); using offline scanner"),
                },
                Err(_) => return fallback::UNKNOWN.to_string(),
            }
        }
        match segment.answer() {
            Some(answer) => fallback::extract_answer_offline(answer, record),
            None => fallback::UNKNOWN.to_string(),
        }
    }

    /// Conclusion extracted from the think block, same ladder as above.
    pub fn extract_think_conclusion(
        &self,
        record: &TraceRecord,
        segment: &SegmentedTrace,
    ) -> String {
        if let Some(gateway) = self.judge() {
            match render_prompt(PromptKind::AnswerFromThink, record, segment) {
                Ok(req) => match gateway.invoke(&req) {
                    Ok(verdict) => {
                        if let VerdictPayload::ExtractedAnswer { answer } = verdict.payload {
                            return answer;
                        }
                        log::warn!("think judge reply malformed; using offline scanner");
                    }
                    Err(e) => log::warn!("think judge unavailable ({e}); using offline scanner"),
                },
                Err(_) => return fallback::UNKNOWN.to_string(),
            }
        }
        match segment.think() {
            Some(think) => fallback::extract_conclusion_offline(think, record),
            None => fallback::UNKNOWN.to_string(),
        }
    }

    /// Predicted claims for a candidate response, from the configured
    /// source text. Judge extraction failures degrade to the offline
    /// scanner.
    pub fn predicted_claims(
        &self,
        response_text: &str,
        segment: &SegmentedTrace,
    ) -> ClaimSet {
        let text = match self.claim_source {
            ClaimSource::ThinkBlock => segment.think().unwrap_or_default(),
            ClaimSource::FullResponse => response_text,
        };
        self.claims_from_text(text)
    }

    fn claims_from_text(&self, text: &str) -> ClaimSet {
        if let Some(gateway) = self.judge() {
            match gateway.extract_claims_llm(text) {
                Ok(claims) => return claims,
                Err(e) => {
                    log::warn!("claim extraction judge failed ({e}); using offline scanner")
                }
            }
        }
        trace::scan_claims(text)
    }

    /// Reference claims: pre-extracted if the record carries them, lazily
    /// extracted from the reference reasoning otherwise. `None` when the
    /// record offers neither.
    pub fn reference_claims(&self, record: &TraceRecord) -> Option<ClaimSet> {
        if let Some(claims) = &record.reference_claims {
            return Some(claims.clone());
        }
        record
            .reference_reasoning
            .as_deref()
            .filter(|text| !text.trim().is_empty())
            .map(|text| self.claims_from_text(text))
    }

    fn string_compare_gate(&self, record: &TraceRecord, segment: &SegmentedTrace) -> GateDecision {
        let think_answer = self.extract_think_conclusion(record, segment);
        let final_answer = self.extract_final_answer(record, segment);
        let consistent = fallback::answers_match(&think_answer, &final_answer, record);
        GateDecision {
            g: u8::from(consistent),
            source: GateSource::StringCompare,
            rationale: Some(format!(
                "think concludes {think_answer:?}, answer reads {final_answer:?}"
            )),
        }
    }

    /// Consistency gate for one sample. Missing think or answer blocks gate
    /// to 0 without consulting a judge: there is no conclusion to support
    /// the answer.
    pub fn consistency_gate(
        &self,
        record: &TraceRecord,
        segment: &SegmentedTrace,
        mode: GateMode,
    ) -> Result<GateDecision, AlignError> {
        if mode == GateMode::Disabled {
            return Ok(GateDecision {
                g: 1,
                source: GateSource::Disabled,
                rationale: None,
            });
        }

        let think_missing = segment.think().is_none_or(|t| t.trim().is_empty());
        let answer_missing = segment.answer().is_none_or(|a| a.trim().is_empty());
        if think_missing || answer_missing {
            let which = if think_missing { "think" } else { "answer" };
            return Ok(GateDecision {
                g: 0,
                source: match mode {
                    GateMode::LlmJudge => GateSource::LlmJudge,
                    _ => GateSource::StringCompare,
                },
                rationale: Some(format!("missing {which} block")),
            });
        }

        if mode == GateMode::LlmJudge {
            if let Some(gateway) = self.judge() {
                let req = render_prompt(PromptKind::ConsistencyGate, record, segment)
                    .expect("think and answer checked present");
                match gateway.invoke(&req) {
                    Ok(verdict) => match verdict.payload {
                        VerdictPayload::Consistency {
                            consistent,
                            rationale,
                        } => {
                            return Ok(GateDecision {
                                g: u8::from(consistent),
                                source: GateSource::LlmJudge,
                                rationale: Some(rationale),
                            });
                        }
                        _ => log::warn!("gate judge reply malformed; using string comparison"),
                    },
                    Err(e @ (JudgeError::Transport { .. } | JudgeError::ReplayMiss { .. }))
                        if !self.gate_fallback =>
                    {
                        return Err(AlignError::Judge(e));
                    }
                    Err(e) => {
                        log::warn!("gate judge unavailable ({e}); using string comparison")
                    }
                }
            }
        }

        Ok(self.string_compare_gate(record, segment))
    }

    /// Attention score for a record's response. A missing or empty think
    /// block scores 0 by rule; judge failures leave the score absent
    /// (malformed replies get one fresh retry in live mode).
    pub fn vas_score(&self, record: &TraceRecord) -> VasOutcome {
        let segment = trace::segment(&record.response_text);
        if segment.think().is_none_or(|t| t.trim().is_empty()) {
            return VasOutcome {
                raw: Some(0),
                rationale: None,
                note: Some("think block missing or empty".to_string()),
            };
        }
        let Some(gateway) = self.judge() else {
            return VasOutcome {
                raw: None,
                rationale: None,
                note: Some("no judge configured".to_string()),
            };
        };
        let req = render_prompt(PromptKind::VasScore, record, &segment)
            .expect("attention prompt has no required fields");
        let first = gateway.invoke(&req);
        let retried = match &first {
            Ok(verdict) if matches!(verdict.payload, VerdictPayload::Malformed { .. }) => {
                Some(gateway.invoke_fresh(&req))
            }
            _ => None,
        };
        let outcome = retried.unwrap_or(first);
        match outcome {
            Ok(verdict) => match verdict.payload {
                VerdictPayload::Vas { score, rationale } => VasOutcome {
                    raw: Some(score),
                    rationale: Some(rationale),
                    note: None,
                },
                VerdictPayload::Malformed { reason } => VasOutcome {
                    raw: None,
                    rationale: None,
                    note: Some(format!("judge reply malformed: {reason}")),
                },
                other => VasOutcome {
                    raw: None,
                    rationale: None,
                    note: Some(format!("unexpected payload: {other:?}")),
                },
            },
            Err(e) => VasOutcome {
                raw: None,
                rationale: None,
                note: Some(format!("judge unavailable: {e}")),
            },
        }
    }

    /// Consistency bit when the gate is disabled (the additive-consistency
    /// reward variant). Judge calls are only spent when the term is
    /// weighted; otherwise the offline comparison supplies the bit.
    fn disabled_gate_tac_bit(
        &self,
        record: &TraceRecord,
        segment: &SegmentedTrace,
        weighted: bool,
    ) -> u8 {
        let think_missing = segment.think().is_none_or(|t| t.trim().is_empty());
        let answer_missing = segment.answer().is_none_or(|a| a.trim().is_empty());
        if think_missing || answer_missing {
            return 0;
        }
        if weighted {
            self.string_compare_gate(record, segment).g
        } else {
            let think_answer = segment
                .think()
                .map(|t| fallback::extract_conclusion_offline(t, record))
                .unwrap_or_else(|| fallback::UNKNOWN.to_string());
            let final_answer = segment
                .answer()
                .map(|a| fallback::extract_answer_offline(a, record))
                .unwrap_or_else(|| fallback::UNKNOWN.to_string());
            u8::from(fallback::answers_match(&think_answer, &final_answer, record))
        }
    }

    /// Scores one candidate response against its record, producing the full
    /// breakdown plus match provenance.
    pub fn score_sample(
        &self,
        record: &TraceRecord,
        candidate_response: &str,
        cfg: &MatchConfig,
        weights: &RewardWeights,
    ) -> Result<ScoredSample, AlignError> {
        cfg.validate()?;
        weights.validate()?;

        let segment = trace::segment(candidate_response);
        let r_fmt = trace::format_reward(&segment);

        let extracted_answer = self.extract_final_answer(record, &segment);
        let r_acc = u8::from(fallback::matches_ground_truth(&extracted_answer, record));

        let predicted = self.predicted_claims(candidate_response, &segment);
        let reference = match self.reference_claims(record) {
            Some(reference) => reference,
            None if weights.lambda_tar > 0.0 => {
                return Err(AlignError::MissingReference {
                    id: record.id.clone(),
                })
            }
            None => ClaimSet::empty(),
        };

        let alignment = align_claims(&predicted, &reference, self.embedder.as_ref(), cfg)?;
        let matched = alignment.assignment.len();
        let tar_precision_value = tar_precision(matched, alignment.n);
        let (tar_recall_value, tar_f1_value) = match cfg.tar_variant {
            TarVariant::Precision => (None, None),
            TarVariant::F1 => {
                let recall = tar_recall(matched, alignment.m);
                (Some(recall), Some(tar_f1(tar_precision_value, recall)))
            }
        };

        let gate = self.consistency_gate(record, &segment, cfg.gate_mode)?;
        let tac_bit = match cfg.gate_mode {
            GateMode::Disabled => {
                self.disabled_gate_tac_bit(record, &segment, weights.lambda_tac > 0.0)
            }
            _ => gate.g,
        };

        let tar_value = tar_f1_value.unwrap_or(tar_precision_value);
        let total =
            RewardBreakdown::compose_total(r_acc, r_fmt, gate.g, tar_value, tac_bit, weights);

        Ok(ScoredSample {
            breakdown: RewardBreakdown {
                r_acc,
                r_fmt,
                tar_precision: tar_precision_value,
                tar_recall: tar_recall_value,
                tar_f1: tar_f1_value,
                gate: gate.g,
                tac_bit,
                total,
            },
            gate,
            extracted_answer,
            n_pred: alignment.n,
            m_ref: alignment.m,
            alignment,
        })
    }

    /// Total reward for one candidate response.
    pub fn total_reward(
        &self,
        record: &TraceRecord,
        candidate_response: &str,
        cfg: &MatchConfig,
        weights: &RewardWeights,
    ) -> Result<RewardBreakdown, AlignError> {
        Ok(self
            .score_sample(record, candidate_response, cfg, weights)?
            .breakdown)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::TestEmbedder;
    use crate::model::{validate_claimset, McqOption, Strictness};
    use std::collections::BTreeMap;

    fn engine() -> RewardEngine {
        RewardEngine::new(Arc::new(TestEmbedder))
    }

    fn mcq_record(response: &str) -> TraceRecord {
        TraceRecord {
            id: "s1".into(),
            question: "What rises from the chimney?".into(),
            options: Some(vec![
                McqOption { letter: 'A', text: "Smoke".into() },
                McqOption { letter: 'B', text: "Steam".into() },
                McqOption { letter: 'E', text: "Sparks".into() },
            ]),
            answer_gt: "A".into(),
            response_text: response.into(),
            reference_reasoning: None,
            reference_claims: Some(
                validate_claimset(
                    &[("00:16".to_string(), "Smoke rises from the chimney.".to_string())],
                    Strictness::Strict,
                )
                .unwrap(),
            ),
            meta: BTreeMap::new(),
        }
    }

    #[test]
    fn gate_zero_when_think_contradicts_answer() {
        let response =
            "<think>The plume is grey, so I conclude option A.</think><answer>E</answer>";
        let record = mcq_record(response);
        let segment = trace::segment(response);
        let gate = engine()
            .consistency_gate(&record, &segment, GateMode::StringCompare)
            .unwrap();
        assert_eq!(gate.g, 0);
        assert_eq!(gate.source, GateSource::StringCompare);
    }

    #[test]
    fn gate_one_when_think_and_answer_agree() {
        let response =
            "<think>The grey plume is smoke, so the answer is Smoke.</think><answer>Smoke</answer>";
        let record = mcq_record(response);
        let segment = trace::segment(response);
        let gate = engine()
            .consistency_gate(&record, &segment, GateMode::StringCompare)
            .unwrap();
        assert_eq!(gate.g, 1);
    }

    #[test]
    fn gate_zero_on_missing_think_block() {
        let response = "<answer>A</answer>";
        let record = mcq_record(response);
        let segment = trace::segment(response);
        let gate = engine()
            .consistency_gate(&record, &segment, GateMode::StringCompare)
            .unwrap();
        assert_eq!(gate.g, 0);
        assert!(gate.rationale.unwrap().contains("missing think"));
    }

    #[test]
    fn disabled_gate_is_open() {
        let response = "<answer>A</answer>";
        let record = mcq_record(response);
        let segment = trace::segment(response);
        let gate = engine()
            .consistency_gate(&record, &segment, GateMode::Disabled)
            .unwrap();
        assert_eq!(gate.g, 1);
        assert_eq!(gate.source, GateSource::Disabled);
    }

    #[test]
    fn full_reward_happy_path_equals_three() {
        // Correct answer, well-formed, one predicted claim matching the
        // single reference claim, consistent think/answer.
        let response = "<think>At 00:17 smoke rises from the chimney. So the answer is Smoke.</think><answer>A</answer>";
        let record = mcq_record(response);
        let cfg = MatchConfig {
            gate_mode: GateMode::StringCompare,
            ..MatchConfig::default()
        };
        let weights = RewardWeights::default();
        let scored = engine()
            .score_sample(&record, response, &cfg, &weights)
            .unwrap();
        assert_eq!(scored.breakdown.r_acc, 1);
        assert_eq!(scored.breakdown.r_fmt, 1);
        assert_eq!(scored.breakdown.tar_precision, 1.0);
        assert_eq!(scored.breakdown.gate, 1);
        assert_eq!(scored.breakdown.total, 3.0);
        assert!(scored.breakdown.verify(&weights));
        scored.alignment.check_invariants().unwrap();
    }

    #[test]
    fn gate_failure_strips_tar_only() {
        let response = "<think>At 00:17 smoke rises from the chimney. I conclude option A.</think><answer>E</answer>";
        let record = mcq_record(response);
        let cfg = MatchConfig {
            gate_mode: GateMode::StringCompare,
            ..MatchConfig::default()
        };
        let weights = RewardWeights::default();
        let scored = engine()
            .score_sample(&record, response, &cfg, &weights)
            .unwrap();
        // Alignment itself is fine, but gated away; the wrong answer also
        // zeroes the accuracy term.
        assert_eq!(scored.breakdown.tar_precision, 1.0);
        assert_eq!(scored.breakdown.gate, 0);
        assert_eq!(scored.breakdown.r_acc, 0);
        assert_eq!(scored.breakdown.total, 1.0);
    }

    #[test]
    fn consistent_but_wrong_keeps_tar() {
        // Think and answer agree on the wrong option: the gate stays open
        // and alignment still contributes.
        let response = "<think>At 00:17 smoke rises from the chimney. Still, I conclude option B.</think><answer>B</answer>";
        let record = mcq_record(response);
        let cfg = MatchConfig {
            gate_mode: GateMode::StringCompare,
            ..MatchConfig::default()
        };
        let weights = RewardWeights::default();
        let scored = engine()
            .score_sample(&record, response, &cfg, &weights)
            .unwrap();
        assert_eq!(scored.breakdown.r_acc, 0);
        assert_eq!(scored.breakdown.gate, 1);
        assert_eq!(scored.breakdown.tar_precision, 1.0);
        assert_eq!(scored.breakdown.total, 2.0);
    }

    #[test]
    fn no_predicted_timestamps_score_zero_precision() {
        let response =
            "<think>The chimney clearly produces smoke, so the answer is Smoke.</think><answer>A</answer>";
        let record = mcq_record(response);
        let cfg = MatchConfig {
            gate_mode: GateMode::StringCompare,
            ..MatchConfig::default()
        };
        let weights = RewardWeights::default();
        let scored = engine()
            .score_sample(&record, response, &cfg, &weights)
            .unwrap();
        assert_eq!(scored.n_pred, 0);
        assert_eq!(scored.breakdown.tar_precision, 0.0);
        assert_eq!(scored.breakdown.total, 2.0);
    }

    #[test]
    fn missing_reference_errors_only_when_tar_weighted() {
        let response = "<think>At 00:10 it happens, so the answer is Smoke.</think><answer>A</answer>";
        let mut record = mcq_record(response);
        record.reference_claims = None;
        let cfg = MatchConfig {
            gate_mode: GateMode::StringCompare,
            ..MatchConfig::default()
        };
        let err = engine()
            .score_sample(&record, response, &cfg, &RewardWeights::default())
            .unwrap_err();
        assert!(matches!(err, AlignError::MissingReference { .. }));

        let unweighted = RewardWeights {
            lambda_tar: 0.0,
            ..RewardWeights::default()
        };
        let scored = engine()
            .score_sample(&record, response, &cfg, &unweighted)
            .unwrap();
        assert_eq!(scored.breakdown.tar_precision, 0.0);
        assert_eq!(scored.breakdown.total, 2.0);
    }

    #[test]
    fn reference_reasoning_extracted_lazily() {
        let response = "<think>At 00:17 smoke rises from the chimney. So the answer is Smoke.</think><answer>A</answer>";
        let mut record = mcq_record(response);
        record.reference_claims = None;
        record.reference_reasoning =
            Some("At 00:16 smoke rises from the chimney.".to_string());
        let cfg = MatchConfig {
            gate_mode: GateMode::StringCompare,
            ..MatchConfig::default()
        };
        let scored = engine()
            .score_sample(&record, response, &cfg, &RewardWeights::default())
            .unwrap();
        assert_eq!(scored.m_ref, 1);
        assert_eq!(scored.breakdown.tar_precision, 1.0);
    }

    #[test]
    fn f1_variant_populates_recall_and_f1() {
        let response = "<think>At 00:17 smoke rises from the chimney. So the answer is Smoke.</think><answer>A</answer>";
        let mut record = mcq_record(response);
        // Second reference claim that nothing matches: recall drops to 1/2.
        record.reference_claims = Some(
            validate_claimset(
                &[
                    ("00:16".to_string(), "Smoke rises from the chimney.".to_string()),
                    ("00:40".to_string(), "Sparks scatter near the hearth.".to_string()),
                ],
                Strictness::Strict,
            )
            .unwrap(),
        );
        let cfg = MatchConfig {
            tar_variant: TarVariant::F1,
            gate_mode: GateMode::StringCompare,
            ..MatchConfig::default()
        };
        let weights = RewardWeights::default();
        let scored = engine()
            .score_sample(&record, response, &cfg, &weights)
            .unwrap();
        assert_eq!(scored.breakdown.tar_precision, 1.0);
        assert_eq!(scored.breakdown.tar_recall, Some(0.5));
        let f1 = scored.breakdown.tar_f1.unwrap();
        assert!((f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!(scored.breakdown.verify(&weights));
        assert_eq!(scored.breakdown.total, 2.0 + f1);
    }

    #[test]
    fn additive_consistency_variant_uses_tac_term() {
        // Gate disabled plus a weighted consistency term: alignment passes
        // ungated and the bit lands in its own term.
        let response = "<think>At 00:17 smoke rises from the chimney. I conclude option A.</think><answer>E</answer>";
        let record = mcq_record(response);
        let cfg = MatchConfig {
            gate_mode: GateMode::Disabled,
            ..MatchConfig::default()
        };
        let weights = RewardWeights {
            lambda_tac: 1.0,
            ..RewardWeights::default()
        };
        let scored = engine()
            .score_sample(&record, response, &cfg, &weights)
            .unwrap();
        assert_eq!(scored.breakdown.gate, 1);
        assert_eq!(scored.breakdown.tac_bit, 0);
        assert_eq!(scored.breakdown.tar_precision, 1.0);
        // 0 (acc) + 1 (fmt) + 1 (ungated tar) + 0 (tac).
        assert_eq!(scored.breakdown.total, 2.0);
        assert!(scored.breakdown.verify(&weights));
    }

    #[test]
    fn full_response_claim_source_scans_outside_think() {
        let response = "Note: the key moment is 00:16. <think>No timestamps in here. So the answer is Smoke.</think><answer>A</answer>";
        let segment = trace::segment(response);

        let think_only = engine().predicted_claims(response, &segment);
        assert!(think_only.is_empty());

        let full = RewardEngine::new(Arc::new(TestEmbedder))
            .with_claim_source(ClaimSource::FullResponse)
            .predicted_claims(response, &segment);
        assert_eq!(full.len(), 1);
        assert_eq!(full.claims()[0].key(), "00:16");
    }

    #[test]
    fn exact_oracle_matching_mode_flows_through_scoring() {
        let response = "<think>At 00:17 smoke rises from the chimney. So the answer is Smoke.</think><answer>A</answer>";
        let record = mcq_record(response);
        let cfg = MatchConfig {
            matching_mode: crate::model::MatchingMode::ExactOracle,
            gate_mode: GateMode::StringCompare,
            ..MatchConfig::default()
        };
        let scored = engine()
            .score_sample(&record, response, &cfg, &RewardWeights::default())
            .unwrap();
        assert_eq!(scored.breakdown.tar_precision, 1.0);
        assert_eq!(scored.alignment.assignment, vec![(0, 0)]);
    }

    #[test]
    fn vas_rule_scores_zero_for_missing_think() {
        let record = mcq_record("<answer>A</answer>");
        let outcome = engine().vas_score(&record);
        assert_eq!(outcome.raw, Some(0));
    }

    #[test]
    fn vas_absent_without_judge() {
        let record = mcq_record("<think>Plenty of visual detail here.</think><answer>A</answer>");
        let outcome = engine().vas_score(&record);
        assert_eq!(outcome.raw, None);
        assert!(outcome.note.unwrap().contains("no judge"));
    }
}
