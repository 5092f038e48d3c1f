//! Judge gateway: renders the extraction/scoring/gating prompts, talks to
//! any chat-completion-style HTTP endpoint, caches replies content-addressed,
//! and replays cached entries so whole runs execute offline and
//! deterministically.

pub mod fallback;
pub mod prompts;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::model::{validate_claimset, ClaimSet, ModelError, Strictness};
use crate::store::{CacheStore, Semaphore, StoreError};

pub use prompts::{render_claim_extract, render_prompt, POST_PROMPT};

#[derive(Debug, thiserror::Error)]
pub enum JudgeError {
    #[error("prompt template needs the {field} field")]
    MissingField { field: &'static str },
    #[error("no judge endpoint configured")]
    NotConfigured,
    #[error("judge transport failed after {attempts} attempts: {reason}")]
    Transport { attempts: u32, reason: String },
    #[error("replay mode has no fixture for this request (key {key})")]
    ReplayMiss { key: String },
    #[error("judge reply could not be parsed: {reason}")]
    MalformedReply { reason: String },
    #[error("judge emitted invalid claims: {source}")]
    InvalidClaims {
        #[source]
        source: ModelError,
    },
    #[error("judge cache io error: {0}")]
    Store(#[from] std::io::Error),
}

/// The five judge roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    AnswerFromThink,
    AnswerFromAnswer,
    VasScore,
    ClaimExtract,
    ConsistencyGate,
}

impl PromptKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PromptKind::AnswerFromThink => "answer_from_think",
            PromptKind::AnswerFromAnswer => "answer_from_answer",
            PromptKind::VasScore => "vas_score",
            PromptKind::ClaimExtract => "claim_extract",
            PromptKind::ConsistencyGate => "consistency_gate",
        }
    }
}

/// Greedy decoding parameters. Temperature is pinned to zero; the cache is
/// keyed on content alone because decoding is deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams {
    pub temperature: f64,
    pub max_tokens: u32,
}

/// One fully rendered judge call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeRequest {
    pub kind: PromptKind,
    pub system_text: String,
    pub user_text: String,
    pub decode: DecodeParams,
}

/// Parsed judge reply. `Malformed` is data, not an error: the raw text is
/// always preserved so any field can be re-derived later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerdictPayload {
    ExtractedAnswer { answer: String },
    Vas { score: u8, rationale: String },
    Claims { entries: Vec<(String, String)> },
    Consistency { consistent: bool, rationale: String },
    Malformed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub payload: VerdictPayload,
    pub raw_text: String,
    pub cache_hit: bool,
}

/// Live mode hits the endpoint on cache misses; replay mode never touches
/// the network and fails with [`JudgeError::ReplayMiss`] instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeMode {
    Live,
    Replay,
}

/// Gateway configuration. The bearer token is read from the environment
/// variable named in `token_env` at call time, never stored.
#[derive(Debug, Clone)]
pub struct JudgeConfig {
    pub base_url: Option<String>,
    pub model: String,
    pub token_env: String,
    pub mode: JudgeMode,
    pub max_attempts: u32,
    pub backoff: Duration,
    pub timeout: Duration,
    pub inflight_cap: usize,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        Self {
            base_url: None,
            model: "qwen3-next-80b-a3b".to_string(),
            token_env: "TARKIT_JUDGE_TOKEN".to_string(),
            mode: JudgeMode::Live,
            max_attempts: 3,
            backoff: Duration::from_millis(200),
            timeout: Duration::from_secs(120),
            inflight_cap: 8,
        }
    }
}

/// One cache entry: the request that produced a reply, plus the raw reply.
#[derive(Serialize, Deserialize)]
struct CacheEntry {
    kind: PromptKind,
    model: String,
    system_text: String,
    user_text: String,
    reply: String,
}

pub struct JudgeGateway {
    config: JudgeConfig,
    store: CacheStore,
    client: reqwest::blocking::Client,
    semaphore: Semaphore,
}

impl JudgeGateway {
    pub fn new(config: JudgeConfig, store: CacheStore) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .expect("reqwest client builds with static config");
        let semaphore = Semaphore::new(config.inflight_cap);
        Self {
            config,
            store,
            client,
            semaphore,
        }
    }

    pub fn config(&self) -> &JudgeConfig {
        &self.config
    }

    /// Whether this gateway can answer at all: a live endpoint, or replay
    /// fixtures that may hold the entry.
    pub fn is_configured(&self) -> bool {
        self.config.base_url.is_some() || self.config.mode == JudgeMode::Replay
    }

    /// Cache key for a request under this gateway's model.
    pub fn cache_key(&self, req: &JudgeRequest) -> String {
        CacheStore::key(&[
            "judge",
            req.kind.as_str(),
            &self.config.model,
            &req.system_text,
            &req.user_text,
        ])
    }

    /// Pre-seeds the cache with a reply for `req`, for replay fixtures.
    pub fn store_fixture(&self, req: &JudgeRequest, reply: &str) -> Result<(), JudgeError> {
        let entry = CacheEntry {
            kind: req.kind,
            model: self.config.model.clone(),
            system_text: req.system_text.clone(),
            user_text: req.user_text.clone(),
            reply: reply.to_string(),
        };
        let serialized = serde_json::to_string_pretty(&entry).expect("entry serializes");
        self.store.put(&self.cache_key(req), &serialized)?;
        Ok(())
    }

    /// Invokes the judge, serving from the cache when possible. The reply
    /// is parsed per prompt kind; parse failures surface as a
    /// [`VerdictPayload::Malformed`] payload, not an error, so rewards can
    /// degrade to defined fallbacks.
    pub fn invoke(&self, req: &JudgeRequest) -> Result<JudgeVerdict, JudgeError> {
        let key = self.cache_key(req);

        if let Some(raw_entry) = self.store.get(&key)? {
            let reply = Self::reply_from_entry(&raw_entry);
            return Ok(JudgeVerdict {
                payload: parse_reply(req.kind, &reply),
                raw_text: reply,
                cache_hit: true,
            });
        }

        if self.config.mode == JudgeMode::Replay {
            return Err(JudgeError::ReplayMiss { key });
        }

        let (entry, cache_hit) = self
            .store
            .get_or_insert_with(&key, || {
                let reply = self.http_call(req)?;
                let entry = CacheEntry {
                    kind: req.kind,
                    model: self.config.model.clone(),
                    system_text: req.system_text.clone(),
                    user_text: req.user_text.clone(),
                    reply,
                };
                Ok::<String, JudgeError>(
                    serde_json::to_string_pretty(&entry).expect("entry serializes"),
                )
            })
            .map_err(|e| match e {
                StoreError::Inner(inner) => inner,
                StoreError::Io(io) => JudgeError::Store(io),
            })?;

        let reply = Self::reply_from_entry(&entry);
        Ok(JudgeVerdict {
            payload: parse_reply(req.kind, &reply),
            raw_text: reply,
            cache_hit,
        })
    }

    /// Invokes the judge again, bypassing the cache read (live mode only).
    /// Used for the single retry granted to malformed scoring replies; in
    /// replay mode this behaves exactly like [`JudgeGateway::invoke`] so
    /// determinism is preserved.
    pub fn invoke_fresh(&self, req: &JudgeRequest) -> Result<JudgeVerdict, JudgeError> {
        if self.config.mode == JudgeMode::Replay {
            return self.invoke(req);
        }
        let reply = self.http_call(req)?;
        self.store_fixture(req, &reply)?;
        Ok(JudgeVerdict {
            payload: parse_reply(req.kind, &reply),
            raw_text: reply,
            cache_hit: false,
        })
    }

    fn reply_from_entry(raw_entry: &str) -> String {
        match serde_json::from_str::<CacheEntry>(raw_entry) {
            Ok(entry) => entry.reply,
            // A corrupt entry degrades to an unparseable reply rather than
            // aborting the run.
            Err(_) => raw_entry.to_string(),
        }
    }

    fn http_call(&self, req: &JudgeRequest) -> Result<String, JudgeError> {
        let base_url = self
            .config
            .base_url
            .as_deref()
            .ok_or(JudgeError::NotConfigured)?;
        let _permit = self.semaphore.acquire();

        let body = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": req.system_text},
                {"role": "user", "content": req.user_text},
            ],
            "temperature": req.decode.temperature,
            "max_tokens": req.decode.max_tokens,
        });

        let token = std::env::var(&self.config.token_env).ok();
        let mut last_error = String::new();
        for attempt in 1..=self.config.max_attempts {
            let mut request = self.client.post(base_url).json(&body);
            if let Some(token) = &token {
                request = request.bearer_auth(token);
            }
            match request
                .send()
                .and_then(reqwest::blocking::Response::error_for_status)
            {
                Ok(response) => match Self::content_from_response(response) {
                    Ok(content) => return Ok(content),
                    Err(reason) => last_error = reason,
                },
                Err(e) => last_error = e.to_string(),
            }
            if attempt < self.config.max_attempts {
                std::thread::sleep(self.config.backoff * 2u32.pow(attempt - 1));
            }
        }
        Err(JudgeError::Transport {
            attempts: self.config.max_attempts,
            reason: last_error,
        })
    }

    fn content_from_response(response: reqwest::blocking::Response) -> Result<String, String> {
        let value: serde_json::Value = response
            .json()
            .map_err(|e| format!("response body is not JSON: {e}"))?;
        value
            .get("choices")
            .and_then(|c| c.get(0))
            .and_then(|c| c.get("message"))
            .and_then(|m| m.get("content"))
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| "response lacks choices[0].message.content".to_string())
    }

    /// Extracts timestamped claims from a reasoning string via the
    /// claim-extraction judge, validating the reply leniently. Empty
    /// reasoning short-circuits to an empty set without a call.
    pub fn extract_claims_llm(&self, reasoning: &str) -> Result<ClaimSet, JudgeError> {
        if reasoning.trim().is_empty() {
            return Ok(ClaimSet::empty());
        }
        let req = render_claim_extract(reasoning);
        let verdict = self.invoke(&req)?;
        match verdict.payload {
            VerdictPayload::Claims { entries } => validate_claimset(&entries, Strictness::Lenient)
                .map_err(|source| JudgeError::InvalidClaims { source }),
            VerdictPayload::Malformed { reason } => Err(JudgeError::MalformedReply { reason }),
            other => Err(JudgeError::MalformedReply {
                reason: format!("unexpected payload for claim extraction: {other:?}"),
            }),
        }
    }
}

fn strip_code_fences(text: &str) -> &str {
    let trimmed = text.trim();
    let Some(rest) = trimmed.strip_prefix("```") else {
        return trimmed;
    };
    // Drop the fence line ("```json" or bare) and the closing fence.
    let body = rest.split_once('\n').map(|(_, tail)| tail).unwrap_or("");
    body.trim_end()
        .strip_suffix("```")
        .unwrap_or(body)
        .trim()
}

/// Parses a raw judge reply according to the prompt kind. Never fails;
/// unparseable replies become [`VerdictPayload::Malformed`].
pub fn parse_reply(kind: PromptKind, raw: &str) -> VerdictPayload {
    match kind {
        PromptKind::AnswerFromThink | PromptKind::AnswerFromAnswer => {
            match raw.lines().map(str::trim).find(|l| !l.is_empty()) {
                Some(line) => VerdictPayload::ExtractedAnswer {
                    answer: line.to_string(),
                },
                None => VerdictPayload::Malformed {
                    reason: "empty reply".to_string(),
                },
            }
        }
        PromptKind::VasScore => parse_vas_reply(raw),
        PromptKind::ClaimExtract => parse_claims_reply(raw),
        PromptKind::ConsistencyGate => parse_consistency_reply(raw),
    }
}

fn parse_vas_reply(raw: &str) -> VerdictPayload {
    let body = strip_code_fences(raw);
    let value: serde_json::Value = match serde_json::from_str(body) {
        Ok(v) => v,
        Err(e) => {
            return VerdictPayload::Malformed {
                reason: format!("score reply is not JSON: {e}"),
            }
        }
    };
    let Some(score) = value.get("score").and_then(serde_json::Value::as_u64) else {
        return VerdictPayload::Malformed {
            reason: "score field missing or not an integer".to_string(),
        };
    };
    if score > 10 {
        return VerdictPayload::Malformed {
            reason: format!("score {score} outside 0-10"),
        };
    }
    let rationale = value
        .get("rationale")
        .and_then(serde_json::Value::as_str)
        .unwrap_or_default()
        .to_string();
    VerdictPayload::Vas {
        score: score as u8,
        rationale,
    }
}

fn parse_claims_reply(raw: &str) -> VerdictPayload {
    let body = strip_code_fences(raw);
    let value: serde_json::Value = match serde_json::from_str(body) {
        Ok(v) => v,
        Err(e) => {
            return VerdictPayload::Malformed {
                reason: format!("claims reply is not JSON: {e}"),
            }
        }
    };
    let Some(map) = value.as_object() else {
        return VerdictPayload::Malformed {
            reason: "claims reply is not a JSON object".to_string(),
        };
    };
    let mut entries = Vec::with_capacity(map.len());
    for (key, value) in map {
        let Some(sentence) = value.as_str() else {
            return VerdictPayload::Malformed {
                reason: format!("claim value for {key:?} is not a string"),
            };
        };
        entries.push((key.clone(), sentence.to_string()));
    }
    VerdictPayload::Claims { entries }
}

fn parse_consistency_reply(raw: &str) -> VerdictPayload {
    let mut lines = raw.lines().map(str::trim).filter(|l| !l.is_empty());
    let Some(first) = lines.next() else {
        return VerdictPayload::Malformed {
            reason: "empty reply".to_string(),
        };
    };
    let consistent = match first {
        "TRUE" => true,
        "FALSE" => false,
        other => {
            return VerdictPayload::Malformed {
                reason: format!("first line must be TRUE or FALSE, got {other:?}"),
            }
        }
    };
    let rationale = lines.collect::<Vec<_>>().join("\n");
    VerdictPayload::Consistency {
        consistent,
        rationale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{McqOption, TraceRecord};
    use crate::trace::segment;
    use std::collections::BTreeMap;

    fn replay_gateway(dir: &std::path::Path) -> JudgeGateway {
        let store = CacheStore::new(dir).unwrap();
        let config = JudgeConfig {
            mode: JudgeMode::Replay,
            ..JudgeConfig::default()
        };
        JudgeGateway::new(config, store)
    }

    fn record() -> TraceRecord {
        TraceRecord {
            id: "r".into(),
            question: "What word is on the sign?".into(),
            options: Some(vec![
                McqOption { letter: 'A', text: "Gate B".into() },
                McqOption { letter: 'B', text: "Exit".into() },
            ]),
            answer_gt: "A".into(),
            response_text: "<think>The sign reads Gate B at 00:42.</think><answer>A</answer>"
                .into(),
            reference_reasoning: None,
            reference_claims: None,
            meta: BTreeMap::new(),
        }
    }

    #[test]
    fn replay_hit_is_deterministic_and_marked() {
        let dir = tempfile::tempdir().unwrap();
        let gateway = replay_gateway(dir.path());
        let record = record();
        let seg = segment(&record.response_text);
        let req = render_prompt(PromptKind::AnswerFromAnswer, &record, &seg).unwrap();
        gateway.store_fixture(&req, "A").unwrap();

        let first = gateway.invoke(&req).unwrap();
        let second = gateway.invoke(&req).unwrap();
        assert_eq!(first, second);
        assert!(first.cache_hit);
        assert_eq!(
            first.payload,
            VerdictPayload::ExtractedAnswer { answer: "A".into() }
        );
    }

    #[test]
    fn replay_miss_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let gateway = replay_gateway(dir.path());
        let record = record();
        let seg = segment(&record.response_text);
        let req = render_prompt(PromptKind::AnswerFromAnswer, &record, &seg).unwrap();
        assert!(matches!(
            gateway.invoke(&req),
            Err(JudgeError::ReplayMiss { .. })
        ));
    }

    #[test]
    fn unknown_reply_passes_through() {
        assert_eq!(
            parse_reply(PromptKind::AnswerFromAnswer, "UNKNOWN"),
            VerdictPayload::ExtractedAnswer { answer: "UNKNOWN".into() }
        );
    }

    #[test]
    fn consistency_reply_parses_true_and_rationale() {
        let payload = parse_reply(PromptKind::ConsistencyGate, "TRUE\nConclusion matches.");
        assert_eq!(
            payload,
            VerdictPayload::Consistency {
                consistent: true,
                rationale: "Conclusion matches.".into()
            }
        );
        assert!(matches!(
            parse_reply(PromptKind::ConsistencyGate, "Probably true"),
            VerdictPayload::Malformed { .. }
        ));
        assert!(matches!(
            parse_reply(PromptKind::ConsistencyGate, "FALSE\nMismatch."),
            VerdictPayload::Consistency { consistent: false, .. }
        ));
    }

    #[test]
    fn vas_reply_parsing() {
        assert_eq!(
            parse_reply(PromptKind::VasScore, r#"{"score": 9, "rationale": "Cites frames."}"#),
            VerdictPayload::Vas { score: 9, rationale: "Cites frames.".into() }
        );
        // Fenced JSON is tolerated.
        assert_eq!(
            parse_reply(PromptKind::VasScore, "```json\n{\"score\": 10, \"rationale\": \"x\"}\n```"),
            VerdictPayload::Vas { score: 10, rationale: "x".into() }
        );
        assert!(matches!(
            parse_reply(PromptKind::VasScore, r#"{"score": 11}"#),
            VerdictPayload::Malformed { .. }
        ));
        assert!(matches!(
            parse_reply(PromptKind::VasScore, "nine out of ten"),
            VerdictPayload::Malformed { .. }
        ));
    }

    #[test]
    fn claims_reply_preserves_order() {
        let payload = parse_reply(
            PromptKind::ClaimExtract,
            r#"{"00:16": "Performer starts.", "01:45-02:01": "Counter shows rate."}"#,
        );
        assert_eq!(
            payload,
            VerdictPayload::Claims {
                entries: vec![
                    ("00:16".into(), "Performer starts.".into()),
                    ("01:45-02:01".into(), "Counter shows rate.".into()),
                ]
            }
        );
        assert_eq!(
            parse_reply(PromptKind::ClaimExtract, "{}"),
            VerdictPayload::Claims { entries: vec![] }
        );
        assert!(matches!(
            parse_reply(PromptKind::ClaimExtract, "[1, 2]"),
            VerdictPayload::Malformed { .. }
        ));
    }

    #[test]
    fn extract_claims_validates_leniently() {
        let dir = tempfile::tempdir().unwrap();
        let gateway = replay_gateway(dir.path());
        let reasoning = "Around 1:02 the rider mounts; near 00:16 the horse trots.";
        let req = render_claim_extract(reasoning);
        // Out-of-order keys from the judge are re-sorted, not rejected.
        gateway
            .store_fixture(&req, r#"{"01:02": "Rider mounts.", "00:16": "Horse trots."}"#)
            .unwrap();
        let claims = gateway.extract_claims_llm(reasoning).unwrap();
        let keys: Vec<String> = claims.claims().iter().map(|c| c.key()).collect();
        assert_eq!(keys, vec!["00:16", "01:02"]);
    }

    #[test]
    fn empty_reasoning_short_circuits() {
        let dir = tempfile::tempdir().unwrap();
        let gateway = replay_gateway(dir.path());
        assert!(gateway.extract_claims_llm("   ").unwrap().is_empty());
    }

    #[test]
    fn malformed_claims_reply_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let gateway = replay_gateway(dir.path());
        let reasoning = "At 00:10 something happens.";
        let req = render_claim_extract(reasoning);
        gateway.store_fixture(&req, "not json at all").unwrap();
        assert!(matches!(
            gateway.extract_claims_llm(reasoning),
            Err(JudgeError::MalformedReply { .. })
        ));
    }

    #[test]
    fn decimal_second_keys_round_before_validation() {
        // The extraction judge rounds decimals before emitting; the
        // validator accepts only canonical keys, so a rounded "00:02" is
        // valid while a raw "01.77s" mention would never appear as a key.
        let dir = tempfile::tempdir().unwrap();
        let gateway = replay_gateway(dir.path());
        let reasoning = "The flash lasts until 01.77s into the clip.";
        let req = render_claim_extract(reasoning);
        gateway
            .store_fixture(&req, r#"{"00:02": "Flash fades."}"#)
            .unwrap();
        let claims = gateway.extract_claims_llm(reasoning).unwrap();
        assert_eq!(claims.claims()[0].key(), "00:02");
    }
}
