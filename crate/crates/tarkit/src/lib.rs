//! Reward and evaluation machinery for timestamped video reasoning traces.
//!
//! The crate covers everything an RL loop or an evaluation harness consumes
//! when judging `<think>`/`<answer>` style model output against reference
//! reasoning with timestamps:
//!
//! - [`model`]: shared domain types (time spans, claims, trace records,
//!   reward configuration and breakdowns).
//! - [`timestamp`]: the strict `MM:SS` / `HH:MM:SS` key grammar, bit-exact
//!   parsing and canonical formatting.
//! - [`trace`]: think/answer segmentation, the format reward, and a
//!   deterministic offline claim scanner.
//! - [`judge`]: prompt rendering, a chat-completion judge client with
//!   content-addressed caching and record/replay, plus offline fallbacks.
//! - [`embed`]: embedding providers and cosine similarity for semantic
//!   claim matching.
//! - [`align`]: temporal/semantic match matrices, one-to-one assignment
//!   (greedy and an exact oracle), alignment rewards, consistency gating,
//!   total-reward composition, and group-relative advantages.
//! - [`metrics`]: corpus-level aggregation: think-answer consistency,
//!   visual-attention scores, and judge-stability correlation.

pub mod align;
pub mod embed;
pub mod judge;
pub mod metrics;
pub mod model;
pub mod store;
pub mod timestamp;
pub mod trace;

pub use align::{AlignError, GateDecision, GateSource, RewardEngine};
pub use embed::{CachedEmbedder, EmbedError, Embedder, EmbeddingVector, RemoteEmbedder, TestEmbedder};
pub use judge::{JudgeError, JudgeGateway, JudgeMode, JudgeRequest, JudgeVerdict, PromptKind};
pub use metrics::{MetricsError, SampleEval, VasAggregate};
pub use model::{
    AlignmentResult, Claim, ClaimSet, GateMode, MatchConfig, MatchingMode, ModelError,
    RewardBreakdown, RewardWeights, Strictness, TarVariant, TimeSpan, TraceRecord,
};
pub use timestamp::{TimestampError, TimestampKey};
pub use trace::SegmentedTrace;
