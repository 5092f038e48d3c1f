//! Run configuration: defaults, flat TOML config files, and command-line
//! flags, merged with flags winning over file values.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use tarkit::align::ClaimSource;
use tarkit::judge::{JudgeConfig, JudgeGateway, JudgeMode};
use tarkit::model::{GateMode, MatchConfig, MatchingMode, RewardWeights, TarVariant};
use tarkit::store::CacheStore;
use tarkit::{CachedEmbedder, Embedder, RemoteEmbedder, RewardEngine, TestEmbedder};

pub const CACHE_DIR_ENV: &str = "TARKIT_CACHE_DIR";
pub const JUDGE_TOKEN_ENV: &str = "TARKIT_JUDGE_TOKEN";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GateModeArg {
    LlmJudge,
    StringCompare,
    Disabled,
}

impl From<GateModeArg> for GateMode {
    fn from(value: GateModeArg) -> Self {
        match value {
            GateModeArg::LlmJudge => GateMode::LlmJudge,
            GateModeArg::StringCompare => GateMode::StringCompare,
            GateModeArg::Disabled => GateMode::Disabled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TarVariantArg {
    Precision,
    F1,
}

impl From<TarVariantArg> for TarVariant {
    fn from(value: TarVariantArg) -> Self {
        match value {
            TarVariantArg::Precision => TarVariant::Precision,
            TarVariantArg::F1 => TarVariant::F1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatchingArg {
    Greedy,
    ExactOracle,
}

impl From<MatchingArg> for MatchingMode {
    fn from(value: MatchingArg) -> Self {
        match value {
            MatchingArg::Greedy => MatchingMode::Greedy,
            MatchingArg::ExactOracle => MatchingMode::ExactOracle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClaimSourceArg {
    Think,
    Response,
}

impl From<ClaimSourceArg> for ClaimSource {
    fn from(value: ClaimSourceArg) -> Self {
        match value {
            ClaimSourceArg::Think => ClaimSource::ThinkBlock,
            ClaimSourceArg::Response => ClaimSource::FullResponse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    Test,
    Remote,
}

/// Flags shared by the corpus commands. Every config-file key has a flag;
/// flags win.
#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// Flat TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Temporal tolerance in seconds.
    #[arg(long)]
    pub delta: Option<u32>,
    /// Semantic similarity threshold in [0, 1].
    #[arg(long)]
    pub tau: Option<f64>,
    /// Weight of the accuracy term.
    #[arg(long)]
    pub lambda_acc: Option<f64>,
    /// Weight of the format term.
    #[arg(long)]
    pub lambda_fmt: Option<f64>,
    /// Weight of the gated alignment term.
    #[arg(long)]
    pub lambda_tar: Option<f64>,
    /// Weight of the additive consistency term (0 disables it).
    #[arg(long)]
    pub lambda_tac: Option<f64>,
    /// How the consistency gate is decided.
    #[arg(long, value_enum)]
    pub gate_mode: Option<GateModeArg>,
    /// Alignment variant feeding the gated reward term.
    #[arg(long, value_enum)]
    pub tar_variant: Option<TarVariantArg>,
    /// Assignment strategy for claim matching.
    #[arg(long, value_enum)]
    pub matching: Option<MatchingArg>,
    /// Serve every judge call from cache fixtures; never touch the network.
    #[arg(long)]
    pub replay: bool,
    /// Directory for the judge/embedding cache.
    #[arg(long)]
    pub cache_dir: Option<String>,
    /// Worker pool size for per-sample scoring.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Seed recorded in the report and used by fixture generators.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional CSV of per-sample rows.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Chat-completion endpoint URL for the judge.
    #[arg(long)]
    pub judge_url: Option<String>,
    /// Judge model identifier; cache keys include it.
    #[arg(long)]
    pub judge_model: Option<String>,
    /// Embedding provider for semantic claim matching.
    #[arg(long, value_enum)]
    pub embedder: Option<EmbedderKind>,
    /// Embedding service endpoint (remote embedder only).
    #[arg(long)]
    pub embed_url: Option<String>,
    /// Embedding provider identifier, used for cache keys.
    #[arg(long)]
    pub embed_id: Option<String>,
    /// Embedding dimension expected from the provider.
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Which text predicted claims are extracted from.
    #[arg(long, value_enum)]
    pub claim_source: Option<ClaimSourceArg>,
    /// Metadata key that groups samples into benchmarks for reports.
    #[arg(long)]
    pub group_by: Option<String>,
    /// Candidate generations per prompt (echoed in reports).
    #[arg(long)]
    pub group_size: Option<usize>,
}

/// Flat config file schema: same keys as [`RunConfig`], all optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    delta_seconds: Option<u32>,
    tau: Option<f64>,
    lambda_acc: Option<f64>,
    lambda_fmt: Option<f64>,
    lambda_tar: Option<f64>,
    lambda_tac: Option<f64>,
    gate_mode: Option<GateMode>,
    tar_variant: Option<TarVariant>,
    matching: Option<MatchingMode>,
    claim_source: Option<ClaimSource>,
    replay: Option<bool>,
    cache_dir: Option<String>,
    jobs: Option<usize>,
    seed: Option<u64>,
    judge_url: Option<String>,
    judge_model: Option<String>,
    embedder: Option<EmbedderKind>,
    embed_url: Option<String>,
    embed_id: Option<String>,
    embed_dim: Option<usize>,
    group_by: Option<String>,
    group_size: Option<usize>,
}

/// Fully resolved run configuration, echoed verbatim into every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub delta_seconds: u32,
    pub tau: f64,
    pub lambda_acc: f64,
    pub lambda_fmt: f64,
    pub lambda_tar: f64,
    pub lambda_tac: f64,
    pub gate_mode: GateMode,
    pub tar_variant: TarVariant,
    pub matching: MatchingMode,
    pub claim_source: ClaimSource,
    pub replay: bool,
    pub cache_dir: String,
    pub jobs: usize,
    pub seed: u64,
    pub judge_url: Option<String>,
    pub judge_model: String,
    pub embedder: EmbedderKind,
    pub embed_url: Option<String>,
    pub embed_id: String,
    pub embed_dim: usize,
    pub group_by: String,
    pub group_size: usize,
}

impl RunConfig {
    /// Defaults mirror the reference training setup: delta 2 s, tau 0.75,
    /// unit accuracy/format/alignment weights, group size 8.
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let file: FileConfig = match &args.config {
            Some(path) => {
                let raw = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config file {}", path.display()))?;
                toml::from_str(&raw)
                    .with_context(|| format!("parsing config file {}", path.display()))?
            }
            None => FileConfig::default(),
        };

        let embedder = args.embedder.or(file.embedder).unwrap_or(EmbedderKind::Test);
        let cache_dir = args
            .cache_dir
            .clone()
            .or_else(|| std::env::var(CACHE_DIR_ENV).ok())
            .or(file.cache_dir)
            .unwrap_or_else(|| ".tarkit-cache".to_string());

        let config = Self {
            delta_seconds: args.delta.or(file.delta_seconds).unwrap_or(2),
            tau: args.tau.or(file.tau).unwrap_or(0.75),
            lambda_acc: args.lambda_acc.or(file.lambda_acc).unwrap_or(1.0),
            lambda_fmt: args.lambda_fmt.or(file.lambda_fmt).unwrap_or(1.0),
            lambda_tar: args.lambda_tar.or(file.lambda_tar).unwrap_or(1.0),
            lambda_tac: args.lambda_tac.or(file.lambda_tac).unwrap_or(0.0),
            gate_mode: args
                .gate_mode
                .map(GateMode::from)
                .or(file.gate_mode)
                .unwrap_or(GateMode::LlmJudge),
            tar_variant: args
                .tar_variant
                .map(TarVariant::from)
                .or(file.tar_variant)
                .unwrap_or(TarVariant::Precision),
            matching: args
                .matching
                .map(MatchingMode::from)
                .or(file.matching)
                .unwrap_or(MatchingMode::Greedy),
            claim_source: args
                .claim_source
                .map(ClaimSource::from)
                .or(file.claim_source)
                .unwrap_or(ClaimSource::ThinkBlock),
            replay: args.replay || file.replay.unwrap_or(false),
            cache_dir,
            jobs: args.jobs.or(file.jobs).unwrap_or(4).max(1),
            seed: args.seed.or(file.seed).unwrap_or(0),
            judge_url: args.judge_url.clone().or(file.judge_url),
            judge_model: args
                .judge_model
                .clone()
                .or(file.judge_model)
                .unwrap_or_else(|| "qwen3-next-80b-a3b".to_string()),
            embedder,
            embed_url: args.embed_url.clone().or(file.embed_url),
            embed_id: args.embed_id.clone().or(file.embed_id).unwrap_or_else(|| {
                match embedder {
                    EmbedderKind::Test => "test-bow-256".to_string(),
                    EmbedderKind::Remote => "all-minilm-l6-v2".to_string(),
                }
            }),
            embed_dim: args.embed_dim.or(file.embed_dim).unwrap_or(match embedder {
                EmbedderKind::Test => 256,
                EmbedderKind::Remote => 384,
            }),
            group_by: args
                .group_by
                .clone()
                .or(file.group_by)
                .unwrap_or_else(|| "benchmark".to_string()),
            group_size: args.group_size.or(file.group_size).unwrap_or(8),
        };
        config.match_config().validate()?;
        config.weights().validate()?;

        // The default threshold was calibrated against one embedding
        // provider; flag the combination when another provider runs with it.
        if config.embed_id != "all-minilm-l6-v2" && (config.tau - 0.75).abs() < f64::EPSILON {
            log::warn!(
                "tau = 0.75 was calibrated for all-minilm-l6-v2; provider {} may need a different threshold",
                config.embed_id
            );
        }
        Ok(config)
    }

    pub fn match_config(&self) -> MatchConfig {
        MatchConfig {
            delta_seconds: self.delta_seconds,
            tau: self.tau,
            matching_mode: self.matching,
            tar_variant: self.tar_variant,
            gate_mode: self.gate_mode,
        }
    }

    pub fn weights(&self) -> RewardWeights {
        RewardWeights {
            lambda_acc: self.lambda_acc,
            lambda_fmt: self.lambda_fmt,
            lambda_tar: self.lambda_tar,
            lambda_tac: self.lambda_tac,
        }
    }

    pub fn open_store(&self) -> Result<CacheStore> {
        CacheStore::new(&self.cache_dir)
            .with_context(|| format!("opening cache directory {}", self.cache_dir))
    }

    /// Builds the reward engine this config describes: embedder, optional
    /// judge gateway, and claim-source selection.
    pub fn build_engine(&self) -> Result<RewardEngine> {
        let store = self.open_store()?;

        let embedder: Arc<dyn Embedder> = match self.embedder {
            EmbedderKind::Test => Arc::new(TestEmbedder),
            EmbedderKind::Remote => {
                let url = self
                    .embed_url
                    .as_deref()
                    .context("remote embedder needs --embed-url")?;
                let remote = RemoteEmbedder::new(&self.embed_id, url, self.embed_dim)
                    .map_err(|e| anyhow::anyhow!("building remote embedder: {e}"))?;
                Arc::new(CachedEmbedder::new(remote, store.clone()))
            }
        };

        let mut engine = RewardEngine::new(embedder).with_claim_source(self.claim_source);
        if self.judge_url.is_some() || self.replay {
            let judge_config = JudgeConfig {
                base_url: self.judge_url.clone(),
                model: self.judge_model.clone(),
                token_env: JUDGE_TOKEN_ENV.to_string(),
                mode: if self.replay {
                    JudgeMode::Replay
                } else {
                    JudgeMode::Live
                },
                max_attempts: 3,
                backoff: Duration::from_millis(200),
                timeout: Duration::from_secs(120),
                inflight_cap: self.jobs,
            };
            engine = engine.with_judge(Arc::new(JudgeGateway::new(judge_config, store)));
        }
        Ok(engine)
    }
}
