use std::path::{Path, PathBuf};

use anyhow::Context;
use eventshot_core::baseline::ScoreWeights;
use eventshot_core::facegeom::DEFAULT_MARGIN;
use eventshot_core::hygiene::HygienePolicy;
use eventshot_core::media::CollageSpec;
use eventshot_core::model::LmParams;
use eventshot_core::providers::http::DEFAULT_RETRIES;
use eventshot_core::providers::LM_TOKEN_ENV;
use eventshot_core::retrieval::SelectionMode;
use eventshot_core::shotlist::{Priming, DEFAULT_LIST_LEN, DEFAULT_MAX_RETRIES, DEFAULT_REJECTED_TERMS};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProvidersConfig {
    pub kind: ProviderKind,
    pub base_url: String,
    pub timeout_s: f64,
    pub retries: u32,
    pub backoff_ms: u64,
    /// Token variable for the completion route only.
    pub lm_auth_env: Option<String>,
    pub model_id: String,
    pub dim: usize,
    pub embed_batch: usize,
}

impl Default for ProvidersConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Mock,
            base_url: "http://127.0.0.1:8765".into(),
            timeout_s: 30.0,
            retries: DEFAULT_RETRIES,
            backoff_ms: 250,
            lm_auth_env: Some(LM_TOKEN_ENV.into()),
            model_id: "ViT-L/14@336px".into(),
            dim: 768,
            embed_batch: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RejectionConfig {
    pub terms: Vec<String>,
    pub max_retries: u32,
}

impl Default for RejectionConfig {
    fn default() -> Self {
        Self {
            terms: DEFAULT_REJECTED_TERMS.iter().map(|s| s.to_string()).collect(),
            max_retries: DEFAULT_MAX_RETRIES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BaselineModeName {
    Budget,
    #[default]
    Topk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub mode: BaselineModeName,
    pub k: usize,
    pub cut_count: Option<usize>,
    pub block_size: Option<usize>,
    pub weights: ScoreWeights,
    pub attention_temperature: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            mode: BaselineModeName::Topk,
            k: DEFAULT_LIST_LEN,
            cut_count: None,
            block_size: None,
            weights: ScoreWeights::default(),
            attention_temperature: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub workdir: PathBuf,
    pub portfolio_size: usize,
    pub selection: SelectionMode,
    pub face_margin: f64,
    pub providers: ProvidersConfig,
    pub lm: LmParams,
    /// Example event and list shown before the real request.
    pub priming: Option<Priming>,
    pub rejection: RejectionConfig,
    pub hygiene: HygienePolicy,
    pub collage: CollageSpec,
    pub baseline: BaselineConfig,
    /// Program used to decode video sources.
    pub ffmpeg: String,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            workdir: PathBuf::from("work"),
            portfolio_size: DEFAULT_LIST_LEN,
            selection: SelectionMode::AllowDuplicates,
            face_margin: DEFAULT_MARGIN,
            providers: ProvidersConfig::default(),
            lm: LmParams::default(),
            priming: None,
            rejection: RejectionConfig::default(),
            hygiene: HygienePolicy::default(),
            collage: CollageSpec::default(),
            baseline: BaselineConfig::default(),
            ffmpeg: "ffmpeg".into(),
        }
    }
}

impl Config {
    /// Reads a TOML file; missing fields take their defaults. A relative
    /// `workdir` is resolved against the current directory.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }
}
