//! Model provider contracts and their implementations.
//!
//! Three capabilities sit behind traits: text completion, text/image
//! embedding, and face detection. [`http::HttpProvider`] speaks the JSON
//! sidecar protocol; [`mock`] holds deterministic stand-ins that need no
//! network.

pub mod embfile;
pub mod http;
pub mod mock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EmbeddingVector, FaceBox, LmParams};

/// Environment variable holding the bearer token for completion endpoints.
pub const LM_TOKEN_ENV: &str = "ANSEL_LM_TOKEN";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("language model unavailable: {0}")]
    LmUnavailable(String),
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("auth token missing: set {var}")]
    AuthMissing { var: String },
    #[error("provider quota exceeded: {0}")]
    BudgetExceeded(String),
    #[error("embedding dimension mismatch: endpoint declares {expected}, got {got}")]
    EmbeddingDimMismatch { expected: usize, got: usize },
    #[error("request payload too large; split the batch")]
    PayloadTooLarge,
    #[error("undecodable image: {0}")]
    UndecodableImage(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("provider rejected request with status {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("protocol error: {0}")]
    Protocol(String),
}

/// Identity of the model behind an endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub model_id: String,
    pub dim: usize,
}

pub trait LanguageModel: Send + Sync {
    /// Returns the completion text verbatim.
    fn complete(&self, prompt: &str, params: &LmParams) -> Result<String, ProviderError>;
}

pub trait Embedder: Send + Sync {
    fn model(&self) -> &ModelInfo;

    /// One raw vector per text, in input order.
    fn embed_text(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError>;

    /// One raw vector per encoded image, in input order.
    fn embed_image(&self, images: &[Vec<u8>]) -> Result<Vec<EmbeddingVector>, ProviderError>;
}

pub trait FaceDetector: Send + Sync {
    /// Boxes clamped to the image bounds.
    fn detect_faces(&self, image: &[u8]) -> Result<Vec<FaceBox>, ProviderError>;
}

/// Checks a returned batch against the request size and declared width.
pub(crate) fn check_batch(
    model: &ModelInfo,
    requested: usize,
    vectors: Vec<Vec<f64>>,
) -> Result<Vec<EmbeddingVector>, ProviderError> {
    if vectors.len() != requested {
        return Err(ProviderError::Protocol(format!(
            "asked for {requested} vectors, got {}",
            vectors.len()
        )));
    }
    vectors
        .into_iter()
        .map(|v| {
            if v.len() != model.dim {
                return Err(ProviderError::EmbeddingDimMismatch {
                    expected: model.dim,
                    got: v.len(),
                });
            }
            EmbeddingVector::new(v).map_err(|e| ProviderError::Protocol(e.to_string()))
        })
        .collect()
}

/// Decodes an image just far enough to learn its size.
pub fn decode_dims(image: &[u8]) -> Result<crate::model::ImageDims, ProviderError> {
    let img = image::load_from_memory(image).map_err(|e| ProviderError::UndecodableImage(e.to_string()))?;
    crate::model::ImageDims::new(img.width(), img.height())
        .map_err(|e| ProviderError::UndecodableImage(e.to_string()))
}
