//! Blocking JSON-over-HTTP client for the model sidecar.
//!
//! Routes:
//! - `POST /v1/complete` `{prompt, params}` -> `{text}`
//! - `POST /v1/embed/text` `{texts}` -> `{dim, vectors}`
//! - `POST /v1/embed/image` `{images_b64}` -> `{dim, vectors}`
//! - `POST /v1/faces` `{image_b64}` -> `{boxes: [{x, y, w, h, confidence}]}`
//!
//! Transient failures (connection errors, timeouts, 5xx) are retried with
//! exponential backoff. All calls are idempotent.

use std::time::Duration;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{check_batch, decode_dims, Embedder, FaceDetector, LanguageModel, ModelInfo, ProviderError};
use crate::model::{EmbeddingVector, FaceBox, LmParams};

pub const DEFAULT_RETRIES: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderEndpoint {
    pub base_url: String,
    pub timeout_s: f64,
    /// Name of the environment variable holding a bearer token, when the
    /// endpoint requires one.
    pub auth_env: Option<String>,
    pub model: ModelInfo,
    pub retries: u32,
    pub backoff_ms: u64,
}

impl ProviderEndpoint {
    pub fn new(base_url: impl Into<String>, model: ModelInfo) -> Self {
        Self {
            base_url: base_url.into(),
            timeout_s: 30.0,
            auth_env: None,
            model,
            retries: DEFAULT_RETRIES,
            backoff_ms: 250,
        }
    }
}

#[derive(Serialize)]
struct CompleteRequest<'a> {
    prompt: &'a str,
    params: &'a LmParams,
}

#[derive(Deserialize)]
struct CompleteResponse {
    text: String,
}

#[derive(Serialize)]
struct EmbedTextRequest<'a> {
    texts: &'a [String],
}

#[derive(Serialize)]
struct EmbedImageRequest {
    images_b64: Vec<String>,
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct FacesRequest {
    image_b64: String,
}

#[derive(Deserialize)]
struct WireBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    confidence: f64,
}

#[derive(Deserialize)]
struct FacesResponse {
    boxes: Vec<WireBox>,
}

#[derive(Clone, Copy, PartialEq)]
enum Route {
    Complete,
    EmbedText,
    EmbedImage,
    Faces,
}

impl Route {
    fn path(self) -> &'static str {
        match self {
            Route::Complete => "/v1/complete",
            Route::EmbedText => "/v1/embed/text",
            Route::EmbedImage => "/v1/embed/image",
            Route::Faces => "/v1/faces",
        }
    }

    fn unavailable(self, msg: String) -> ProviderError {
        match self {
            Route::Complete => ProviderError::LmUnavailable(msg),
            _ => ProviderError::ProviderUnavailable(msg),
        }
    }
}

/// One endpoint; implements every provider trait against it.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    endpoint: ProviderEndpoint,
    client: Client,
}

impl HttpProvider {
    pub fn new(endpoint: ProviderEndpoint) -> Result<Self, ProviderError> {
        if !(endpoint.timeout_s > 0.0 && endpoint.timeout_s.is_finite()) {
            return Err(ProviderError::Protocol(format!("timeout {} must be positive", endpoint.timeout_s)));
        }
        let client = Client::builder()
            .timeout(Duration::from_secs_f64(endpoint.timeout_s))
            .build()
            .map_err(|e| ProviderError::Protocol(e.to_string()))?;
        Ok(Self { endpoint, client })
    }

    pub fn endpoint(&self) -> &ProviderEndpoint {
        &self.endpoint
    }

    fn token(&self) -> Result<Option<String>, ProviderError> {
        match &self.endpoint.auth_env {
            None => Ok(None),
            Some(var) => match std::env::var(var) {
                Ok(t) if !t.is_empty() => Ok(Some(t)),
                _ => Err(ProviderError::AuthMissing { var: var.clone() }),
            },
        }
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(&self, route: Route, body: &Req) -> Result<Resp, ProviderError> {
        let token = self.token()?;
        let url = format!("{}{}", self.endpoint.base_url.trim_end_matches('/'), route.path());
        let mut attempt = 0;
        loop {
            let mut req = self.client.post(&url).json(body);
            if let Some(t) = &token {
                req = req.bearer_auth(t);
            }
            let transient = match req.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp
                            .json::<Resp>()
                            .map_err(|e| ProviderError::Protocol(format!("bad response body: {e}")));
                    }
                    let text = resp.text().unwrap_or_default();
                    if !status.is_server_error() {
                        return Err(client_error(route, status, text));
                    }
                    format!("{url} returned {status}: {text}")
                }
                Err(e) => format!("{url}: {e}"),
            };
            if attempt >= self.endpoint.retries {
                return Err(route.unavailable(transient));
            }
            log::warn!("transient provider failure (attempt {}): {transient}", attempt + 1);
            std::thread::sleep(Duration::from_millis(self.endpoint.backoff_ms << attempt));
            attempt += 1;
        }
    }

    fn embed(&self, route: Route, body: &impl Serialize, requested: usize) -> Result<Vec<EmbeddingVector>, ProviderError> {
        let resp: EmbedResponse = self.post(route, body)?;
        if resp.dim != self.endpoint.model.dim {
            return Err(ProviderError::EmbeddingDimMismatch {
                expected: self.endpoint.model.dim,
                got: resp.dim,
            });
        }
        check_batch(&self.endpoint.model, requested, resp.vectors)
    }
}

fn client_error(route: Route, status: StatusCode, body: String) -> ProviderError {
    match status.as_u16() {
        402 | 429 => ProviderError::BudgetExceeded(body),
        413 => ProviderError::PayloadTooLarge,
        422 if route == Route::Faces => ProviderError::UndecodableImage(body),
        code => ProviderError::Rejected { status: code, body },
    }
}

impl LanguageModel for HttpProvider {
    fn complete(&self, prompt: &str, params: &LmParams) -> Result<String, ProviderError> {
        let resp: CompleteResponse = self.post(Route::Complete, &CompleteRequest { prompt, params })?;
        Ok(resp.text)
    }
}

impl Embedder for HttpProvider {
    fn model(&self) -> &ModelInfo {
        &self.endpoint.model
    }

    fn embed_text(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        if texts.is_empty() {
            return Err(ProviderError::EmptyBatch);
        }
        self.embed(Route::EmbedText, &EmbedTextRequest { texts }, texts.len())
    }

    fn embed_image(&self, images: &[Vec<u8>]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        if images.is_empty() {
            return Err(ProviderError::EmptyBatch);
        }
        let body = EmbedImageRequest {
            images_b64: images.iter().map(|b| B64.encode(b)).collect(),
        };
        self.embed(Route::EmbedImage, &body, images.len())
    }
}

impl FaceDetector for HttpProvider {
    fn detect_faces(&self, image: &[u8]) -> Result<Vec<FaceBox>, ProviderError> {
        let dims = decode_dims(image)?;
        let resp: FacesResponse = self.post(
            Route::Faces,
            &FacesRequest {
                image_b64: B64.encode(image),
            },
        )?;
        let mut faces = Vec::with_capacity(resp.boxes.len());
        for b in resp.boxes {
            let face = FaceBox::from_detector(b.x, b.y, b.w, b.h, b.confidence, dims)
                .map_err(|e| ProviderError::Protocol(e.to_string()))?;
            faces.extend(face);
        }
        Ok(faces)
    }
}
