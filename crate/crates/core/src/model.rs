//! Shared domain types.
//!
//! Every type validates its invariants at construction, so downstream modules
//! can rely on them without re-checking. Coordinates are integer pixels with a
//! top-left origin; rectangles are half-open.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the L2 norm of a vector flagged as normalized.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },
    #[error("embedding dimension must be at least 1")]
    ZeroDimension,
    #[error("vector flagged as normalized has norm {norm}")]
    NotNormalized { norm: f64 },
    #[error("invalid face box: {0}")]
    InvalidFaceBox(String),
    #[error("invalid crop rectangle: {0}")]
    InvalidCrop(String),
    #[error("invalid image dimensions {width}x{height}")]
    InvalidDims { width: u32, height: u32 },
    #[error("invalid language-model parameters: {0}")]
    InvalidLmParams(String),
    #[error("photo idea text is empty")]
    EmptyIdea,
    #[error("photo idea ordinals must be 1..={n} without gaps; found {found} at position {position}")]
    OrdinalGap { n: usize, position: usize, found: usize },
    #[error("shot list has {got} ideas, expected {expected}")]
    ShotListLength { expected: usize, got: usize },
    #[error("duplicate frame id {0}")]
    DuplicateFrameId(u64),
    #[error("timestamps decrease between frame {prev} and frame {next}")]
    NonMonotoneTimestamps { prev: u64, next: u64 },
    #[error("invalid timestamp {0} (must be finite and non-negative)")]
    InvalidTimestamp(f64),
}

/// A fixed-dimension real vector holding a text or image embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    normalized: bool,
}

/// Checks `values` against the declared `dim` and wraps them unnormalized.
pub fn validate_embedding(values: Vec<f64>, dim: usize) -> Result<EmbeddingVector, ModelError> {
    if dim == 0 {
        return Err(ModelError::ZeroDimension);
    }
    if values.len() != dim {
        return Err(ModelError::DimensionMismatch {
            expected: dim,
            got: values.len(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(ModelError::NonFiniteValue { index });
    }
    Ok(EmbeddingVector {
        values,
        normalized: false,
    })
}

impl EmbeddingVector {
    /// Wraps raw values, taking the dimension from their length.
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        let dim = values.len();
        validate_embedding(values, dim)
    }

    /// Wraps values that are claimed to have unit norm. The claim is checked.
    pub fn new_normalized(values: Vec<f64>) -> Result<Self, ModelError> {
        let mut v = Self::new(values)?;
        let norm = v.norm();
        if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(ModelError::NotNormalized { norm });
        }
        v.normalized = true;
        Ok(v)
    }

    pub fn from_f32(values: &[f32]) -> Result<Self, ModelError> {
        Self::new(values.iter().map(|&v| f64::from(v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Dot product. Panics on mismatched dimensions; callers check shapes
    /// at the corpus level.
    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dot of mismatched dimensions");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.values.iter().map(|&v| v as f32).collect()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Ensures all vectors share one dimension and returns it.
pub(crate) fn uniform_dim<'a, I>(vectors: I) -> Result<Option<usize>, ModelError>
where
    I: IntoIterator<Item = &'a EmbeddingVector>,
{
    let mut dim = None;
    for v in vectors {
        match dim {
            None => dim = Some(v.dim()),
            Some(d) if d != v.dim() => {
                return Err(ModelError::DimensionMismatch {
                    expected: d,
                    got: v.dim(),
                })
            }
            _ => {}
        }
    }
    Ok(dim)
}

/// Image size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageDims {
    pub width: u32,
    pub height: u32,
}

impl ImageDims {
    pub fn new(width: u32, height: u32) -> Result<Self, ModelError> {
        if width == 0 || height == 0 {
            return Err(ModelError::InvalidDims { width, height });
        }
        Ok(Self { width, height })
    }
}

/// A detected face, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    pub confidence: f64,
}

impl FaceBox {
    pub fn new(x: u32, y: u32, w: u32, h: u32, confidence: f64) -> Result<Self, ModelError> {
        if w == 0 || h == 0 {
            return Err(ModelError::InvalidFaceBox(format!("zero extent {w}x{h}")));
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(ModelError::InvalidFaceBox(format!(
                "confidence {confidence} outside [0, 1]"
            )));
        }
        Ok(Self {
            x,
            y,
            w,
            h,
            confidence,
        })
    }

    /// Builds a box from real-valued detector output, rounding outward and
    /// clamping to the image. Returns `None` when nothing is left inside.
    pub fn from_detector(
        x: f64,
        y: f64,
        w: f64,
        h: f64,
        confidence: f64,
        dims: ImageDims,
    ) -> Result<Option<Self>, ModelError> {
        if ![x, y, w, h, confidence].iter().all(|v| v.is_finite()) {
            return Err(ModelError::InvalidFaceBox("non-finite coordinate".into()));
        }
        let x0 = x.floor().clamp(0.0, f64::from(dims.width));
        let y0 = y.floor().clamp(0.0, f64::from(dims.height));
        let x1 = (x + w).ceil().clamp(0.0, f64::from(dims.width));
        let y1 = (y + h).ceil().clamp(0.0, f64::from(dims.height));
        if x1 <= x0 || y1 <= y0 {
            return Ok(None);
        }
        Self::new(
            x0 as u32,
            y0 as u32,
            (x1 - x0) as u32,
            (y1 - y0) as u32,
            confidence.clamp(0.0, 1.0),
        )
        .map(Some)
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    /// Clips the box to the image; `None` if it lies entirely outside.
    pub fn clamp_to(&self, dims: ImageDims) -> Option<Self> {
        let x1 = self.right().min(dims.width);
        let y1 = self.bottom().min(dims.height);
        if self.x >= x1 || self.y >= y1 {
            return None;
        }
        Some(Self {
            x: self.x,
            y: self.y,
            w: x1 - self.x,
            h: y1 - self.y,
            confidence: self.confidence,
        })
    }
}

/// A half-open crop rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CropRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl CropRect {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32, dims: ImageDims) -> Result<Self, ModelError> {
        let rect = Self { x0, y0, x1, y1 };
        rect.check(dims)?;
        Ok(rect)
    }

    pub fn full(dims: ImageDims) -> Self {
        Self {
            x0: 0,
            y0: 0,
            x1: dims.width,
            y1: dims.height,
        }
    }

    pub fn check(&self, dims: ImageDims) -> Result<(), ModelError> {
        if self.x0 >= self.x1 || self.y0 >= self.y1 {
            return Err(ModelError::InvalidCrop(format!("empty rectangle {self:?}")));
        }
        if self.x1 > dims.width || self.y1 > dims.height {
            return Err(ModelError::InvalidCrop(format!(
                "{self:?} exceeds {}x{}",
                dims.width, dims.height
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub fn contains(&self, other: &CropRect) -> bool {
        self.x0 <= other.x0 && self.y0 <= other.y0 && self.x1 >= other.x1 && self.y1 >= other.y1
    }
}

/// One sampled video frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_id: u64,
    pub timestamp_s: f64,
    pub image_ref: String,
    /// `None` until the face detector has run on this frame.
    pub faces: Option<Vec<FaceBox>>,
    pub embedding: Option<EmbeddingVector>,
}

impl FrameRecord {
    pub fn new(frame_id: u64, timestamp_s: f64, image_ref: impl Into<String>) -> Result<Self, ModelError> {
        if !timestamp_s.is_finite() || timestamp_s < 0.0 {
            return Err(ModelError::InvalidTimestamp(timestamp_s));
        }
        Ok(Self {
            frame_id,
            timestamp_s,
            image_ref: image_ref.into(),
            faces: None,
            embedding: None,
        })
    }

    pub fn with_faces(mut self, faces: Vec<FaceBox>) -> Self {
        self.faces = Some(faces);
        self
    }

    pub fn with_embedding(mut self, embedding: EmbeddingVector) -> Self {
        self.embedding = Some(embedding);
        self
    }
}

/// Checks corpus-level frame invariants: unique ids and timestamps that
/// never decrease as the id grows.
pub fn validate_corpus(frames: &[FrameRecord]) -> Result<(), ModelError> {
    let mut order: Vec<&FrameRecord> = frames.iter().collect();
    order.sort_by_key(|f| f.frame_id);
    for pair in order.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a.frame_id == b.frame_id {
            return Err(ModelError::DuplicateFrameId(a.frame_id));
        }
        if b.timestamp_s < a.timestamp_s {
            return Err(ModelError::NonMonotoneTimestamps {
                prev: a.frame_id,
                next: b.frame_id,
            });
        }
    }
    Ok(())
}

/// One phrase of a shot list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhotoIdea {
    /// 1-based ordinal.
    pub index: usize,
    pub text: String,
}

impl PhotoIdea {
    pub fn new(index: usize, text: impl Into<String>) -> Result<Self, ModelError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(ModelError::EmptyIdea);
        }
        Ok(Self { index, text })
    }
}

/// Sampling parameters sent with every completion request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmParams {
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub top_p: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
}

impl Default for LmParams {
    fn default() -> Self {
        Self {
            model_id: "text-davinci-002".to_string(),
            temperature: 0.7,
            max_tokens: 2000,
            top_p: 1.0,
            frequency_penalty: 0.0,
            presence_penalty: 0.0,
        }
    }
}

impl LmParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.model_id.is_empty() {
            return Err(ModelError::InvalidLmParams("empty model_id".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(ModelError::InvalidLmParams(format!(
                "temperature {} must be >= 0",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(ModelError::InvalidLmParams("max_tokens must be positive".into()));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(ModelError::InvalidLmParams(format!(
                "top_p {} outside (0, 1]",
                self.top_p
            )));
        }
        if !self.frequency_penalty.is_finite() || !self.presence_penalty.is_finite() {
            return Err(ModelError::InvalidLmParams("non-finite penalty".into()));
        }
        Ok(())
    }
}

/// Where a shot list came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub prompt_text: String,
    pub lm_params: LmParams,
    pub attempt_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotList {
    pub event_name: String,
    pub ideas: Vec<PhotoIdea>,
    pub provenance: Provenance,
}

impl ShotList {
    pub fn new(
        event_name: impl Into<String>,
        ideas: Vec<PhotoIdea>,
        n: usize,
        provenance: Provenance,
    ) -> Result<Self, ModelError> {
        let list = Self {
            event_name: event_name.into(),
            ideas,
            provenance,
        };
        list.validate(n)?;
        Ok(list)
    }

    /// Checks length and ordinal continuity against the requested `n`.
    pub fn validate(&self, n: usize) -> Result<(), ModelError> {
        if self.ideas.len() != n {
            return Err(ModelError::ShotListLength {
                expected: n,
                got: self.ideas.len(),
            });
        }
        for (position, idea) in self.ideas.iter().enumerate() {
            if idea.index != position + 1 {
                return Err(ModelError::OrdinalGap {
                    n,
                    position,
                    found: idea.index,
                });
            }
            if idea.text.trim().is_empty() {
                return Err(ModelError::EmptyIdea);
            }
        }
        Ok(())
    }
}

/// One selected (phrase, frame, crop) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioEntry {
    pub idea_index: usize,
    pub frame_id: u64,
    pub score: f64,
    /// Filled in by the face-crop stage.
    pub crop: Option<CropRect>,
}
