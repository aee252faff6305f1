//! Generic video-summarization baseline, inference only.
//!
//! Frames are segmented with kernel temporal segmentation, scored from
//! attention-row entropy (uniqueness) and cross-block similarity
//! (diversity), and selected either by a knapsack under a 15% frame budget
//! or as the center frames of the k best segments.
//!
//! Nothing here is trained. When no attention matrix is supplied, a softmax
//! over feature similarities stands in for the learned one.

pub mod knapsack;
pub mod kts;
pub mod scoring;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::model::EmbeddingVector;

pub use knapsack::knapsack_select;
pub use kts::{kernel_matrix, kernel_matrix_with, kts_segment, kts_segment_with};
pub use scoring::{
    block_diversity, frame_scores, segment_scores, uniqueness, AttentionMatrix, ScoreWeights,
};

/// Summary length cap as a percentage of the video's frames.
pub const BUDGET_PERCENT: usize = 15;
pub const DEFAULT_TOP_K: usize = 9;
/// Target mean segment duration used to pick the cut count.
pub const DEFAULT_SEGMENT_SECONDS: f64 = 2.0;
pub const DEFAULT_MAX_BLOCK_SIZE: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("empty input")]
    EmptyInput,
    #[error("mixed feature dimensions: expected {expected}, got {got}")]
    MixedDimensions { expected: usize, got: usize },
    #[error("feature {0} is not normalized")]
    NotNormalized(usize),
    #[error("cannot place {m} cuts in {n} frames")]
    InvalidSegmentCount { m: usize, n: usize },
    #[error("invalid segment [{start}, {end})")]
    InvalidSegment { start: usize, end: usize },
    #[error("segments do not cover [0, {n}) contiguously (problem at frame {at})")]
    CoverageGap { n: usize, at: usize },
    #[error("invalid attention matrix: {0}")]
    InvalidAttention(String),
    #[error("attention covers {attention} frames but there are {features} features")]
    AttentionSize { attention: usize, features: usize },
    #[error("block size {block_size} invalid for {n} frames")]
    InvalidBlockSize { block_size: usize, n: usize },
    #[error("all {n} frames fall in one block of size {block_size}")]
    SingleBlock { n: usize, block_size: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid score weights {0:?}")]
    InvalidWeights(ScoreWeights),
    #[error("k = {k} is invalid for {segments} segments")]
    InvalidK { k: usize, segments: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Half-open frame range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn new(start: usize, end: usize) -> Result<Self, BaselineError> {
        if start >= end {
            return Err(BaselineError::InvalidSegment { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    /// Lower-median frame of the segment.
    pub fn center(&self) -> usize {
        self.start + (self.len() - 1) / 2
    }

    pub fn contains(&self, frame: usize) -> bool {
        (self.start..self.end).contains(&frame)
    }

    /// Segments between consecutive change points, covering `[0, n)`.
    pub fn from_cuts(cuts: &[usize], n: usize) -> Vec<Segment> {
        let mut bounds = Vec::with_capacity(cuts.len() + 2);
        bounds.push(0);
        bounds.extend_from_slice(cuts);
        bounds.push(n);
        bounds
            .windows(2)
            .map(|w| Segment { start: w[0], end: w[1] })
            .collect()
    }

    pub fn check_cover(segments: &[Segment], n: usize) -> Result<(), BaselineError> {
        let mut at = 0;
        for seg in segments {
            if seg.start != at || seg.end <= seg.start {
                return Err(BaselineError::CoverageGap { n, at });
            }
            at = seg.end;
        }
        if at != n || segments.is_empty() {
            return Err(BaselineError::CoverageGap { n, at });
        }
        Ok(())
    }
}

pub(crate) fn check_features(features: &[EmbeddingVector]) -> Result<usize, BaselineError> {
    match crate::model::uniform_dim(features) {
        Ok(Some(d)) => Ok(d),
        Ok(None) => Err(BaselineError::EmptyInput),
        Err(crate::model::ModelError::DimensionMismatch { expected, got }) => {
            Err(BaselineError::MixedDimensions { expected, got })
        }
        Err(other) => Err(BaselineError::InvalidInput(other.to_string())),
    }
}

pub(crate) fn check_normalized(features: &[EmbeddingVector]) -> Result<(), BaselineError> {
    check_features(features)?;
    match features.iter().position(|f| !f.is_normalized()) {
        Some(i) => Err(BaselineError::NotNormalized(i)),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SummaryMode {
    /// Knapsack over segments with a budget of 15% of the frames.
    Budget,
    /// Center frame of each of the `k` best segments.
    TopKCenters { k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryConfig {
    pub mode: SummaryMode,
    /// Number of change points; derived from `fps` when absent.
    pub cut_count: Option<usize>,
    pub fps: f64,
    /// Diversity block size; derived from the frame count when absent.
    pub block_size: Option<usize>,
    pub weights: ScoreWeights,
    pub attention_temperature: f64,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        Self {
            mode: SummaryMode::TopKCenters { k: DEFAULT_TOP_K },
            cut_count: None,
            fps: 1.0,
            block_size: None,
            weights: ScoreWeights::default(),
            attention_temperature: 1.0,
        }
    }
}

/// Block size used when none is configured: half the video, capped.
pub fn default_block_size(n: usize) -> usize {
    (n / 2).clamp(1, DEFAULT_MAX_BLOCK_SIZE)
}

/// Knapsack capacity in frames for a video of `n` frames.
pub fn frame_budget(n: usize) -> usize {
    n * BUDGET_PERCENT / 100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Selected frame positions (indices into the feature list), ascending.
    pub frames: Vec<usize>,
    pub segments: Vec<Segment>,
    pub segment_scores: Vec<f64>,
    pub frame_scores: Vec<f64>,
    /// Segments chosen by the selector, ascending.
    pub chosen_segments: Vec<usize>,
}

/// Indices of the `k` best segments by score (ties to the earlier one).
pub fn top_k_segments(scores: &[f64], k: usize) -> Result<Vec<usize>, BaselineError> {
    if k == 0 || k > scores.len() {
        return Err(BaselineError::InvalidK {
            k,
            segments: scores.len(),
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    Ok(order)
}

/// Selection given precomputed segments and frame scores.
pub fn select_frames(
    frame_scores: Vec<f64>,
    segments: Vec<Segment>,
    mode: SummaryMode,
) -> Result<Summary, BaselineError> {
    let n = frame_scores.len();
    let seg_scores = segment_scores(&frame_scores, &segments)?;
    let (chosen, frames) = match mode {
        SummaryMode::Budget => {
            let weights: Vec<usize> = segments.iter().map(Segment::len).collect();
            let chosen = knapsack_select(&seg_scores, &weights, frame_budget(n))?;
            let frames = chosen
                .iter()
                .flat_map(|&i| segments[i].start..segments[i].end)
                .collect();
            (chosen, frames)
        }
        SummaryMode::TopKCenters { k } => {
            let chosen = top_k_segments(&seg_scores, k)?;
            let frames = chosen.iter().map(|&i| segments[i].center()).collect();
            (chosen, frames)
        }
    };
    Ok(Summary {
        frames,
        segments,
        segment_scores: seg_scores,
        frame_scores,
        chosen_segments: chosen,
    })
}

pub fn summarize(
    features: &[EmbeddingVector],
    attention: Option<&AttentionMatrix>,
    config: &SummaryConfig,
) -> Result<Summary, BaselineError> {
    summarize_with(features, attention, config, Execution::default())
}

/// Full pipeline: kernel, segmentation, scoring, selection.
pub fn summarize_with(
    features: &[EmbeddingVector],
    attention: Option<&AttentionMatrix>,
    config: &SummaryConfig,
    exec: Execution,
) -> Result<Summary, BaselineError> {
    check_normalized(features)?;
    config.weights.validate()?;
    if !(config.fps > 0.0 && config.fps.is_finite()) {
        return Err(BaselineError::InvalidInput(format!("fps {}", config.fps)));
    }
    let n = features.len();
    let kernel = kts::kernel_matrix_with(features, exec)?;

    let block_size = match (config.block_size, attention) {
        (Some(m), _) => m,
        (None, Some(a)) => a.block_size(),
        (None, None) => default_block_size(n),
    };
    let owned;
    let attention = match attention {
        Some(a) => {
            if a.len() != n {
                return Err(BaselineError::AttentionSize {
                    attention: a.len(),
                    features: n,
                });
            }
            a
        }
        None => {
            owned = scoring::softmax_attention(&kernel, config.attention_temperature, block_size.min(n), exec)?;
            &owned
        }
    };

    let u = uniqueness(attention);
    let d = scoring::block_diversity_from_kernel(&kernel, block_size, exec)?;
    let s = frame_scores(&u, &d, config.weights)?;

    let cuts = config
        .cut_count
        .unwrap_or_else(|| kts::default_cut_count(n, config.fps, DEFAULT_SEGMENT_SECONDS));
    let segments = kts::segment_from_kernel(&kernel, cuts, exec)?;
    select_frames(s, segments, config.mode)
}
