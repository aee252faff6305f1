//! Embedding hygiene: unit normalization, suppression of dominant outlier
//! dimensions, and per-dimension corpus diagnostics.
//!
//! Suppression is a single pass: normalize, zero every coordinate whose
//! magnitude exceeds the threshold, renormalize. It is not iterated even if
//! renormalization lifts a surviving coordinate above the threshold.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::model::{EmbeddingVector, FrameRecord, ModelError};

pub const DEFAULT_THRESHOLD: f64 = 0.3;
pub const DEFAULT_EPSILON_NORM: f64 = 1e-8;
pub const DEFAULT_BINS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HygieneError {
    #[error("degenerate embedding (norm {norm:e} below floor)")]
    DegenerateEmbedding { norm: f64 },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("mixed embedding dimensions: expected {expected}, got {got}")]
    MixedDimensions { expected: usize, got: usize },
    #[error("frame {0} has no embedding")]
    NotEmbedded(u64),
    #[error("dimension {dim} out of range for embeddings of width {width}")]
    DimensionOutOfRange { dim: usize, width: usize },
    #[error("invalid hygiene policy: {0}")]
    InvalidPolicy(String),
    #[error("histogram needs at least one bin")]
    InvalidBins,
    #[error("failed to write diagnostics: {0}")]
    Write(String),
}

impl From<ModelError> for HygieneError {
    fn from(err: ModelError) -> Self {
        match err {
            ModelError::DimensionMismatch { expected, got } => {
                HygieneError::MixedDimensions { expected, got }
            }
            other => HygieneError::InvalidPolicy(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HygienePolicy {
    pub threshold: f64,
    pub epsilon_norm: f64,
}

impl Default for HygienePolicy {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            epsilon_norm: DEFAULT_EPSILON_NORM,
        }
    }
}

impl HygienePolicy {
    pub fn new(threshold: f64, epsilon_norm: f64) -> Result<Self, HygieneError> {
        let policy = Self {
            threshold,
            epsilon_norm,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<(), HygieneError> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(HygieneError::InvalidPolicy(format!(
                "threshold {} outside (0, 1)",
                self.threshold
            )));
        }
        if !(self.epsilon_norm > 0.0 && self.epsilon_norm.is_finite()) {
            return Err(HygieneError::InvalidPolicy(format!(
                "epsilon_norm {} must be positive",
                self.epsilon_norm
            )));
        }
        Ok(())
    }
}

fn scaled_unit(values: &[f64], epsilon_norm: f64) -> Result<Vec<f64>, HygieneError> {
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm >= epsilon_norm) {
        return Err(HygieneError::DegenerateEmbedding { norm });
    }
    Ok(values.iter().map(|v| v / norm).collect())
}

/// Scales `v` to unit L2 norm using the default degeneracy floor.
pub fn l2_normalize(v: &EmbeddingVector) -> Result<EmbeddingVector, HygieneError> {
    l2_normalize_with(v, DEFAULT_EPSILON_NORM)
}

pub fn l2_normalize_with(v: &EmbeddingVector, epsilon_norm: f64) -> Result<EmbeddingVector, HygieneError> {
    let unit = scaled_unit(v.values(), epsilon_norm)?;
    Ok(EmbeddingVector::new_normalized(unit)?)
}

/// Normalizes, zeroes every coordinate above `policy.threshold` in
/// magnitude, and renormalizes once.
pub fn suppress_outlier_dims(
    v: &EmbeddingVector,
    policy: &HygienePolicy,
) -> Result<EmbeddingVector, HygieneError> {
    let mut unit = scaled_unit(v.values(), policy.epsilon_norm)?;
    let mut zeroed = false;
    for x in unit.iter_mut() {
        if x.abs() > policy.threshold {
            *x = 0.0;
            zeroed = true;
        }
    }
    if !zeroed {
        return Ok(EmbeddingVector::new_normalized(unit)?);
    }
    let renormalized = scaled_unit(&unit, policy.epsilon_norm)?;
    Ok(EmbeddingVector::new_normalized(renormalized)?)
}

/// Applies [`suppress_outlier_dims`] to a batch.
pub fn suppress_batch(
    vectors: &[EmbeddingVector],
    policy: &HygienePolicy,
    exec: Execution,
) -> Result<Vec<EmbeddingVector>, HygieneError> {
    policy.validate()?;
    exec.map_slice(vectors, |v| suppress_outlier_dims(v, policy))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusKind {
    Text,
    Image,
}

/// Per-dimension summary of a corpus. All dimensions share one set of
/// histogram bin edges spanning the corpus-wide value range.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionStats {
    pub kind: CorpusKind,
    pub corpus_size: usize,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub mean: Vec<f64>,
    pub bin_edges: Vec<f64>,
    /// `counts[dim][bin]`
    pub counts: Vec<Vec<u64>>,
}

impl DimensionStats {
    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Largest magnitude seen in dimension `d`.
    pub fn max_abs(&self, d: usize) -> f64 {
        self.min[d].abs().max(self.max[d].abs())
    }
}

pub fn dimension_stats(
    corpus: &[EmbeddingVector],
    kind: CorpusKind,
    bins: usize,
) -> Result<DimensionStats, HygieneError> {
    dimension_stats_with(corpus, kind, bins, Execution::default())
}

pub fn dimension_stats_with(
    corpus: &[EmbeddingVector],
    kind: CorpusKind,
    bins: usize,
    exec: Execution,
) -> Result<DimensionStats, HygieneError> {
    if bins == 0 {
        return Err(HygieneError::InvalidBins);
    }
    let dim = crate::model::uniform_dim(corpus)?.ok_or(HygieneError::EmptyCorpus)?;

    // Columns are sorted so every reduction runs in a fixed order, which
    // makes the result independent of corpus order bit for bit.
    let columns: Vec<Vec<f64>> = exec.map_range(dim, |d| {
        let mut col: Vec<f64> = corpus.iter().map(|v| v.values()[d]).collect();
        col.sort_by(f64::total_cmp);
        col
    });

    let lo = columns.iter().map(|c| c[0]).fold(f64::INFINITY, f64::min);
    let hi = columns
        .iter()
        .map(|c| c[c.len() - 1])
        .fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let bin_edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();

    let n = corpus.len() as f64;
    let per_dim = exec.map_slice(&columns, |col| {
        let mut counts = vec![0u64; bins];
        for &x in col {
            let bin = if width > 0.0 {
                (((x - lo) / width) as usize).min(bins - 1)
            } else {
                0
            };
            counts[bin] += 1;
        }
        (col[0], col[col.len() - 1], col.iter().sum::<f64>() / n, counts)
    });

    let mut stats = DimensionStats {
        kind,
        corpus_size: corpus.len(),
        min: Vec::with_capacity(dim),
        max: Vec::with_capacity(dim),
        mean: Vec::with_capacity(dim),
        bin_edges,
        counts: Vec::with_capacity(dim),
    };
    for (min, max, mean, counts) in per_dim {
        stats.min.push(min);
        stats.max.push(max);
        stats.mean.push(mean);
        stats.counts.push(counts);
    }
    Ok(stats)
}

/// Dimensions whose largest magnitude exceeds `threshold`, largest first.
pub fn dominant_dims(stats: &DimensionStats, threshold: f64) -> Vec<usize> {
    let mut dims: Vec<(usize, f64)> = (0..stats.dim())
        .map(|d| (d, stats.max_abs(d)))
        .filter(|&(_, m)| m > threshold)
        .collect();
    dims.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    dims.into_iter().map(|(d, _)| d).collect()
}

/// The frame with the largest `|embedding[dim]|`; ties go to the lowest id.
pub fn max_magnitude_frame(frames: &[FrameRecord], dim: usize) -> Result<u64, HygieneError> {
    let mut best: Option<(u64, f64)> = None;
    for frame in frames {
        let emb = frame
            .embedding
            .as_ref()
            .ok_or(HygieneError::NotEmbedded(frame.frame_id))?;
        if dim >= emb.dim() {
            return Err(HygieneError::DimensionOutOfRange {
                dim,
                width: emb.dim(),
            });
        }
        let mag = emb.values()[dim].abs();
        best = match best {
            Some((id, m)) if m > mag || (m == mag && id < frame.frame_id) => Some((id, m)),
            _ => Some((frame.frame_id, mag)),
        };
    }
    best.map(|(id, _)| id).ok_or(HygieneError::EmptyCorpus)
}

/// Writes one CSV row per dimension:
/// `dimension,min,max,mean,edge_0..edge_B,count_0..count_{B-1}`.
pub fn write_stats_csv<W: Write>(stats: &DimensionStats, out: W) -> Result<(), HygieneError> {
    let werr = |e: csv::Error| HygieneError::Write(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let bins = stats.bin_edges.len() - 1;
    let mut header = vec!["dimension".to_string(), "min".into(), "max".into(), "mean".into()];
    header.extend((0..=bins).map(|i| format!("edge_{i}")));
    header.extend((0..bins).map(|i| format!("count_{i}")));
    w.write_record(&header).map_err(werr)?;
    for d in 0..stats.dim() {
        let mut row = vec![
            d.to_string(),
            stats.min[d].to_string(),
            stats.max[d].to_string(),
            stats.mean[d].to_string(),
        ];
        row.extend(stats.bin_edges.iter().map(f64::to_string));
        row.extend(stats.counts[d].iter().map(u64::to_string));
        w.write_record(&row).map_err(werr)?;
    }
    w.flush().map_err(|e| HygieneError::Write(e.to_string()))
}
