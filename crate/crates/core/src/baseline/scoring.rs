//! Frame importance from attention entropy and cross-block similarity.

use serde::{Deserialize, Serialize};

use super::{BaselineError, Segment};
use crate::exec::Execution;
use crate::model::EmbeddingVector;

const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Row-stochastic `n x n` attention with a block size for the diversity
/// term.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMatrix {
    rows: Vec<Vec<f64>>,
    block_size: usize,
}

impl AttentionMatrix {
    pub fn new(rows: Vec<Vec<f64>>, block_size: usize) -> Result<Self, BaselineError> {
        let n = rows.len();
        if n == 0 {
            return Err(BaselineError::EmptyInput);
        }
        if block_size == 0 || block_size > n {
            return Err(BaselineError::InvalidBlockSize { block_size, n });
        }
        for (t, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(BaselineError::InvalidAttention(format!(
                    "row {t} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
                return Err(BaselineError::InvalidAttention(format!(
                    "row {t} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(BaselineError::InvalidAttention(format!("row {t} sums to {sum}")));
            }
        }
        Ok(Self { rows, block_size })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.rows[t]
    }
}

/// Training-free attention: softmax over `K[t][j] / temperature` per row.
pub fn softmax_attention(
    kernel: &[Vec<f64>],
    temperature: f64,
    block_size: usize,
    exec: Execution,
) -> Result<AttentionMatrix, BaselineError> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(BaselineError::InvalidInput(format!("temperature {temperature}")));
    }
    let rows = exec.map_slice(kernel, |row| {
        let peak = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|k| ((k - peak) / temperature).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    });
    AttentionMatrix::new(rows, block_size)
}

/// Shannon entropy of one distribution, with `0 ln 0 = 0`.
pub fn row_entropy(row: &[f64]) -> f64 {
    -row.iter().filter(|&&a| a > 0.0).map(|&a| a * a.ln()).sum::<f64>()
}

/// Per-frame uniqueness: row entropy divided by `ln n`, so it lies in
/// `[0, 1]`. A single frame has uniqueness 0.
pub fn uniqueness(a: &AttentionMatrix) -> Vec<f64> {
    let n = a.len();
    if n == 1 {
        return vec![0.0];
    }
    let scale = (n as f64).ln();
    (0..n).map(|t| row_entropy(a.row(t)) / scale).collect()
}

/// Mean similarity of each frame to every frame outside its block.
/// Blocks are consecutive runs of `block_size` frames.
pub fn block_diversity(features: &[EmbeddingVector], block_size: usize) -> Result<Vec<f64>, BaselineError> {
    super::check_normalized(features)?;
    let kernel = super::kts::kernel_matrix(features)?;
    block_diversity_from_kernel(&kernel, block_size, Execution::default())
}

pub fn block_diversity_from_kernel(
    kernel: &[Vec<f64>],
    block_size: usize,
    exec: Execution,
) -> Result<Vec<f64>, BaselineError> {
    let n = kernel.len();
    if n == 0 {
        return Err(BaselineError::EmptyInput);
    }
    if block_size == 0 {
        return Err(BaselineError::InvalidBlockSize { block_size, n });
    }
    if n <= block_size {
        return Err(BaselineError::SingleBlock { n, block_size });
    }
    Ok(exec.map_range(n, |t| {
        let start = (t / block_size) * block_size;
        let end = (start + block_size).min(n);
        let outside = n - (end - start);
        let total: f64 = kernel[t][..start].iter().chain(&kernel[t][end..]).sum();
        total / outside as f64
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub uniqueness: f64,
    pub diversity: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self {
            uniqueness: 0.5,
            diversity: 0.5,
        }
    }
}

impl ScoreWeights {
    pub fn new(uniqueness: f64, diversity: f64) -> Result<Self, BaselineError> {
        let w = Self { uniqueness, diversity };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), BaselineError> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !ok(self.uniqueness) || !ok(self.diversity) || self.uniqueness + self.diversity <= 0.0 {
            return Err(BaselineError::InvalidWeights(*self));
        }
        Ok(())
    }
}

/// `s_t = (w_u u_t + w_d (1 - d_t)) / (w_u + w_d)` with both terms clamped
/// to `[0, 1]`.
pub fn frame_scores(u: &[f64], d: &[f64], w: ScoreWeights) -> Result<Vec<f64>, BaselineError> {
    w.validate()?;
    if u.len() != d.len() {
        return Err(BaselineError::LengthMismatch {
            left: u.len(),
            right: d.len(),
        });
    }
    let total = w.uniqueness + w.diversity;
    Ok(u.iter()
        .zip(d)
        .map(|(&ut, &dt)| {
            (w.uniqueness * ut.clamp(0.0, 1.0) + w.diversity * (1.0 - dt).clamp(0.0, 1.0)) / total
        })
        .collect())
}

/// Mean frame score over each segment.
pub fn segment_scores(s: &[f64], segments: &[Segment]) -> Result<Vec<f64>, BaselineError> {
    Segment::check_cover(segments, s.len())?;
    Ok(segments
        .iter()
        .map(|seg| s[seg.start..seg.end].iter().sum::<f64>() / seg.len() as f64)
        .collect())
}
