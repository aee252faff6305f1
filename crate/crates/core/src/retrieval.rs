//! Phrase-to-frame retrieval.
//!
//! Scores are plain dot products of unit vectors. Selection is a per-phrase
//! argmax by default; `UniqueGreedy` additionally forbids two phrases from
//! claiming the same frame.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::model::{EmbeddingVector, FrameRecord, PortfolioEntry};

/// Slack allowed on cosine scores outside `[-1, 1]`.
pub const SCORE_SLACK: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RetrievalError {
    #[error("no frame has a detected face")]
    NoCandidates,
    #[error("frame {0} has not been through face detection")]
    FacesMissing(u64),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("mixed embedding dimensions: expected {expected}, got {got}")]
    MixedDimensions { expected: usize, got: usize },
    #[error("embedding for {0} is not normalized")]
    NotNormalized(String),
    #[error("frame ids must be strictly ascending")]
    FrameOrder,
    #[error("score {score} at ({phrase}, {frame}) outside [-1, 1]")]
    ScoreOutOfRange { phrase: usize, frame: usize, score: f64 },
    #[error("unique selection needs at least {phrases} frames, have {frames}")]
    NotEnoughFrames { phrases: usize, frames: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    #[default]
    AllowDuplicates,
    UniqueGreedy,
}

/// Phrase x frame cosine scores. Rows are phrases (ordinals 1..=P), columns
/// are frames in ascending id order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    scores: Vec<Vec<f64>>,
    frame_ids: Vec<u64>,
}

impl SimilarityMatrix {
    pub fn new(scores: Vec<Vec<f64>>, frame_ids: Vec<u64>) -> Result<Self, RetrievalError> {
        if scores.is_empty() {
            return Err(RetrievalError::EmptyInput("no phrases"));
        }
        if frame_ids.is_empty() {
            return Err(RetrievalError::EmptyInput("no frames"));
        }
        if frame_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RetrievalError::FrameOrder);
        }
        for (p, row) in scores.iter().enumerate() {
            if row.len() != frame_ids.len() {
                return Err(RetrievalError::MixedDimensions {
                    expected: frame_ids.len(),
                    got: row.len(),
                });
            }
            for (f, &s) in row.iter().enumerate() {
                if !(s.abs() <= 1.0 + SCORE_SLACK) {
                    return Err(RetrievalError::ScoreOutOfRange {
                        phrase: p + 1,
                        frame: f,
                        score: s,
                    });
                }
            }
        }
        Ok(Self { scores, frame_ids })
    }

    pub fn phrases(&self) -> usize {
        self.scores.len()
    }

    pub fn frames(&self) -> usize {
        self.frame_ids.len()
    }

    pub fn frame_ids(&self) -> &[u64] {
        &self.frame_ids
    }

    pub fn row(&self, phrase: usize) -> &[f64] {
        &self.scores[phrase]
    }

    pub fn score(&self, phrase: usize, frame: usize) -> f64 {
        self.scores[phrase][frame]
    }
}

/// Frames with at least one detected face, in frame-id order.
pub fn candidate_pool(frames: &[FrameRecord]) -> Result<Vec<FrameRecord>, RetrievalError> {
    let mut pool = Vec::new();
    for frame in frames {
        match &frame.faces {
            None => return Err(RetrievalError::FacesMissing(frame.frame_id)),
            Some(faces) if !faces.is_empty() => pool.push(frame.clone()),
            Some(_) => {}
        }
    }
    if pool.is_empty() {
        return Err(RetrievalError::NoCandidates);
    }
    pool.sort_by_key(|f| f.frame_id);
    Ok(pool)
}

pub fn similarity_matrix(
    phrases: &[EmbeddingVector],
    frames: &[(u64, EmbeddingVector)],
) -> Result<SimilarityMatrix, RetrievalError> {
    similarity_matrix_with(phrases, frames, Execution::default())
}

/// Builds the score matrix. Frames may arrive in any order; columns are
/// sorted by frame id.
pub fn similarity_matrix_with(
    phrases: &[EmbeddingVector],
    frames: &[(u64, EmbeddingVector)],
    exec: Execution,
) -> Result<SimilarityMatrix, RetrievalError> {
    if phrases.is_empty() {
        return Err(RetrievalError::EmptyInput("no phrases"));
    }
    if frames.is_empty() {
        return Err(RetrievalError::EmptyInput("no frames"));
    }
    let dim = phrases[0].dim();
    for (i, p) in phrases.iter().enumerate() {
        if p.dim() != dim {
            return Err(RetrievalError::MixedDimensions { expected: dim, got: p.dim() });
        }
        if !p.is_normalized() {
            return Err(RetrievalError::NotNormalized(format!("phrase {}", i + 1)));
        }
    }
    for (id, f) in frames {
        if f.dim() != dim {
            return Err(RetrievalError::MixedDimensions { expected: dim, got: f.dim() });
        }
        if !f.is_normalized() {
            return Err(RetrievalError::NotNormalized(format!("frame {id}")));
        }
    }
    let mut order: Vec<&(u64, EmbeddingVector)> = frames.iter().collect();
    order.sort_by_key(|(id, _)| *id);
    let frame_ids: Vec<u64> = order.iter().map(|(id, _)| *id).collect();
    let scores = exec.map_slice(phrases, |p| order.iter().map(|(_, f)| p.dot(f)).collect());
    SimilarityMatrix::new(scores, frame_ids)
}

/// Column of the first maximum in a row.
fn row_argmax(row: &[f64], claimed: Option<&[bool]>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (f, &s) in row.iter().enumerate() {
        if claimed.is_some_and(|c| c[f]) {
            continue;
        }
        if best.is_none_or(|b| s > row[b]) {
            best = Some(f);
        }
    }
    best
}

/// One entry per phrase, in ordinal order. Crops are left empty.
pub fn select_portfolio(
    m: &SimilarityMatrix,
    mode: SelectionMode,
) -> Result<Vec<PortfolioEntry>, RetrievalError> {
    let entry = |p: usize, f: usize| PortfolioEntry {
        idea_index: p + 1,
        frame_id: m.frame_ids[f],
        score: m.scores[p][f],
        crop: None,
    };
    match mode {
        SelectionMode::AllowDuplicates => Ok((0..m.phrases())
            .map(|p| entry(p, row_argmax(m.row(p), None).expect("rows are non-empty")))
            .collect()),
        SelectionMode::UniqueGreedy => {
            if m.frames() < m.phrases() {
                return Err(RetrievalError::NotEnoughFrames {
                    phrases: m.phrases(),
                    frames: m.frames(),
                });
            }
            let mut claimed = vec![false; m.frames()];
            let mut assigned: Vec<Option<usize>> = vec![None; m.phrases()];
            for _ in 0..m.phrases() {
                // The open phrase with the highest best-available score goes
                // next; ties go to the lower ordinal.
                let mut pick: Option<(usize, usize)> = None;
                for p in (0..m.phrases()).filter(|&p| assigned[p].is_none()) {
                    let f = row_argmax(m.row(p), Some(&claimed)).expect("F >= P");
                    if pick.is_none_or(|(bp, bf)| m.scores[p][f] > m.scores[bp][bf]) {
                        pick = Some((p, f));
                    }
                }
                let (p, f) = pick.expect("an open phrase remains");
                claimed[f] = true;
                assigned[p] = Some(f);
            }
            Ok(assigned
                .into_iter()
                .enumerate()
                .map(|(p, f)| entry(p, f.expect("every phrase assigned")))
                .collect())
        }
    }
}
