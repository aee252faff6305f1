//! Kernel temporal segmentation by exact dynamic programming.

use super::{BaselineError, Segment};
use crate::exec::Execution;
use crate::model::EmbeddingVector;

/// Gram matrix `K[i][j] = <x_i, x_j>`.
pub fn kernel_matrix(features: &[EmbeddingVector]) -> Result<Vec<Vec<f64>>, BaselineError> {
    kernel_matrix_with(features, Execution::default())
}

pub fn kernel_matrix_with(
    features: &[EmbeddingVector],
    exec: Execution,
) -> Result<Vec<Vec<f64>>, BaselineError> {
    super::check_features(features)?;
    Ok(exec.map_slice(features, |xi| features.iter().map(|xj| xi.dot(xj)).collect()))
}

/// Within-segment scatter for every half-open range `[a, b)`.
pub struct ScatterTable {
    n: usize,
    costs: Vec<f64>,
}

impl ScatterTable {
    pub fn new(kernel: &[Vec<f64>], exec: Execution) -> Self {
        let n = kernel.len();
        // prefix[i][j] = sum of K[p][q] for p < i, q < j
        let mut prefix = vec![0.0; (n + 1) * (n + 1)];
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                row_sum += kernel[i][j];
                prefix[(i + 1) * (n + 1) + j + 1] = prefix[i * (n + 1) + j + 1] + row_sum;
            }
        }
        let mut diag = vec![0.0; n + 1];
        for i in 0..n {
            diag[i + 1] = diag[i] + kernel[i][i];
        }
        let p = |i: usize, j: usize| prefix[i * (n + 1) + j];
        let rows = exec.map_range(n, |a| {
            (0..=n)
                .map(|b| {
                    if b <= a {
                        return f64::INFINITY;
                    }
                    let block = p(b, b) - p(a, b) - p(b, a) + p(a, a);
                    diag[b] - diag[a] - block / (b - a) as f64
                })
                .collect::<Vec<f64>>()
        });
        Self {
            n,
            costs: rows.concat(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Scatter of `[a, b)`; infinite when the range is empty.
    pub fn cost(&self, a: usize, b: usize) -> f64 {
        self.costs[a * (self.n + 1) + b]
    }
}

fn tolerance(v: f64) -> f64 {
    1e-9 * v.abs().max(1.0)
}

/// Change points in `1..n` minimizing total scatter over `m + 1` segments.
/// Among equally good solutions the lexicographically smallest cut list wins.
pub fn optimal_cuts(table: &ScatterTable, m: usize) -> Result<Vec<usize>, BaselineError> {
    let n = table.len();
    if n == 0 {
        return Err(BaselineError::EmptyInput);
    }
    if m > n - 1 {
        return Err(BaselineError::InvalidSegmentCount { m, n });
    }
    // best[k][t]: cheapest split of [t, n) with k cuts.
    let mut best = vec![vec![f64::INFINITY; n + 1]; m + 1];
    for t in 0..n {
        best[0][t] = table.cost(t, n);
    }
    for k in 1..=m {
        for t in 0..n {
            if n - t < k + 1 {
                continue;
            }
            let mut acc = f64::INFINITY;
            for c in t + 1..=n - k {
                let v = table.cost(t, c) + best[k - 1][c];
                if v < acc {
                    acc = v;
                }
            }
            best[k][t] = acc;
        }
    }
    let mut cuts = Vec::with_capacity(m);
    let mut t = 0;
    for k in (1..=m).rev() {
        let target = best[k][t];
        let c = (t + 1..=n - k)
            .find(|&c| table.cost(t, c) + best[k - 1][c] <= target + tolerance(target))
            .expect("optimal continuation exists");
        cuts.push(c);
        t = c;
    }
    Ok(cuts)
}

/// Segments the sequence into `m + 1` contiguous segments.
pub fn kts_segment(features: &[EmbeddingVector], m: usize) -> Result<Vec<Segment>, BaselineError> {
    kts_segment_with(features, m, Execution::default())
}

pub fn kts_segment_with(
    features: &[EmbeddingVector],
    m: usize,
    exec: Execution,
) -> Result<Vec<Segment>, BaselineError> {
    let kernel = kernel_matrix_with(features, exec)?;
    segment_from_kernel(&kernel, m, exec)
}

pub fn segment_from_kernel(
    kernel: &[Vec<f64>],
    m: usize,
    exec: Execution,
) -> Result<Vec<Segment>, BaselineError> {
    let n = kernel.len();
    if n == 0 {
        return Err(BaselineError::EmptyInput);
    }
    if m > n - 1 {
        return Err(BaselineError::InvalidSegmentCount { m, n });
    }
    let table = ScatterTable::new(kernel, exec);
    let cuts = optimal_cuts(&table, m)?;
    Ok(Segment::from_cuts(&cuts, n))
}

/// Segment count giving a mean segment of roughly `seconds` of frames.
pub fn default_cut_count(n: usize, fps: f64, seconds: f64) -> usize {
    if n == 0 {
        return 0;
    }
    let frames_per_segment = (fps * seconds).max(1.0);
    let segments = ((n as f64 / frames_per_segment).round() as usize).max(1);
    (segments - 1).min(n - 1)
}
