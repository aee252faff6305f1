//! Exact 0/1 knapsack over segments.

use super::BaselineError;

fn value_tol(v: f64) -> f64 {
    1e-9 * v.abs().max(1.0)
}

/// `(value, weight)` of a partial solution; higher value wins, then lower
/// weight.
#[derive(Clone, Copy)]
struct Best {
    value: f64,
    weight: usize,
}

impl Best {
    fn beats(&self, other: &Best) -> bool {
        let tol = value_tol(self.value.max(other.value));
        if self.value > other.value + tol {
            return true;
        }
        if other.value > self.value + tol {
            return false;
        }
        self.weight < other.weight
    }
}

/// Chooses segments maximizing total value under a frame budget.
///
/// Ties on value go to the lighter selection, then to the lexicographically
/// smallest sorted index list. Returned indices are ascending.
pub fn knapsack_select(values: &[f64], weights: &[usize], budget: usize) -> Result<Vec<usize>, BaselineError> {
    if values.len() != weights.len() {
        return Err(BaselineError::LengthMismatch {
            left: values.len(),
            right: weights.len(),
        });
    }
    if let Some(i) = weights.iter().position(|&w| w == 0) {
        return Err(BaselineError::InvalidInput(format!("segment {i} has zero weight")));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(BaselineError::InvalidInput(format!("segment {i} has a non-finite value")));
    }
    let n = values.len();
    let width = budget + 1;
    // best[i][c]: optimum over items i.. with capacity c. Filled back to
    // front so the forward walk can prefer taking the earliest item.
    let mut best = vec![Best { value: 0.0, weight: 0 }; (n + 1) * width];
    let mut take = vec![false; n * width];
    for i in (0..n).rev() {
        for c in 0..width {
            let skip = best[(i + 1) * width + c];
            let mut choice = skip;
            if weights[i] <= c {
                let rest = best[(i + 1) * width + c - weights[i]];
                let with = Best {
                    value: values[i] + rest.value,
                    weight: weights[i] + rest.weight,
                };
                if !skip.beats(&with) {
                    choice = with;
                    take[i * width + c] = true;
                }
            }
            best[i * width + c] = choice;
        }
    }
    let mut chosen = Vec::new();
    let mut c = budget;
    for i in 0..n {
        if take[i * width + c] {
            chosen.push(i);
            c -= weights[i];
        }
    }
    Ok(chosen)
}
