//! Discriminant shapelet selection.
//!
//! Candidates are scored through the between-class and within-class scatter
//! matrices of the candidate-space representation of the labeled series.
//! Maximizing `trace(W^T (S_B - lambda * S_W) W)` over binary selection
//! matrices `W` reduces to picking the k largest diagonal entries of
//! `Gamma = S_B - lambda * S_W`, so the selection is analytic: no
//! eigensolve, no inversion. [`brute_force_select`] enumerates all k-subsets
//! as the oracle for that reduction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::metrics::RepresentationMatrix;

#[derive(Debug, Error)]
pub enum LdsError {
    #[error("representation has {columns} columns but {labels} labels")]
    LabelCountMismatch { columns: usize, labels: usize },
    #[error("representation has no columns")]
    NoColumns,
    #[error("class {0} has no members")]
    EmptyClass(usize),
    #[error("cannot select {k} of {gamma} candidates")]
    TooFewCandidates { k: usize, gamma: usize },
    #[error("selection count must be at least 1")]
    ZeroSelection,
    #[error("enumeration guard: C({gamma}, {k}) = {combinations} subsets exceed the limit")]
    EnumerationGuard { gamma: usize, k: usize, combinations: f64 },
}

/// Between-class and within-class scatter of one labeled representation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPair {
    pub between: Matrix,
    pub within: Matrix,
}

impl ScatterPair {
    /// Compute both scatter matrices of a labeled representation.
    pub fn compute(h: &RepresentationMatrix, labels: &[usize]) -> Result<Self, LdsError> {
        Ok(Self { between: scatter_between(h, labels)?, within: scatter_within(h, labels)? })
    }

    /// Dimension (number of candidates).
    pub fn gamma(&self) -> usize {
        self.between.rows()
    }
}

/// Chosen candidate indices with the objective value they achieve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Selected candidate indices, ascending.
    pub indices: Vec<usize>,
    /// Scatter weight used to form the score diagonal.
    pub lambda: f64,
    /// Sum of the selected diagonal entries.
    pub objective: f64,
    /// Full score diagonal, one entry per candidate.
    pub gamma_diag: Vec<f64>,
}

impl Selection {
    /// Reconstruct the binary selection matrix: `gamma x k`, one 1 per
    /// column at the selected row, at most one 1 per row.
    pub fn selection_matrix(&self, gamma: usize) -> Matrix {
        let mut w = Matrix::zeros(gamma, self.indices.len());
        for (col, &row) in self.indices.iter().enumerate() {
            w[(row, col)] = 1.0;
        }
        w
    }
}

struct ClassStats {
    class_means: Vec<Vec<f64>>,
    class_sizes: Vec<usize>,
    global_mean: Vec<f64>,
}

fn class_stats(h: &RepresentationMatrix, labels: &[usize]) -> Result<ClassStats, LdsError> {
    let (gamma, n) = (h.row_count(), h.col_count());
    if n == 0 {
        return Err(LdsError::NoColumns);
    }
    if labels.len() != n {
        return Err(LdsError::LabelCountMismatch { columns: n, labels: labels.len() });
    }
    let classes = labels.iter().max().copied().unwrap_or(0) + 1;
    let mut class_sizes = vec![0usize; classes];
    let mut class_means = vec![vec![0.0; gamma]; classes];
    let mut global_mean = vec![0.0; gamma];
    for (j, &class) in labels.iter().enumerate() {
        class_sizes[class] += 1;
        for r in 0..gamma {
            class_means[class][r] += h.entry(r, j);
            global_mean[r] += h.entry(r, j);
        }
    }
    for (class, size) in class_sizes.iter().enumerate() {
        if *size == 0 {
            return Err(LdsError::EmptyClass(class));
        }
        for v in class_means[class].iter_mut() {
            *v /= *size as f64;
        }
    }
    for v in global_mean.iter_mut() {
        *v /= n as f64;
    }
    Ok(ClassStats { class_means, class_sizes, global_mean })
}

/// Add `weight * d d^T` to `acc`.
fn add_outer(acc: &mut Matrix, d: &[f64], weight: f64) {
    for r in 0..d.len() {
        for c in 0..d.len() {
            acc[(r, c)] += weight * d[r] * d[c];
        }
    }
}

/// Between-class scatter: sum over classes of
/// `|class| * (class_mean - global_mean)(class_mean - global_mean)^T`.
pub fn scatter_between(h: &RepresentationMatrix, labels: &[usize]) -> Result<Matrix, LdsError> {
    let stats = class_stats(h, labels)?;
    let gamma = h.row_count();
    let mut out = Matrix::zeros(gamma, gamma);
    for (mean, &size) in stats.class_means.iter().zip(&stats.class_sizes) {
        let d: Vec<f64> = mean.iter().zip(&stats.global_mean).map(|(a, b)| a - b).collect();
        add_outer(&mut out, &d, size as f64);
    }
    Ok(out)
}

/// Within-class scatter: sum over columns of
/// `(column - class_mean)(column - class_mean)^T`.
pub fn scatter_within(h: &RepresentationMatrix, labels: &[usize]) -> Result<Matrix, LdsError> {
    let stats = class_stats(h, labels)?;
    let gamma = h.row_count();
    let mut out = Matrix::zeros(gamma, gamma);
    for (j, &class) in labels.iter().enumerate() {
        let d: Vec<f64> =
            (0..gamma).map(|r| h.entry(r, j) - stats.class_means[class][r]).collect();
        add_outer(&mut out, &d, 1.0);
    }
    Ok(out)
}

fn score_diagonal(scatter: &ScatterPair, lambda: f64) -> Vec<f64> {
    (0..scatter.gamma())
        .map(|i| scatter.between[(i, i)] - lambda * scatter.within[(i, i)])
        .collect()
}

/// Select the k candidates with the largest score diagonal entries
/// (smaller index wins ties).
pub fn select_shapelets(scatter: &ScatterPair, lambda: f64, k: usize) -> Result<Selection, LdsError> {
    let gamma = scatter.gamma();
    if k == 0 {
        return Err(LdsError::ZeroSelection);
    }
    if k > gamma {
        return Err(LdsError::TooFewCandidates { k, gamma });
    }
    let gamma_diag = score_diagonal(scatter, lambda);

    let mut order: Vec<usize> = (0..gamma).collect();
    order.sort_by(|&a, &b| {
        gamma_diag[b].partial_cmp(&gamma_diag[a]).expect("finite scores").then(a.cmp(&b))
    });
    let mut indices: Vec<usize> = order[..k].to_vec();
    indices.sort_unstable();

    if indices.iter().any(|&i| gamma_diag[i] <= 0.0) {
        log::warn!(
            "selection includes candidates with non-positive discriminant score \
             (k={k} exceeds the positively scored candidates)"
        );
    }

    let objective = indices.iter().map(|&i| gamma_diag[i]).sum();
    Ok(Selection { indices, lambda, objective, gamma_diag })
}

/// Enumerate every k-subset of candidates and maximize the summed score
/// diagonal. Oracle for [`select_shapelets`]; guarded to `C(gamma, k) <= 1e6`.
pub fn brute_force_select(
    scatter: &ScatterPair,
    lambda: f64,
    k: usize,
) -> Result<Selection, LdsError> {
    let gamma = scatter.gamma();
    if k == 0 {
        return Err(LdsError::ZeroSelection);
    }
    if k > gamma {
        return Err(LdsError::TooFewCandidates { k, gamma });
    }
    let combinations = binomial(gamma, k);
    if combinations > 1e6 {
        return Err(LdsError::EnumerationGuard { gamma, k, combinations });
    }
    let gamma_diag = score_diagonal(scatter, lambda);

    // lexicographic subset enumeration; strict improvement keeps the first
    // (lexicographically smallest) maximizer
    let mut subset: Vec<usize> = (0..k).collect();
    let mut best_indices = subset.clone();
    let mut best: f64 = subset.iter().map(|&i| gamma_diag[i]).sum();
    loop {
        // advance to the next k-subset of 0..gamma
        let mut i = k;
        loop {
            if i == 0 {
                let objective = best;
                return Ok(Selection { indices: best_indices, lambda, objective, gamma_diag });
            }
            i -= 1;
            if subset[i] != i + gamma - k {
                break;
            }
        }
        subset[i] += 1;
        for j in i + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
        let value: f64 = subset.iter().map(|&i| gamma_diag[i]).sum();
        if value > best {
            best = value;
            best_indices = subset.clone();
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut result = 1.0f64;
    for i in 0..k {
        result = result * (n - i) as f64 / (i + 1) as f64;
        if result > 1e18 {
            return result;
        }
    }
    result
}
