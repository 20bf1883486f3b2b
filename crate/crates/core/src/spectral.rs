//! Spectral clustering of representation columns.
//!
//! Pairwise rbf affinities over the representation columns feed the
//! symmetric normalized Laplacian; the rows of its bottom eigenvectors are
//! L2-normalized and clustered with seeded k-means.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{kmeans, CandidateError};
use crate::matrix::Matrix;
use crate::metrics::{squared_distance, RepresentationMatrix};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("rbf kernel gamma must be positive and finite, got {0}")]
    BadKernelGamma(f64),
    #[error("cannot form {clusters} clusters from {points} series")]
    TooFewSeries { clusters: usize, points: usize },
    #[error("cluster count must be at least 1")]
    ZeroClusters,
    #[error("affinity row {0} has a degenerate (near-zero) degree")]
    DegenerateDegree(usize),
    #[error("affinity matrix must be square and symmetric with unit diagonal")]
    MalformedAffinity,
    #[error(transparent)]
    Kmeans(#[from] CandidateError),
}

/// Symmetric pairwise similarities in `(0, 1]` with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    entries: Matrix,
    kernel_gamma: f64,
}

impl AffinityMatrix {
    /// Wrap a precomputed affinity, checking shape, symmetry (1e-12), unit
    /// diagonal, and entry range.
    pub fn new(entries: Matrix, kernel_gamma: f64) -> Result<Self, SpectralError> {
        if !kernel_gamma.is_finite() || kernel_gamma <= 0.0 {
            return Err(SpectralError::BadKernelGamma(kernel_gamma));
        }
        let n = entries.rows();
        if entries.cols() != n {
            return Err(SpectralError::MalformedAffinity);
        }
        for i in 0..n {
            if (entries[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(SpectralError::MalformedAffinity);
            }
            for j in 0..n {
                let v = entries[(i, j)];
                if !(0.0..=1.0).contains(&v) || (v - entries[(j, i)]).abs() > 1e-12 {
                    return Err(SpectralError::MalformedAffinity);
                }
            }
        }
        Ok(Self { entries, kernel_gamma })
    }

    pub fn size(&self) -> usize {
        self.entries.rows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn kernel_gamma(&self) -> f64 {
        self.kernel_gamma
    }
}

/// Cluster id per series.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment {
    pub cluster_of: Vec<usize>,
}

/// Rbf affinities between the columns of a representation:
/// `exp(-kernel_gamma * ||h_i - h_j||^2)`.
pub fn rbf_affinity(
    reps: &RepresentationMatrix,
    kernel_gamma: f64,
) -> Result<AffinityMatrix, SpectralError> {
    rbf_affinity_of_columns(reps.as_matrix(), kernel_gamma)
}

/// Rbf affinities between the columns of an arbitrary matrix. Used directly
/// by the raw-series baseline, where columns are whole series.
pub fn rbf_affinity_of_columns(
    matrix: &Matrix,
    kernel_gamma: f64,
) -> Result<AffinityMatrix, SpectralError> {
    if !kernel_gamma.is_finite() || kernel_gamma <= 0.0 {
        return Err(SpectralError::BadKernelGamma(kernel_gamma));
    }
    let n = matrix.cols();
    let columns: Vec<Vec<f64>> = (0..n).map(|j| matrix.column(j)).collect();
    let mut entries = Matrix::zeros(n, n);
    for i in 0..n {
        entries[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let a = (-kernel_gamma * squared_distance(&columns[i], &columns[j])).exp();
            entries[(i, j)] = a;
            entries[(j, i)] = a;
        }
    }
    Ok(AffinityMatrix { entries, kernel_gamma })
}

/// Symmetric normalized Laplacian `I - D^{-1/2} A D^{-1/2}`.
pub fn normalized_laplacian(affinity: &AffinityMatrix) -> Result<Matrix, SpectralError> {
    let n = affinity.size();
    let mut inv_sqrt_degree = Vec::with_capacity(n);
    for i in 0..n {
        let degree: f64 = affinity.entries.row(i).iter().sum();
        if degree <= 1e-12 {
            return Err(SpectralError::DegenerateDegree(i));
        }
        inv_sqrt_degree.push(1.0 / degree.sqrt());
    }
    let mut lap = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let normalized = affinity.entries[(i, j)] * inv_sqrt_degree[i] * inv_sqrt_degree[j];
            lap[(i, j)] = if i == j { 1.0 - normalized } else { -normalized };
        }
    }
    Ok(lap)
}

/// Eigenpairs of a symmetric matrix with the `count` smallest eigenvalues,
/// ascending. Returns `(eigenvalues, eigenvectors)` with one eigenvector per
/// returned column.
pub fn smallest_eigenpairs(matrix: &Matrix, count: usize) -> (Vec<f64>, Matrix) {
    let n = matrix.rows();
    let dm = DMatrix::from_fn(n, n, |r, c| matrix[(r, c)]);
    let eigen = dm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[a].partial_cmp(&eigen.eigenvalues[b]).expect("finite").then(a.cmp(&b))
    });
    let chosen = &order[..count.min(n)];
    let values = chosen.iter().map(|&i| eigen.eigenvalues[i]).collect();
    let mut vectors = Matrix::zeros(n, chosen.len());
    for (col, &i) in chosen.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = eigen.eigenvectors[(row, i)];
        }
    }
    (values, vectors)
}

/// Normalized-cut spectral clustering.
///
/// Takes the eigenvectors of the `clusters` smallest Laplacian eigenvalues,
/// L2-normalizes the rows of that embedding, and k-means-clusters them with
/// the given seed. Eigenvector sign and rotation ambiguity is absorbed by
/// the seeded k-means step.
pub fn spectral_cluster(
    affinity: &AffinityMatrix,
    clusters: usize,
    seed: u64,
) -> Result<Assignment, SpectralError> {
    let n = affinity.size();
    if clusters == 0 {
        return Err(SpectralError::ZeroClusters);
    }
    if n < clusters {
        return Err(SpectralError::TooFewSeries { clusters, points: n });
    }

    let lap = normalized_laplacian(affinity)?;
    let (_, vectors) = smallest_eigenpairs(&lap, clusters);

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row: Vec<f64> = vectors.row(i).to_vec();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
        rows.push(row);
    }

    let fit = kmeans(&rows, clusters, seed)?;
    Ok(Assignment { cluster_of: fit.assignment })
}
