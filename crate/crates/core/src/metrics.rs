//! Subsequence distances, the distance-to-shapelet transform, and the Rand
//! Index.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::TimeSeries;
use crate::matrix::Matrix;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("shapelet of length {shapelet} does not fit in series of length {series}")]
    ShapeletTooLong { shapelet: usize, series: usize },
    #[error("need at least 2 assignments, got {0}")]
    TooFewAssignments(usize),
}

/// Where an extracted shapelet came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeletSource {
    /// Id of the series the window was cut from.
    pub series: usize,
    /// 0-based start offset of the window.
    pub start: usize,
}

/// A short subsequence used as a local feature.
///
/// Extracted shapelets carry their provenance; k-means centroids carry
/// `source: None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shapelet {
    pub values: Vec<f64>,
    pub source: Option<ShapeletSource>,
}

impl Shapelet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Distances from each shapelet (row) to each series (column).
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationMatrix {
    matrix: Matrix,
}

impl RepresentationMatrix {
    pub fn from_matrix(matrix: Matrix) -> Self {
        Self { matrix }
    }

    pub fn row_count(&self) -> usize {
        self.matrix.rows()
    }

    pub fn col_count(&self) -> usize {
        self.matrix.cols()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.matrix[(row, col)]
    }

    /// Representation vector of series `col`.
    pub fn column(&self, col: usize) -> Vec<f64> {
        self.matrix.column(col)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Write as CSV: header = series ids, one row per shapelet.
    pub fn write_csv<W: Write>(&self, series_ids: &[usize], out: &mut W) -> io::Result<()> {
        let header: Vec<String> = series_ids.iter().map(ToString::to_string).collect();
        writeln!(out, "{}", header.join(","))?;
        for r in 0..self.matrix.rows() {
            let row: Vec<String> = self.matrix.row(r).iter().map(ToString::to_string).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Pairwise clustering agreement counts over all unordered pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairConfusion {
    /// Same cluster, same class.
    pub true_positive: u64,
    /// Different cluster, different class.
    pub true_negative: u64,
    /// Same cluster, different class.
    pub false_positive: u64,
    /// Different cluster, same class.
    pub false_negative: u64,
}

impl PairConfusion {
    pub fn total(&self) -> u64 {
        self.true_positive + self.true_negative + self.false_positive + self.false_negative
    }
}

/// Euclidean distance between two equal-length vectors.
pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch { left: a.len(), right: b.len() });
    }
    Ok(squared_distance(a, b).sqrt())
}

/// Sum of squared differences; callers must pass equal-length slices.
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Smallest Euclidean distance from `shapelet` to any window of `series`,
/// plus the 0-based offset where the minimum occurs (smallest on ties).
pub fn shapelet_match(shapelet: &Shapelet, series: &TimeSeries) -> Result<(f64, usize), MetricsError> {
    best_window(&shapelet.values, &series.values)
}

/// Smallest Euclidean distance from `shapelet` to any window of `series`.
pub fn shapelet_distance(shapelet: &Shapelet, series: &TimeSeries) -> Result<f64, MetricsError> {
    shapelet_match(shapelet, series).map(|(d, _)| d)
}

fn best_window(pattern: &[f64], series: &[f64]) -> Result<(f64, usize), MetricsError> {
    let w = pattern.len();
    if w == 0 || w > series.len() {
        return Err(MetricsError::ShapeletTooLong { shapelet: w, series: series.len() });
    }
    let mut best = f64::INFINITY;
    let mut best_at = 0;
    for (start, window) in series.windows(w).enumerate() {
        let d2 = squared_distance(pattern, window);
        if d2 < best {
            best = d2;
            best_at = start;
        }
    }
    Ok((best.sqrt(), best_at))
}

/// Map every series into distance-to-shapelet space.
///
/// Entry `(i, j)` is the distance from shapelet `i` to series `j`; column `j`
/// is the representation of series `j`. Rows are computed in parallel; the
/// result is independent of scheduling.
pub fn transform(
    shapelets: &[Shapelet],
    series: &[TimeSeries],
) -> Result<RepresentationMatrix, MetricsError> {
    let rows: Vec<Vec<f64>> = shapelets
        .par_iter()
        .map(|s| series.iter().map(|x| shapelet_distance(s, x)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let matrix = Matrix::from_rows(&rows).unwrap_or_else(|| Matrix::zeros(0, series.len()));
    Ok(RepresentationMatrix::from_matrix(matrix))
}

/// Pairwise confusion counts between a predicted and a reference assignment.
pub fn pair_confusion(pred: &[usize], truth: &[usize]) -> Result<PairConfusion, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch { left: pred.len(), right: truth.len() });
    }
    if pred.len() < 2 {
        return Err(MetricsError::TooFewAssignments(pred.len()));
    }
    let mut counts = PairConfusion {
        true_positive: 0,
        true_negative: 0,
        false_positive: 0,
        false_negative: 0,
    };
    for i in 0..pred.len() {
        for j in (i + 1)..pred.len() {
            let same_cluster = pred[i] == pred[j];
            let same_class = truth[i] == truth[j];
            match (same_cluster, same_class) {
                (true, true) => counts.true_positive += 1,
                (false, false) => counts.true_negative += 1,
                (true, false) => counts.false_positive += 1,
                (false, true) => counts.false_negative += 1,
            }
        }
    }
    Ok(counts)
}

/// Rand Index: fraction of unordered pairs on which the two assignments
/// agree. Invariant under relabeling of either side; 1.0 means identical
/// partitions.
pub fn rand_index(pred: &[usize], truth: &[usize]) -> Result<f64, MetricsError> {
    let c = pair_confusion(pred, truth)?;
    Ok((c.true_positive + c.true_negative) as f64 / c.total() as f64)
}
