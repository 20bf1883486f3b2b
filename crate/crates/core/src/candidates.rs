//! Candidate shapelet construction.
//!
//! The salient chain windows of every labeled/pseudo-labeled series are
//! pooled, then consolidated into `gamma = beta * k` candidate shapelets by
//! seeded k-means; the cluster centers become the candidates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{find_chain, ChainError};
use crate::dataset::Dataset;
use crate::metrics::{squared_distance, Shapelet, ShapeletSource};
use crate::propagation::LabeledSubset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_KMEANS_ITERATIONS: usize = 300;

#[derive(Debug, Error)]
pub enum CandidateError {
    #[error("labeled subset is empty")]
    EmptySubset,
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("subset member {0} is not a valid series id")]
    UnknownMember(usize),
    #[error("cluster count must be at least 1")]
    ZeroClusters,
    #[error("cannot form {clusters} clusters from {points} points")]
    TooFewPoints { clusters: usize, points: usize },
    #[error("points must share one dimension; found {left} and {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("candidate multiplier must be at least 1")]
    ZeroMultiplier,
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// Salient windows pooled from every member of the labeled subset.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    shapelets: Vec<Shapelet>,
    window_len: usize,
}

impl CandidatePool {
    /// Pooled windows in member order, each with its provenance.
    pub fn shapelets(&self) -> &[Shapelet] {
        &self.shapelets
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn len(&self) -> usize {
        self.shapelets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapelets.is_empty()
    }
}

/// Consolidated candidate shapelets (k-means centers over the pool).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub centroids: Vec<Vec<f64>>,
    pub gamma: usize,
    pub seed: u64,
}

impl CandidateSet {
    /// Candidates as centroid shapelets (no provenance).
    pub fn as_shapelets(&self) -> Vec<Shapelet> {
        self.centroids.iter().map(|c| Shapelet { values: c.clone(), source: None }).collect()
    }
}

/// Result of one k-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct KmeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
}

/// Extract the salient chain of every subset member and pool the windows.
///
/// A member too short for a chain of `k` windows contributes its maximal
/// feasible chain instead of being dropped, so label coverage survives on
/// short series.
pub fn extract_pool(
    subset: &LabeledSubset,
    dataset: &Dataset,
    window_len: usize,
    k: usize,
) -> Result<CandidatePool, CandidateError> {
    if subset.is_empty() {
        return Err(CandidateError::EmptySubset);
    }
    let mut shapelets = Vec::with_capacity(subset.len() * k);
    for &id in subset.members() {
        let series = dataset.series.get(id).ok_or(CandidateError::UnknownMember(id))?;
        let feasible_k = k.min(series.len() / window_len);
        let chain = find_chain(series, window_len, feasible_k.max(1))?;
        for start in chain.starts {
            shapelets.push(Shapelet {
                values: series.values[start..start + window_len].to_vec(),
                source: Some(ShapeletSource { series: id, start }),
            });
        }
    }
    Ok(CandidatePool { shapelets, window_len })
}

/// Lloyd's k-means with seeded k-means++ initialization.
///
/// Iterates to an assignment fixpoint or 300 iterations. Assignment ties go
/// to the smaller centroid index; an emptied cluster is re-seeded with the
/// point farthest from its own centroid. Deterministic for a fixed seed.
pub fn kmeans(points: &[Vec<f64>], clusters: usize, seed: u64) -> Result<KmeansFit, CandidateError> {
    if clusters == 0 {
        return Err(CandidateError::ZeroClusters);
    }
    if points.len() < clusters {
        return Err(CandidateError::TooFewPoints { clusters, points: points.len() });
    }
    let dim = points[0].len();
    for p in points {
        if p.len() != dim {
            return Err(CandidateError::DimensionMismatch { left: dim, right: p.len() });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, clusters, &mut rng);
    let mut assignment = vec![usize::MAX; points.len()];

    for _ in 0..MAX_KMEANS_ITERATIONS {
        let next: Vec<usize> = points.iter().map(|p| nearest_centroid(p, &centroids)).collect();
        let next = fix_empty_clusters(points, &centroids, next, clusters);
        let converged = next == assignment;
        assignment = next;

        let mut sums = vec![vec![0.0; dim]; clusters];
        let mut counts = vec![0usize; clusters];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for (c, sum) in sums.iter().enumerate() {
            debug_assert!(counts[c] > 0, "empty clusters were re-seeded");
            centroids[c] = sum.iter().map(|s| s / counts[c] as f64).collect();
        }

        if converged {
            break;
        }
    }

    Ok(KmeansFit { centroids, assignment })
}

/// k-means++: first center uniform, then D^2-weighted draws. When every
/// remaining point coincides with a chosen center, fall back to the first
/// unchosen index.
fn plus_plus_init(points: &[Vec<f64>], clusters: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut chosen: Vec<usize> = Vec::with_capacity(clusters);
    chosen.push(rng.gen_range(0..points.len()));
    let mut dist2: Vec<f64> =
        points.iter().map(|p| squared_distance(p, &points[chosen[0]])).collect();

    while chosen.len() < clusters {
        let total: f64 = dist2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut pick = points.len() - 1;
            for (i, &d) in dist2.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            (0..points.len()).find(|i| !chosen.contains(i)).expect("clusters <= points")
        };
        chosen.push(next);
        for (d, p) in dist2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

fn nearest_centroid(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = f64::INFINITY;
    let mut best_c = 0;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(point, centroid);
        if d < best {
            best = d;
            best_c = c;
        }
    }
    best_c
}

/// Give every empty cluster the point farthest from its assigned centroid,
/// taken from a cluster with more than one member (ties toward the smaller
/// point index).
fn fix_empty_clusters(
    points: &[Vec<f64>],
    centroids: &[Vec<f64>],
    mut assignment: Vec<usize>,
    clusters: usize,
) -> Vec<usize> {
    let mut counts = vec![0usize; clusters];
    for &c in &assignment {
        counts[c] += 1;
    }
    for empty in 0..clusters {
        if counts[empty] > 0 {
            continue;
        }
        let mut worst = -1.0;
        let mut worst_point = usize::MAX;
        for (i, p) in points.iter().enumerate() {
            if counts[assignment[i]] <= 1 {
                continue;
            }
            let d = squared_distance(p, &centroids[assignment[i]]);
            if d > worst {
                worst = d;
                worst_point = i;
            }
        }
        debug_assert_ne!(worst_point, usize::MAX, "some cluster has at least two members");
        counts[assignment[worst_point]] -= 1;
        assignment[worst_point] = empty;
        counts[empty] = 1;
    }
    assignment
}

/// Consolidate a pool into `min(beta * k, pool size)` candidate centroids.
pub fn consolidate(
    pool: &CandidatePool,
    k: usize,
    beta: usize,
    seed: u64,
) -> Result<CandidateSet, CandidateError> {
    if pool.is_empty() {
        return Err(CandidateError::EmptyPool);
    }
    if beta == 0 {
        return Err(CandidateError::ZeroMultiplier);
    }
    let gamma = (beta * k).min(pool.len());
    let points: Vec<Vec<f64>> = pool.shapelets.iter().map(|s| s.values.clone()).collect();
    let fit = kmeans(&points, gamma, seed)?;
    Ok(CandidateSet { centroids: fit.centroids, gamma, seed })
}
