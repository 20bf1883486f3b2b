//! End-to-end orchestration: supervision sampling, propagation, chain
//! extraction, consolidation, selection, transformation, clustering,
//! scoring, and the parameter grid search.
//!
//! All randomness is derived from one master seed through named streams
//! (`label-sampling`, `kmeans`, `spectral-kmeans`), so a change in how much
//! randomness one stage consumes can never shift another stage's draws, and
//! identical inputs yield byte-identical results.
//!
//! Ground-truth labels of series outside the seed set feed nothing but the
//! final reported Rand Index: every intermediate stage sees only series
//! values plus the labels carried by the propagated subset.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{consolidate, extract_pool, CandidateError, CandidateSet};
use crate::chain::ChainError;
use crate::dataset::{Dataset, TimeSeries};
use crate::lds::{select_shapelets, LdsError, ScatterPair, Selection};
use crate::matrix::Matrix;
use crate::metrics::{rand_index, transform, MetricsError, Shapelet};
use crate::propagation::{propagate, LabeledSubset, PropagationError};
use crate::rng::{derive_seed, named_stream};
use crate::spectral::{
    rbf_affinity, rbf_affinity_of_columns, spectral_cluster, Assignment, SpectralError,
};
use rand::Rng;

/// Shapelet counts explored by [`grid_search`].
pub const K_GRID: std::ops::RangeInclusive<usize> = 2..=9;
/// Scatter weights explored by [`grid_search`].
pub const LAMBDA_GRID: [f64; 3] = [0.1, 1.0, 10.0];
/// Fractions of the series length explored by [`grid_search`] (as divisors).
pub const LENGTH_DIVISORS: [usize; 5] = [30, 25, 20, 15, 10];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("sampling: dataset has unlabeled series; ground truth is required")]
    NotFullyLabeled,
    #[error("sampling: {target} labels cannot cover {classes} classes")]
    CannotCoverClasses { target: usize, classes: usize },
    #[error("sampling: supervision fraction {0} is outside (0, 1]")]
    BadFraction(f64),
    #[error("no labeled ids supplied")]
    NoLabeledIds,
    #[error("labeled id {0} is out of range")]
    UnknownLabeledId(usize),
    #[error("grid search: every cell was infeasible")]
    AllCellsInfeasible,
    #[error("propagation: {0}")]
    Propagation(#[from] PropagationError),
    #[error("candidate construction: {0}")]
    Candidates(#[from] CandidateError),
    #[error("chain extraction: {0}")]
    Chain(#[from] ChainError),
    #[error("shapelet selection: {0}")]
    Selection(#[from] LdsError),
    #[error("representation: {0}")]
    Metrics(#[from] MetricsError),
    #[error("clustering: {0}")]
    Clustering(#[from] SpectralError),
}

/// Parameters of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Number of shapelets to select (and clusters of candidates / 2).
    pub k: usize,
    /// Absolute shapelet length.
    pub shapelet_len: usize,
    /// Weight of the within-class scatter in the selection score.
    pub lambda: f64,
    /// Candidate multiplier: the pool is consolidated into `beta * k` candidates.
    pub beta: usize,
    /// Fraction of series whose ground-truth labels are given.
    pub supervision: f64,
    /// Rbf kernel width for the affinity matrix.
    pub kernel_gamma: f64,
    /// Master seed; all stage randomness derives from it.
    pub seed: u64,
}

impl PipelineConfig {
    /// Config with the conventional defaults: `beta = 2`, 5% supervision,
    /// `kernel_gamma = 1.0`.
    pub fn new(k: usize, shapelet_len: usize, lambda: f64, seed: u64) -> Self {
        Self { k, shapelet_len, lambda, beta: 2, supervision: 0.05, kernel_gamma: 1.0, seed }
    }

    /// Check the config against a dataset.
    pub fn validate(&self, dataset: &Dataset) -> Result<(), PipelineError> {
        let fail = |msg: String| Err(PipelineError::InvalidConfig(msg));
        if self.k < 1 {
            return fail("k must be at least 1".into());
        }
        if self.shapelet_len < 1 || self.shapelet_len > dataset.series_length {
            return fail(format!(
                "shapelet length {} is outside 1..={}",
                self.shapelet_len, dataset.series_length
            ));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return fail(format!("lambda {} must be finite and non-negative", self.lambda));
        }
        if self.beta < 1 {
            return fail("beta must be at least 1".into());
        }
        if !(self.supervision > 0.0 && self.supervision <= 1.0) {
            return fail(format!("supervision {} is outside (0, 1]", self.supervision));
        }
        if !self.kernel_gamma.is_finite() || self.kernel_gamma <= 0.0 {
            return fail(format!("kernel gamma {} must be positive", self.kernel_gamma));
        }
        Ok(())
    }
}

/// One selected shapelet with its discriminant score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedShapelet {
    pub values: Vec<f64>,
    pub gamma_diag: f64,
}

/// Wall-clock milliseconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub propagate_ms: f64,
    pub chain_extraction_ms: f64,
    pub consolidate_ms: f64,
    pub transform_labeled_ms: f64,
    pub scatter_ms: f64,
    pub select_ms: f64,
    pub transform_full_ms: f64,
    pub affinity_ms: f64,
    pub cluster_ms: f64,
    pub total_ms: f64,
}

/// Output of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteringResult {
    pub config: PipelineConfig,
    /// Seed ids, ascending.
    pub labeled_ids: Vec<usize>,
    pub pseudo_labeled_count: usize,
    pub shapelets: Vec<SelectedShapelet>,
    pub selection: Selection,
    pub assignment: Assignment,
    /// Rand Index of the assignment against the full ground truth.
    pub rand_index: f64,
    #[serde(skip)]
    pub subset: LabeledSubset,
    pub timings: StageTimings,
}

/// One evaluated grid cell; `search_score` is `None` for infeasible cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchCell {
    pub k: usize,
    pub shapelet_len: usize,
    pub lambda: f64,
    pub search_score: Option<f64>,
}

/// Winning configuration plus the full evaluation trace.
#[derive(Debug, Clone)]
pub struct GridSearchOutcome {
    pub best: ClusteringResult,
    pub best_score: f64,
    pub trace: Vec<SearchCell>,
}

/// Draw `ceil(fraction * n)` seed ids, at least one per class.
///
/// One member of every class is drawn first, then the remainder uniformly
/// without replacement from the rest; the `label-sampling` stream of `seed`
/// drives all draws.
pub fn sample_labels(
    dataset: &Dataset,
    fraction: f64,
    seed: u64,
) -> Result<BTreeSet<usize>, PipelineError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(PipelineError::BadFraction(fraction));
    }
    let labels = dataset.labels().ok_or(PipelineError::NotFullyLabeled)?;
    let n = dataset.len();
    let classes = dataset.num_classes;
    let target = ((fraction * n as f64).ceil() as usize).min(n);
    if target < classes {
        return Err(PipelineError::CannotCoverClasses { target, classes });
    }

    let mut rng = named_stream(seed, "label-sampling");
    let mut chosen: BTreeSet<usize> = BTreeSet::new();
    for class in 0..classes {
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        let pick = members[rng.gen_range(0..members.len())];
        chosen.insert(pick);
    }
    let mut rest: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
    let missing = target - chosen.len();
    for i in 0..missing {
        let j = rng.gen_range(i..rest.len());
        rest.swap(i, j);
        chosen.insert(rest[i]);
    }
    Ok(chosen)
}

/// Everything in a run that depends on `(k, shapelet_len)` but not on
/// `lambda`: the candidate set and the scatter of the labeled
/// representation. The grid search shares one prefix across its three
/// `lambda` cells.
struct StagePrefix {
    candidates: CandidateSet,
    scatter: ScatterPair,
    timings: PrefixTimings,
}

#[derive(Clone, Copy, Default)]
struct PrefixTimings {
    chain_extraction_ms: f64,
    consolidate_ms: f64,
    transform_labeled_ms: f64,
    scatter_ms: f64,
}

fn compute_prefix(
    dataset: &Dataset,
    subset: &LabeledSubset,
    k: usize,
    shapelet_len: usize,
    beta: usize,
    master_seed: u64,
) -> Result<StagePrefix, PipelineError> {
    let mut timings = PrefixTimings::default();

    let clock = Instant::now();
    let pool = extract_pool(subset, dataset, shapelet_len, k)?;
    timings.chain_extraction_ms = ms_since(clock);

    let clock = Instant::now();
    let candidates = consolidate(&pool, k, beta, derive_seed(master_seed, "kmeans"))?;
    timings.consolidate_ms = ms_since(clock);

    let clock = Instant::now();
    let member_series: Vec<TimeSeries> =
        subset.members().iter().map(|&id| dataset.series[id].clone()).collect();
    let labeled_reps = transform(&candidates.as_shapelets(), &member_series)?;
    timings.transform_labeled_ms = ms_since(clock);

    let clock = Instant::now();
    let member_labels: Vec<usize> =
        subset.members().iter().map(|&id| subset.label_of(id).expect("member label")).collect();
    let scatter = ScatterPair::compute(&labeled_reps, &member_labels)?;
    timings.scatter_ms = ms_since(clock);

    Ok(StagePrefix { candidates, scatter, timings })
}

struct CompletedCell {
    selection: Selection,
    shapelets: Vec<SelectedShapelet>,
    assignment: Assignment,
    timings: CellTimings,
}

#[derive(Clone, Copy, Default)]
struct CellTimings {
    select_ms: f64,
    transform_full_ms: f64,
    affinity_ms: f64,
    cluster_ms: f64,
}

fn complete_cell(
    dataset: &Dataset,
    prefix: &StagePrefix,
    k: usize,
    lambda: f64,
    kernel_gamma: f64,
    master_seed: u64,
) -> Result<CompletedCell, PipelineError> {
    let mut timings = CellTimings::default();

    let clock = Instant::now();
    let selection = select_shapelets(&prefix.scatter, lambda, k)?;
    let shapelets: Vec<SelectedShapelet> = selection
        .indices
        .iter()
        .map(|&i| SelectedShapelet {
            values: prefix.candidates.centroids[i].clone(),
            gamma_diag: selection.gamma_diag[i],
        })
        .collect();
    timings.select_ms = ms_since(clock);

    let clock = Instant::now();
    let selected: Vec<Shapelet> =
        shapelets.iter().map(|s| Shapelet { values: s.values.clone(), source: None }).collect();
    let full_reps = transform(&selected, &dataset.series)?;
    timings.transform_full_ms = ms_since(clock);

    let clock = Instant::now();
    let affinity = rbf_affinity(&full_reps, kernel_gamma)?;
    timings.affinity_ms = ms_since(clock);

    let clock = Instant::now();
    let assignment =
        spectral_cluster(&affinity, dataset.num_classes, derive_seed(master_seed, "spectral-kmeans"))?;
    timings.cluster_ms = ms_since(clock);

    Ok(CompletedCell { selection, shapelets, assignment, timings })
}

fn ms_since(clock: Instant) -> f64 {
    clock.elapsed().as_secs_f64() * 1e3
}

fn check_labeled_ids(dataset: &Dataset, labeled_ids: &BTreeSet<usize>) -> Result<(), PipelineError> {
    if labeled_ids.is_empty() {
        return Err(PipelineError::NoLabeledIds);
    }
    if let Some(&bad) = labeled_ids.iter().find(|&&id| id >= dataset.len()) {
        return Err(PipelineError::UnknownLabeledId(bad));
    }
    Ok(())
}

/// Accumulated timing state shared by the run and grid-search entry points.
#[derive(Clone, Copy)]
struct TimingContext {
    total_clock: Instant,
    propagate_ms: f64,
    prefix: PrefixTimings,
}

fn assemble_result(
    dataset: &Dataset,
    config: &PipelineConfig,
    labeled_ids: &BTreeSet<usize>,
    subset: &LabeledSubset,
    cell: CompletedCell,
    timing: TimingContext,
) -> Result<ClusteringResult, PipelineError> {
    let truth = dataset.labels().ok_or(PipelineError::NotFullyLabeled)?;
    let ri = rand_index(&cell.assignment.cluster_of, &truth)?;
    let timings = StageTimings {
        propagate_ms: timing.propagate_ms,
        chain_extraction_ms: timing.prefix.chain_extraction_ms,
        consolidate_ms: timing.prefix.consolidate_ms,
        transform_labeled_ms: timing.prefix.transform_labeled_ms,
        scatter_ms: timing.prefix.scatter_ms,
        select_ms: cell.timings.select_ms,
        transform_full_ms: cell.timings.transform_full_ms,
        affinity_ms: cell.timings.affinity_ms,
        cluster_ms: cell.timings.cluster_ms,
        total_ms: ms_since(timing.total_clock),
    };
    Ok(ClusteringResult {
        config: config.clone(),
        labeled_ids: labeled_ids.iter().copied().collect(),
        pseudo_labeled_count: subset.pseudo_labeled_count(),
        shapelets: cell.shapelets,
        selection: cell.selection,
        assignment: cell.assignment,
        rand_index: ri,
        subset: subset.clone(),
        timings,
    })
}

/// Run the full pipeline once with a fixed configuration.
pub fn run_pipeline(
    dataset: &Dataset,
    config: &PipelineConfig,
    labeled_ids: &BTreeSet<usize>,
) -> Result<ClusteringResult, PipelineError> {
    let total_clock = Instant::now();
    config.validate(dataset)?;
    check_labeled_ids(dataset, labeled_ids)?;

    let clock = Instant::now();
    let subset = propagate(dataset, labeled_ids)?;
    let propagate_ms = ms_since(clock);

    let prefix =
        compute_prefix(dataset, &subset, config.k, config.shapelet_len, config.beta, config.seed)?;
    let cell = complete_cell(dataset, &prefix, config.k, config.lambda, config.kernel_gamma, config.seed)?;
    let timing = TimingContext { total_clock, propagate_ms, prefix: prefix.timings };
    assemble_result(dataset, config, labeled_ids, &subset, cell, timing)
}

/// Shapelet lengths explored by the grid search for a given series length:
/// `round(l / d)` for `d` in `{30, 25, 20, 15, 10}`, clamped to at least 2
/// (and at most `l`), deduplicated ascending.
pub fn length_grid(series_length: usize) -> Vec<usize> {
    let mut lengths: Vec<usize> = LENGTH_DIVISORS
        .iter()
        .map(|&d| {
            let rounded = (series_length as f64 / d as f64).round() as usize;
            rounded.max(2).min(series_length)
        })
        .collect();
    lengths.sort_unstable();
    lengths.dedup();
    lengths
}

/// Grid-search `k`, shapelet length, and `lambda`.
///
/// Every cell is scored by the Rand Index of its assignment restricted to
/// the labeled/pseudo-labeled subset, judged against the subset's own
/// (pseudo-)labels; the held-out ground truth is never consulted during the
/// search. Score ties go to smaller `k`, then shorter shapelets, then
/// smaller `lambda`. The winning cell's result reports the Rand Index
/// against the full ground truth.
pub fn grid_search(
    dataset: &Dataset,
    labeled_ids: &BTreeSet<usize>,
    seed: u64,
) -> Result<GridSearchOutcome, PipelineError> {
    let total_clock = Instant::now();
    check_labeled_ids(dataset, labeled_ids)?;

    let clock = Instant::now();
    let subset = propagate(dataset, labeled_ids)?;
    let propagate_ms = ms_since(clock);

    let member_truth: Vec<usize> =
        subset.members().iter().map(|&id| subset.label_of(id).expect("member label")).collect();
    let supervision = labeled_ids.len() as f64 / dataset.len() as f64;
    let lengths = length_grid(dataset.series_length);

    let mut trace = Vec::new();
    let mut best: Option<(f64, ClusteringResult)> = None;

    for k in K_GRID {
        for &shapelet_len in &lengths {
            let prefix = compute_prefix(dataset, &subset, k, shapelet_len, 2, seed);
            for lambda in LAMBDA_GRID {
                let mut cell = SearchCell { k, shapelet_len, lambda, search_score: None };
                let outcome = prefix.as_ref().ok().and_then(|p| {
                    complete_cell(dataset, p, k, lambda, 1.0, seed).ok().map(|c| (p, c))
                });
                if let Some((prefix, completed)) = outcome {
                    let member_pred: Vec<usize> = subset
                        .members()
                        .iter()
                        .map(|&id| completed.assignment.cluster_of[id])
                        .collect();
                    if let Ok(score) = rand_index(&member_pred, &member_truth) {
                        cell.search_score = Some(score);
                        if best.as_ref().is_none_or(|(b, _)| score > *b) {
                            let config = PipelineConfig {
                                k,
                                shapelet_len,
                                lambda,
                                beta: 2,
                                supervision,
                                kernel_gamma: 1.0,
                                seed,
                            };
                            let timing = TimingContext {
                                total_clock,
                                propagate_ms,
                                prefix: prefix.timings,
                            };
                            let result = assemble_result(
                                dataset, &config, labeled_ids, &subset, completed, timing,
                            )?;
                            best = Some((score, result));
                        }
                    }
                }
                trace.push(cell);
            }
        }
    }

    match best {
        Some((best_score, best)) => Ok(GridSearchOutcome { best, best_score, trace }),
        None => Err(PipelineError::AllCellsInfeasible),
    }
}

/// Baseline: spectral clustering of the raw z-normalized series (no
/// shapelets, no supervision), same kernel and clusterer as the pipeline.
pub fn raw_spectral_baseline(
    dataset: &Dataset,
    kernel_gamma: f64,
    seed: u64,
) -> Result<(Assignment, f64), PipelineError> {
    let n = dataset.len();
    let mut columns = Matrix::zeros(dataset.series_length, n);
    for (j, series) in dataset.series.iter().enumerate() {
        for (i, &v) in series.values.iter().enumerate() {
            columns[(i, j)] = v;
        }
    }
    let affinity = rbf_affinity_of_columns(&columns, kernel_gamma)?;
    let assignment =
        spectral_cluster(&affinity, dataset.num_classes, derive_seed(seed, "spectral-kmeans"))?;
    let truth = dataset.labels().ok_or(PipelineError::NotFullyLabeled)?;
    let ri = rand_index(&assignment.cluster_of, &truth)?;
    Ok((assignment, ri))
}

/// Independent master seeds for repeated evaluation of one protocol.
pub fn repeat_seeds(master: u64, repeats: usize) -> Vec<u64> {
    (0..repeats).map(|i| derive_seed(master, &format!("repeat-{i}"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_dataset(per_class: usize, classes: usize, length: usize) -> Dataset {
        // one localized bump per class, at a class-specific position
        let series = (0..per_class * classes)
            .map(|id| {
                let class = id % classes;
                let bump = length * (class + 1) / (classes + 1);
                let values: Vec<f64> = (0..length)
                    .map(|t| {
                        let d = t as f64 - bump as f64;
                        (-d * d / 8.0).exp() + 0.001 * ((id * 31 + t) % 7) as f64
                    })
                    .collect();
                TimeSeries { id, label: Some(class), values: crate::dataset::znormalize(&values) }
            })
            .collect();
        Dataset { series, num_classes: classes, series_length: length }
    }

    #[test]
    fn full_supervision_samples_every_id() {
        let ds = synthetic_dataset(4, 2, 20);
        let ids = sample_labels(&ds, 1.0, 3).unwrap();
        assert_eq!(ids.len(), 8);
    }

    #[test]
    fn five_percent_of_56_series_yields_3_ids_covering_both_classes() {
        let ds = synthetic_dataset(28, 2, 20);
        assert_eq!(ds.len(), 56);
        let ids = sample_labels(&ds, 0.05, 9).unwrap();
        assert_eq!(ids.len(), 3, "ceil(0.05 * 56) = 3");
        let classes: BTreeSet<usize> =
            ids.iter().map(|&i| ds.series[i].label.unwrap()).collect();
        assert_eq!(classes.len(), 2);
    }

    #[test]
    fn samples_cover_every_class_for_any_seed() {
        let ds = synthetic_dataset(10, 3, 20);
        for seed in 0..100 {
            let ids = sample_labels(&ds, 0.1, seed).unwrap();
            assert_eq!(ids.len(), 3);
            let classes: BTreeSet<usize> =
                ids.iter().map(|&i| ds.series[i].label.unwrap()).collect();
            assert_eq!(classes.len(), 3, "seed {seed} missed a class");
        }
    }

    #[test]
    fn sampling_is_deterministic_and_errors_are_reported() {
        let ds = synthetic_dataset(10, 3, 20);
        assert_eq!(sample_labels(&ds, 0.2, 7).unwrap(), sample_labels(&ds, 0.2, 7).unwrap());
        assert!(matches!(
            sample_labels(&ds, 0.05, 7),
            Err(PipelineError::CannotCoverClasses { target: 2, classes: 3 })
        ));
        assert!(matches!(sample_labels(&ds, 0.0, 7), Err(PipelineError::BadFraction(_))));
        assert!(matches!(sample_labels(&ds, 1.5, 7), Err(PipelineError::BadFraction(_))));
    }

    #[test]
    fn length_grid_rounds_clamps_and_dedups() {
        assert_eq!(length_grid(30), vec![2, 3], "short series collapse to {{2, 3}}");
        assert_eq!(length_grid(286), vec![10, 11, 14, 19, 29]);
        assert_eq!(length_grid(2), vec![2]);
    }

    #[test]
    fn config_validation_rejects_bad_parameters() {
        let ds = synthetic_dataset(3, 2, 20);
        let ok = PipelineConfig::new(2, 5, 0.1, 1);
        assert!(ok.validate(&ds).is_ok());
        for (patch, _why) in [
            (PipelineConfig { k: 0, ..ok.clone() }, "k"),
            (PipelineConfig { shapelet_len: 0, ..ok.clone() }, "short"),
            (PipelineConfig { shapelet_len: 21, ..ok.clone() }, "long"),
            (PipelineConfig { lambda: -1.0, ..ok.clone() }, "lambda"),
            (PipelineConfig { beta: 0, ..ok.clone() }, "beta"),
            (PipelineConfig { supervision: 0.0, ..ok.clone() }, "supervision"),
            (PipelineConfig { kernel_gamma: 0.0, ..ok.clone() }, "gamma"),
        ] {
            assert!(matches!(patch.validate(&ds), Err(PipelineError::InvalidConfig(_))));
        }
    }

    #[test]
    fn repeat_seeds_are_distinct_and_stable() {
        let a = repeat_seeds(5, 10);
        let b = repeat_seeds(5, 10);
        assert_eq!(a, b);
        let unique: BTreeSet<u64> = a.iter().copied().collect();
        assert_eq!(unique.len(), 10);
    }
}
