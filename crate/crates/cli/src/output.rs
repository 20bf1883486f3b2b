//! JSON documents written by the `run` subcommand.

use serde::Serialize;
use ss_shapelets::pipeline::{ClusteringResult, SearchCell, StageTimings};
use ss_shapelets::{Assignment, Dataset, PipelineConfig};

#[derive(Debug, Serialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub c: usize,
    pub l: usize,
}

impl DatasetSummary {
    pub fn of(dataset: &Dataset) -> Self {
        Self { n: dataset.len(), c: dataset.num_classes, l: dataset.series_length }
    }
}

#[derive(Debug, Serialize)]
pub struct ShapeletDoc {
    pub values: Vec<f64>,
    pub gamma_diag: f64,
}

/// One pipeline run, shaped for the output file.
#[derive(Debug, Serialize)]
pub struct RunDoc {
    pub seed: u64,
    pub config: PipelineConfig,
    pub labeled_ids: Vec<usize>,
    pub pseudo_labeled_count: usize,
    pub shapelets: Vec<ShapeletDoc>,
    pub assignment: Assignment,
    pub rand_index: f64,
    pub search_trace: Vec<SearchCell>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<StageTimings>,
}

impl RunDoc {
    pub fn new(result: ClusteringResult, trace: Vec<SearchCell>, timings: bool) -> Self {
        Self {
            seed: result.config.seed,
            labeled_ids: result.labeled_ids,
            pseudo_labeled_count: result.pseudo_labeled_count,
            shapelets: result
                .shapelets
                .into_iter()
                .map(|s| ShapeletDoc { values: s.values, gamma_diag: s.gamma_diag })
                .collect(),
            assignment: result.assignment,
            rand_index: result.rand_index,
            search_trace: trace,
            timings_ms: timings.then_some(result.timings),
            config: result.config,
        }
    }
}

/// Top-level document: one run, a repeated protocol, or the raw baseline.
#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Document {
    Single {
        dataset: DatasetSummary,
        #[serde(flatten)]
        run: Box<RunDoc>,
    },
    Repeated {
        dataset: DatasetSummary,
        repeats: Vec<RunDoc>,
        median_rand_index: f64,
        iqr_rand_index: f64,
    },
    Baseline {
        dataset: DatasetSummary,
        mode: String,
        kernel_gamma: f64,
        seed: u64,
        assignment: Assignment,
        rand_index: f64,
    },
    BaselineRepeated {
        dataset: DatasetSummary,
        mode: String,
        kernel_gamma: f64,
        repeats: Vec<BaselineRepeat>,
        median_rand_index: f64,
        iqr_rand_index: f64,
    },
}

#[derive(Debug, Serialize)]
pub struct BaselineRepeat {
    pub seed: u64,
    pub assignment: Assignment,
    pub rand_index: f64,
}

/// Linearly interpolated quantile of a sample (values need not be sorted).
pub fn quantile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

pub fn interquartile_range(values: &[f64]) -> f64 {
    quantile(values, 0.75) - quantile(values, 0.25)
}
