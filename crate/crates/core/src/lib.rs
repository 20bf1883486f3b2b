//! Semi-supervised time-series clustering with salient-subsequence shapelets.
//!
//! Given a dataset in which only a small fraction of the series carry class
//! labels, the pipeline
//!
//! 1. z-normalizes every series ([`dataset`]),
//! 2. expands the labeled subset by nearest-neighbour pseudo-label
//!    propagation ([`propagation`]),
//! 3. extracts the salient subsequence chain of every labeled series with a
//!    shortest-path dynamic program ([`chain`]),
//! 4. consolidates the pooled subsequences into candidate shapelets via
//!    seeded k-means ([`candidates`]),
//! 5. keeps the most class-discriminative candidates by an analytic
//!    scatter-matrix criterion ([`lds`]),
//! 6. maps all series into distance-to-shapelet space ([`metrics`]) and
//!    clusters them spectrally ([`spectral`]),
//! 7. scores the result with the Rand Index.
//!
//! [`pipeline`] orchestrates the stages end to end and provides the grid
//! search over shapelet count, shapelet length, and the scatter weight.

pub mod candidates;
pub mod chain;
pub mod dataset;
pub mod lds;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod propagation;
pub mod rng;
pub mod spectral;

pub use candidates::{CandidatePool, CandidateSet};
pub use chain::SalientChain;
pub use dataset::{Dataset, Delimiter, RawSeries, TimeSeries};
pub use lds::{ScatterPair, Selection};
pub use matrix::Matrix;
pub use metrics::{RepresentationMatrix, Shapelet};
pub use pipeline::{ClusteringResult, PipelineConfig};
pub use propagation::LabeledSubset;
pub use spectral::{AffinityMatrix, Assignment};
