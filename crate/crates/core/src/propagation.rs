//! Pseudo-label propagation.
//!
//! Labeled series propagate their labels to unlabeled series that are their
//! nearest neighbours (whole-series Euclidean distance), and the freshly
//! labeled series keep propagating until no member of the labeled subset has
//! an unlabeled nearest neighbour. Rounds are synchronous: all proposals of
//! a round are collected, conflicts are resolved by smallest distance, and
//! only then committed, so the result does not depend on iteration order.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, TimeSeries};
use crate::metrics::{euclidean, squared_distance};

#[derive(Debug, Error)]
pub enum PropagationError {
    #[error("seed set is empty")]
    EmptySeeds,
    #[error("seed id {0} is out of range")]
    UnknownSeed(usize),
    #[error("seed series {0} has no label")]
    UnlabeledSeed(usize),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

/// How a series entered the labeled subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Ground-truth label supplied as supervision.
    Given,
    /// Pseudo-label received from the member `from`.
    Propagated { from: usize },
}

/// One member of the labeled subset, for JSON audit output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub id: usize,
    pub label: usize,
    pub origin: Origin,
}

/// The labeled-plus-pseudo-labeled subset produced by [`propagate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSubset {
    members: Vec<usize>,
    label_of: BTreeMap<usize, usize>,
    origin_of: BTreeMap<usize, Origin>,
}

impl LabeledSubset {
    /// Member ids in commit order: seeds first (ascending), then each
    /// round's pseudo-labeled series (ascending within the round).
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.label_of.contains_key(&id)
    }

    pub fn label_of(&self, id: usize) -> Option<usize> {
        self.label_of.get(&id).copied()
    }

    pub fn origin_of(&self, id: usize) -> Option<Origin> {
        self.origin_of.get(&id).copied()
    }

    /// Number of members that were pseudo-labeled rather than given.
    pub fn pseudo_labeled_count(&self) -> usize {
        self.origin_of.values().filter(|o| matches!(o, Origin::Propagated { .. })).count()
    }

    /// Members as serializable records, in member order.
    pub fn records(&self) -> Vec<MemberRecord> {
        self.members
            .iter()
            .map(|&id| MemberRecord { id, label: self.label_of[&id], origin: self.origin_of[&id] })
            .collect()
    }
}

/// Euclidean distance between two whole series.
pub fn whole_series_distance(a: &TimeSeries, b: &TimeSeries) -> Result<f64, PropagationError> {
    euclidean(&a.values, &b.values)
        .map_err(|_| PropagationError::LengthMismatch { left: a.len(), right: b.len() })
}

/// Expand the seed set with pseudo-labels by synchronous nearest-neighbour
/// propagation.
///
/// Each round, every member proposes its nearest neighbour (among all other
/// series, nearest-neighbour ties toward the smaller id) as a propagation
/// target if that neighbour is unlabeled. A target claimed by several
/// members takes the label of the closest one (distance ties toward the
/// smaller member id). Committed labels are never overwritten. Terminates
/// in at most `n` rounds.
pub fn propagate(dataset: &Dataset, seed_ids: &BTreeSet<usize>) -> Result<LabeledSubset, PropagationError> {
    if seed_ids.is_empty() {
        return Err(PropagationError::EmptySeeds);
    }
    let n = dataset.len();

    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut origin: Vec<Option<Origin>> = vec![None; n];
    let mut members: Vec<usize> = Vec::new();
    for &id in seed_ids {
        if id >= n {
            return Err(PropagationError::UnknownSeed(id));
        }
        let seed_label = dataset.series[id].label.ok_or(PropagationError::UnlabeledSeed(id))?;
        label[id] = Some(seed_label);
        origin[id] = Some(Origin::Given);
        members.push(id);
    }

    // The nearest neighbour of a series never changes; compute it once per member.
    let mut nearest: Vec<Option<Option<(usize, f64)>>> = vec![None; n];

    loop {
        // target -> (distance, proposing member); smaller distance wins, then smaller member id
        let mut proposals: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for &member in &members {
            let memo = nearest[member].get_or_insert_with(|| nearest_neighbour(dataset, member));
            let Some((neighbour, distance)) = *memo else {
                continue;
            };
            if label[neighbour].is_some() {
                continue;
            }
            match proposals.get(&neighbour) {
                Some(&(best_d, best_m)) if (best_d, best_m) <= (distance, member) => {}
                _ => {
                    proposals.insert(neighbour, (distance, member));
                }
            }
        }
        if proposals.is_empty() {
            break;
        }
        for (&target, &(_, member)) in &proposals {
            label[target] = label[member];
            origin[target] = Some(Origin::Propagated { from: member });
            members.push(target);
        }
    }

    let label_of = members.iter().map(|&id| (id, label[id].expect("member is labeled"))).collect();
    let origin_of =
        members.iter().map(|&id| (id, origin[id].expect("member has an origin"))).collect();
    Ok(LabeledSubset { members, label_of, origin_of })
}

/// Nearest neighbour of `of` among all other series (smallest id on ties);
/// `None` when there is no other series.
fn nearest_neighbour(dataset: &Dataset, of: usize) -> Option<(usize, f64)> {
    let own = &dataset.series[of].values;
    let mut best = f64::INFINITY;
    let mut best_id = None;
    for (id, other) in dataset.series.iter().enumerate() {
        if id == of {
            continue;
        }
        let d2 = squared_distance(own, &other.values);
        if d2 < best {
            best = d2;
            best_id = Some(id);
        }
    }
    best_id.map(|id| (id, best.sqrt()))
}
