//! Salient subsequence chains.
//!
//! A chain of size `k` is a list of `k` non-overlapping window start offsets
//! in increasing time order; its salience is the sum of Euclidean distances
//! between consecutive windows. The salient chain maximizes that sum, which
//! picks out windows that contrast most with their neighbours in the chain.
//!
//! [`find_chain`] casts the maximization as a shortest path with `k`
//! intermediate nodes on a DAG whose nodes are the windows and whose edge
//! weights are negated window distances, solved by dynamic programming in
//! `O(k * m^2)` for `m = l - window_len + 1` windows. [`brute_force_chain`]
//! enumerates every valid chain and serves as the oracle baseline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::TimeSeries;
use crate::matrix::Matrix;
use crate::metrics::{euclidean, squared_distance};

/// Node index of the virtual source in a [`SubsequenceGraph`].
pub const SOURCE: usize = 0;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("window length {window_len} is outside 1..={series_len}")]
    BadWindowLength { window_len: usize, series_len: usize },
    #[error("chain size must be at least 1")]
    ZeroChainSize,
    #[error("no chain of {k} non-overlapping windows of length {window_len} fits in {series_len} points")]
    Infeasible { series_len: usize, window_len: usize, k: usize },
    #[error("enumeration guard: C({m}, {k}) = {combinations} chains exceed the limit")]
    EnumerationGuard { m: usize, k: usize, combinations: f64 },
    #[error("chain starts must be increasing with gaps of at least the window length; got {0:?}")]
    InvalidChain(Vec<usize>),
    #[error("chain start {start} puts the window past the series end {series_len}")]
    StartOutOfRange { start: usize, series_len: usize },
}

/// DAG over the windows of one series.
///
/// Node 0 is the virtual source, nodes `1..=m` are the windows in start
/// order (node `i` starts at offset `i - 1`), and node `m + 1` is the
/// virtual sink. Source and sink edges have weight 0; an edge between real
/// nodes exists iff the windows do not overlap and runs from the earlier to
/// the later window with weight `-distance`. Missing edges carry
/// `f64::INFINITY`.
#[derive(Debug, Clone)]
pub struct SubsequenceGraph {
    m: usize,
    window_len: usize,
    weights: Matrix,
}

impl SubsequenceGraph {
    /// Number of real (window) nodes.
    pub fn window_count(&self) -> usize {
        self.m
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    /// Node index of the virtual sink.
    pub fn sink(&self) -> usize {
        self.m + 1
    }

    /// Weight of the directed edge `from -> to`; `f64::INFINITY` if absent.
    pub fn weight(&self, from: usize, to: usize) -> f64 {
        self.weights[(from, to)]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.weights[(from, to)].is_finite()
    }
}

/// Build the window DAG of `series` for the given window length.
///
/// Real-to-real weights are computed per start-offset gap by sliding the
/// squared distance incrementally, which brings construction down to
/// `O(m^2)` from `O(m^2 * window_len)`. The tiny rounding drift this
/// introduces stays far below the 1e-9 contract on reported saliences.
pub fn build_graph(series: &TimeSeries, window_len: usize) -> Result<SubsequenceGraph, ChainError> {
    let l = series.len();
    if window_len < 1 || window_len > l {
        return Err(ChainError::BadWindowLength { window_len, series_len: l });
    }
    let m = l - window_len + 1;
    let sink = m + 1;
    let x = &series.values;

    let mut weights = Matrix::filled(m + 2, m + 2, f64::INFINITY);
    for node in 1..=m {
        weights[(SOURCE, node)] = 0.0;
        weights[(node, sink)] = 0.0;
    }

    // Pairs are disjoint iff start gap >= window_len. Row 0 computes one
    // fresh squared distance per gap; every later row continues its gap's
    // chain from the row above (same arithmetic as sliding along the
    // diagonal), so rows are filled in cache-friendly order.
    let mut prev_sq = vec![0.0f64; m];
    let mut cur_sq = vec![0.0f64; m];
    for a in 0..m {
        if a + window_len >= m {
            break;
        }
        for b in (a + window_len)..m {
            let sq = if a == 0 {
                squared_distance(&x[..window_len], &x[b..b + window_len])
            } else {
                let drop = x[a - 1] - x[b - 1];
                let add = x[a + window_len - 1] - x[b + window_len - 1];
                prev_sq[b - 1] + (add * add - drop * drop)
            };
            cur_sq[b] = sq;
            weights[(a + 1, b + 1)] = -sq.max(0.0).sqrt();
        }
        std::mem::swap(&mut prev_sq, &mut cur_sq);
    }

    Ok(SubsequenceGraph { m, window_len, weights })
}

/// Accumulated shortest-path costs over the window DAG.
///
/// `cost(node, q)` is the cheapest cost of a path from the source to `node`
/// that visits exactly `q` nodes (both endpoints included);
/// `backpointer(node, q)` is the predecessor on that path. Argmin ties break
/// toward the smallest predecessor index.
#[derive(Debug, Clone)]
pub struct DpTable {
    nodes: usize,
    path_len: usize,
    costs: Vec<f64>,
    back: Vec<usize>,
}

const NO_NODE: usize = usize::MAX;

impl DpTable {
    /// Fill the table for paths of up to `k + 2` nodes (source, `k` windows, sink).
    pub fn solve(graph: &SubsequenceGraph, k: usize) -> DpTable {
        let nodes = graph.m + 2;
        let path_len = k + 2;
        let mut table = DpTable {
            nodes,
            path_len,
            costs: vec![f64::INFINITY; nodes * (path_len + 1)],
            back: vec![NO_NODE; nodes * (path_len + 1)],
        };
        let start = table.idx(SOURCE, 1);
        table.costs[start] = 0.0;

        // Relax forward from each reachable predecessor, streaming its
        // weight row; predecessors ascend and updates are strict, so ties
        // keep the smallest predecessor index.
        for q in 2..=path_len {
            for pred in 0..nodes {
                let reach = table.costs[table.idx(pred, q - 1)];
                if !reach.is_finite() {
                    continue;
                }
                let row = graph.weights.row(pred);
                for (dest, &w) in row.iter().enumerate() {
                    if !w.is_finite() {
                        continue;
                    }
                    let cand = reach + w;
                    let at = table.idx(dest, q);
                    if cand < table.costs[at] {
                        table.costs[at] = cand;
                        table.back[at] = pred;
                    }
                }
            }
        }
        table
    }

    fn idx(&self, node: usize, q: usize) -> usize {
        debug_assert!(node < self.nodes && q <= self.path_len);
        node * (self.path_len + 1) + q
    }

    /// Cost of the cheapest `q`-node path from the source to `node`.
    pub fn cost(&self, node: usize, q: usize) -> f64 {
        self.costs[self.idx(node, q)]
    }

    /// Predecessor of `node` on that path, if reachable.
    pub fn backpointer(&self, node: usize, q: usize) -> Option<usize> {
        match self.back[self.idx(node, q)] {
            NO_NODE => None,
            pred => Some(pred),
        }
    }
}

/// A chain of window start offsets with its total salience.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalientChain {
    /// 0-based start offsets, strictly increasing with gaps >= window length.
    pub starts: Vec<usize>,
    /// Sum of Euclidean distances between consecutive windows.
    pub salience: f64,
}

/// Salience of an explicit chain: the sum of Euclidean distances between
/// consecutive windows (0 for a single window).
pub fn chain_salience(
    series: &TimeSeries,
    window_len: usize,
    starts: &[usize],
) -> Result<f64, ChainError> {
    let l = series.len();
    if window_len < 1 || window_len > l {
        return Err(ChainError::BadWindowLength { window_len, series_len: l });
    }
    if starts.is_empty() {
        return Err(ChainError::InvalidChain(starts.to_vec()));
    }
    for &s in starts {
        if s + window_len > l {
            return Err(ChainError::StartOutOfRange { start: s, series_len: l });
        }
    }
    if starts.windows(2).any(|w| w[0] + window_len > w[1]) {
        return Err(ChainError::InvalidChain(starts.to_vec()));
    }
    let window = |s: usize| &series.values[s..s + window_len];
    let mut total = 0.0;
    for pair in starts.windows(2) {
        total += euclidean(window(pair[0]), window(pair[1])).expect("equal window lengths");
    }
    Ok(total)
}

fn check_feasible(series: &TimeSeries, window_len: usize, k: usize) -> Result<(), ChainError> {
    let l = series.len();
    if window_len < 1 || window_len > l {
        return Err(ChainError::BadWindowLength { window_len, series_len: l });
    }
    if k == 0 {
        return Err(ChainError::ZeroChainSize);
    }
    if l < k * window_len {
        return Err(ChainError::Infeasible { series_len: l, window_len, k });
    }
    Ok(())
}

/// Find the maximum-salience chain of `k` windows by dynamic programming.
///
/// The reported salience is recomputed window-by-window on the recovered
/// chain so it is bit-identical to what [`chain_salience`] (and the brute
/// force) produce for the same starts.
pub fn find_chain(series: &TimeSeries, window_len: usize, k: usize) -> Result<SalientChain, ChainError> {
    check_feasible(series, window_len, k)?;
    let graph = build_graph(series, window_len)?;
    let table = DpTable::solve(&graph, k);

    let sink = graph.sink();
    let path_len = k + 2;
    assert!(
        table.cost(sink, path_len).is_finite(),
        "feasible instance must reach the sink"
    );

    let mut starts = Vec::with_capacity(k);
    let mut node = sink;
    for q in (2..=path_len).rev() {
        let pred = table.backpointer(node, q).expect("finite cost implies a predecessor");
        if pred != SOURCE {
            starts.push(pred - 1);
        }
        node = pred;
    }
    debug_assert_eq!(node, SOURCE);
    starts.reverse();
    debug_assert_eq!(starts.len(), k);

    let salience = chain_salience(series, window_len, &starts)?;
    Ok(SalientChain { starts, salience })
}

/// Enumerate every valid chain and return the best one.
///
/// Guarded to at most `C(m, k) <= 1e7` enumerated combinations. Equal-salience
/// ties keep the lexicographically smallest chain (enumeration order).
pub fn brute_force_chain(
    series: &TimeSeries,
    window_len: usize,
    k: usize,
) -> Result<SalientChain, ChainError> {
    check_feasible(series, window_len, k)?;
    let m = series.len() - window_len + 1;
    let combinations = binomial(m, k);
    if combinations > 1e7 {
        return Err(ChainError::EnumerationGuard { m, k, combinations });
    }

    let mut walker = ChainEnumerator {
        values: &series.values,
        m,
        window_len,
        k,
        prefix: Vec::with_capacity(k),
        best: None,
    };
    walker.walk(0.0);
    Ok(walker.best.expect("feasible instance has at least one chain"))
}

/// Depth-first enumeration of valid chains in lexicographic order, carrying
/// the running salience so each leaf costs one distance evaluation. Strict
/// improvement keeps the first (lexicographically smallest) maximizer.
struct ChainEnumerator<'a> {
    values: &'a [f64],
    m: usize,
    window_len: usize,
    k: usize,
    prefix: Vec<usize>,
    best: Option<SalientChain>,
}

impl ChainEnumerator<'_> {
    fn window(&self, start: usize) -> &[f64] {
        &self.values[start..start + self.window_len]
    }

    fn walk(&mut self, salience: f64) {
        if self.prefix.len() == self.k {
            if self.best.as_ref().is_none_or(|b| salience > b.salience) {
                self.best = Some(SalientChain { starts: self.prefix.clone(), salience });
            }
            return;
        }
        let lo = self.prefix.last().map_or(0, |&p| p + self.window_len);
        // remaining windows must still fit after this one
        let hi = self.m - 1 - (self.k - self.prefix.len() - 1) * self.window_len;
        for start in lo..=hi {
            let step = match self.prefix.last() {
                Some(&prev) => euclidean(self.window(prev), self.window(start))
                    .expect("equal window lengths"),
                None => 0.0,
            };
            self.prefix.push(start);
            self.walk(salience + step);
            self.prefix.pop();
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
