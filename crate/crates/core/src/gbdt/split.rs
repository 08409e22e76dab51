//! Exact greedy split search on presorted columns.
//!
//! One pass over each feature's presorted row order evaluates every node of
//! the current tree level at once. The same routine backs the single-node
//! [`best_split`] entry point.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::GbdtParams;

pub(crate) const NO_NODE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeStats {
    pub grad: f64,
    pub hess: f64,
}

impl NodeStats {
    fn add(&mut self, g: f64, h: f64) {
        self.grad += g;
        self.hess += h;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitDecision {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Regularized second-order gain of splitting a node into `left`/`right`.
pub fn split_gain(left: NodeStats, right: NodeStats, lambda: f64, gamma: f64) -> f64 {
    let score = |g: f64, h: f64| g * g / (h + lambda);
    let parent = score(left.grad + right.grad, left.hess + right.hess);
    0.5 * (score(left.grad, left.hess) + score(right.grad, right.hess) - parent) - gamma
}

/// Column-major copy of a feature matrix with per-feature row orders
/// sorted by value (ties by row index).
pub(crate) struct ColumnIndex {
    pub columns: Vec<Vec<f64>>,
    pub sorted: Vec<Vec<u32>>,
}

impl ColumnIndex {
    pub fn new(x: ArrayView2<'_, f64>) -> Self {
        Self::for_rows(x, &(0..x.nrows() as u32).collect::<Vec<_>>())
    }

    /// Only `rows` appear in the sorted orders.
    pub fn for_rows(x: ArrayView2<'_, f64>, rows: &[u32]) -> Self {
        let columns: Vec<Vec<f64>> = x.columns().into_iter().map(|c| c.to_vec()).collect();
        let sorted = columns
            .iter()
            .map(|col| {
                let mut order = rows.to_vec();
                order.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                order
            })
            .collect();
        ColumnIndex { columns, sorted }
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }
}

#[derive(Clone, Copy)]
struct Scan {
    left: NodeStats,
    last: f64,
    seen: bool,
}

/// Best split for every node id in `0..totals.len()`.
///
/// Candidates are midpoints between consecutive distinct values. A split is
/// admissible when both children reach `min_child_weight` in hessian sum;
/// the maximal gain wins, ties going to the lower feature index and then
/// the lower threshold. Non-positive gains yield `None`.
pub(crate) fn find_splits(
    index: &ColumnIndex,
    node_of_row: &[u32],
    totals: &[NodeStats],
    grad: &[f64],
    hess: &[f64],
    params: &GbdtParams,
) -> Vec<Option<SplitDecision>> {
    let n_nodes = totals.len();
    let mut best: Vec<Option<SplitDecision>> = vec![None; n_nodes];
    let fresh = Scan {
        left: NodeStats::default(),
        last: 0.0,
        seen: false,
    };
    let mut scans = vec![fresh; n_nodes];
    for feature in 0..index.n_features() {
        scans.iter_mut().for_each(|s| *s = fresh);
        let column = &index.columns[feature];
        for &row in &index.sorted[feature] {
            let row = row as usize;
            let node = node_of_row[row];
            if node == NO_NODE {
                continue;
            }
            let node = node as usize;
            let value = column[row];
            let scan = &mut scans[node];
            if scan.seen && value > scan.last {
                let left = scan.left;
                let total = totals[node];
                let right = NodeStats {
                    grad: total.grad - left.grad,
                    hess: total.hess - left.hess,
                };
                if left.hess >= params.min_child_weight && right.hess >= params.min_child_weight {
                    let gain = split_gain(left, right, params.lambda, params.gamma);
                    let better = match &best[node] {
                        Some(b) => gain > b.gain,
                        None => gain > 0.0,
                    };
                    if better {
                        let mid = 0.5 * (scan.last + value);
                        let threshold = if mid > scan.last { mid } else { value };
                        best[node] = Some(SplitDecision {
                            feature,
                            threshold,
                            gain,
                        });
                    }
                }
            }
            scan.left.add(grad[row], hess[row]);
            scan.last = value;
            scan.seen = true;
        }
    }
    best
}

/// Best split of the node made of `rows` (indices into `x`, `grad`, `hess`).
pub fn best_split(
    x: ArrayView2<'_, f64>,
    rows: &[usize],
    grad: &[f64],
    hess: &[f64],
    params: &GbdtParams,
) -> Option<SplitDecision> {
    if rows.len() < 2 {
        return None;
    }
    let rows32: Vec<u32> = rows.iter().map(|&r| r as u32).collect();
    let index = ColumnIndex::for_rows(x, &rows32);
    let mut node_of_row = vec![NO_NODE; x.nrows()];
    let mut total = NodeStats::default();
    for &r in rows {
        node_of_row[r] = 0;
        total.add(grad[r], hess[r]);
    }
    find_splits(&index, &node_of_row, &[total], grad, hess, params)
        .pop()
        .flatten()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn params(lambda: f64, gamma: f64) -> GbdtParams {
        GbdtParams {
            lambda,
            gamma,
            min_child_weight: 0.0,
            ..GbdtParams::default()
        }
    }

    #[test]
    fn two_cluster_split_gain() {
        let x = array![[0.0], [0.0], [1.0], [1.0]];
        let y = [1.0, 1.0, 10.0, 10.0];
        let g: Vec<f64> = y.iter().map(|v| 5.5 - v).collect();
        let h = vec![1.0; 4];
        let s = best_split(x.view(), &[0, 1, 2, 3], &g, &h, &params(0.0, 0.0)).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 0.5);
        assert_eq!(s.gain, 40.5);

        assert!(best_split(x.view(), &[0, 1, 2, 3], &g, &h, &params(0.0, 41.0)).is_none());
    }

    #[test]
    fn constant_feature_has_no_split() {
        let x = array![[3.0], [3.0], [3.0]];
        let g = [1.0, -2.0, 1.0];
        let h = [1.0; 3];
        assert!(best_split(x.view(), &[0, 1, 2], &g, &h, &params(0.0, 0.0)).is_none());
    }

    #[test]
    fn min_child_weight_blocks_small_children() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let g = [-9.0, 1.0, 1.0, 1.0];
        let h = [1.0; 4];
        let mut p = params(0.0, 0.0);
        p.min_child_weight = 2.0;
        let s = best_split(x.view(), &[0, 1, 2, 3], &g, &h, &p).unwrap();
        assert_eq!(s.threshold, 1.5);
    }

    #[test]
    fn ties_prefer_lower_feature() {
        let x = array![[0.0, 0.0], [1.0, 1.0]];
        let g = [1.0, -1.0];
        let h = [1.0; 2];
        let s = best_split(x.view(), &[0, 1], &g, &h, &params(0.0, 0.0)).unwrap();
        assert_eq!(s.feature, 0);
    }
}
