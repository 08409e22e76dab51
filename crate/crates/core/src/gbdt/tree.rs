use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use super::split::{find_splits, ColumnIndex, NodeStats, NO_NODE};
use super::GbdtParams;

/// Tree node. Rows with `value < threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        weight: f64,
    },
}

/// Regression tree stored as a flat node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(weight: f64) -> Tree {
        Tree {
            nodes: vec![Node::Leaf { weight }],
        }
    }

    pub fn predict_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { weight } => return *weight,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] < *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

fn leaf_weight(stats: NodeStats, lambda: f64) -> f64 {
    let denom = stats.hess + lambda;
    if denom > 0.0 {
        -stats.grad / denom
    } else {
        0.0
    }
}

/// Grows one tree level by level. Returns the tree and, for each training
/// row, the weight of the leaf it landed in.
pub(crate) fn grow_tree(index: &ColumnIndex, grad: &[f64], hess: &[f64], params: &GbdtParams) -> (Tree, Vec<f64>) {
    let n_rows = grad.len();
    let mut nodes = vec![Node::Leaf { weight: 0.0 }];
    // Row -> position in `frontier`, or NO_NODE once the row sits in a leaf.
    let mut node_of_row = vec![0u32; n_rows];
    let mut root = NodeStats::default();
    for r in 0..n_rows {
        root.grad += grad[r];
        root.hess += hess[r];
    }
    let mut frontier: Vec<(usize, NodeStats)> = vec![(0, root)];
    let mut row_leaf = vec![0.0; n_rows];

    for _depth in 0..params.max_depth {
        if frontier.is_empty() {
            break;
        }
        let totals: Vec<NodeStats> = frontier.iter().map(|(_, s)| *s).collect();
        let splits = find_splits(index, &node_of_row, &totals, grad, hess, params);

        let mut next: Vec<(usize, NodeStats)> = Vec::new();
        // frontier position -> Some((left slot, right slot)) in `next`
        let mut children: Vec<Option<(u32, u32)>> = Vec::with_capacity(frontier.len());
        for ((node_id, stats), split) in frontier.iter().zip(&splits) {
            match split {
                Some(s) => {
                    let left_id = nodes.len();
                    nodes.push(Node::Leaf { weight: 0.0 });
                    nodes.push(Node::Leaf { weight: 0.0 });
                    nodes[*node_id] = Node::Split {
                        feature: s.feature,
                        threshold: s.threshold,
                        left: left_id as u32,
                        right: left_id as u32 + 1,
                    };
                    let slot = next.len() as u32;
                    next.push((left_id, NodeStats::default()));
                    next.push((left_id + 1, NodeStats::default()));
                    children.push(Some((slot, slot + 1)));
                }
                None => {
                    nodes[*node_id] = Node::Leaf {
                        weight: leaf_weight(*stats, params.lambda),
                    };
                    children.push(None);
                }
            }
        }

        for r in 0..n_rows {
            let pos = node_of_row[r];
            if pos == NO_NODE {
                continue;
            }
            let pos = pos as usize;
            match (children[pos], splits[pos]) {
                (Some((l, rr)), Some(s)) => {
                    let slot = if index.columns[s.feature][r] < s.threshold {
                        l
                    } else {
                        rr
                    };
                    node_of_row[r] = slot;
                    let st = &mut next[slot as usize].1;
                    st.grad += grad[r];
                    st.hess += hess[r];
                }
                _ => {
                    if let Node::Leaf { weight } = nodes[frontier[pos].0] {
                        row_leaf[r] = weight;
                    }
                    node_of_row[r] = NO_NODE;
                }
            }
        }
        frontier = next;
    }

    let weights: Vec<f64> = frontier
        .iter()
        .map(|(node_id, stats)| {
            let weight = leaf_weight(*stats, params.lambda);
            nodes[*node_id] = Node::Leaf { weight };
            weight
        })
        .collect();
    for (r, &pos) in node_of_row.iter().enumerate() {
        if pos != NO_NODE {
            row_leaf[r] = weights[pos as usize];
        }
    }
    (Tree { nodes }, row_leaf)
}
