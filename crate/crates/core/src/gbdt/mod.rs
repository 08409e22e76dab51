//! Second-order gradient-boosted regression trees.
//!
//! Each round fits one tree per output to the gradient/hessian of the loss
//! at the current predictions; leaves carry `-G / (H + lambda)` and splits
//! maximize the regularized gain in [`split_gain`]. Squared loss drives
//! regression, softmax cross-entropy drives classification (one tree per
//! class per round).

mod split;
mod tree;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::task::{cross_entropy, softmax_in_place, Predictions, Targets, Task};

pub use split::{best_split, split_gain, NodeStats, SplitDecision};
pub use tree::{Node, Tree};

use split::ColumnIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EarlyStopping {
    Off,
    Patience(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtParams {
    pub max_depth: usize,
    pub learning_rate: f64,
    pub n_trees: usize,
    pub min_child_weight: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub early_stopping: EarlyStopping,
}

impl Default for GbdtParams {
    /// The tuned gradient-boosting configuration: 200 trees, learning
    /// rate 0.1, depth 10, min child weight 1, early stopping on.
    fn default() -> Self {
        GbdtParams {
            max_depth: 10,
            learning_rate: 0.1,
            n_trees: 200,
            min_child_weight: 1.0,
            lambda: 1.0,
            gamma: 0.0,
            early_stopping: EarlyStopping::Patience(50),
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_depth >= 1
            && self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.n_trees >= 1
            && self.min_child_weight >= 0.0
            && self.lambda >= 0.0
            && self.gamma >= 0.0
            && !matches!(self.early_stopping, EarlyStopping::Patience(0));
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid boosting parameters {self:?}")))
        }
    }
}

/// `(g, h)` of `0.5 * (pred - y)^2`.
pub fn grad_hess_squared(y: &[f64], pred: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let g = pred.iter().zip(y).map(|(p, t)| p - t).collect();
    (g, vec![1.0; y.len()])
}

const MIN_HESSIAN: f64 = 1e-16;

/// `(g, h)` of softmax cross-entropy for class `k`, given row probabilities.
pub fn grad_hess_softmax(probabilities: &Array2<f64>, labels: &[usize], k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut g = Vec::with_capacity(labels.len());
    let mut h = Vec::with_capacity(labels.len());
    for (i, &y) in labels.iter().enumerate() {
        let p = probabilities[[i, k]];
        g.push(p - if y == k { 1.0 } else { 0.0 });
        h.push((p * (1.0 - p)).max(MIN_HESSIAN));
    }
    (g, h)
}

/// Fitted additive tree ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub task: Task,
    pub n_features: usize,
    /// Per output: training-target mean (regression) or log class prior.
    pub base_score: Vec<f64>,
    pub learning_rate: f64,
    /// `trees[round][output]`.
    pub trees: Vec<Vec<Tree>>,
    /// Number of leading rounds used at prediction time, when early-stopped.
    pub best_iteration: Option<usize>,
}

impl GbdtModel {
    pub fn n_rounds_used(&self) -> usize {
        self.best_iteration.unwrap_or(self.trees.len()).min(self.trees.len())
    }

    /// Raw additive scores `base + lr * sum(leaves)` per output.
    pub fn raw_scores(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::Predict(format!(
                "expected {} feature columns, got {}",
                self.n_features,
                x.ncols()
            )));
        }
        let k = self.base_score.len();
        let mut out = Array2::<f64>::zeros((x.nrows(), k));
        for (r, row) in x.rows().into_iter().enumerate() {
            for o in 0..k {
                let sum: f64 = self.trees[..self.n_rounds_used()]
                    .iter()
                    .map(|round| round[o].predict_row(row))
                    .sum();
                out[[r, o]] = self.base_score[o] + self.learning_rate * sum;
            }
        }
        Ok(out)
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Predictions> {
        let mut raw = self.raw_scores(x)?;
        match self.task {
            Task::Regression => Ok(Predictions::Continuous(raw.column(0).to_vec())),
            Task::Classification { .. } => {
                for mut row in raw.rows_mut() {
                    softmax_in_place(row.as_slice_mut().expect("row-major"));
                }
                Ok(Predictions::from_probabilities(raw))
            }
        }
    }
}

struct Validation<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a Targets,
    raw: Array2<f64>,
}

fn metric(task: Task, raw: &Array2<f64>, y: &Targets) -> f64 {
    match (task, y) {
        (Task::Regression, Targets::Continuous(t)) => {
            raw.column(0).iter().zip(t).map(|(p, v)| (p - v) * (p - v)).sum::<f64>() / t.len().max(1) as f64
        }
        (_, Targets::Classes { labels, .. }) => {
            let mut probs = raw.clone();
            for mut row in probs.rows_mut() {
                softmax_in_place(row.as_slice_mut().expect("row-major"));
            }
            cross_entropy(&probs, labels)
        }
        _ => f64::NAN,
    }
}

/// Fits a boosted ensemble on `x`/`y`, optionally early-stopping on the
/// validation loss (MSE or cross-entropy).
pub fn fit_gbdt(
    x: ArrayView2<'_, f64>,
    y: &Targets,
    val: Option<(ArrayView2<'_, f64>, &Targets)>,
    params: &GbdtParams,
) -> Result<GbdtModel> {
    params.validate()?;
    if x.nrows() == 0 {
        return Err(Error::Fit("empty training set".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::Fit(format!("{} rows but {} targets", x.nrows(), y.len())));
    }
    if let EarlyStopping::Patience(_) = params.early_stopping {
        if val.is_none() {
            return Err(Error::Config("early stopping requires a validation set".into()));
        }
    }
    if let Some((vx, vy)) = val {
        if vx.ncols() != x.ncols() || vx.nrows() != vy.len() {
            return Err(Error::Fit("validation set shape mismatch".into()));
        }
    }

    let task = y.task();
    let n = x.nrows();
    let base_score: Vec<f64> = match y {
        Targets::Continuous(t) => vec![t.iter().sum::<f64>() / n as f64],
        Targets::Classes { labels, n_classes } => {
            let mut counts = vec![0.0; *n_classes];
            for &l in labels {
                counts[l] += 1.0;
            }
            counts.iter().map(|c| (c / n as f64).max(1e-12).ln()).collect()
        }
    };
    let k = base_score.len();

    let index = ColumnIndex::new(x);
    let mut raw = Array2::<f64>::zeros((n, k));
    for mut row in raw.rows_mut() {
        row.assign(&ndarray::ArrayView1::from(&base_score));
    }
    let mut validation = val.map(|(vx, vy)| {
        let mut vraw = Array2::<f64>::zeros((vx.nrows(), k));
        for mut row in vraw.rows_mut() {
            row.assign(&ndarray::ArrayView1::from(&base_score));
        }
        Validation {
            x: vx,
            y: vy,
            raw: vraw,
        }
    });

    let mut trees: Vec<Vec<Tree>> = Vec::with_capacity(params.n_trees);
    let mut best: Option<(f64, usize)> = None;
    for round in 0..params.n_trees {
        let gh: Vec<(Vec<f64>, Vec<f64>)> = match y {
            Targets::Continuous(t) => vec![grad_hess_squared(t, &raw.column(0).to_vec())],
            Targets::Classes { labels, .. } => {
                let mut probs = raw.clone();
                for mut row in probs.rows_mut() {
                    softmax_in_place(row.as_slice_mut().expect("row-major"));
                }
                (0..k).map(|c| grad_hess_softmax(&probs, labels, c)).collect()
            }
        };
        let mut round_trees = Vec::with_capacity(k);
        for (o, (g, h)) in gh.iter().enumerate() {
            let (tree, row_leaf) = tree::grow_tree(&index, g, h, params);
            for (r, w) in row_leaf.iter().enumerate() {
                raw[[r, o]] += params.learning_rate * w;
            }
            if let Some(v) = validation.as_mut() {
                for (r, row) in v.x.rows().into_iter().enumerate() {
                    v.raw[[r, o]] += params.learning_rate * tree.predict_row(row);
                }
            }
            round_trees.push(tree);
        }
        trees.push(round_trees);

        if let (EarlyStopping::Patience(patience), Some(v)) = (params.early_stopping, validation.as_ref()) {
            let loss = metric(task, &v.raw, v.y);
            if !loss.is_finite() {
                return Err(Error::Fit(format!("non-finite validation loss at round {}", round + 1)));
            }
            match best {
                Some((b, _)) if loss >= b => {}
                _ => best = Some((loss, round + 1)),
            }
            if let Some((_, at)) = best {
                if round + 1 - at >= patience {
                    break;
                }
            }
        }
    }

    Ok(GbdtModel {
        task,
        n_features: x.ncols(),
        base_score,
        learning_rate: params.learning_rate,
        trees,
        best_iteration: best.map(|(_, at)| at),
    })
}
