//! Target and prediction carriers shared by every model family.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{DataTable, TargetSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification { n_classes: usize },
}

impl Task {
    pub fn n_outputs(self) -> usize {
        match self {
            Task::Regression => 1,
            Task::Classification { n_classes } => n_classes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Continuous(Vec<f64>),
    Classes { labels: Vec<usize>, n_classes: usize },
}

impl Targets {
    pub fn from_table(table: &DataTable, target: &str) -> Result<Targets> {
        let (_, spec) = table.schema().target(target)?;
        match spec {
            TargetSpec::Continuous { .. } => Ok(Targets::Continuous(table.continuous_target(target)?)),
            TargetSpec::Categorical { classes } => Ok(Targets::Classes {
                labels: table.class_target(target)?,
                n_classes: classes.len(),
            }),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Targets::Continuous(v) => v.len(),
            Targets::Classes { labels, .. } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> Task {
        match self {
            Targets::Continuous(_) => Task::Regression,
            Targets::Classes { n_classes, .. } => Task::Classification { n_classes: *n_classes },
        }
    }

    pub fn continuous(&self) -> Option<&[f64]> {
        match self {
            Targets::Continuous(v) => Some(v),
            Targets::Classes { .. } => None,
        }
    }

    pub fn labels(&self) -> Option<&[usize]> {
        match self {
            Targets::Classes { labels, .. } => Some(labels),
            Targets::Continuous(_) => None,
        }
    }

    pub fn select(&self, indices: &[usize]) -> Targets {
        match self {
            Targets::Continuous(v) => Targets::Continuous(indices.iter().map(|&i| v[i]).collect()),
            Targets::Classes { labels, n_classes } => Targets::Classes {
                labels: indices.iter().map(|&i| labels[i]).collect(),
                n_classes: *n_classes,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predictions {
    Continuous(Vec<f64>),
    Classes {
        labels: Vec<usize>,
        /// `rows x classes`, rows sum to one.
        probabilities: Array2<f64>,
    },
}

impl Predictions {
    pub fn len(&self) -> usize {
        match self {
            Predictions::Continuous(v) => v.len(),
            Predictions::Classes { labels, .. } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn continuous(&self) -> Result<&[f64]> {
        match self {
            Predictions::Continuous(v) => Ok(v),
            Predictions::Classes { .. } => Err(Error::Predict("expected continuous predictions".into())),
        }
    }

    pub fn labels(&self) -> Result<&[usize]> {
        match self {
            Predictions::Classes { labels, .. } => Ok(labels),
            Predictions::Continuous(_) => Err(Error::Predict("expected class predictions".into())),
        }
    }

    pub fn from_probabilities(probabilities: Array2<f64>) -> Predictions {
        let labels = probabilities
            .rows()
            .into_iter()
            .map(|row| argmax(row.iter().copied()))
            .collect();
        Predictions::Classes { labels, probabilities }
    }
}

/// First index of the maximum.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Numerically stable softmax of one row, in place.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Mean negative log-likelihood of the true labels.
pub fn cross_entropy(probabilities: &Array2<f64>, labels: &[usize]) -> f64 {
    let n = labels.len().max(1) as f64;
    labels
        .iter()
        .enumerate()
        .map(|(i, &y)| -probabilities[[i, y]].max(1e-15).ln())
        .sum::<f64>()
        / n
}
