//! Regression and classification metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::task::{Predictions, Targets};

fn check_lengths(y: &[f64], pred: &[f64]) -> Result<()> {
    if y.is_empty() || y.len() != pred.len() {
        return Err(Error::Metric(format!(
            "need equal non-zero lengths, got {} targets and {} predictions",
            y.len(),
            pred.len()
        )));
    }
    Ok(())
}

/// Coefficient of determination against the evaluation set's own mean.
pub fn r2(y: &[f64], pred: &[f64]) -> Result<f64> {
    check_lengths(y, pred)?;
    if y.len() < 2 {
        return Err(Error::Metric("r2 needs at least two rows".into()));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Metric("r2 is undefined for a constant target".into()));
    }
    let ss_res: f64 = y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

pub fn mae(y: &[f64], pred: &[f64]) -> Result<f64> {
    check_lengths(y, pred)?;
    Ok(y.iter().zip(pred).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

pub fn mse(y: &[f64], pred: &[f64]) -> Result<f64> {
    check_lengths(y, pred)?;
    Ok(y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

/// Accuracy and F1. Two classes: F1 of class index 1. More: macro F1.
/// A class with a zero precision or recall denominator scores 0.
pub fn classification_metrics(y: &[usize], pred: &[usize], n_classes: usize) -> Result<(f64, f64)> {
    if y.is_empty() || y.len() != pred.len() {
        return Err(Error::Metric(format!(
            "need equal non-zero lengths, got {} labels and {} predictions",
            y.len(),
            pred.len()
        )));
    }
    if let Some(bad) = y.iter().chain(pred).find(|&&l| l >= n_classes) {
        return Err(Error::Metric(format!("label {bad} outside {n_classes} classes")));
    }
    let correct = y.iter().zip(pred).filter(|(a, b)| a == b).count();
    let accuracy = correct as f64 / y.len() as f64;
    let f1_of = |k: usize| {
        let tp = y.iter().zip(pred).filter(|&(&a, &b)| a == k && b == k).count() as f64;
        let predicted = pred.iter().filter(|&&b| b == k).count() as f64;
        let actual = y.iter().filter(|&&a| a == k).count() as f64;
        if predicted == 0.0 || actual == 0.0 || tp == 0.0 {
            return 0.0;
        }
        let precision = tp / predicted;
        let recall = tp / actual;
        2.0 * precision * recall / (precision + recall)
    };
    let f1 = if n_classes == 2 {
        f1_of(1)
    } else {
        (0..n_classes).map(f1_of).sum::<f64>() / n_classes as f64
    };
    Ok((accuracy, f1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum MetricsReport {
    Regression { n_rows: usize, r2: f64, mae: f64, mse: f64 },
    Classification { n_rows: usize, accuracy: f64, f1: f64 },
}

impl MetricsReport {
    pub fn evaluate(y: &Targets, pred: &Predictions) -> Result<MetricsReport> {
        match y {
            Targets::Continuous(t) => {
                let p = pred.continuous()?;
                Ok(MetricsReport::Regression {
                    n_rows: t.len(),
                    r2: r2(t, p)?,
                    mae: mae(t, p)?,
                    mse: mse(t, p)?,
                })
            }
            Targets::Classes { labels, n_classes } => {
                let (accuracy, f1) = classification_metrics(labels, pred.labels()?, *n_classes)?;
                Ok(MetricsReport::Classification {
                    n_rows: labels.len(),
                    accuracy,
                    f1,
                })
            }
        }
    }

    pub fn r2(&self) -> Option<f64> {
        match self {
            MetricsReport::Regression { r2, .. } => Some(*r2),
            MetricsReport::Classification { .. } => None,
        }
    }

    pub fn mae(&self) -> Option<f64> {
        match self {
            MetricsReport::Regression { mae, .. } => Some(*mae),
            MetricsReport::Classification { .. } => None,
        }
    }
}
