//! Validation-driven grid search over the three tuned model families.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::catboost::{fit_catboost_style, CatBoostStyleParams};
use crate::data::DataTable;
use crate::error::{Error, Result};
use crate::gbdt::{EarlyStopping, GbdtParams};
use crate::models::{fit_nn, fit_xgboost_style, validation_loss, MemberModel};
use crate::nn::{ladder_widths, Activation, EmbeddingChoice, EmbeddingSize, NnConfig};
use crate::preprocess::Preprocessor;
use crate::task::Targets;
use crate::workers::WorkerPool;

/// Patience used whenever an arm turns early stopping on.
pub const GRID_PATIENCE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Nn,
    CatboostStyle,
    XgboostStyle,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Nn => "nn",
            Family::CatboostStyle => "catboost_style",
            Family::XgboostStyle => "xgboost_style",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nn" => Ok(Family::Nn),
            "catboost" | "catboost_style" | "catboost-style" => Ok(Family::CatboostStyle),
            "xgboost" | "xgboost_style" | "xgboost-style" => Ok(Family::XgboostStyle),
            _ => Err(Error::Config(format!("unknown model family {s:?}"))),
        }
    }
}

fn early(on: bool) -> EarlyStopping {
    if on {
        EarlyStopping::Patience(GRID_PATIENCE)
    } else {
        EarlyStopping::Off
    }
}

/// Embedding size in a grid file: an integer or `"10%"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SizeValue {
    Fixed(usize),
    Named(String),
}

impl SizeValue {
    fn resolve(&self) -> Result<EmbeddingSize> {
        match self {
            SizeValue::Fixed(d) => Ok(EmbeddingSize::Fixed(*d)),
            SizeValue::Named(s) if s == "10%" => Ok(EmbeddingSize::TenPercent),
            SizeValue::Named(s) => Err(Error::Config(format!(
                "embedding size {s:?} is neither an integer nor \"10%\""
            ))),
        }
    }

    fn render(&self) -> String {
        match self {
            SizeValue::Fixed(d) => d.to_string(),
            SizeValue::Named(s) => s.clone(),
        }
    }
}

/// Network grid; fields follow the network table's order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NnGrid {
    pub depth: Vec<usize>,
    pub width: Vec<usize>,
    pub activation: Vec<Activation>,
    pub dropout: Vec<f64>,
    pub learning_rate: Vec<f64>,
    pub weight_decay: Vec<f64>,
    pub l1_rate: Vec<f64>,
    pub batch_norm: Vec<bool>,
    /// `"none"`, `"all"`, or one categorical feature name.
    pub embeddings: Vec<String>,
    pub embedding_size: Vec<SizeValue>,
    pub epochs: Vec<usize>,
    pub early_stopping: Vec<bool>,
    pub batch_size: usize,
}

impl Default for NnGrid {
    fn default() -> Self {
        NnGrid {
            depth: vec![6],
            width: vec![2000],
            activation: vec![Activation::LeakyRelu],
            dropout: vec![0.3],
            learning_rate: vec![1e-3],
            weight_decay: vec![0.01],
            l1_rate: vec![0.0],
            batch_norm: vec![true],
            embeddings: vec!["all".into()],
            embedding_size: vec![SizeValue::Named("10%".into())],
            epochs: vec![1000],
            early_stopping: vec![true],
            batch_size: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatBoostGrid {
    pub depth: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub max_onehot: Vec<usize>,
    pub iterations: Vec<usize>,
    pub early_stopping: Vec<bool>,
}

impl Default for CatBoostGrid {
    fn default() -> Self {
        CatBoostGrid {
            depth: vec![4],
            learning_rate: vec![0.01],
            max_onehot: vec![255],
            iterations: vec![10000],
            early_stopping: vec![true],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XgBoostGrid {
    pub max_depth: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub min_child_weight: Vec<f64>,
    pub n_trees: Vec<usize>,
    pub early_stopping: Vec<bool>,
}

impl Default for XgBoostGrid {
    fn default() -> Self {
        XgBoostGrid {
            max_depth: vec![10],
            learning_rate: vec![0.1],
            min_child_weight: vec![1.0],
            n_trees: vec![200],
            early_stopping: vec![true],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Nn(NnGrid),
    CatboostStyle(CatBoostGrid),
    XgboostStyle(XgBoostGrid),
}

/// Hyperparameters of one arm, ready to fit.
#[derive(Debug, Clone, PartialEq)]
pub enum ArmConfig {
    Nn(NnConfig),
    CatboostStyle(CatBoostStyleParams),
    XgboostStyle(GbdtParams),
}

pub type Assignment = Vec<(String, String)>;

fn pick<T>(axis: &[T], i: usize) -> &T {
    &axis[i]
}

impl Grid {
    /// Parses a grid file body for `family`. Omitted fields keep the tuned
    /// configuration's single value.
    pub fn from_json(family: Family, text: &str) -> Result<Grid> {
        let parse_err = |e: serde_json::Error| Error::Config(format!("invalid {family} grid: {e}"));
        Ok(match family {
            Family::Nn => Grid::Nn(serde_json::from_str(text).map_err(parse_err)?),
            Family::CatboostStyle => Grid::CatboostStyle(serde_json::from_str(text).map_err(parse_err)?),
            Family::XgboostStyle => Grid::XgboostStyle(serde_json::from_str(text).map_err(parse_err)?),
        })
    }

    pub fn family(&self) -> Family {
        match self {
            Grid::Nn(_) => Family::Nn,
            Grid::CatboostStyle(_) => Family::CatboostStyle,
            Grid::XgboostStyle(_) => Family::XgboostStyle,
        }
    }

    /// Axis names and lengths in table order.
    pub fn axes(&self) -> Vec<(&'static str, usize)> {
        match self {
            Grid::Nn(g) => vec![
                ("depth", g.depth.len()),
                ("width", g.width.len()),
                ("activation", g.activation.len()),
                ("dropout", g.dropout.len()),
                ("learning_rate", g.learning_rate.len()),
                ("weight_decay", g.weight_decay.len()),
                ("l1_rate", g.l1_rate.len()),
                ("batch_norm", g.batch_norm.len()),
                ("embeddings", g.embeddings.len()),
                ("embedding_size", g.embedding_size.len()),
                ("epochs", g.epochs.len()),
                ("early_stopping", g.early_stopping.len()),
            ],
            Grid::CatboostStyle(g) => vec![
                ("depth", g.depth.len()),
                ("learning_rate", g.learning_rate.len()),
                ("max_onehot", g.max_onehot.len()),
                ("iterations", g.iterations.len()),
                ("early_stopping", g.early_stopping.len()),
            ],
            Grid::XgboostStyle(g) => vec![
                ("max_depth", g.max_depth.len()),
                ("learning_rate", g.learning_rate.len()),
                ("min_child_weight", g.min_child_weight.len()),
                ("n_trees", g.n_trees.len()),
                ("early_stopping", g.early_stopping.len()),
            ],
        }
    }

    pub fn n_arms(&self) -> usize {
        self.axes().iter().map(|(_, n)| n).product()
    }

    /// Cartesian product with the first axis varying slowest.
    pub fn enumerate(&self) -> Result<Vec<(Assignment, ArmConfig)>> {
        let axes = self.axes();
        if let Some((name, _)) = axes.iter().find(|(_, n)| *n == 0) {
            return Err(Error::Config(format!("grid axis {name:?} is empty")));
        }
        let mut out = Vec::with_capacity(self.n_arms());
        let mut idx = vec![0usize; axes.len()];
        loop {
            out.push(self.arm(&idx)?);
            let mut k = axes.len();
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < axes[k].1 {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    fn arm(&self, idx: &[usize]) -> Result<(Assignment, ArmConfig)> {
        let names: Vec<&str> = self.axes().iter().map(|(n, _)| *n).collect();
        let mut values: Vec<String> = Vec::new();
        let config = match self {
            Grid::Nn(g) => {
                let depth = *pick(&g.depth, idx[0]);
                let width = *pick(&g.width, idx[1]);
                let activation = *pick(&g.activation, idx[2]);
                let dropout = *pick(&g.dropout, idx[3]);
                let lr = *pick(&g.learning_rate, idx[4]);
                let l2 = *pick(&g.weight_decay, idx[5]);
                let l1 = *pick(&g.l1_rate, idx[6]);
                let bn = *pick(&g.batch_norm, idx[7]);
                let emb = pick(&g.embeddings, idx[8]);
                let size = pick(&g.embedding_size, idx[9]);
                let epochs = *pick(&g.epochs, idx[10]);
                let es = *pick(&g.early_stopping, idx[11]);
                values.extend([
                    depth.to_string(),
                    width.to_string(),
                    serde_json::to_value(activation)?
                        .as_str()
                        .unwrap_or_default()
                        .to_string(),
                    dropout.to_string(),
                    lr.to_string(),
                    l2.to_string(),
                    l1.to_string(),
                    bn.to_string(),
                    emb.clone(),
                    size.render(),
                    epochs.to_string(),
                    es.to_string(),
                ]);
                ArmConfig::Nn(NnConfig {
                    hidden_widths: ladder_widths(depth, width)?,
                    activation,
                    dropout,
                    batch_norm: bn,
                    l2_rate: l2,
                    l1_rate: l1,
                    learning_rate: lr,
                    max_epochs: epochs,
                    batch_size: g.batch_size,
                    early_stopping: early(es),
                    embeddings: match emb.as_str() {
                        "none" => EmbeddingChoice::None,
                        "all" => EmbeddingChoice::All,
                        name => EmbeddingChoice::Only(vec![name.to_string()]),
                    },
                    embedding_size: size.resolve()?,
                })
            }
            Grid::CatboostStyle(g) => {
                let depth = *pick(&g.depth, idx[0]);
                let lr = *pick(&g.learning_rate, idx[1]);
                let max_onehot = *pick(&g.max_onehot, idx[2]);
                let iterations = *pick(&g.iterations, idx[3]);
                let es = *pick(&g.early_stopping, idx[4]);
                values.extend([
                    depth.to_string(),
                    lr.to_string(),
                    max_onehot.to_string(),
                    iterations.to_string(),
                    es.to_string(),
                ]);
                let base = CatBoostStyleParams::default();
                ArmConfig::CatboostStyle(CatBoostStyleParams {
                    gbdt: GbdtParams {
                        max_depth: depth,
                        learning_rate: lr,
                        n_trees: iterations,
                        early_stopping: early(es),
                        ..base.gbdt
                    },
                    max_onehot,
                    ..base
                })
            }
            Grid::XgboostStyle(g) => {
                let depth = *pick(&g.max_depth, idx[0]);
                let lr = *pick(&g.learning_rate, idx[1]);
                let mcw = *pick(&g.min_child_weight, idx[2]);
                let trees = *pick(&g.n_trees, idx[3]);
                let es = *pick(&g.early_stopping, idx[4]);
                values.extend([
                    depth.to_string(),
                    lr.to_string(),
                    mcw.to_string(),
                    trees.to_string(),
                    es.to_string(),
                ]);
                ArmConfig::XgboostStyle(GbdtParams {
                    max_depth: depth,
                    learning_rate: lr,
                    min_child_weight: mcw,
                    n_trees: trees,
                    early_stopping: early(es),
                    ..GbdtParams::default()
                })
            }
        };
        let assignment = names.iter().map(|n| n.to_string()).zip(values).collect();
        Ok((assignment, config))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmRecord {
    pub index: usize,
    pub params: Assignment,
    pub validation_metric: Option<f64>,
    pub error: Option<String>,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchLog {
    pub family: Family,
    pub target: String,
    /// `validation_mse` or `validation_cross_entropy`.
    pub metric: String,
    pub arms: Vec<ArmRecord>,
    pub best_arm: usize,
}

#[derive(Debug, Clone)]
pub struct GridSearchOutcome {
    pub log: GridSearchLog,
    pub best: MemberModel,
}

/// Fits one arm exactly as a direct fit with the same parameters and seed.
pub fn fit_arm(
    config: &ArmConfig,
    train: &DataTable,
    val: &DataTable,
    prep: &Preprocessor,
    target: &str,
    seed: u64,
) -> Result<MemberModel> {
    match config {
        ArmConfig::Nn(c) => fit_nn(train, Some(val), prep, target, c, seed).map(MemberModel::Nn),
        ArmConfig::CatboostStyle(p) => {
            fit_catboost_style(train, Some(val), prep, target, &CatBoostStyleParams { seed, ..*p })
                .map(MemberModel::Catboost)
        }
        ArmConfig::XgboostStyle(p) => fit_xgboost_style(train, Some(val), prep, target, p).map(MemberModel::Xgboost),
    }
}

/// Trains every arm on `train`, scores it on `val` and keeps the best.
/// Failed arms are logged and skipped; ties go to the earliest arm.
pub fn grid_search(
    grid: &Grid,
    train: &DataTable,
    val: &DataTable,
    prep: &Preprocessor,
    target: &str,
    seed: u64,
    pool: &WorkerPool,
) -> Result<GridSearchOutcome> {
    let arms = grid.enumerate()?;
    if val.is_empty() {
        return Err(Error::Search("grid search needs a non-empty validation set".into()));
    }
    let metric = match Targets::from_table(train, target)?.task() {
        crate::task::Task::Regression => "validation_mse",
        crate::task::Task::Classification { .. } => "validation_cross_entropy",
    };
    let results = pool.map(arms.into_iter().enumerate().collect(), |(index, (params, config))| {
        let t0 = Instant::now();
        let fitted = fit_arm(&config, train, val, prep, target, seed).and_then(|m| {
            let loss = validation_loss(&m, prep, Some(val), target)?.expect("validation set present");
            if loss.is_finite() {
                Ok((m, loss))
            } else {
                Err(Error::Fit("validation loss is not finite".into()))
            }
        });
        (index, params, fitted, t0.elapsed().as_secs_f64())
    });
    let mut records = Vec::with_capacity(results.len());
    let mut best: Option<(usize, f64, MemberModel)> = None;
    for (index, params, fitted, secs) in results {
        match fitted {
            Ok((model, loss)) => {
                if best.as_ref().is_none_or(|b| loss < b.1) {
                    best = Some((index, loss, model));
                }
                records.push(ArmRecord {
                    index,
                    params,
                    validation_metric: Some(loss),
                    error: None,
                    wall_time_secs: secs,
                });
            }
            Err(e) => records.push(ArmRecord {
                index,
                params,
                validation_metric: None,
                error: Some(e.to_string()),
                wall_time_secs: secs,
            }),
        }
    }
    let Some((best_arm, _, model)) = best else {
        let first = records.first().and_then(|r| r.error.clone()).unwrap_or_default();
        return Err(Error::Search(format!(
            "all {} arms failed; first error: {first}",
            records.len()
        )));
    };
    Ok(GridSearchOutcome {
        log: GridSearchLog {
            family: grid.family(),
            target: target.to_string(),
            metric: metric.into(),
            arms: records,
            best_arm,
        },
        best: model,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestArmManifest {
    pub family: Family,
    pub target: String,
    pub metric: String,
    pub best_arm: usize,
    pub params: Assignment,
    pub validation_metric: f64,
    pub n_arms: usize,
}

impl GridSearchLog {
    /// One CSV row per arm: hyperparameters, metric, error, wall time.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Artifact(format!("{}: {e}", path.display())))?;
        let mut header = vec!["arm".to_string()];
        if let Some(first) = self.arms.first() {
            header.extend(first.params.iter().map(|(k, _)| k.clone()));
        }
        header.extend([self.metric.clone(), "error".into(), "wall_time_secs".into()]);
        w.write_record(&header)?;
        for arm in &self.arms {
            let mut rec = vec![arm.index.to_string()];
            rec.extend(arm.params.iter().map(|(_, v)| v.clone()));
            rec.push(arm.validation_metric.map_or(String::new(), |m| m.to_string()));
            rec.push(arm.error.clone().unwrap_or_default());
            rec.push(format!("{:.3}", arm.wall_time_secs));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn best_manifest(&self) -> BestArmManifest {
        let arm = &self.arms[self.best_arm];
        BestArmManifest {
            family: self.family,
            target: self.target.clone(),
            metric: self.metric.clone(),
            best_arm: self.best_arm,
            params: arm.params.clone(),
            validation_metric: arm.validation_metric.expect("best arm has a metric"),
            n_arms: self.arms.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_order() {
        let grid = Grid::from_json(Family::XgboostStyle, r#"{"max_depth": [3, 5], "n_trees": [1, 2, 3]}"#).unwrap();
        let arms = grid.enumerate().unwrap();
        assert_eq!(arms.len(), 6);
        let firsts: Vec<(String, String)> = arms.iter().map(|(a, _)| (a[0].1.clone(), a[3].1.clone())).collect();
        assert_eq!(firsts[0], ("3".into(), "1".into()));
        assert_eq!(firsts[1], ("3".into(), "2".into()));
        assert_eq!(firsts[3], ("5".into(), "1".into()));
    }

    #[test]
    fn rejects_unknown_fields_and_empty_axes() {
        assert!(Grid::from_json(Family::CatboostStyle, r#"{"trees": [1]}"#).is_err());
        let g = Grid::from_json(Family::CatboostStyle, r#"{"depth": []}"#).unwrap();
        assert!(g.enumerate().is_err());
    }

    #[test]
    fn nn_defaults_are_the_tuned_network() {
        let g = Grid::from_json(Family::Nn, "{}").unwrap();
        let arms = g.enumerate().unwrap();
        assert_eq!(arms.len(), 1);
        match &arms[0].1 {
            ArmConfig::Nn(c) => assert_eq!(c, &NnConfig::default()),
            _ => panic!(),
        }
        let sized = Grid::from_json(
            Family::Nn,
            r#"{"embedding_size": [2, "10%"], "embeddings": ["country"]}"#,
        )
        .unwrap();
        assert_eq!(sized.n_arms(), 2);
        assert!(Grid::from_json(Family::Nn, r#"{"embedding_size": ["5%"]}"#)
            .unwrap()
            .enumerate()
            .is_err());
    }
}
