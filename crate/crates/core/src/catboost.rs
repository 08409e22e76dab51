//! Boosting with native categorical handling.
//!
//! Low-cardinality categoricals are one-hot encoded. The rest are replaced
//! by ordered target statistics: rows are visited in a seeded random
//! permutation and each row sees only the targets of rows visited before
//! it, smoothed toward the training mean:
//!
//! ```text
//! ts(row) = (sum of earlier same-category targets + a * p) / (earlier count + a)
//! ```
//!
//! Inference uses the statistics of the full training set. The resulting
//! all-numeric matrix is fed to the shared boosting engine.

use std::collections::{BTreeMap, HashMap};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::DataTable;
use crate::error::{Error, Result};
use crate::gbdt::{fit_gbdt, EarlyStopping, GbdtModel, GbdtParams};
use crate::preprocess::{EncodedTable, Encoding, Preprocessor, MISSING_CATEGORY, OTHER_TOKEN};
use crate::task::{Predictions, Targets};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CatBoostStyleParams {
    pub gbdt: GbdtParams,
    /// Features with at most this many categories are one-hot encoded.
    pub max_onehot: usize,
    /// Prior weight `a` of the target statistic.
    pub smoothing: f64,
    pub seed: u64,
}

impl Default for CatBoostStyleParams {
    /// 10000 iterations, learning rate 0.01, depth 4, one-hot up to 255
    /// categories, early stopping on.
    fn default() -> Self {
        CatBoostStyleParams {
            gbdt: GbdtParams {
                max_depth: 4,
                learning_rate: 0.01,
                n_trees: 10_000,
                min_child_weight: 1.0,
                lambda: 1.0,
                gamma: 0.0,
                early_stopping: EarlyStopping::Patience(50),
            },
            max_onehot: 255,
            smoothing: 1.0,
            seed: 0,
        }
    }
}

impl CatBoostStyleParams {
    pub fn validate(&self) -> Result<()> {
        self.gbdt.validate()?;
        if self.max_onehot < 1 || !self.smoothing.is_finite() || self.smoothing <= 0.0 {
            return Err(Error::Config(format!(
                "invalid categorical boosting parameters: max_onehot {}, smoothing {}",
                self.max_onehot, self.smoothing
            )));
        }
        Ok(())
    }
}

/// Ordered target statistic of every row.
///
/// `permutation[i]` is the row visited at step `i`. The value written for a
/// row depends only on rows visited before it.
pub fn ordered_target_encode<S: AsRef<str>>(
    categories: &[S],
    targets: &[f64],
    permutation: &[usize],
    prior: f64,
    smoothing: f64,
) -> Vec<f64> {
    debug_assert_eq!(categories.len(), targets.len());
    debug_assert_eq!(categories.len(), permutation.len());
    let mut running: HashMap<&str, (f64, f64)> = HashMap::new();
    let mut encoded = vec![0.0; categories.len()];
    for &row in permutation {
        let entry = running.entry(categories[row].as_ref()).or_insert((0.0, 0.0));
        encoded[row] = (entry.0 + smoothing * prior) / (entry.1 + smoothing);
        entry.0 += targets[row];
        entry.1 += 1.0;
    }
    encoded
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub sum: f64,
    pub count: f64,
}

/// Full-training statistics used at inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderedTsState {
    pub prior: f64,
    pub smoothing: f64,
    pub stats: BTreeMap<String, CategoryStats>,
}

impl OrderedTsState {
    pub fn fit<S: AsRef<str>>(categories: &[S], targets: &[f64], prior: f64, smoothing: f64) -> Self {
        let mut stats: BTreeMap<String, CategoryStats> = BTreeMap::new();
        for (c, t) in categories.iter().zip(targets) {
            let s = stats
                .entry(c.as_ref().to_string())
                .or_insert(CategoryStats { sum: 0.0, count: 0.0 });
            s.sum += t;
            s.count += 1.0;
        }
        OrderedTsState {
            prior,
            smoothing,
            stats,
        }
    }

    /// `(sum_c + a * p) / (count_c + a)`; unseen tokens give `p`.
    pub fn encode_for_inference(&self, category: &str) -> f64 {
        match self.stats.get(category) {
            Some(s) => (s.sum + self.smoothing * self.prior) / (s.count + self.smoothing),
            None => self.prior,
        }
    }
}

/// Which quantity a statistic column averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TsComponent {
    Target,
    /// Indicator of one class.
    Class(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsColumn {
    pub component: TsComponent,
    pub state: OrderedTsState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "snake_case")]
pub enum CategoricalBlock {
    OneHot { feature: String, layout: Vec<String> },
    OrderedTs { feature: String, columns: Vec<TsColumn> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalEncoding {
    pub permutation_seed: u64,
    pub max_onehot: usize,
    pub blocks: Vec<CategoricalBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatBoostStyleModel {
    pub column_names: Vec<String>,
    pub categorical_encoding: CategoricalEncoding,
    pub gbdt: GbdtModel,
}

/// Categories counted for the one-hot decision: the kept tokens of the
/// layout, without the `other`/`missing` buckets.
fn category_count(layout: &[String]) -> usize {
    layout
        .iter()
        .filter(|t| t.as_str() != OTHER_TOKEN && t.as_str() != MISSING_CATEGORY)
        .count()
}

fn components(y: &Targets) -> Vec<(TsComponent, Vec<f64>)> {
    match y {
        Targets::Continuous(t) => vec![(TsComponent::Target, t.clone())],
        Targets::Classes { labels, n_classes } => {
            let classes: Vec<usize> = if *n_classes == 2 {
                vec![1]
            } else {
                (0..*n_classes).collect()
            };
            classes
                .into_iter()
                .map(|k| {
                    let ind = labels.iter().map(|&l| if l == k { 1.0 } else { 0.0 }).collect();
                    (TsComponent::Class(k), ind)
                })
                .collect()
        }
    }
}

fn onehot_into(out: &mut Vec<f64>, layout_len: usize, index: usize) {
    let start = out.len();
    out.resize(start + layout_len, 0.0);
    out[start + index] = 1.0;
}

impl CatBoostStyleModel {
    /// All-numeric matrix for inference rows.
    pub fn encode(&self, enc: &EncodedTable) -> Result<Array2<f64>> {
        let blocks = &self.categorical_encoding.blocks;
        if enc.categorical.len() != blocks.len() {
            return Err(Error::Predict(format!(
                "expected {} categorical features, got {}",
                blocks.len(),
                enc.categorical.len()
            )));
        }
        let width = self.column_names.len();
        let mut data = Vec::with_capacity(enc.n_rows() * width);
        for r in 0..enc.n_rows() {
            data.extend(enc.numeric.row(r).iter());
            for (block, cat) in blocks.iter().zip(&enc.categorical) {
                match block {
                    CategoricalBlock::OneHot { layout, .. } => onehot_into(&mut data, layout.len(), cat.indices[r]),
                    CategoricalBlock::OrderedTs { columns, .. } => {
                        for c in columns {
                            data.push(c.state.encode_for_inference(&cat.tokens[r]));
                        }
                    }
                }
            }
        }
        Array2::from_shape_vec((enc.n_rows(), width), data)
            .map_err(|e| Error::Predict(format!("encoded width mismatch: {e}")))
    }

    pub fn predict(&self, prep: &Preprocessor, table: &DataTable) -> Result<Predictions> {
        let enc = prep.transform(table, Encoding::Passthrough)?;
        self.gbdt.predict(self.encode(&enc)?.view())
    }
}

/// Fits the categorical-boosting member for one target.
pub fn fit_catboost_style(
    train: &DataTable,
    val: Option<&DataTable>,
    prep: &Preprocessor,
    target: &str,
    params: &CatBoostStyleParams,
) -> Result<CatBoostStyleModel> {
    params.validate()?;
    let enc = prep.transform(train, Encoding::Passthrough)?;
    let y = Targets::from_table(train, target)?;
    if enc.n_rows() == 0 {
        return Err(Error::Fit("empty training set".into()));
    }

    let mut permutation: Vec<usize> = (0..enc.n_rows()).collect();
    permutation.shuffle(&mut ChaCha8Rng::seed_from_u64(params.seed));
    let comps = components(&y);

    let mut column_names = enc.column_names.clone();
    let mut blocks = Vec::new();
    // Per categorical feature, the training-time columns (row-major blocks
    // are assembled below).
    let mut train_columns: Vec<Vec<Vec<f64>>> = Vec::new();
    for cat in &enc.categorical {
        if category_count(&cat.layout) <= params.max_onehot {
            column_names.extend(cat.layout.iter().map(|t| format!("{}={}", cat.name, t)));
            blocks.push(CategoricalBlock::OneHot {
                feature: cat.name.clone(),
                layout: cat.layout.clone(),
            });
            train_columns.push(Vec::new());
        } else {
            let mut columns = Vec::new();
            let mut values = Vec::new();
            for (component, t) in &comps {
                let prior = t.iter().sum::<f64>() / t.len() as f64;
                values.push(ordered_target_encode(
                    &cat.tokens,
                    t,
                    &permutation,
                    prior,
                    params.smoothing,
                ));
                columns.push(TsColumn {
                    component: *component,
                    state: OrderedTsState::fit(&cat.tokens, t, prior, params.smoothing),
                });
                column_names.push(match component {
                    TsComponent::Target => format!("{}:ts", cat.name),
                    TsComponent::Class(k) => format!("{}:ts[{k}]", cat.name),
                });
            }
            blocks.push(CategoricalBlock::OrderedTs {
                feature: cat.name.clone(),
                columns,
            });
            train_columns.push(values);
        }
    }

    let width = column_names.len();
    let mut data = Vec::with_capacity(enc.n_rows() * width);
    for r in 0..enc.n_rows() {
        data.extend(enc.numeric.row(r).iter());
        for ((block, cat), ts) in blocks.iter().zip(&enc.categorical).zip(&train_columns) {
            match block {
                CategoricalBlock::OneHot { layout, .. } => onehot_into(&mut data, layout.len(), cat.indices[r]),
                CategoricalBlock::OrderedTs { .. } => data.extend(ts.iter().map(|col| col[r])),
            }
        }
    }
    let x = Array2::from_shape_vec((enc.n_rows(), width), data)
        .map_err(|e| Error::Fit(format!("encoded width mismatch: {e}")))?;

    let mut model = CatBoostStyleModel {
        column_names,
        categorical_encoding: CategoricalEncoding {
            permutation_seed: params.seed,
            max_onehot: params.max_onehot,
            blocks,
        },
        gbdt: GbdtModel {
            task: y.task(),
            n_features: width,
            base_score: vec![],
            learning_rate: params.gbdt.learning_rate,
            trees: vec![],
            best_iteration: None,
        },
    };

    let val_data = match val {
        Some(v) => {
            let venc = prep.transform(v, Encoding::Passthrough)?;
            Some((model.encode(&venc)?, Targets::from_table(v, target)?))
        }
        None => None,
    };
    model.gbdt = fit_gbdt(
        x.view(),
        &y,
        val_data.as_ref().map(|(vx, vy)| (vx.view(), vy)),
        &params.gbdt,
    )?;
    Ok(model)
}
