//! Cleaning and encoding fitted on the training partition.
//!
//! Fit order: collinear numerics, high-cardinality categoricals, rare
//! category aggregation, then imputation values, scaling statistics and
//! one-hot layouts, all computed on training rows only.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{DataTable, FeatureKind, Value};
use crate::error::{Error, Result};

pub const OTHER_TOKEN: &str = "other";
pub const MISSING_CATEGORY: &str = "missing";
pub const PREPROCESSOR_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub collinear_threshold: f64,
    pub max_cardinality: usize,
    pub min_companies: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            collinear_threshold: 0.95,
            max_cardinality: 100,
            min_companies: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingStats {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputationValue {
    Median(f64),
    Token(String),
}

/// How categorical features leave `transform`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// Expanded to 0/1 columns following the one-hot layout.
    OneHot,
    /// Kept as (rare-mapped) tokens plus their layout index.
    Passthrough,
}

/// Fitted preprocessing state. Serializes to one versioned JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub version: u32,
    pub config: PreprocessConfig,
    pub feature_names: Vec<String>,
    pub feature_kinds: Vec<FeatureKind>,
    /// Surviving features in schema order.
    pub kept_features: Vec<String>,
    /// Per kept categorical feature: raw training token -> kept token or `other`.
    pub rare_category_maps: BTreeMap<String, BTreeMap<String, String>>,
    pub imputation_values: BTreeMap<String, ImputationValue>,
    pub scaling_stats: BTreeMap<String, ScalingStats>,
    /// Per kept categorical feature: output column order.
    pub onehot_layout: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedCategorical {
    pub name: String,
    pub layout: Vec<String>,
    pub tokens: Vec<String>,
    /// Position of each row's token in `layout`.
    pub indices: Vec<usize>,
}

impl EncodedCategorical {
    pub fn cardinality(&self) -> usize {
        self.layout.len()
    }
}

/// Model-ready view of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedTable {
    pub column_names: Vec<String>,
    /// `rows x columns`; standardized numerics, then one-hot blocks when
    /// the table was encoded with [`Encoding::OneHot`].
    pub numeric: Array2<f64>,
    /// Empty under [`Encoding::OneHot`].
    pub categorical: Vec<EncodedCategorical>,
    pub companies: Vec<String>,
    pub years: Vec<i32>,
}

impl EncodedTable {
    pub fn n_rows(&self) -> usize {
        self.numeric.nrows()
    }

    pub fn category_indices(&self) -> Vec<Vec<usize>> {
        self.categorical.iter().map(|c| c.indices.clone()).collect()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.categorical.iter().map(EncodedCategorical::cardinality).collect()
    }
}

/// Pearson correlation over rows where both values are present.
/// Constant or near-empty columns give 0.
pub fn pearson(a: &[Option<f64>], b: &[Option<f64>]) -> f64 {
    let pairs: Vec<(f64, f64)> = a.iter().zip(b).filter_map(|(x, y)| Some(((*x)?, (*y)?))).collect();
    if pairs.len() < 2 {
        return 0.0;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

fn numeric_column(table: &DataTable, index: usize) -> Vec<Option<f64>> {
    table.feature_column(index).map(Value::as_num).collect()
}

/// Keep mask over all features; only numerical features can be dropped.
/// For every numerical pair `i < j` with `|r| >= threshold`, `j` is dropped.
pub fn drop_collinear(train: &DataTable, threshold: f64) -> Vec<bool> {
    let schema = train.schema();
    let mut keep = vec![true; schema.n_features()];
    let numerics = schema.indices_of(FeatureKind::Numerical);
    let columns: Vec<Vec<Option<f64>>> = numerics.iter().map(|&i| numeric_column(train, i)).collect();
    for a in 0..numerics.len() {
        for b in (a + 1)..numerics.len() {
            if !keep[numerics[b]] {
                continue;
            }
            if pearson(&columns[a], &columns[b]).abs() >= threshold {
                keep[numerics[b]] = false;
            }
        }
    }
    keep
}

/// Keep mask over all features; a categorical feature is dropped when it
/// has more than `max_card` distinct tokens on training rows.
pub fn drop_high_cardinality(train: &DataTable, max_card: usize) -> Vec<bool> {
    let schema = train.schema();
    (0..schema.n_features())
        .map(|i| {
            if schema.feature_kinds[i] != FeatureKind::Categorical {
                return true;
            }
            let distinct: BTreeSet<&str> = train.feature_column(i).filter_map(Value::as_cat).collect();
            distinct.len() <= max_card
        })
        .collect()
}

/// Per categorical feature, maps each training token to itself when at
/// least `min_companies` distinct companies use it, else to `other`.
pub fn aggregate_rare_categories(
    train: &DataTable,
    min_companies: usize,
) -> BTreeMap<String, BTreeMap<String, String>> {
    let schema = train.schema();
    let mut maps = BTreeMap::new();
    for i in schema.indices_of(FeatureKind::Categorical) {
        let mut users: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for row in train.rows() {
            if let Value::Cat(tok) = &row.features[i] {
                users.entry(tok).or_default().insert(&row.company);
            }
        }
        let map = users
            .into_iter()
            .map(|(tok, companies)| {
                let mapped = if companies.len() >= min_companies {
                    tok.to_string()
                } else {
                    OTHER_TOKEN.to_string()
                };
                (tok.to_string(), mapped)
            })
            .collect();
        maps.insert(schema.feature_names[i].clone(), map);
    }
    maps
}

/// Maps a raw cell through a fitted rare-category map. Unseen tokens
/// become `other`, missing cells become `missing`.
pub fn map_category<'a>(map: &'a BTreeMap<String, String>, value: &Value) -> &'a str {
    match value {
        Value::Cat(tok) => map.get(tok).map(String::as_str).unwrap_or(OTHER_TOKEN),
        _ => MISSING_CATEGORY,
    }
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

pub fn fit_preprocessor(train: &DataTable, config: PreprocessConfig) -> Result<Preprocessor> {
    if train.is_empty() {
        return Err(Error::Fit("cannot fit a preprocessor on an empty table".into()));
    }
    if !(config.collinear_threshold > 0.0 && config.collinear_threshold <= 1.0) {
        return Err(Error::Config(format!(
            "collinear threshold {} not in (0, 1]",
            config.collinear_threshold
        )));
    }
    if config.max_cardinality < 2 || config.min_companies < 1 {
        return Err(Error::Config(
            "max_cardinality must be >= 2 and min_companies >= 1".into(),
        ));
    }
    let schema = train.schema();
    let collinear = drop_collinear(train, config.collinear_threshold);
    let cardinality = drop_high_cardinality(train, config.max_cardinality);
    let mut rare = aggregate_rare_categories(train, config.min_companies);

    let mut kept_features = Vec::new();
    let mut imputation_values = BTreeMap::new();
    let mut scaling_stats = BTreeMap::new();
    let mut onehot_layout = BTreeMap::new();
    let mut rare_category_maps = BTreeMap::new();
    for i in 0..schema.n_features() {
        if !(collinear[i] && cardinality[i]) {
            continue;
        }
        let name = schema.feature_names[i].clone();
        match schema.feature_kinds[i] {
            FeatureKind::Numerical => {
                let column = numeric_column(train, i);
                let mut present: Vec<f64> = column.iter().flatten().copied().collect();
                let med = median(&mut present).unwrap_or(0.0);
                let imputed: Vec<f64> = column.iter().map(|v| v.unwrap_or(med)).collect();
                let n = imputed.len() as f64;
                let mean = imputed.iter().sum::<f64>() / n;
                let var = imputed.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                let mut sd = var.sqrt();
                if sd.is_nan() || sd <= 1e-12 * mean.abs().max(1.0) {
                    sd = 1.0;
                }
                imputation_values.insert(name.clone(), ImputationValue::Median(med));
                scaling_stats.insert(name.clone(), ScalingStats { mean, sd });
            }
            FeatureKind::Categorical => {
                let map = rare.remove(&name).unwrap_or_default();
                let mut layout: Vec<String> = map
                    .values()
                    .filter(|t| t.as_str() != OTHER_TOKEN && t.as_str() != MISSING_CATEGORY)
                    .cloned()
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                layout.push(OTHER_TOKEN.to_string());
                layout.push(MISSING_CATEGORY.to_string());
                imputation_values.insert(name.clone(), ImputationValue::Token(MISSING_CATEGORY.to_string()));
                onehot_layout.insert(name.clone(), layout);
                rare_category_maps.insert(name.clone(), map);
            }
        }
        kept_features.push(name);
    }

    Ok(Preprocessor {
        version: PREPROCESSOR_VERSION,
        config,
        feature_names: schema.feature_names.clone(),
        feature_kinds: schema.feature_kinds.clone(),
        kept_features,
        rare_category_maps,
        imputation_values,
        scaling_stats,
        onehot_layout,
    })
}

enum Plan<'a> {
    Numeric {
        index: usize,
        fill: f64,
        stats: ScalingStats,
    },
    Categorical {
        index: usize,
        name: &'a str,
        map: &'a BTreeMap<String, String>,
        layout: &'a [String],
    },
}

impl Preprocessor {
    pub fn kept_numerical(&self) -> Vec<&str> {
        self.kept_features
            .iter()
            .filter(|f| self.scaling_stats.contains_key(*f))
            .map(String::as_str)
            .collect()
    }

    pub fn kept_categorical(&self) -> Vec<&str> {
        self.kept_features
            .iter()
            .filter(|f| self.onehot_layout.contains_key(*f))
            .map(String::as_str)
            .collect()
    }

    fn plan(&self) -> Result<(Vec<Plan<'_>>, Vec<Plan<'_>>)> {
        let mut numeric = Vec::new();
        let mut categorical = Vec::new();
        for name in &self.kept_features {
            let index = self
                .feature_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Transform(format!("kept feature `{name}` not in layout")))?;
            if let Some(stats) = self.scaling_stats.get(name) {
                let fill = match self.imputation_values.get(name) {
                    Some(ImputationValue::Median(m)) => *m,
                    _ => return Err(Error::Transform(format!("no numeric imputation value for `{name}`"))),
                };
                numeric.push(Plan::Numeric {
                    index,
                    fill,
                    stats: *stats,
                });
            } else {
                let layout = self
                    .onehot_layout
                    .get(name)
                    .ok_or_else(|| Error::Transform(format!("no layout for `{name}`")))?;
                let map = self
                    .rare_category_maps
                    .get(name)
                    .ok_or_else(|| Error::Transform(format!("no category map for `{name}`")))?;
                categorical.push(Plan::Categorical {
                    index,
                    name,
                    map,
                    layout,
                });
            }
        }
        Ok((numeric, categorical))
    }

    /// Applies the fitted state. Works on any schema-conforming table,
    /// including ones with categories never seen during fit.
    pub fn transform(&self, table: &DataTable, encoding: Encoding) -> Result<EncodedTable> {
        let schema = table.schema();
        if schema.feature_names != self.feature_names || schema.feature_kinds != self.feature_kinds {
            return Err(Error::Transform("table features do not match the fitted layout".into()));
        }
        let (numeric_plan, cat_plan) = self.plan()?;
        let n = table.len();

        let mut column_names: Vec<String> = numeric_plan
            .iter()
            .map(|p| match p {
                Plan::Numeric { index, .. } => self.feature_names[*index].clone(),
                Plan::Categorical { .. } => unreachable!(),
            })
            .collect();

        let mut categorical = Vec::with_capacity(cat_plan.len());
        for plan in &cat_plan {
            let Plan::Categorical {
                index,
                name,
                map,
                layout,
            } = plan
            else {
                unreachable!()
            };
            let lookup: BTreeMap<&str, usize> = layout.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
            let mut tokens = Vec::with_capacity(n);
            let mut indices = Vec::with_capacity(n);
            for row in table.rows() {
                let tok = map_category(map, &row.features[*index]);
                let idx = lookup
                    .get(tok)
                    .or_else(|| lookup.get(OTHER_TOKEN))
                    .copied()
                    .ok_or_else(|| Error::Transform(format!("layout of `{name}` lacks `other`")))?;
                tokens.push(layout[idx].clone());
                indices.push(idx);
            }
            categorical.push(EncodedCategorical {
                name: name.to_string(),
                layout: layout.to_vec(),
                tokens,
                indices,
            });
        }

        let onehot_width: usize = match encoding {
            Encoding::OneHot => categorical.iter().map(|c| c.layout.len()).sum(),
            Encoding::Passthrough => 0,
        };
        let width = numeric_plan.len() + onehot_width;
        let mut numeric = Array2::<f64>::zeros((n, width));
        for (r, row) in table.rows().iter().enumerate() {
            for (c, plan) in numeric_plan.iter().enumerate() {
                if let Plan::Numeric { index, fill, stats } = plan {
                    let v = row.features[*index].as_num().unwrap_or(*fill);
                    numeric[[r, c]] = (v - stats.mean) / stats.sd;
                }
            }
        }
        if encoding == Encoding::OneHot {
            let mut offset = numeric_plan.len();
            for cat in &categorical {
                for (r, &idx) in cat.indices.iter().enumerate() {
                    numeric[[r, offset + idx]] = 1.0;
                }
                column_names.extend(cat.layout.iter().map(|t| format!("{}={}", cat.name, t)));
                offset += cat.layout.len();
            }
            categorical.clear();
        }

        Ok(EncodedTable {
            column_names,
            numeric,
            categorical,
            companies: table.rows().iter().map(|r| r.company.clone()).collect(),
            years: table.rows().iter().map(|r| r.year).collect(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let prep: Preprocessor = serde_json::from_str(text)?;
        if prep.version != PREPROCESSOR_VERSION {
            return Err(Error::Artifact(format!(
                "unsupported preprocessor version {}",
                prep.version
            )));
        }
        Ok(prep)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
