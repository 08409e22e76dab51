use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::data::schema::{FeatureKind, FeatureSchema, TargetSpec};
use crate::error::{Error, Result};

/// One feature cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Cat(String),
    Missing,
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_cat(&self) -> Option<&str> {
        match self {
            Value::Cat(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetValue {
    Num(f64),
    Label(String),
}

/// One observation: a company in one year.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub company: String,
    pub year: i32,
    pub features: Vec<Value>,
    pub targets: Vec<TargetValue>,
}

/// Immutable, schema-checked collection of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    schema: FeatureSchema,
    rows: Vec<Row>,
}

impl DataTable {
    /// Builds a table, checking every row against the schema and the
    /// uniqueness of `(company, year)`.
    pub fn new(schema: FeatureSchema, rows: Vec<Row>) -> Result<Self> {
        schema.validate()?;
        let mut keys = HashSet::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            check_row(&schema, i, row)?;
            if !keys.insert((row.company.as_str(), row.year)) {
                return Err(Error::Integrity(format!(
                    "duplicate (company, year) = ({}, {}) at row {i}",
                    row.company, row.year
                )));
            }
        }
        Ok(DataTable { schema, rows })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn into_rows(self) -> Vec<Row> {
        self.rows
    }

    /// Rows at the given positions, in that order.
    pub fn select(&self, indices: &[usize]) -> DataTable {
        DataTable {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Drops target values and target columns.
    pub fn without_targets(&self) -> DataTable {
        DataTable {
            schema: self.schema.without_targets(),
            rows: self
                .rows
                .iter()
                .map(|r| Row {
                    targets: Vec::new(),
                    ..r.clone()
                })
                .collect(),
        }
    }

    /// Distinct company ids in sorted order.
    pub fn companies(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.rows.iter().map(|r| r.company.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    pub fn company_row_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.rows {
            *counts.entry(r.company.as_str()).or_insert(0) += 1;
        }
        counts
    }

    pub fn feature_column(&self, index: usize) -> impl Iterator<Item = &Value> {
        self.rows.iter().map(move |r| &r.features[index])
    }

    pub fn missing_count(&self) -> usize {
        self.rows
            .iter()
            .flat_map(|r| r.features.iter())
            .filter(|v| matches!(v, Value::Missing))
            .count()
    }

    /// Continuous target values by name.
    pub fn continuous_target(&self, name: &str) -> Result<Vec<f64>> {
        let (idx, spec) = self.schema.target(name)?;
        if !spec.is_continuous() {
            return Err(Error::Schema(format!("target `{name}` is not continuous")));
        }
        Ok(self
            .rows
            .iter()
            .map(|r| match &r.targets[idx] {
                TargetValue::Num(v) => *v,
                TargetValue::Label(_) => unreachable!("checked at construction"),
            })
            .collect())
    }

    /// Categorical target as class indices into the spec's class list.
    pub fn class_target(&self, name: &str) -> Result<Vec<usize>> {
        let (idx, spec) = self.schema.target(name)?;
        let TargetSpec::Categorical { classes } = spec else {
            return Err(Error::Schema(format!("target `{name}` is not categorical")));
        };
        self.rows
            .iter()
            .map(|r| match &r.targets[idx] {
                TargetValue::Label(l) => classes
                    .iter()
                    .position(|c| c == l)
                    .ok_or_else(|| Error::Schema(format!("unknown class `{l}`"))),
                TargetValue::Num(_) => unreachable!("checked at construction"),
            })
            .collect()
    }
}

fn check_row(schema: &FeatureSchema, i: usize, row: &Row) -> Result<()> {
    if row.company.is_empty() {
        return Err(Error::Integrity(format!("row {i}: empty company id")));
    }
    if row.features.len() != schema.n_features() {
        return Err(Error::Schema(format!(
            "row {i}: {} feature values, schema has {}",
            row.features.len(),
            schema.n_features()
        )));
    }
    for (j, (value, kind)) in row.features.iter().zip(&schema.feature_kinds).enumerate() {
        let ok = match (value, kind) {
            (Value::Missing, _) => true,
            (Value::Num(v), FeatureKind::Numerical) => v.is_finite(),
            (Value::Cat(_), FeatureKind::Categorical) => true,
            _ => false,
        };
        if !ok {
            return Err(Error::Schema(format!(
                "row {i}: value {value:?} does not fit {kind:?} feature `{}`",
                schema.feature_names[j]
            )));
        }
    }
    if row.targets.len() != schema.target_columns.len() {
        return Err(Error::Schema(format!(
            "row {i}: {} target values, schema has {}",
            row.targets.len(),
            schema.target_columns.len()
        )));
    }
    for (value, (name, spec)) in row.targets.iter().zip(&schema.target_columns) {
        match (value, spec) {
            (TargetValue::Num(v), TargetSpec::Continuous { lo, hi }) => {
                if !(v >= lo && v <= hi) {
                    return Err(Error::Integrity(format!(
                        "row {i}: target `{name}` = {v} outside [{lo}, {hi}]"
                    )));
                }
            }
            (TargetValue::Label(l), TargetSpec::Categorical { classes }) => {
                if !classes.contains(l) {
                    return Err(Error::Integrity(format!(
                        "row {i}: target `{name}` has unknown class `{l}`"
                    )));
                }
            }
            _ => {
                return Err(Error::Schema(format!(
                    "row {i}: target `{name}` value kind does not match its spec"
                )))
            }
        }
    }
    Ok(())
}
