use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numerical,
    Categorical,
}

/// What a target column holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpec {
    /// Inclusive score range, `[0, 100]` for ratings.
    Continuous { lo: f64, hi: f64 },
    /// Ordered class tokens. Class index = position in this list.
    Categorical { classes: Vec<String> },
}

impl TargetSpec {
    pub fn score() -> Self {
        TargetSpec::Continuous { lo: 0.0, hi: 100.0 }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, TargetSpec::Continuous { .. })
    }

    pub fn n_classes(&self) -> Option<usize> {
        match self {
            TargetSpec::Categorical { classes } => Some(classes.len()),
            TargetSpec::Continuous { .. } => None,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        match self {
            TargetSpec::Continuous { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::Schema(format!("target `{name}` has invalid range [{lo}, {hi}]")));
                }
            }
            TargetSpec::Categorical { classes } => {
                if classes.is_empty() {
                    return Err(Error::Schema(format!("target `{name}` has no classes")));
                }
                let unique: BTreeSet<&String> = classes.iter().collect();
                if unique.len() != classes.len() {
                    return Err(Error::Schema(format!("target `{name}` has duplicate classes")));
                }
            }
        }
        Ok(())
    }
}

/// Column layout of a dataset: features in order, plus company/year
/// metadata and the prediction targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub feature_names: Vec<String>,
    pub feature_kinds: Vec<FeatureKind>,
    pub company_column: String,
    pub year_column: String,
    pub target_columns: Vec<(String, TargetSpec)>,
}

impl FeatureSchema {
    pub fn new(features: Vec<(String, FeatureKind)>, target_columns: Vec<(String, TargetSpec)>) -> Result<Self> {
        let (feature_names, feature_kinds) = features.into_iter().unzip();
        let schema = FeatureSchema {
            feature_names,
            feature_kinds,
            company_column: "company_id".to_string(),
            year_column: "year".to_string(),
            target_columns,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_names.len() != self.feature_kinds.len() {
            return Err(Error::Schema("feature_names and feature_kinds differ in length".into()));
        }
        let mut seen = BTreeSet::new();
        let all = self
            .feature_names
            .iter()
            .chain([&self.company_column, &self.year_column])
            .chain(self.target_columns.iter().map(|(n, _)| n));
        for name in all {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{name}`")));
            }
        }
        for (name, spec) in &self.target_columns {
            spec.validate(name)?;
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn target_index(&self, name: &str) -> Option<usize> {
        self.target_columns.iter().position(|(n, _)| n == name)
    }

    pub fn target(&self, name: &str) -> Result<(usize, &TargetSpec)> {
        self.target_index(name)
            .map(|i| (i, &self.target_columns[i].1))
            .ok_or_else(|| Error::Schema(format!("unknown target `{name}`")))
    }

    pub fn indices_of(&self, kind: FeatureKind) -> Vec<usize> {
        (0..self.n_features())
            .filter(|&i| self.feature_kinds[i] == kind)
            .collect()
    }

    /// Same features, no targets. Used for inference-only tables.
    pub fn without_targets(&self) -> Self {
        FeatureSchema {
            target_columns: Vec::new(),
            ..self.clone()
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema: FeatureSchema = serde_json::from_str(&text)?;
        schema.validate()?;
        Ok(schema)
    }

    /// Feature layout equality, ignoring targets.
    pub fn same_features(&self, other: &FeatureSchema) -> bool {
        self.feature_names == other.feature_names && self.feature_kinds == other.feature_kinds
    }
}
