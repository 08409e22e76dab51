use std::collections::BTreeMap;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::{DataTable, FeatureKind, Value};
use crate::error::{Error, Result};
use crate::preprocess::{Encoding, Preprocessor};
use crate::task::{argmax, Predictions, Targets, Task};

/// Ridge stabilizer for collinear one-hot blocks.
pub const RIDGE_EPSILON: f64 = 1e-6;

/// Training-set mean target per industry token (class frequencies for a
/// categorical target). Unseen or missing industries get the global value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndustryMeanModel {
    pub feature: String,
    pub task: Task,
    pub groups: BTreeMap<String, Vec<f64>>,
    pub global: Vec<f64>,
}

fn industry_column(table: &DataTable, feature: &str) -> Result<usize> {
    let schema = table.schema();
    let idx = schema
        .feature_index(feature)
        .ok_or_else(|| Error::Config(format!("industry feature {feature:?} is not in the schema")))?;
    if schema.feature_kinds[idx] != FeatureKind::Categorical {
        return Err(Error::Config(format!(
            "industry feature {feature:?} must be categorical"
        )));
    }
    Ok(idx)
}

fn target_vectors(y: &Targets) -> Vec<Vec<f64>> {
    match y {
        Targets::Continuous(v) => v.iter().map(|&t| vec![t]).collect(),
        Targets::Classes { labels, n_classes } => labels
            .iter()
            .map(|&l| {
                let mut one = vec![0.0; *n_classes];
                one[l] = 1.0;
                one
            })
            .collect(),
    }
}

fn mean_of(rows: &[&Vec<f64>]) -> Vec<f64> {
    let width = rows[0].len();
    let mut out = vec![0.0; width];
    for r in rows {
        for (o, v) in out.iter_mut().zip(r.iter()) {
            *o += v;
        }
    }
    out.iter().map(|s| s / rows.len() as f64).collect()
}

fn vectors_to_predictions(task: Task, rows: Vec<Vec<f64>>) -> Predictions {
    match task {
        Task::Regression => Predictions::Continuous(rows.into_iter().map(|r| r[0]).collect()),
        Task::Classification { n_classes } => {
            let n = rows.len();
            let flat: Vec<f64> = rows.into_iter().flatten().collect();
            Predictions::from_probabilities(Array2::from_shape_vec((n, n_classes), flat).expect("class widths"))
        }
    }
}

pub fn fit_industry_mean(train: &DataTable, target: &str, feature: &str) -> Result<IndustryMeanModel> {
    let col = industry_column(train, feature)?;
    let y = Targets::from_table(train, target)?;
    if y.is_empty() {
        return Err(Error::Fit("empty training set".into()));
    }
    let vectors = target_vectors(&y);
    let mut by_group: BTreeMap<String, Vec<&Vec<f64>>> = BTreeMap::new();
    for (row, v) in train.rows().iter().zip(&vectors) {
        if let Value::Cat(token) = &row.features[col] {
            by_group.entry(token.clone()).or_default().push(v);
        }
    }
    let all: Vec<&Vec<f64>> = vectors.iter().collect();
    Ok(IndustryMeanModel {
        feature: feature.to_string(),
        task: y.task(),
        groups: by_group.into_iter().map(|(k, rows)| (k, mean_of(&rows))).collect(),
        global: mean_of(&all),
    })
}

impl IndustryMeanModel {
    pub fn predict(&self, table: &DataTable) -> Result<Predictions> {
        let col = industry_column(table, &self.feature).map_err(|e| Error::Predict(e.to_string()))?;
        let rows = table
            .rows()
            .iter()
            .map(|row| match &row.features[col] {
                Value::Cat(token) => self.groups.get(token).unwrap_or(&self.global).clone(),
                _ => self.global.clone(),
            })
            .collect();
        Ok(vectors_to_predictions(self.task, rows))
    }
}

/// Least squares on the one-hot design with a tiny ridge term and an
/// unpenalized intercept. Categorical targets fit one indicator column per
/// class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub task: Task,
    pub column_names: Vec<String>,
    /// `columns x outputs`.
    pub coefficients: Array2<f64>,
    pub intercept: Vec<f64>,
}

/// Minimizes `|X w + b - y|^2 + eps |w|^2` per output column.
pub fn fit_linear_matrix(x: ArrayView2<'_, f64>, y: &Targets, column_names: Vec<String>) -> Result<LinearModel> {
    let (n, p) = x.dim();
    if n == 0 || y.len() != n {
        return Err(Error::Fit(format!("{} targets for {n} rows", y.len())));
    }
    let outputs = target_vectors(y);
    let k = outputs[0].len();
    let x_mean: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n as f64).collect();
    let y_mean: Vec<f64> = (0..k)
        .map(|c| outputs.iter().map(|o| o[c]).sum::<f64>() / n as f64)
        .collect();
    let xc = DMatrix::from_fn(n, p, |i, j| x[[i, j]] - x_mean[j]);
    let yc = DMatrix::from_fn(n, k, |i, c| outputs[i][c] - y_mean[c]);
    let mut gram = xc.transpose() * &xc;
    for j in 0..p {
        gram[(j, j)] += RIDGE_EPSILON;
    }
    let rhs = xc.transpose() * yc;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Fit("normal equations are not positive definite".into()))?;
    let w = chol.solve(&rhs);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("least-squares solution is not finite".into()));
    }
    let coefficients = Array2::from_shape_fn((p, k), |(j, c)| w[(j, c)]);
    let intercept = (0..k)
        .map(|c| y_mean[c] - (0..p).map(|j| x_mean[j] * w[(j, c)]).sum::<f64>())
        .collect();
    Ok(LinearModel {
        task: y.task(),
        column_names,
        coefficients,
        intercept,
    })
}

pub fn fit_linear(train: &DataTable, prep: &Preprocessor, target: &str) -> Result<LinearModel> {
    let enc = prep.transform(train, Encoding::OneHot)?;
    let y = Targets::from_table(train, target)?;
    fit_linear_matrix(enc.numeric.view(), &y, enc.column_names)
}

impl LinearModel {
    pub fn predict_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Predictions> {
        if x.ncols() != self.coefficients.nrows() {
            return Err(Error::Predict(format!(
                "linear model expects {} columns, got {}",
                self.coefficients.nrows(),
                x.ncols()
            )));
        }
        let scores = x.dot(&self.coefficients) + &Array1::from(self.intercept.clone());
        Ok(match self.task {
            Task::Regression => Predictions::Continuous(scores.column(0).to_vec()),
            Task::Classification { .. } => {
                let mut probs = scores.mapv(|s| s.clamp(0.0, 1.0));
                for mut row in probs.rows_mut() {
                    let sum = row.sum();
                    let width = row.len() as f64;
                    if sum > 0.0 {
                        row /= sum;
                    } else {
                        row.fill(1.0 / width);
                    }
                }
                Predictions::Classes {
                    labels: scores.rows().into_iter().map(|r| argmax(r.iter().copied())).collect(),
                    probabilities: probs,
                }
            }
        })
    }

    pub fn predict(&self, prep: &Preprocessor, table: &DataTable) -> Result<Predictions> {
        let enc = prep.transform(table, Encoding::OneHot)?;
        self.predict_matrix(enc.numeric.view())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureSchema, Row, TargetSpec, TargetValue};
    use ndarray::array;

    fn table(rows: &[(&str, Option<&str>, f64)]) -> DataTable {
        let schema = FeatureSchema::new(
            vec![("industry".into(), FeatureKind::Categorical)],
            vec![("esg".into(), TargetSpec::score())],
        )
        .unwrap();
        let rows = rows
            .iter()
            .enumerate()
            .map(|(i, (c, ind, t))| Row {
                company: c.to_string(),
                year: 2000 + i as i32,
                features: vec![ind.map_or(Value::Missing, |s| Value::Cat(s.into()))],
                targets: vec![TargetValue::Num(*t)],
            })
            .collect();
        DataTable::new(schema, rows).unwrap()
    }

    #[test]
    fn industry_means() {
        let train = table(&[
            ("a", Some("I1"), 10.0),
            ("b", Some("I1"), 20.0),
            ("c", Some("I2"), 30.0),
        ]);
        let m = fit_industry_mean(&train, "esg", "industry").unwrap();
        let test = table(&[
            ("x", Some("I1"), 0.0),
            ("y", Some("I2"), 0.0),
            ("z", Some("I9"), 0.0),
            ("w", None, 0.0),
        ]);
        assert_eq!(
            m.predict(&test).unwrap().continuous().unwrap(),
            &[15.0, 30.0, 20.0, 20.0]
        );
        assert!(matches!(
            fit_industry_mean(&train, "esg", "country"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn recovers_a_line() {
        let x = array![[1.0], [2.0], [3.0], [4.0], [5.0], [6.0], [7.0], [8.0], [9.0], [10.0]];
        let y = Targets::Continuous(x.column(0).iter().map(|v| 3.0 * v - 1.0).collect());
        let m = fit_linear_matrix(x.view(), &y, vec!["x".into()]).unwrap();
        assert!((m.coefficients[[0, 0]] - 3.0).abs() < 1e-6);
        assert!((m.intercept[0] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn constant_target() {
        let x = array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        let m = fit_linear_matrix(
            x.view(),
            &Targets::Continuous(vec![7.0; 4]),
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert!(m.coefficients.iter().all(|w| w.abs() < 1e-9));
        assert!((m.intercept[0] - 7.0).abs() < 1e-9);
    }

    #[test]
    fn survives_collinear_columns() {
        let x = array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]];
        let y = Targets::Continuous(vec![2.0, 4.0, 6.0, 8.0]);
        let m = fit_linear_matrix(x.view(), &y, vec!["a".into(), "b".into()]).unwrap();
        let p = m.predict_matrix(x.view()).unwrap();
        for (a, b) in p.continuous().unwrap().iter().zip([2.0, 4.0, 6.0, 8.0]) {
            assert!((a - b).abs() < 1e-4);
        }
    }
}
