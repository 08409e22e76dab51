//! Fitted model families, ensembles, baselines and their on-disk form.

mod baselines;
mod ensemble;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use baselines::{fit_industry_mean, fit_linear, fit_linear_matrix, IndustryMeanModel, LinearModel, RIDGE_EPSILON};
pub use ensemble::{aggregate, majority_vote, median_aggregate, Aggregation};

use crate::catboost::{fit_catboost_style, CatBoostStyleModel, CatBoostStyleParams};
use crate::data::{DataTable, TargetSpec};
use crate::error::{Error, Result};
use crate::gbdt::{fit_gbdt, GbdtModel, GbdtParams};
use crate::nn::{fit_mlp, MlpInput, MlpModel, NnConfig};
use crate::preprocess::{Encoding, Preprocessor};
use crate::task::{cross_entropy, Predictions, Targets};
use crate::workers::WorkerPool;

pub const MODEL_FORMAT: &str = "tabens-model";
pub const MEMBER_FORMAT: &str = "tabens-member";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Trainable model families exposed by `train --model`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Nn,
    Catboost,
    Xgboost,
    NnEnsemble,
    Hetero,
    IndustryMean,
    Linear,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Nn,
        ModelKind::Catboost,
        ModelKind::Xgboost,
        ModelKind::NnEnsemble,
        ModelKind::Hetero,
        ModelKind::IndustryMean,
        ModelKind::Linear,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Nn => "nn",
            ModelKind::Catboost => "catboost",
            ModelKind::Xgboost => "xgboost",
            ModelKind::NnEnsemble => "nn-ensemble",
            ModelKind::Hetero => "hetero",
            ModelKind::IndustryMean => "industry-mean",
            ModelKind::Linear => "linear",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown model kind {s:?}")))
    }
}

/// One fitted single-family model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum MemberModel {
    Nn(MlpModel),
    Catboost(CatBoostStyleModel),
    Xgboost(GbdtModel),
    IndustryMean(IndustryMeanModel),
    Linear(LinearModel),
}

impl MemberModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            MemberModel::Nn(_) => "nn",
            MemberModel::Catboost(_) => "catboost",
            MemberModel::Xgboost(_) => "xgboost",
            MemberModel::IndustryMean(_) => "industry_mean",
            MemberModel::Linear(_) => "linear",
        }
    }

    pub fn predict(&self, prep: &Preprocessor, table: &DataTable) -> Result<Predictions> {
        match self {
            MemberModel::Nn(m) => m.predict_encoded(&prep.transform(table, Encoding::Passthrough)?),
            MemberModel::Catboost(m) => m.predict(prep, table),
            MemberModel::Xgboost(m) => m.predict(prep.transform(table, Encoding::OneHot)?.numeric.view()),
            MemberModel::IndustryMean(m) => m.predict(table),
            MemberModel::Linear(m) => m.predict(prep, table),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub members: Vec<MemberModel>,
    pub aggregation: Aggregation,
    /// Validation loss per member (MSE or cross-entropy); `None` when no
    /// validation set was given.
    pub validation_scores: Vec<Option<f64>>,
}

impl EnsembleModel {
    pub fn predict_members(&self, prep: &Preprocessor, table: &DataTable) -> Result<Vec<Predictions>> {
        self.members.iter().map(|m| m.predict(prep, table)).collect()
    }

    pub fn combine(&self, members: &[Predictions]) -> Result<Predictions> {
        let scores: Vec<f64> = self
            .validation_scores
            .iter()
            .map(|s| s.unwrap_or(f64::INFINITY))
            .collect();
        aggregate(self.aggregation, members, &scores)
    }

    pub fn predict(&self, prep: &Preprocessor, table: &DataTable) -> Result<Predictions> {
        self.combine(&self.predict_members(prep, table)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(clippy::large_enum_variant)]
pub enum FittedModel {
    Single(MemberModel),
    Ensemble(EnsembleModel),
}

/// Combined prediction plus, for ensembles, each member's prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    pub combined: Predictions,
    pub members: Vec<(String, Predictions)>,
}

impl FittedModel {
    pub fn predict_detailed(&self, prep: &Preprocessor, table: &DataTable) -> Result<ModelOutput> {
        match self {
            FittedModel::Single(m) => Ok(ModelOutput {
                combined: m.predict(prep, table)?,
                members: Vec::new(),
            }),
            FittedModel::Ensemble(e) => {
                let preds = e.predict_members(prep, table)?;
                let combined = e.combine(&preds)?;
                Ok(ModelOutput {
                    combined,
                    members: e
                        .members
                        .iter()
                        .enumerate()
                        .map(|(i, m)| format!("{i}:{}", m.kind_name()))
                        .zip(preds)
                        .collect(),
                })
            }
        }
    }

    pub fn predict(&self, prep: &Preprocessor, table: &DataTable) -> Result<Predictions> {
        Ok(self.predict_detailed(prep, table)?.combined)
    }
}

/// Hyperparameters for every family plus the seeding scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    pub nn: NnConfig,
    pub catboost: CatBoostStyleParams,
    pub xgboost: GbdtParams,
    pub ensemble_size: usize,
    pub industry_feature: String,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 42,
            nn: NnConfig::default(),
            catboost: CatBoostStyleParams::default(),
            xgboost: GbdtParams::default(),
            ensemble_size: 10,
            industry_feature: "industry".into(),
        }
    }
}

impl TrainConfig {
    /// Seed of the single network (also the heterogeneous ensemble's).
    pub fn nn_seed(&self) -> u64 {
        self.seed
    }

    /// Seeds of the naive ensemble, disjoint from `nn_seed`.
    pub fn ensemble_seeds(&self) -> Vec<u64> {
        (1..=self.ensemble_size as u64)
            .map(|i| self.seed.wrapping_add(i))
            .collect()
    }

    pub fn catboost_params(&self) -> CatBoostStyleParams {
        CatBoostStyleParams {
            seed: self.seed,
            ..self.catboost
        }
    }
}

fn validation_targets(val: Option<&DataTable>, target: &str) -> Result<Option<Targets>> {
    val.filter(|v| !v.is_empty())
        .map(|v| Targets::from_table(v, target))
        .transpose()
}

/// Encoded network inputs for `train` and (optionally) `val`.
struct NnData {
    train: MlpInput,
    y: Targets,
    val: Option<(MlpInput, Targets)>,
    spec_source: crate::preprocess::EncodedTable,
}

fn nn_data(train: &DataTable, val: Option<&DataTable>, prep: &Preprocessor, target: &str) -> Result<NnData> {
    let enc = prep.transform(train, Encoding::Passthrough)?;
    let y = Targets::from_table(train, target)?;
    let val = match (val, validation_targets(val, target)?) {
        (Some(v), Some(vy)) => Some((MlpInput::from_encoded(&prep.transform(v, Encoding::Passthrough)?), vy)),
        _ => None,
    };
    Ok(NnData {
        train: MlpInput::from_encoded(&enc),
        y,
        val,
        spec_source: enc,
    })
}

fn fit_nn_from(data: &NnData, cfg: &NnConfig, seed: u64) -> Result<MlpModel> {
    let spec = cfg.spec_for(&data.spec_source, data.y.task())?;
    fit_mlp(
        &data.train,
        &data.y,
        data.val.as_ref().map(|(x, y)| (x, y)),
        &spec,
        seed,
    )
}

pub fn fit_nn(
    train: &DataTable,
    val: Option<&DataTable>,
    prep: &Preprocessor,
    target: &str,
    cfg: &NnConfig,
    seed: u64,
) -> Result<MlpModel> {
    fit_nn_from(&nn_data(train, val, prep, target)?, cfg, seed)
}

/// Gradient-boosted trees on the one-hot design matrix.
pub fn fit_xgboost_style(
    train: &DataTable,
    val: Option<&DataTable>,
    prep: &Preprocessor,
    target: &str,
    params: &GbdtParams,
) -> Result<GbdtModel> {
    let x = prep.transform(train, Encoding::OneHot)?;
    let y = Targets::from_table(train, target)?;
    let val_x = match val.filter(|v| !v.is_empty()) {
        Some(v) => Some(prep.transform(v, Encoding::OneHot)?.numeric),
        None => None,
    };
    let val_y = validation_targets(val, target)?;
    let val_pair = val_x.as_ref().zip(val_y.as_ref()).map(|(x, y)| (x.view(), y));
    fit_gbdt(x.numeric.view(), &y, val_pair, params)
}

/// Validation loss of one member: MSE for continuous targets, cross-entropy
/// for categorical ones.
pub fn validation_loss(
    member: &MemberModel,
    prep: &Preprocessor,
    val: Option<&DataTable>,
    target: &str,
) -> Result<Option<f64>> {
    let Some(y) = validation_targets(val, target)? else {
        return Ok(None);
    };
    let pred = member.predict(prep, val.expect("validation targets imply a table"))?;
    Ok(Some(match (&y, &pred) {
        (Targets::Continuous(t), _) => crate::metrics::mse(t, pred.continuous()?)?,
        (Targets::Classes { labels, .. }, Predictions::Classes { probabilities, .. }) => {
            cross_entropy(probabilities, labels)
        }
        _ => return Err(Error::Predict("prediction kind does not match target".into())),
    }))
}

/// Independently seeded networks aggregated by median (or vote).
pub fn fit_nn_ensemble(
    train: &DataTable,
    val: Option<&DataTable>,
    prep: &Preprocessor,
    target: &str,
    cfg: &NnConfig,
    seeds: &[u64],
    pool: &WorkerPool,
) -> Result<EnsembleModel> {
    if seeds.is_empty() {
        return Err(Error::Config("an ensemble needs at least one seed".into()));
    }
    let data = nn_data(train, val, prep, target)?;
    let members = pool
        .map(seeds.to_vec(), |seed| {
            fit_nn_from(&data, cfg, seed).map(MemberModel::Nn)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    finish_ensemble(members, prep, val, target, data.y.task())
}

fn finish_ensemble(
    members: Vec<MemberModel>,
    prep: &Preprocessor,
    val: Option<&DataTable>,
    target: &str,
    task: crate::task::Task,
) -> Result<EnsembleModel> {
    let validation_scores = members
        .iter()
        .map(|m| validation_loss(m, prep, val, target))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleModel {
        members,
        aggregation: Aggregation::for_task(task),
        validation_scores,
    })
}

#[derive(Clone, Copy)]
enum HeteroMember {
    Catboost,
    Xgboost,
    Nn,
}

/// Categorical-boosting, gradient-boosting and network members trained on
/// the same partitions, in that member order.
pub fn fit_heterogeneous(
    train: &DataTable,
    val: Option<&DataTable>,
    prep: &Preprocessor,
    target: &str,
    cfg: &TrainConfig,
    pool: &WorkerPool,
) -> Result<EnsembleModel> {
    cfg.catboost_params().validate()?;
    cfg.xgboost.validate()?;
    let jobs = vec![HeteroMember::Catboost, HeteroMember::Xgboost, HeteroMember::Nn];
    let members = pool
        .map(jobs, |job| match job {
            HeteroMember::Catboost => {
                fit_catboost_style(train, val, prep, target, &cfg.catboost_params()).map(MemberModel::Catboost)
            }
            HeteroMember::Xgboost => {
                fit_xgboost_style(train, val, prep, target, &cfg.xgboost).map(MemberModel::Xgboost)
            }
            HeteroMember::Nn => fit_nn(train, val, prep, target, &cfg.nn, cfg.nn_seed()).map(MemberModel::Nn),
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let task = Targets::from_table(train, target)?.task();
    finish_ensemble(members, prep, val, target, task)
}

pub fn fit_model(
    kind: ModelKind,
    train: &DataTable,
    val: Option<&DataTable>,
    prep: &Preprocessor,
    target: &str,
    cfg: &TrainConfig,
    pool: &WorkerPool,
) -> Result<FittedModel> {
    Ok(match kind {
        ModelKind::Nn => FittedModel::Single(MemberModel::Nn(fit_nn(
            train,
            val,
            prep,
            target,
            &cfg.nn,
            cfg.nn_seed(),
        )?)),
        ModelKind::Catboost => FittedModel::Single(MemberModel::Catboost(fit_catboost_style(
            train,
            val,
            prep,
            target,
            &cfg.catboost_params(),
        )?)),
        ModelKind::Xgboost => FittedModel::Single(MemberModel::Xgboost(fit_xgboost_style(
            train,
            val,
            prep,
            target,
            &cfg.xgboost,
        )?)),
        ModelKind::NnEnsemble => FittedModel::Ensemble(fit_nn_ensemble(
            train,
            val,
            prep,
            target,
            &cfg.nn,
            &cfg.ensemble_seeds(),
            pool,
        )?),
        ModelKind::Hetero => FittedModel::Ensemble(fit_heterogeneous(train, val, prep, target, cfg, pool)?),
        ModelKind::IndustryMean => FittedModel::Single(MemberModel::IndustryMean(fit_industry_mean(
            train,
            target,
            &cfg.industry_feature,
        )?)),
        ModelKind::Linear => FittedModel::Single(MemberModel::Linear(fit_linear(train, prep, target)?)),
    })
}

/// Continuous predictions clipped to the target's declared range.
pub fn clamp_to_spec(pred: Predictions, spec: &TargetSpec) -> Predictions {
    match (pred, spec) {
        (Predictions::Continuous(v), TargetSpec::Continuous { lo, hi }) => {
            Predictions::Continuous(v.into_iter().map(|p| p.clamp(*lo, *hi)).collect())
        }
        (p, _) => p,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetModel {
    pub name: String,
    pub spec: TargetSpec,
    pub model: FittedModel,
}

/// A preprocessor plus one fitted model per target.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub kind: ModelKind,
    pub preprocessor: Preprocessor,
    pub targets: Vec<TargetModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MemberRef {
    kind: String,
    file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TargetEntry {
    name: String,
    spec: TargetSpec,
    /// Absent for single models.
    aggregation: Option<Aggregation>,
    validation_scores: Vec<Option<f64>>,
    members: Vec<MemberRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BundleManifest {
    format: String,
    version: u32,
    kind: ModelKind,
    preprocessor: String,
    targets: Vec<TargetEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MemberFile {
    format: String,
    version: u32,
    member: MemberModel,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PREPROCESSOR_FILE: &str = "preprocessor.json";

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Artifact(format!("{}: {e}", path.display())))
}

fn safe_component(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

impl ModelBundle {
    pub fn fit(
        kind: ModelKind,
        train: &DataTable,
        val: Option<&DataTable>,
        prep: &Preprocessor,
        targets: &[String],
        cfg: &TrainConfig,
        pool: &WorkerPool,
    ) -> Result<ModelBundle> {
        let targets = targets
            .iter()
            .map(|name| {
                let (_, spec) = train.schema().target(name)?;
                Ok(TargetModel {
                    name: name.clone(),
                    spec: spec.clone(),
                    model: fit_model(kind, train, val, prep, name, cfg, pool)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelBundle {
            kind,
            preprocessor: prep.clone(),
            targets,
        })
    }

    /// Per target, clamped combined and member predictions.
    pub fn predict(&self, table: &DataTable) -> Result<Vec<(String, ModelOutput)>> {
        self.targets
            .iter()
            .map(|t| {
                let out = t.model.predict_detailed(&self.preprocessor, table)?;
                Ok((
                    t.name.clone(),
                    ModelOutput {
                        combined: clamp_to_spec(out.combined, &t.spec),
                        members: out
                            .members
                            .into_iter()
                            .map(|(n, p)| (n, clamp_to_spec(p, &t.spec)))
                            .collect(),
                    },
                ))
            })
            .collect()
    }

    /// Writes `manifest.json`, `preprocessor.json` and one file per member.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.preprocessor.save(dir.join(PREPROCESSOR_FILE))?;
        let mut entries = Vec::new();
        for t in &self.targets {
            let sub = safe_component(&t.name);
            fs::create_dir_all(dir.join(&sub)).map_err(|e| Error::io(dir.join(&sub), e))?;
            let (members, aggregation, validation_scores): (Vec<&MemberModel>, _, _) = match &t.model {
                FittedModel::Single(m) => (vec![m], None, Vec::new()),
                FittedModel::Ensemble(e) => (
                    e.members.iter().collect(),
                    Some(e.aggregation),
                    e.validation_scores.clone(),
                ),
            };
            let mut refs = Vec::new();
            for (i, m) in members.into_iter().enumerate() {
                let file = format!("{sub}/{i:02}-{}.json", m.kind_name());
                write_json(
                    &dir.join(&file),
                    &MemberFile {
                        format: MEMBER_FORMAT.into(),
                        version: MODEL_FORMAT_VERSION,
                        member: m.clone(),
                    },
                )?;
                refs.push(MemberRef {
                    kind: m.kind_name().into(),
                    file,
                });
            }
            entries.push(TargetEntry {
                name: t.name.clone(),
                spec: t.spec.clone(),
                aggregation,
                validation_scores,
                members: refs,
            });
        }
        write_json(
            &dir.join(MANIFEST_FILE),
            &BundleManifest {
                format: MODEL_FORMAT.into(),
                version: MODEL_FORMAT_VERSION,
                kind: self.kind,
                preprocessor: PREPROCESSOR_FILE.into(),
                targets: entries,
            },
        )
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<ModelBundle> {
        let dir = dir.as_ref();
        let manifest: BundleManifest = read_json(&dir.join(MANIFEST_FILE))?;
        if manifest.format != MODEL_FORMAT || manifest.version != MODEL_FORMAT_VERSION {
            return Err(Error::Artifact(format!(
                "unsupported model artifact {} v{}",
                manifest.format, manifest.version
            )));
        }
        let preprocessor = Preprocessor::load(dir.join(&manifest.preprocessor))?;
        let mut targets = Vec::new();
        for entry in manifest.targets {
            let mut members = Vec::new();
            for r in &entry.members {
                let file: MemberFile = read_json(&dir.join(&r.file))?;
                if file.format != MEMBER_FORMAT || file.version != MODEL_FORMAT_VERSION {
                    return Err(Error::Artifact(format!("unsupported member file {}", r.file)));
                }
                members.push(file.member);
            }
            let model = match entry.aggregation {
                None => {
                    let [only]: [MemberModel; 1] = members
                        .try_into()
                        .map_err(|_| Error::Artifact(format!("target {} needs exactly one member", entry.name)))?;
                    FittedModel::Single(only)
                }
                Some(aggregation) => {
                    if members.is_empty() || entry.validation_scores.len() != members.len() {
                        return Err(Error::Artifact(format!("ensemble for {} is malformed", entry.name)));
                    }
                    FittedModel::Ensemble(EnsembleModel {
                        members,
                        aggregation,
                        validation_scores: entry.validation_scores,
                    })
                }
            };
            targets.push(TargetModel {
                name: entry.name,
                spec: entry.spec,
                model,
            });
        }
        Ok(ModelBundle {
            kind: manifest.kind,
            preprocessor,
            targets,
        })
    }
}
