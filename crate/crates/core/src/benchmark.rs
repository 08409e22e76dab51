//! End-to-end comparison on the synthetic panel: every model family on every
//! target, scored on a company-disjoint test split.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{grouped_split, save_csv, DataTable, DEFAULT_RATIOS};
use crate::error::{Error, Result};
use crate::gbdt::EarlyStopping;
use crate::metrics::MetricsReport;
use crate::models::{
    clamp_to_spec, fit_industry_mean, fit_linear, fit_model, FittedModel, MemberModel, ModelBundle, ModelKind,
    TargetModel, TrainConfig,
};
use crate::nn::{Activation, EmbeddingChoice, EmbeddingSize, NnConfig};
use crate::preprocess::{fit_preprocessor, PreprocessConfig, Preprocessor};
use crate::synth::{generate, SyntheticConfig, CONTINUOUS_TARGETS, CONTROVERSY_TARGET, INDUSTRY_FEATURE};
use crate::task::{Predictions, Targets};
use crate::workers::WorkerPool;

/// Row labels of the comparison table, in display order.
pub const BENCHMARK_MODELS: [&str; 7] = [
    "hetero",
    "nn_ensemble",
    "catboost",
    "xgboost",
    "nn",
    "linear",
    "industry_mean",
];

/// Members reported individually (taken from the heterogeneous ensemble).
pub const HETERO_MEMBERS: [&str; 3] = ["catboost", "xgboost", "nn"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub seed: u64,
    pub synthetic: SyntheticConfig,
    pub ratios: [f64; 3],
    pub train: TrainConfig,
    pub targets: Vec<String>,
}

/// Network used by the benchmark: the tuned layout scaled down to desk size.
pub fn benchmark_nn_config() -> NnConfig {
    NnConfig {
        hidden_widths: vec![32, 16],
        activation: Activation::LeakyRelu,
        dropout: 0.1,
        batch_norm: true,
        l2_rate: 1e-4,
        l1_rate: 0.0,
        learning_rate: 0.05,
        max_epochs: 100,
        batch_size: 256,
        early_stopping: EarlyStopping::Patience(15),
        embeddings: EmbeddingChoice::All,
        embedding_size: EmbeddingSize::TenPercent,
    }
}

impl BenchmarkConfig {
    pub fn new(seed: u64) -> Self {
        let mut train = TrainConfig {
            seed,
            nn: benchmark_nn_config(),
            industry_feature: INDUSTRY_FEATURE.into(),
            ..TrainConfig::default()
        };
        train.catboost.seed = seed;
        let mut targets: Vec<String> = CONTINUOUS_TARGETS.iter().map(|t| t.to_string()).collect();
        targets.push(CONTROVERSY_TARGET.into());
        BenchmarkConfig {
            seed,
            synthetic: SyntheticConfig {
                seed,
                ..SyntheticConfig::default()
            },
            ratios: DEFAULT_RATIOS,
            train,
            targets,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub target: String,
    pub model: String,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResults {
    pub seed: u64,
    pub n_rows: [usize; 3],
    pub bayes_r2: BTreeMap<String, f64>,
    pub rows: Vec<ResultRow>,
}

impl BenchmarkResults {
    pub fn report(&self, target: &str, model: &str) -> Option<&MetricsReport> {
        self.rows
            .iter()
            .find(|r| r.target == target && r.model == model)
            .map(|r| &r.report)
    }
}

pub const DATA_FILE: &str = "data.csv";
pub const SCHEMA_FILE: &str = "schema.json";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const SPLIT_FILE: &str = "split.csv";
pub const PREPROCESSOR_FILE: &str = "preprocessor.json";
pub const PREDICTIONS_FILE: &str = "test_predictions.csv";
pub const RESULTS_FILE: &str = "results.json";
pub const TABLE_FILE: &str = "results.md";
pub const MODELS_DIR: &str = "models";

/// Per target: test predictions of every benchmark model, clamped.
type TargetPredictions = Vec<(String, Predictions)>;

fn bundle_of(kind: ModelKind, prep: &Preprocessor, fitted: Vec<TargetModel>) -> ModelBundle {
    ModelBundle {
        kind,
        preprocessor: prep.clone(),
        targets: fitted,
    }
}

fn label_or_value(p: &Predictions, row: usize, classes: Option<&[String]>) -> String {
    match (p, classes) {
        (Predictions::Continuous(v), _) => format!("{}", v[row]),
        (Predictions::Classes { labels, .. }, Some(c)) => c[labels[row]].clone(),
        (Predictions::Classes { labels, .. }, None) => labels[row].to_string(),
    }
}

fn write_predictions(
    path: &Path,
    test: &DataTable,
    targets: &[String],
    preds: &BTreeMap<String, TargetPredictions>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Artifact(format!("{}: {e}", path.display())))?;
    let mut header = vec!["company_id".to_string(), "year".into(), "target".into(), "truth".into()];
    header.extend(BENCHMARK_MODELS.iter().map(|m| m.to_string()));
    w.write_record(&header)?;
    for name in targets {
        let (_, spec) = test.schema().target(name)?;
        let classes = match spec {
            crate::data::TargetSpec::Categorical { classes } => Some(classes.as_slice()),
            _ => None,
        };
        let truth = Targets::from_table(test, name)?;
        let by_model: BTreeMap<&str, &Predictions> = preds[name].iter().map(|(m, p)| (m.as_str(), p)).collect();
        for (r, row) in test.rows().iter().enumerate() {
            let mut rec = vec![row.company.clone(), row.year.to_string(), name.clone()];
            rec.push(match &truth {
                Targets::Continuous(v) => format!("{}", v[r]),
                Targets::Classes { labels, .. } => classes.map_or(labels[r].to_string(), |c| c[labels[r]].clone()),
            });
            for m in BENCHMARK_MODELS {
                rec.push(by_model.get(m).map_or(String::new(), |p| label_or_value(p, r, classes)));
            }
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Markdown comparison table: models x targets, R² and MAE (accuracy and
/// F1 for the categorical target).
pub fn render_table(results: &BenchmarkResults, targets: &[String]) -> String {
    let mut out = String::new();
    let _ = write!(out, "| model |");
    for t in targets {
        if t == CONTROVERSY_TARGET {
            let _ = write!(out, " {t} acc | {t} F1 |");
        } else {
            let _ = write!(out, " {t} R² | {t} MAE |");
        }
    }
    out.push('\n');
    out.push_str("|---|");
    for _ in targets {
        out.push_str("---:|---:|");
    }
    out.push('\n');
    for m in BENCHMARK_MODELS {
        let _ = write!(out, "| {m} |");
        for t in targets {
            match results.report(t, m) {
                Some(MetricsReport::Regression { r2, mae, .. }) => {
                    let _ = write!(out, " {r2:.3} | {mae:.2} |");
                }
                Some(MetricsReport::Classification { accuracy, f1, .. }) => {
                    let _ = write!(out, " {accuracy:.3} | {f1:.3} |");
                }
                None => out.push_str(" - | - |"),
            }
        }
        out.push('\n');
    }
    let _ = write!(out, "| bayes ceiling |");
    for t in targets {
        match results.bayes_r2.get(t) {
            Some(b) => {
                let _ = write!(out, " {b:.3} | - |");
            }
            None => out.push_str(" - | - |"),
        }
    }
    out.push('\n');
    out
}

/// Runs the whole pipeline and writes every artifact under `out_dir`.
/// `log` receives human-readable progress lines (with timings); artifacts
/// never contain timings.
pub fn run_benchmark(
    cfg: &BenchmarkConfig,
    out_dir: &Path,
    pool: &WorkerPool,
    log: &mut dyn FnMut(&str),
) -> Result<BenchmarkResults> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let started = Instant::now();
    let data = generate(&cfg.synthetic)?;
    save_csv(&data.table, out_dir.join(DATA_FILE))?;
    data.table.schema().save(out_dir.join(SCHEMA_FILE))?;
    data.truth.save(out_dir.join(GROUND_TRUTH_FILE))?;
    let split = grouped_split(&data.table, cfg.ratios, cfg.seed)?;
    split.save_csv(&data.table, out_dir.join(SPLIT_FILE))?;
    let (train, val, test) = split.apply(&data.table)?;
    let prep = fit_preprocessor(&train, PreprocessConfig::default())?;
    prep.save(out_dir.join(PREPROCESSOR_FILE))?;
    log(&format!(
        "generated {} rows ({} / {} / {}) in {:.1}s",
        data.table.len(),
        train.len(),
        val.len(),
        test.len(),
        started.elapsed().as_secs_f64()
    ));

    let mut fitted: BTreeMap<ModelKind, Vec<TargetModel>> = BTreeMap::new();
    let mut preds: BTreeMap<String, TargetPredictions> = BTreeMap::new();
    let mut rows = Vec::new();
    for name in &cfg.targets {
        let (_, spec) = train.schema().target(name)?;
        let truth = Targets::from_table(&test, name)?;
        let mut target_preds: TargetPredictions = Vec::new();
        for kind in [
            ModelKind::Hetero,
            ModelKind::NnEnsemble,
            ModelKind::Linear,
            ModelKind::IndustryMean,
        ] {
            let t0 = Instant::now();
            let model = match kind {
                ModelKind::Linear => FittedModel::Single(MemberModel::Linear(fit_linear(&train, &prep, name)?)),
                ModelKind::IndustryMean => FittedModel::Single(MemberModel::IndustryMean(fit_industry_mean(
                    &train,
                    name,
                    &cfg.train.industry_feature,
                )?)),
                _ => fit_model(kind, &train, Some(&val), &prep, name, &cfg.train, pool)?,
            };
            let out = model.predict_detailed(&prep, &test)?;
            let label = match kind {
                ModelKind::NnEnsemble => "nn_ensemble",
                ModelKind::IndustryMean => "industry_mean",
                other => other.as_str(),
            };
            target_preds.push((label.to_string(), clamp_to_spec(out.combined, spec)));
            if kind == ModelKind::Hetero {
                for ((_, p), member) in out.members.into_iter().zip(HETERO_MEMBERS) {
                    target_preds.push((member.to_string(), clamp_to_spec(p, spec)));
                }
            }
            log(&format!("{name}: {label} fitted in {:.1}s", t0.elapsed().as_secs_f64()));
            fitted.entry(kind).or_default().push(TargetModel {
                name: name.clone(),
                spec: spec.clone(),
                model,
            });
        }
        target_preds.sort_by_key(|(m, _)| BENCHMARK_MODELS.iter().position(|x| x == m));
        for (model, p) in &target_preds {
            rows.push(ResultRow {
                target: name.clone(),
                model: model.clone(),
                report: MetricsReport::evaluate(&truth, p)?,
            });
        }
        preds.insert(name.clone(), target_preds);
    }

    let models_dir = out_dir.join(MODELS_DIR);
    for (kind, targets) in fitted {
        bundle_of(kind, &prep, targets).save(models_dir.join(kind.as_str()))?;
    }
    write_predictions(&out_dir.join(PREDICTIONS_FILE), &test, &cfg.targets, &preds)?;
    let results = BenchmarkResults {
        seed: cfg.seed,
        n_rows: [train.len(), val.len(), test.len()],
        bayes_r2: data.truth.bayes_r2.clone(),
        rows,
    };
    let json = serde_json::to_string_pretty(&results)?;
    let path = out_dir.join(RESULTS_FILE);
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    let path = out_dir.join(TABLE_FILE);
    fs::write(&path, render_table(&results, &cfg.targets)).map_err(|e| Error::io(&path, e))?;
    log(&format!(
        "benchmark finished in {:.1}s",
        started.elapsed().as_secs_f64()
    ));
    Ok(results)
}
