//! Command-line front end. Every artifact-producing command writes into an
//! output directory and finishes with a `run_manifest.json` listing the
//! SHA-256 of each artifact.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::benchmark::{render_table, run_benchmark, BenchmarkConfig};
use crate::data::{
    grouped_split, load_csv, load_csv_for_inference, save_csv, DataTable, FeatureSchema, Partition, SplitAssignment,
    TargetSpec, DEFAULT_RATIOS,
};
use crate::error::{Error, Result};
use crate::gridsearch::{grid_search, Family, Grid};
use crate::metrics::MetricsReport;
use crate::models::{FittedModel, ModelBundle, ModelKind, TargetModel, TrainConfig};
use crate::preprocess::{fit_preprocessor, EncodedTable, Encoding, PreprocessConfig, Preprocessor};
use crate::synth::{generate, SyntheticConfig};
use crate::task::{Predictions, Targets};
use crate::workers::WorkerPool;

pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

/// Exit code for data, config and model errors. Usage errors exit with 2.
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tabens", version, about = "Tabular ensembles for 0-100 rating prediction")]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, env = "TABENS_SEED", default_value_t = 42, global = true)]
    pub seed: u64,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic panel with planted ground truth.
    Synth {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// JSON file with SyntheticConfig overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n_companies: Option<usize>,
    },
    /// Assign companies to train/validation/test.
    Split {
        #[command(flatten)]
        data: DataArgs,
        /// Fractions of observations, e.g. `0.6,0.2,0.2`.
        #[arg(long, value_delimiter = ',', num_args = 3)]
        ratios: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the preprocessor on the training partition and encode all three.
    Preprocess {
        #[command(flatten)]
        data: DataArgs,
        /// `split.csv` written by `split`.
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one or more model kinds on every (or the selected) target.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        split: PathBuf,
        /// nn, catboost, xgboost, nn-ensemble, hetero, industry-mean, linear.
        #[arg(long, value_delimiter = ',', required = true)]
        model: Vec<String>,
        /// Subset of target names; all targets when absent.
        #[arg(long, value_delimiter = ',')]
        targets: Option<Vec<String>>,
        /// Preprocessor JSON; fitted on the training partition when absent.
        #[arg(long)]
        preprocessor: Option<PathBuf>,
        /// JSON file with TrainConfig overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid search one model family on the validation partition.
    Gridsearch {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        split: PathBuf,
        /// nn, catboost-style or xgboost-style.
        #[arg(long)]
        family: String,
        /// JSON grid: one list of values per axis.
        #[arg(long)]
        grid: PathBuf,
        /// Target to tune on.
        #[arg(long)]
        target: String,
        #[arg(long)]
        preprocessor: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a trained model: one metrics report per target.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: PathBuf,
        /// Restrict to one partition of this split file.
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        partition: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict every target of a trained model; targets may be absent.
    Predict {
        #[command(flatten)]
        data: DataArgs,
        /// Model directory written by `train` or `gridsearch`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthetic end-to-end comparison of every model family.
    Benchmark {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Schema JSON; defaults to `schema.json` next to the dataset.
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

impl DataArgs {
    fn schema(&self) -> Result<FeatureSchema> {
        FeatureSchema::load(self.schema_path())
    }

    fn schema_path(&self) -> PathBuf {
        self.schema
            .clone()
            .unwrap_or_else(|| self.data.parent().unwrap_or(Path::new(".")).join("schema.json"))
    }

    fn load(&self) -> Result<DataTable> {
        load_csv(&self.data, &self.schema()?)
    }

    fn inputs(&self) -> Vec<PathBuf> {
        vec![self.data.clone(), self.schema_path()]
    }
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    seed: u64,
    inputs: BTreeMap<String, String>,
    artifacts: BTreeMap<String, String>,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else if p != root.join(RUN_MANIFEST_FILE) {
            out.push(p);
        }
    }
    Ok(())
}

/// Hashes every file under `out_dir` (relative, `/`-separated paths) and
/// the named inputs (by file name). No paths or timestamps are recorded.
fn write_run_manifest(out_dir: &Path, command: &str, seed: u64, inputs: &[PathBuf]) -> Result<()> {
    let mut files = Vec::new();
    collect_files(out_dir, out_dir, &mut files)?;
    let mut artifacts = BTreeMap::new();
    for f in files {
        let rel = f.strip_prefix(out_dir).expect("collected under out_dir");
        let key = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        artifacts.insert(key, sha256_file(&f)?);
    }
    let mut input_hashes = BTreeMap::new();
    for p in inputs {
        let name = p
            .file_name()
            .map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
        input_hashes.insert(name, sha256_file(p)?);
    }
    let manifest = RunManifest {
        command: command.into(),
        seed,
        inputs: input_hashes,
        artifacts,
    };
    let path = out_dir.join(RUN_MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn read_json_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn split_tables(data: &DataArgs, split: &Path) -> Result<(DataTable, DataTable, DataTable, SplitAssignment)> {
    let table = data.load()?;
    let assignment = SplitAssignment::load_csv(split, &table)?;
    let (train, val, test) = assignment.apply(&table)?;
    Ok((train, val, test, assignment))
}

fn preprocessor_for(path: Option<&Path>, train: &DataTable) -> Result<Preprocessor> {
    match path {
        Some(p) => Preprocessor::load(p),
        None => fit_preprocessor(train, PreprocessConfig::default()),
    }
}

fn write_encoded(enc: &EncodedTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["company_id".to_string(), "year".into()];
    header.extend(enc.column_names.iter().cloned());
    w.write_record(&header)?;
    for (r, row) in enc.numeric.rows().into_iter().enumerate() {
        let mut rec = vec![enc.companies[r].clone(), enc.years[r].to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn cell(p: &Predictions, row: usize, spec: &TargetSpec) -> String {
    match (p, spec) {
        (Predictions::Continuous(v), _) => v[row].to_string(),
        (Predictions::Classes { labels, .. }, TargetSpec::Categorical { classes }) => classes[labels[row]].clone(),
        (Predictions::Classes { labels, .. }, _) => labels[row].to_string(),
    }
}

/// Writes `company_id, year`, one column per target and one
/// `<target>:<member>` column per ensemble member.
pub fn write_predictions(bundle: &ModelBundle, table: &DataTable, path: &Path) -> Result<()> {
    let outputs = bundle.predict(table)?;
    let specs: BTreeMap<&str, &TargetSpec> = bundle.targets.iter().map(|t| (t.name.as_str(), &t.spec)).collect();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["company_id".to_string(), "year".into()];
    for (name, out) in &outputs {
        header.push(name.clone());
        if out.members.len() > 1 {
            header.extend(out.members.iter().map(|(m, _)| format!("{name}:{m}")));
        }
    }
    w.write_record(&header)?;
    for (r, row) in table.rows().iter().enumerate() {
        let mut rec = vec![row.company.clone(), row.year.to_string()];
        for (name, out) in &outputs {
            let spec = specs[name.as_str()];
            rec.push(cell(&out.combined, r, spec));
            if out.members.len() > 1 {
                rec.extend(out.members.iter().map(|(_, p)| cell(p, r, spec)));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn parse_partition(s: &str) -> Result<Partition> {
    match s {
        "train" => Ok(Partition::Train),
        "val" | "validation" => Ok(Partition::Validation),
        "test" => Ok(Partition::Test),
        _ => Err(Error::Config(format!(
            "unknown partition {s:?}; expected train, val or test"
        ))),
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn pool_of(workers: Option<usize>) -> Result<WorkerPool> {
    WorkerPool::new(workers.unwrap_or_else(WorkerPool::default_size))
}

/// Runs one parsed command.
pub fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Synth {
            out,
            config,
            n_companies,
        } => {
            let mut cfg: SyntheticConfig = match &config {
                Some(p) => read_json_file(p)?,
                None => SyntheticConfig::default(),
            };
            cfg.seed = seed;
            if let Some(n) = n_companies {
                cfg.n_companies = n;
            }
            create_dir(&out)?;
            let data = generate(&cfg)?;
            save_csv(&data.table, out.join("data.csv"))?;
            data.table.schema().save(out.join("schema.json"))?;
            data.truth.save(out.join("ground_truth.json"))?;
            write_run_manifest(&out, "synth", seed, &config.into_iter().collect::<Vec<_>>())
        }
        Command::Split { data, ratios, out } => {
            let table = data.load()?;
            let ratios = match ratios {
                Some(r) => [r[0], r[1], r[2]],
                None => DEFAULT_RATIOS,
            };
            create_dir(&out)?;
            grouped_split(&table, ratios, seed)?.save_csv(&table, out.join("split.csv"))?;
            write_run_manifest(&out, "split", seed, &data.inputs())
        }
        Command::Preprocess { data, split, out } => {
            let (train, val, test, _) = split_tables(&data, &split)?;
            let prep = fit_preprocessor(&train, PreprocessConfig::default())?;
            create_dir(&out)?;
            prep.save(out.join("preprocessor.json"))?;
            for (name, part) in [("train", &train), ("val", &val), ("test", &test)] {
                write_encoded(
                    &prep.transform(part, Encoding::OneHot)?,
                    &out.join(format!("{name}_encoded.csv")),
                )?;
            }
            let mut inputs = data.inputs();
            inputs.push(split);
            write_run_manifest(&out, "preprocess", seed, &inputs)
        }
        Command::Train {
            data,
            split,
            model,
            targets,
            preprocessor,
            config,
            out,
        } => {
            let kinds = model
                .iter()
                .map(|m| m.parse::<ModelKind>())
                .collect::<Result<Vec<_>>>()?;
            let mut cfg: TrainConfig = match &config {
                Some(p) => read_json_file(p)?,
                None => TrainConfig::default(),
            };
            cfg.seed = seed;
            let (train, val, _, _) = split_tables(&data, &split)?;
            let prep = preprocessor_for(preprocessor.as_deref(), &train)?;
            let targets =
                targets.unwrap_or_else(|| train.schema().target_columns.iter().map(|(n, _)| n.clone()).collect());
            let pool = pool_of(cli.workers)?;
            let val = (!val.is_empty()).then_some(&val);
            create_dir(&out)?;
            for kind in &kinds {
                let bundle = ModelBundle::fit(*kind, &train, val, &prep, &targets, &cfg, &pool)?;
                let dir = if kinds.len() == 1 {
                    out.clone()
                } else {
                    out.join(kind.as_str())
                };
                bundle.save(dir)?;
            }
            let mut inputs = data.inputs();
            inputs.push(split);
            inputs.extend(preprocessor);
            inputs.extend(config);
            write_run_manifest(&out, "train", seed, &inputs)
        }
        Command::Gridsearch {
            data,
            split,
            family,
            grid,
            target,
            preprocessor,
            out,
        } => {
            let family: Family = family.parse()?;
            let text = fs::read_to_string(&grid).map_err(|e| Error::io(&grid, e))?;
            let parsed = Grid::from_json(family, &text)?;
            let (train, val, _, _) = split_tables(&data, &split)?;
            let prep = preprocessor_for(preprocessor.as_deref(), &train)?;
            let pool = pool_of(cli.workers)?;
            let outcome = grid_search(&parsed, &train, &val, &prep, &target, seed, &pool)?;
            for arm in &outcome.log.arms {
                if let Some(err) = &arm.error {
                    eprintln!("arm {} failed: {err}", arm.index);
                }
            }
            create_dir(&out)?;
            outcome.log.write_csv(out.join("gridsearch_log.csv"))?;
            let manifest = serde_json::to_string_pretty(&outcome.log.best_manifest())? + "\n";
            let path = out.join("best_arm.json");
            fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
            let (_, spec) = train.schema().target(&target)?;
            let kind = match family {
                Family::Nn => ModelKind::Nn,
                Family::CatboostStyle => ModelKind::Catboost,
                Family::XgboostStyle => ModelKind::Xgboost,
            };
            ModelBundle {
                kind,
                preprocessor: prep,
                targets: vec![TargetModel {
                    name: target.clone(),
                    spec: spec.clone(),
                    model: FittedModel::Single(outcome.best),
                }],
            }
            .save(out.join("best_model"))?;
            let mut inputs = data.inputs();
            inputs.extend([split, grid]);
            inputs.extend(preprocessor);
            write_run_manifest(&out, "gridsearch", seed, &inputs)
        }
        Command::Evaluate {
            data,
            model,
            split,
            partition,
            out,
        } => {
            let bundle = ModelBundle::load(&model)?;
            let mut table = data.load()?;
            if let Some(split) = &split {
                let assignment = SplitAssignment::load_csv(split, &table)?;
                table = table.select(&assignment.indices(parse_partition(&partition)?));
            }
            let mut reports = BTreeMap::new();
            for (name, output) in bundle.predict(&table)? {
                let truth = Targets::from_table(&table, &name)?;
                reports.insert(name, MetricsReport::evaluate(&truth, &output.combined)?);
            }
            create_dir(&out)?;
            let path = out.join("metrics.json");
            fs::write(&path, serde_json::to_string_pretty(&reports)? + "\n").map_err(|e| Error::io(&path, e))?;
            emit(&(serde_json::to_string_pretty(&reports)? + "\n"));
            let mut inputs = data.inputs();
            inputs.extend(split);
            write_run_manifest(&out, "evaluate", seed, &inputs)
        }
        Command::Predict { data, model, out } => {
            let bundle = ModelBundle::load(&model)?;
            let table = load_csv_for_inference(&data.data, &data.schema()?)?;
            create_dir(&out)?;
            write_predictions(&bundle, &table, &out.join("predictions.csv"))?;
            write_run_manifest(&out, "predict", seed, &data.inputs())
        }
        Command::Benchmark { out } => {
            let pool = pool_of(cli.workers)?;
            let cfg = BenchmarkConfig::new(seed);
            let results = run_benchmark(&cfg, &out, &pool, &mut |line| eprintln!("{line}"))?;
            emit(&render_table(&results, &cfg.targets));
            write_run_manifest(&out, "benchmark", seed, &[])
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}
