//! Validation-driven grid search over the gradient-boosting family.

use tabens::data::{grouped_split, DEFAULT_RATIOS};
use tabens::gridsearch::{grid_search, Family, Grid};
use tabens::preprocess::{fit_preprocessor, PreprocessConfig};
use tabens::synth::{generate, SyntheticConfig, ESG_TARGET};
use tabens::workers::WorkerPool;

const GRID: &str = r#"{
    "max_depth": [2, 4, 6],
    "learning_rate": [0.05, 0.1],
    "n_trees": [100]
}"#;

fn main() -> tabens::Result<()> {
    let data = generate(&SyntheticConfig {
        n_companies: 250,
        ..SyntheticConfig::default()
    })?;
    let (train, val, _) = grouped_split(&data.table, DEFAULT_RATIOS, 6)?.apply(&data.table)?;
    let prep = fit_preprocessor(&train, PreprocessConfig::default())?;
    let grid = Grid::from_json(Family::XgboostStyle, GRID)?;
    let pool = WorkerPool::new(WorkerPool::default_size())?;
    let outcome = grid_search(&grid, &train, &val, &prep, ESG_TARGET, 42, &pool)?;
    for arm in &outcome.log.arms {
        let params: Vec<String> = arm.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!(
            "{:2} {:<70} {:.2}",
            arm.index,
            params.join(" "),
            arm.validation_metric.unwrap_or(f64::NAN)
        );
    }
    let best = outcome.log.best_manifest();
    println!(
        "best arm {} ({} {:.2})",
        best.best_arm, best.metric, best.validation_metric
    );
    let dir = std::env::temp_dir().join("tabens-gridsearch");
    std::fs::create_dir_all(&dir).map_err(|e| tabens::Error::io(&dir, e))?;
    outcome.log.write_csv(dir.join("gridsearch_log.csv"))?;
    println!("log written to {}", dir.display());
    Ok(())
}
