//! Save a trained bundle, reload it and score companies it never saw.

use tabens::data::{grouped_split, DEFAULT_RATIOS};
use tabens::models::{ModelBundle, ModelKind, TrainConfig};
use tabens::nn::NnConfig;
use tabens::preprocess::{fit_preprocessor, PreprocessConfig};
use tabens::synth::{generate, SyntheticConfig, CONTINUOUS_TARGETS};
use tabens::task::Predictions;
use tabens::workers::WorkerPool;

fn main() -> tabens::Result<()> {
    let data = generate(&SyntheticConfig {
        n_companies: 200,
        ..SyntheticConfig::default()
    })?;
    let (train, val, test) = grouped_split(&data.table, DEFAULT_RATIOS, 3)?.apply(&data.table)?;
    let prep = fit_preprocessor(&train, PreprocessConfig::default())?;
    let mut cfg = TrainConfig {
        nn: NnConfig {
            hidden_widths: vec![16],
            learning_rate: 0.05,
            max_epochs: 50,
            ..NnConfig::default()
        },
        ..TrainConfig::default()
    };
    cfg.catboost.gbdt.n_trees = 500;
    cfg.catboost.gbdt.learning_rate = 0.05;
    let targets: Vec<String> = CONTINUOUS_TARGETS.iter().map(|t| t.to_string()).collect();
    let pool = WorkerPool::new(WorkerPool::default_size())?;
    let bundle = ModelBundle::fit(ModelKind::Hetero, &train, Some(&val), &prep, &targets, &cfg, &pool)?;

    let dir = std::env::temp_dir().join("tabens-hetero");
    bundle.save(&dir)?;
    let reloaded = ModelBundle::load(&dir)?;
    assert_eq!(reloaded, bundle);

    let unseen = test.without_targets();
    for (name, out) in reloaded.predict(&unseen)? {
        if let Predictions::Continuous(v) = &out.combined {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            println!(
                "{name:>10}: {} predictions in [{lo:.1}, {hi:.1}], {} members",
                v.len(),
                out.members.len()
            );
        }
    }
    println!("bundle at {}", dir.display());
    Ok(())
}
