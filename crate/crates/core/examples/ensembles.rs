//! Median and majority-vote aggregation, then a heterogeneous ensemble of
//! the three model families.

use tabens::data::{grouped_split, DEFAULT_RATIOS};
use tabens::gbdt::GbdtParams;
use tabens::metrics::{mae, r2};
use tabens::models::{fit_heterogeneous, majority_vote, median_aggregate, TrainConfig};
use tabens::nn::NnConfig;
use tabens::preprocess::{fit_preprocessor, PreprocessConfig};
use tabens::synth::{generate, SyntheticConfig, ESG_TARGET};
use tabens::workers::WorkerPool;

fn main() -> tabens::Result<()> {
    let members = vec![vec![10.0, 50.0], vec![20.0, 40.0], vec![90.0, 45.0]];
    println!("median of three: {:?}", median_aggregate(&members));
    let votes = vec![vec![0, 1], vec![1, 2], vec![2, 2]];
    println!(
        "votes with losses [0.3, 0.1, 0.2]: {:?}",
        majority_vote(&votes, &[0.3, 0.1, 0.2])
    );

    let data = generate(&SyntheticConfig {
        n_companies: 300,
        ..SyntheticConfig::default()
    })?;
    let (train, val, test) = grouped_split(&data.table, DEFAULT_RATIOS, 4)?.apply(&data.table)?;
    let prep = fit_preprocessor(&train, PreprocessConfig::default())?;
    let mut cfg = TrainConfig {
        nn: NnConfig {
            hidden_widths: vec![32, 16],
            learning_rate: 0.05,
            max_epochs: 100,
            ..NnConfig::default()
        },
        xgboost: GbdtParams {
            max_depth: 4,
            ..GbdtParams::default()
        },
        ..TrainConfig::default()
    };
    cfg.catboost.gbdt.n_trees = 1500;
    cfg.catboost.gbdt.learning_rate = 0.03;
    let pool = WorkerPool::new(WorkerPool::default_size())?;
    let ensemble = fit_heterogeneous(&train, Some(&val), &prep, ESG_TARGET, &cfg, &pool)?;

    let truth = test.continuous_target(ESG_TARGET)?;
    for (member, preds) in ensemble.members.iter().zip(ensemble.predict_members(&prep, &test)?) {
        let p = preds.continuous()?;
        println!(
            "{:>14}: R² {:.3}  MAE {:.2}",
            member.kind_name(),
            r2(&truth, p)?,
            mae(&truth, p)?
        );
    }
    let combined = ensemble.predict(&prep, &test)?;
    let p = combined.continuous()?;
    println!("{:>14}: R² {:.3}  MAE {:.2}", "median", r2(&truth, p)?, mae(&truth, p)?);
    Ok(())
}
