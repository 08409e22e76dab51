//! Ordered target statistics and the categorical boosting model built on
//! them.

use tabens::catboost::{fit_catboost_style, ordered_target_encode, CatBoostStyleParams};
use tabens::data::{grouped_split, DEFAULT_RATIOS};
use tabens::gbdt::GbdtParams;
use tabens::metrics::r2;
use tabens::preprocess::{fit_preprocessor, PreprocessConfig};
use tabens::synth::{generate, SyntheticConfig, ESG_TARGET};

fn main() -> tabens::Result<()> {
    let cats = ["a", "b", "a", "a", "b", "c"];
    let y = [10.0, 0.0, 20.0, 30.0, 4.0, 7.0];
    let order = [0, 1, 2, 3, 4, 5];
    let prior = y.iter().sum::<f64>() / y.len() as f64;
    let ts = ordered_target_encode(&cats, &y, &order, prior, 1.0);
    for ((c, t), e) in cats.iter().zip(y).zip(&ts) {
        println!("{c}  y={t:5.1}  ts={e:6.3}");
    }

    let data = generate(&SyntheticConfig {
        n_companies: 300,
        ..SyntheticConfig::default()
    })?;
    let (train, val, test) = grouped_split(&data.table, DEFAULT_RATIOS, 5)?.apply(&data.table)?;
    let prep = fit_preprocessor(&train, PreprocessConfig::default())?;
    for max_onehot in [1, 255] {
        let params = CatBoostStyleParams {
            gbdt: GbdtParams {
                n_trees: 400,
                learning_rate: 0.05,
                ..CatBoostStyleParams::default().gbdt
            },
            max_onehot,
            seed: 11,
            ..CatBoostStyleParams::default()
        };
        let model = fit_catboost_style(&train, Some(&val), &prep, ESG_TARGET, &params)?;
        let pred = model.predict(&prep, &test)?;
        let truth = test.continuous_target(ESG_TARGET)?;
        println!(
            "max_onehot {max_onehot:>3}: test R² {:.3}",
            r2(&truth, pred.continuous()?)?
        );
    }
    Ok(())
}
