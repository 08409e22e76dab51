//! The two reference baselines: per-industry means and least squares.

use tabens::data::{grouped_split, DEFAULT_RATIOS};
use tabens::metrics::MetricsReport;
use tabens::models::{fit_industry_mean, fit_linear};
use tabens::preprocess::{fit_preprocessor, PreprocessConfig};
use tabens::synth::{generate, SyntheticConfig, CONTROVERSY_TARGET, ESG_TARGET, G_TARGET, INDUSTRY_FEATURE};
use tabens::task::Targets;

fn main() -> tabens::Result<()> {
    let data = generate(&SyntheticConfig {
        n_companies: 400,
        ..SyntheticConfig::default()
    })?;
    let (train, _, test) = grouped_split(&data.table, DEFAULT_RATIOS, 8)?.apply(&data.table)?;
    let prep = fit_preprocessor(&train, PreprocessConfig::default())?;
    for target in [ESG_TARGET, G_TARGET, CONTROVERSY_TARGET] {
        let truth = Targets::from_table(&test, target)?;
        let industry = fit_industry_mean(&train, target, INDUSTRY_FEATURE)?;
        let linear = fit_linear(&train, &prep, target)?;
        let a = MetricsReport::evaluate(&truth, &industry.predict(&test)?)?;
        let b = MetricsReport::evaluate(&truth, &linear.predict(&prep, &test)?)?;
        println!("{target}");
        println!("  industry mean: {}", serde_json::to_string(&a)?);
        println!(
            "  linear ({} columns): {}",
            linear.column_names.len(),
            serde_json::to_string(&b)?
        );
    }
    Ok(())
}
