//! Feed-forward network with categorical embeddings.

use tabens::data::{grouped_split, DEFAULT_RATIOS};
use tabens::gbdt::EarlyStopping;
use tabens::metrics::MetricsReport;
use tabens::models::fit_nn;
use tabens::nn::{Activation, EmbeddingChoice, EmbeddingSize, NnConfig};
use tabens::preprocess::{fit_preprocessor, Encoding, PreprocessConfig};
use tabens::synth::{generate, SyntheticConfig, CONTROVERSY_TARGET, ESG_TARGET};
use tabens::task::Targets;

fn main() -> tabens::Result<()> {
    let data = generate(&SyntheticConfig {
        n_companies: 300,
        ..SyntheticConfig::default()
    })?;
    let (train, val, test) = grouped_split(&data.table, DEFAULT_RATIOS, 2)?.apply(&data.table)?;
    let prep = fit_preprocessor(&train, PreprocessConfig::default())?;
    let cfg = NnConfig {
        hidden_widths: vec![64, 32],
        activation: Activation::LeakyRelu,
        dropout: 0.1,
        learning_rate: 0.05,
        l2_rate: 1e-4,
        max_epochs: 200,
        early_stopping: EarlyStopping::Patience(20),
        embeddings: EmbeddingChoice::All,
        embedding_size: EmbeddingSize::TenPercent,
        ..NnConfig::default()
    };
    for target in [ESG_TARGET, CONTROVERSY_TARGET] {
        let model = fit_nn(&train, Some(&val), &prep, target, &cfg, 9)?;
        let pred = model.predict_encoded(&prep.transform(&test, Encoding::Passthrough)?)?;
        let report = MetricsReport::evaluate(&Targets::from_table(&test, target)?, &pred)?;
        println!(
            "{target}: {} parameters, best epoch {:?} of {}, test {}",
            model.n_parameters(),
            model.best_epoch,
            model.validation_history.len(),
            serde_json::to_string(&report)?
        );
    }
    Ok(())
}
