//! Fit the preprocessing pipeline on the training partition only, then
//! encode every partition with the frozen statistics.

use tabens::data::{grouped_split, DEFAULT_RATIOS};
use tabens::preprocess::{fit_preprocessor, Encoding, PreprocessConfig};
use tabens::synth::{generate, SyntheticConfig};

fn main() -> tabens::Result<()> {
    let data = generate(&SyntheticConfig {
        n_companies: 150,
        ..SyntheticConfig::default()
    })?;
    let (train, val, test) = grouped_split(&data.table, DEFAULT_RATIOS, 1)?.apply(&data.table)?;
    let prep = fit_preprocessor(&train, PreprocessConfig::default())?;

    let dropped: Vec<&String> = prep
        .feature_names
        .iter()
        .filter(|f| !prep.kept_features.contains(f))
        .collect();
    println!(
        "kept {} numerical, {} categorical",
        prep.kept_numerical().len(),
        prep.kept_categorical().len()
    );
    println!("dropped: {dropped:?}");
    for (feature, layout) in &prep.onehot_layout {
        println!("  {feature}: {} one-hot columns", layout.len());
    }

    for (name, part) in [("train", &train), ("val", &val), ("test", &test)] {
        let onehot = prep.transform(part, Encoding::OneHot)?;
        let pass = prep.transform(part, Encoding::Passthrough)?;
        println!(
            "{name:>5}: one-hot {:?}, passthrough numerics {:?} + {} categorical",
            onehot.numeric.dim(),
            pass.numeric.dim(),
            pass.categorical.len()
        );
    }
    println!("{} bytes of preprocessor JSON", prep.to_json()?.len());
    Ok(())
}
