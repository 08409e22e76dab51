#![allow(dead_code)]

use tabens::data::{grouped_split, DataTable, DEFAULT_RATIOS};
use tabens::preprocess::{fit_preprocessor, PreprocessConfig, Preprocessor};
use tabens::synth::{generate, SyntheticConfig};

/// A small synthetic panel: 6 numerical and 3 categorical features.
pub fn panel(n_companies: usize, seed: u64) -> DataTable {
    generate(&SyntheticConfig {
        n_companies,
        min_years: 1,
        max_years: 8,
        n_numerical: 6,
        n_categorical: 3,
        seed,
        ..SyntheticConfig::default()
    })
    .expect("valid synthetic config")
    .table
}

pub struct Prepared {
    pub train: DataTable,
    pub val: DataTable,
    pub test: DataTable,
    pub prep: Preprocessor,
}

pub fn prepared(n_companies: usize, seed: u64) -> Prepared {
    let table = panel(n_companies, seed);
    let (train, val, test) = grouped_split(&table, DEFAULT_RATIOS, seed)
        .and_then(|s| s.apply(&table))
        .expect("split");
    let prep = fit_preprocessor(&train, PreprocessConfig::default()).expect("preprocessor");
    Prepared { train, val, test, prep }
}
