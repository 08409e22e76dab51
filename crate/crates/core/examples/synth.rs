//! Generate a small synthetic panel and inspect its planted structure.

use tabens::synth::{generate, SyntheticConfig, CONTINUOUS_TARGETS};

fn main() -> tabens::Result<()> {
    let cfg = SyntheticConfig {
        n_companies: 200,
        ..SyntheticConfig::default()
    };
    let data = generate(&cfg)?;
    let table = &data.table;
    println!(
        "{} rows, {} companies, {} features, {} missing cells",
        table.len(),
        table.companies().len(),
        table.schema().n_features(),
        table.missing_count()
    );
    for name in CONTINUOUS_TARGETS {
        let y = table.continuous_target(name)?;
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let zeros = y.iter().filter(|v| **v == 0.0).count();
        println!(
            "{name:>10}: mean {mean:5.1}, zeros {zeros:4}, bayes R² {:.3}",
            data.truth.bayes_r2[name]
        );
    }
    println!("E floor threshold: {:.2}", data.truth.e_floor_threshold);
    Ok(())
}
