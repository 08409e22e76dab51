//! Regression and classification metrics, and the JSON report the CLI
//! writes per target.

use tabens::metrics::{classification_metrics, mae, mse, r2, MetricsReport};
use tabens::task::{Predictions, Targets};

fn main() -> tabens::Result<()> {
    let y = [10.0, 20.0, 30.0, 40.0];
    let pred = [12.0, 18.0, 33.0, 39.0];
    println!(
        "r2 {:.3}  mae {:.2}  mse {:.2}",
        r2(&y, &pred)?,
        mae(&y, &pred)?,
        mse(&y, &pred)?
    );

    // Two true positives, one false positive, one false negative.
    let labels = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
    let guesses = [1, 1, 0, 1, 0, 0, 0, 0, 0, 0];
    let (acc, f1) = classification_metrics(&labels, &guesses, 2)?;
    println!("accuracy {acc:.2}  f1 {f1:.4}");

    let three = [0, 1, 2, 2, 1, 0];
    let (acc, macro_f1) = classification_metrics(&three, &[0, 2, 2, 2, 1, 1], 3)?;
    println!("3 classes: accuracy {acc:.2}  macro f1 {macro_f1:.4}");

    let report = MetricsReport::evaluate(
        &Targets::Continuous(y.to_vec()),
        &Predictions::Continuous(pred.to_vec()),
    )?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
