//! Second-order gradient boosting on a dense matrix.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tabens::gbdt::{best_split, fit_gbdt, grad_hess_squared, EarlyStopping, GbdtParams};
use tabens::metrics::r2;
use tabens::task::Targets;

fn dataset(n: usize, rng: &mut ChaCha8Rng) -> (Array2<f64>, Vec<f64>) {
    let x = Array2::from_shape_fn((n, 3), |_| rng.random_range(-2.0f64..2.0));
    let y = x
        .rows()
        .into_iter()
        .map(|r| (2.0 * r[0]).sin() + if r[1] > 0.5 { 1.5 } else { 0.0 } + 0.1 * rng.random_range(-1.0..1.0))
        .collect();
    (x, y)
}

fn main() -> tabens::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (x, y) = dataset(2000, &mut rng);
    let (xv, yv) = dataset(500, &mut rng);

    // The root split the first tree would take.
    let base = y.iter().sum::<f64>() / y.len() as f64;
    let (g, h) = grad_hess_squared(&y, &vec![base; y.len()]);
    let rows: Vec<usize> = (0..y.len()).collect();
    if let Some(s) = best_split(x.view(), &rows, &g, &h, &GbdtParams::default()) {
        println!("root split: x{} < {:.3} (gain {:.1})", s.feature, s.threshold, s.gain);
    }

    let params = GbdtParams {
        max_depth: 4,
        learning_rate: 0.1,
        n_trees: 500,
        early_stopping: EarlyStopping::Patience(20),
        ..GbdtParams::default()
    };
    let yt = Targets::Continuous(y);
    let yvt = Targets::Continuous(yv.clone());
    let model = fit_gbdt(x.view(), &yt, Some((xv.view(), &yvt)), &params)?;
    let pred = model.predict(xv.view())?;
    println!(
        "{} trees kept, validation R² {:.3}",
        model.n_rounds_used(),
        r2(&yv, pred.continuous()?)?
    );
    Ok(())
}
