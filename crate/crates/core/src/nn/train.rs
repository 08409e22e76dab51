use ndarray::{s, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{init_mlp, BatchStats, MlpInput, MlpModel, MlpParams, MlpSpec, Mode, ParamKind, BN_MOMENTUM};
use crate::error::{Error, Result};
use crate::gbdt::EarlyStopping;
use crate::task::{softmax_in_place, Targets, Task};

enum Labels<'a> {
    /// Already shifted and scaled.
    Continuous(Vec<f64>),
    Classes(&'a [usize]),
}

fn labels_for<'a>(model: &MlpModel, y: &'a Targets, rows: Option<&[usize]>) -> Result<Labels<'a>> {
    match (model.spec.task, y) {
        (Task::Regression, Targets::Continuous(v)) => {
            let pick = |i: usize| (v[i] - model.target_shift) / model.target_scale;
            Ok(Labels::Continuous(match rows {
                Some(r) => r.iter().map(|&i| pick(i)).collect(),
                None => (0..v.len()).map(pick).collect(),
            }))
        }
        (Task::Classification { n_classes }, Targets::Classes { labels, n_classes: k }) if n_classes == *k => {
            Ok(Labels::Classes(labels))
        }
        _ => Err(Error::Fit(format!(
            "targets of task {:?} do not match network task {:?}",
            y.task(),
            model.spec.task
        ))),
    }
}

/// Mean data loss and its gradient with respect to the head outputs.
fn data_loss(out: &Array2<f64>, labels: &Labels<'_>, rows: Option<&[usize]>) -> (f64, Array2<f64>) {
    let n = out.nrows() as f64;
    match labels {
        Labels::Continuous(y) => {
            let mut d = Array2::zeros(out.raw_dim());
            let mut loss = 0.0;
            for (r, &t) in y.iter().enumerate() {
                let e = out[[r, 0]] - t;
                loss += e * e;
                d[[r, 0]] = 2.0 * e / n;
            }
            (loss / n, d)
        }
        Labels::Classes(all) => {
            let mut p = out.clone();
            let mut loss = 0.0;
            for (r, mut row) in p.rows_mut().into_iter().enumerate() {
                softmax_in_place(row.as_slice_mut().expect("row-major"));
                let label = match rows {
                    Some(idx) => all[idx[r]],
                    None => all[r],
                };
                loss -= row[label].max(1e-15).ln();
                row[label] -= 1.0;
            }
            p /= n;
            (loss / n, p)
        }
    }
}

fn penalty(params: &MlpParams, l2: f64, l1: f64) -> f64 {
    if l2 == 0.0 && l1 == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    params.visit(&mut |s, k| {
        if k == ParamKind::Weight {
            for &w in s {
                total += l2 * w * w + l1 * w.abs();
            }
        }
    });
    total
}

fn add_penalty_grad(grads: &mut MlpParams, params: &MlpParams, l2: f64, l1: f64) {
    if l2 == 0.0 && l1 == 0.0 {
        return;
    }
    grads.zip_mut(params, &mut |g, w, k| {
        if k == ParamKind::Weight {
            for (g, &w) in g.iter_mut().zip(w) {
                *g += 2.0 * l2 * w + l1 * w.signum() * f64::from(w != 0.0);
            }
        }
    });
}

/// Matrix products of transposed views may come back column-major.
fn standard(a: Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    }
}

fn backward(model: &MlpModel, input: &MlpInput, cache: &super::ForwardCache, d_out: Array2<f64>) -> MlpParams {
    let act = model.spec.activation;
    let mut grads = model.params.zeros_like();
    grads.head.weight = standard(cache.head_input.t().dot(&d_out));
    grads.head.bias = d_out.sum_axis(Axis(0));
    let mut dx = d_out.dot(&model.params.head.weight.t());

    for (l, layer) in model.params.hidden.iter().enumerate().rev() {
        let c = &cache.layers[l];
        if let Some(mask) = &c.dropout_mask {
            dx *= mask;
        }
        let mut dpre = dx;
        ndarray::Zip::from(&mut dpre)
            .and(&c.pre)
            .and(&c.act)
            .for_each(|d, &v, &a| *d *= act.derivative(v, a));
        let dz = match (&layer.norm, &c.normalized, &c.inv_std) {
            (Some(norm), Some(xhat), Some(inv_std)) => {
                let g = grads.hidden[l].norm.as_mut().expect("norm grads");
                g.gamma = (&dpre * xhat).sum_axis(Axis(0));
                g.beta = dpre.sum_axis(Axis(0));
                let n = dpre.nrows() as f64;
                let dxhat = &dpre * &norm.gamma;
                let sum_d = dxhat.sum_axis(Axis(0));
                let sum_dx = (&dxhat * xhat).sum_axis(Axis(0));
                let scaled = dxhat * n - &sum_d - xhat * &sum_dx;
                scaled * &(inv_std / n)
            }
            _ => dpre,
        };
        grads.hidden[l].linear.weight = standard(c.input.t().dot(&dz));
        grads.hidden[l].linear.bias = dz.sum_axis(Axis(0));
        dx = dz.dot(&layer.linear.weight.t());
    }

    let mut offset = model.spec.input.n_numeric;
    for (f, &card) in model.spec.input.cardinalities.iter().enumerate() {
        match (&cache.embed_pre[f], &cache.embed_act[f], grads.embeddings[f].as_mut()) {
            (Some(pre), Some(a), Some(table)) => {
                let d = a.ncols();
                let block = dx.slice(s![.., offset..offset + d]);
                for (r, &cat) in input.categories[f].iter().enumerate() {
                    let mut row = table.row_mut(cat);
                    for j in 0..d {
                        row[j] += block[[r, j]] * act.derivative(pre[[r, j]], a[[r, j]]);
                    }
                }
                offset += d;
            }
            _ => offset += card,
        }
    }
    grads
}

fn loss_grads_stats(
    model: &MlpModel,
    input: &MlpInput,
    labels: &Labels<'_>,
    rows: Option<&[usize]>,
    rng: Option<&mut ChaCha8Rng>,
) -> (f64, MlpParams, BatchStats) {
    let (out, cache, stats) = model.forward_cached(input, Mode::Train, rng);
    let (loss, d_out) = data_loss(&out, labels, rows);
    let mut grads = backward(model, input, &cache, d_out);
    let (l2, l1) = (model.spec.l2_rate, model.spec.l1_rate);
    add_penalty_grad(&mut grads, &model.params, l2, l1);
    (loss + penalty(&model.params, l2, l1), grads, stats)
}

/// Train-mode loss (data term plus penalties) and its exact gradient.
/// Regression loss is measured on the standardized target.
pub fn loss_and_gradients(
    model: &MlpModel,
    input: &MlpInput,
    y: &Targets,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(f64, MlpParams)> {
    model.forward(input, Mode::Eval, None)?;
    if y.len() != input.n_rows() {
        return Err(Error::Fit(format!("{} targets for {} rows", y.len(), input.n_rows())));
    }
    if model.spec.dropout > 0.0 && rng.is_none() {
        return Err(Error::Config("train-mode dropout needs an rng".into()));
    }
    let labels = labels_for(model, y, None)?;
    let (loss, grads, _) = loss_grads_stats(model, input, &labels, None, rng);
    Ok((loss, grads))
}

/// Eval-mode data loss on a held-out set (standardized MSE or cross-entropy).
fn validation_loss(model: &MlpModel, input: &MlpInput, y: &Targets) -> Result<f64> {
    let out = model.forward(input, Mode::Eval, None)?;
    let labels = labels_for(model, y, None)?;
    Ok(data_loss(&out, &labels, None).0)
}

fn update_running(model: &mut MlpModel, stats: BatchStats) {
    for (running, batch) in model.running.iter_mut().zip(stats) {
        if let (Some(r), Some((mean, var))) = (running.as_mut(), batch) {
            r.mean = &r.mean * BN_MOMENTUM + &(mean * (1.0 - BN_MOMENTUM));
            r.var = &r.var * BN_MOMENTUM + &(var * (1.0 - BN_MOMENTUM));
        }
    }
}

/// Mini-batch gradient descent over shuffled batches. With early stopping,
/// the parameters of the epoch with the lowest validation loss are restored.
pub fn fit_mlp(
    train: &MlpInput,
    y: &Targets,
    val: Option<(&MlpInput, &Targets)>,
    spec: &MlpSpec,
    seed: u64,
) -> Result<MlpModel> {
    let mut model = init_mlp(spec, seed)?;
    if train.n_rows() == 0 {
        return Err(Error::Fit("cannot train a network on zero rows".into()));
    }
    if y.len() != train.n_rows() {
        return Err(Error::Fit(format!("{} targets for {} rows", y.len(), train.n_rows())));
    }
    model.forward(&train.select(&[0]), Mode::Eval, None)?;
    if let EarlyStopping::Patience(_) = spec.early_stopping {
        if val.is_none() {
            return Err(Error::Config("early stopping requires a validation set".into()));
        }
    }
    if let Some((vx, vy)) = val {
        if vx.n_rows() != vy.len() {
            return Err(Error::Fit("validation targets and rows differ in length".into()));
        }
        if vx.n_rows() > 0 {
            model.forward(&vx.select(&[0]), Mode::Eval, None)?;
        }
    }
    if spec.max_epochs == 0 {
        return Ok(model);
    }
    if let Targets::Continuous(v) = y {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n).sqrt();
        model.target_shift = mean;
        model.target_scale = if sd > 0.0 { sd } else { 1.0 };
    }
    let labels = labels_for(&model, y, None)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train.n_rows()).collect();
    let mut best: Option<(usize, f64, MlpParams, Vec<Option<super::RunningStats>>)> = None;

    for epoch in 0..spec.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(spec.batch_size) {
            let bx = train.select(batch);
            let bl = match &labels {
                Labels::Continuous(all) => Labels::Continuous(batch.iter().map(|&i| all[i]).collect()),
                Labels::Classes(all) => Labels::Classes(all),
            };
            let (loss, grads, stats) = loss_grads_stats(&model, &bx, &bl, Some(batch), Some(&mut rng));
            if !loss.is_finite() {
                return Err(Error::Fit(format!("training loss became non-finite in epoch {epoch}")));
            }
            model.params.add_scaled(&grads, -spec.learning_rate);
            update_running(&mut model, stats);
        }
        if let Some((vx, vy)) = val {
            if vx.n_rows() == 0 {
                continue;
            }
            let loss = validation_loss(&model, vx, vy)?;
            if !loss.is_finite() {
                return Err(Error::Fit(format!(
                    "validation loss became non-finite in epoch {epoch}"
                )));
            }
            model.validation_history.push(loss);
            if let EarlyStopping::Patience(patience) = spec.early_stopping {
                if best.as_ref().is_none_or(|b| loss < b.1) {
                    best = Some((epoch, loss, model.params.clone(), model.running.clone()));
                }
                let best_epoch = best.as_ref().map_or(epoch, |b| b.0);
                if epoch + 1 - best_epoch > patience {
                    break;
                }
            }
        }
    }
    if let Some((epoch, _, params, running)) = best {
        model.params = params;
        model.running = running;
        model.best_epoch = Some(epoch);
    }
    Ok(model)
}
