//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.
//!
//! Criteria 6 to 9 share two `tabens benchmark --seed 42 --workers 1` runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tabens::benchmark::{BenchmarkResults, HETERO_MEMBERS};
use tabens::catboost::ordered_target_encode;
use tabens::data::{grouped_split, load_csv, save_csv, FeatureSchema, Partition, SplitAssignment, DEFAULT_RATIOS};
use tabens::gbdt::{best_split, GbdtParams, SplitDecision};
use tabens::metrics::{classification_metrics, mae, mse, r2, MetricsReport};
use tabens::nn::{init_mlp, loss_and_gradients, Activation, EmbeddingConfig, InputLayout, MlpInput, MlpSpec};
use tabens::synth::{generate, SyntheticConfig, CONTINUOUS_TARGETS, ESG_TARGET, G_TARGET};
use tabens::task::{Targets, Task};

type Outcome = std::result::Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, elapsed: Duration) -> std::result::Result<(), String> {
    check(elapsed < limit, || format!("took {elapsed:.1?}, budget {limit:?}"))
}

// ---------------------------------------------------------------------------
// 1. split search against exhaustive enumeration

fn oracle_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let s = |g: f64, h: f64| g * g / (h + lambda);
    0.5 * (s(gl, hl) + s(gr, hr) - s(gl + gr, hl + hr)) - gamma
}

/// Every feature, every midpoint between distinct node values; strict
/// improvement only, so the first maximum in (feature, threshold) order wins.
fn brute_force_split(x: &Array2<f64>, rows: &[usize], g: &[f64], h: &[f64], p: &GbdtParams) -> Option<SplitDecision> {
    let mut best: Option<SplitDecision> = None;
    for f in 0..x.ncols() {
        let mut values: Vec<f64> = rows.iter().map(|&r| x[[r, f]]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            let (mut gl, mut hl, mut gr, mut hr) = (0.0, 0.0, 0.0, 0.0);
            for &r in rows {
                if x[[r, f]] < t {
                    gl += g[r];
                    hl += h[r];
                } else {
                    gr += g[r];
                    hr += h[r];
                }
            }
            if hl < p.min_child_weight || hr < p.min_child_weight {
                continue;
            }
            let gain = oracle_gain(gl, hl, gr, hr, p.lambda, p.gamma);
            let improves = best.as_ref().map_or(gain > 0.0, |b| gain > b.gain);
            if improves {
                best = Some(SplitDecision {
                    feature: f,
                    threshold: t,
                    gain,
                });
            }
        }
    }
    best
}

fn criterion_split_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut with_split = 0;
    for case in 0..200 {
        let n = rng.random_range(2..=32);
        let k = rng.random_range(1..=3);
        // Integer statistics keep every sum exact, so ties are real ties.
        let x = Array2::from_shape_fn((n, k), |_| rng.random_range(0..6) as f64 * 0.5);
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-5..=5) as f64).collect();
        let h: Vec<f64> = (0..n).map(|_| rng.random_range(1..=3) as f64).collect();
        let params = GbdtParams {
            lambda: rng.random_range(0..=1) as f64,
            gamma: rng.random_range(0..=1) as f64,
            min_child_weight: rng.random_range(0..=2) as f64,
            ..GbdtParams::default()
        };
        let mut rows: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.8)).collect();
        if rows.len() < 2 {
            rows = (0..n).collect();
        }
        let got = best_split(x.view(), &rows, &g, &h, &params);
        let want = brute_force_split(&x, &rows, &g, &h, &params);
        check(got == want, || {
            format!("case {case}: best_split {got:?}, oracle {want:?}")
        })?;
        with_split += usize::from(want.is_some());
    }
    within(Duration::from_secs(30), start.elapsed())?;
    Ok(format!(
        "200 datasets identical ({with_split} with a split) in {:.2?}",
        start.elapsed()
    ))
}

// ---------------------------------------------------------------------------
// 2. analytic gradients against central differences

fn random_network(rng: &mut ChaCha8Rng, index: usize) -> (MlpSpec, MlpInput, Targets) {
    let activation = [Activation::Sigmoid, Activation::Relu, Activation::LeakyRelu][index % 3];
    let batch_norm = index.is_multiple_of(2);
    let task = match index % 4 {
        0 | 1 => Task::Regression,
        2 => Task::Classification { n_classes: 2 },
        _ => Task::Classification { n_classes: 3 },
    };
    let n_numeric = rng.random_range(1..=3);
    let cardinalities: Vec<usize> = (0..rng.random_range(0..=2)).map(|_| rng.random_range(2..=4)).collect();
    let embeddings = cardinalities
        .iter()
        .map(|_| {
            if rng.random_bool(0.5) {
                EmbeddingConfig::Dim(rng.random_range(1..=2))
            } else {
                EmbeddingConfig::Off
            }
        })
        .collect();
    let hidden_widths = (0..rng.random_range(1..=2)).map(|_| rng.random_range(2..=5)).collect();
    let spec = MlpSpec {
        input: InputLayout {
            n_numeric,
            cardinalities: cardinalities.clone(),
        },
        task,
        embeddings,
        hidden_widths,
        activation,
        dropout: 0.0,
        batch_norm,
        l2_rate: rng.random_range(0.0..0.05),
        l1_rate: rng.random_range(0.0..0.05),
        learning_rate: 0.01,
        max_epochs: 1,
        batch_size: 8,
        early_stopping: tabens::gbdt::EarlyStopping::Off,
    };
    let n = rng.random_range(4..=8);
    let input = MlpInput {
        numeric: Array2::from_shape_fn((n, n_numeric), |_| rng.random_range(-1.5..1.5)),
        categories: cardinalities
            .iter()
            .map(|&c| (0..n).map(|_| rng.random_range(0..c)).collect())
            .collect(),
    };
    let y = match task {
        Task::Regression => Targets::Continuous((0..n).map(|_| rng.random_range(-2.0..2.0)).collect()),
        Task::Classification { n_classes } => Targets::Classes {
            labels: (0..n).map(|_| rng.random_range(0..n_classes)).collect(),
            n_classes,
        },
    };
    (spec, input, y)
}

fn criterion_gradient_check() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut total_params = 0;
    let n_nets = 24;
    for net in 0..n_nets {
        let (spec, input, y) = random_network(&mut rng, net);
        let mut model = init_mlp(&spec, net as u64).map_err(|e| e.to_string())?;
        // Magnitudes in [0.05, 0.6] keep every weight off the l1 kink.
        let flat: Vec<f64> = model
            .params
            .flatten()
            .iter()
            .map(|_| {
                let w: f64 = rng.random_range(0.05..0.6);
                if rng.random_bool(0.5) {
                    w
                } else {
                    -w
                }
            })
            .collect();
        check(flat.len() <= 200, || format!("net {net} has {} parameters", flat.len()))?;
        total_params += flat.len();
        model.params.assign_flat(&flat);
        let loss_at = |values: &[f64]| -> f64 {
            let mut m = model.clone();
            m.params.assign_flat(values);
            loss_and_gradients(&m, &input, &y, None).expect("loss").0
        };
        let (_, grads) = loss_and_gradients(&model, &input, &y, None).map_err(|e| e.to_string())?;
        let analytic = grads.flatten();
        for i in 0..flat.len() {
            let mut plus = flat.clone();
            plus[i] += h;
            let mut minus = flat.clone();
            minus[i] -= h;
            let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            // Biases feeding batch-norm have an exact zero gradient; the
            // floor keeps finite-difference noise there from dominating.
            let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-5);
            check(rel < 1e-4, || {
                format!(
                    "net {net} ({:?}, bn {}), parameter {i}: analytic {} vs numeric {numeric}",
                    spec.activation, spec.batch_norm, analytic[i]
                )
            })?;
            worst = worst.max(rel);
        }
    }
    within(Duration::from_secs(60), start.elapsed())?;
    Ok(format!(
        "{n_nets} networks, {total_params} parameters, worst relative error {worst:.2e} in {:.2?}",
        start.elapsed()
    ))
}

// ---------------------------------------------------------------------------
// 3. ordered target statistics

fn prefix_oracle(cats: &[String], y: &[f64], perm: &[usize], prior: f64, a: f64) -> Vec<f64> {
    let mut out = vec![f64::NAN; cats.len()];
    for (i, &row) in perm.iter().enumerate() {
        let (mut sum, mut count) = (0.0, 0.0);
        for &earlier in &perm[..i] {
            if cats[earlier] == cats[row] {
                sum += y[earlier];
                count += 1.0;
            }
        }
        out[row] = (sum + a * prior) / (count + a);
    }
    out
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}

fn criterion_ordered_ts() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0usize;
    for case in 0..100 {
        let n = rng.random_range(1..=60);
        let n_cats = rng.random_range(1..=6);
        let cats: Vec<String> = (0..n).map(|_| format!("c{}", rng.random_range(0..n_cats))).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let prior = rng.random_range(0.0..100.0);
        let a = rng.random_range(0.1..5.0);
        let got = ordered_target_encode(&cats, &y, &perm, prior, a);
        let want = prefix_oracle(&cats, &y, &perm, prior, a);
        for r in 0..n {
            check(close(got[r], want[r], 1e-12), || {
                format!("case {case} row {r}: {} vs oracle {}", got[r], want[r])
            })?;
        }
        // Truncating after step k, or rewriting every later target, leaves
        // step k's encoding unchanged.
        for k in 0..n {
            let kept = &perm[..=k];
            let sub_cats: Vec<String> = kept.iter().map(|&r| cats[r].clone()).collect();
            let sub_y: Vec<f64> = kept.iter().map(|&r| y[r]).collect();
            let identity: Vec<usize> = (0..=k).collect();
            let truncated = ordered_target_encode(&sub_cats, &sub_y, &identity, prior, a);
            check(truncated[k] == got[perm[k]], || {
                format!("case {case}: truncation changes step {k}")
            })?;
            let mut altered = y.clone();
            for &later in &perm[k + 1..] {
                altered[later] = rng.random_range(-1e3..1e3);
            }
            let re = ordered_target_encode(&cats, &altered, &perm, prior, a);
            check(re[perm[k]] == got[perm[k]], || {
                format!("case {case}: later rows leak into step {k}")
            })?;
            checked += 1;
        }
    }
    within(Duration::from_secs(5), start.elapsed())?;
    Ok(format!(
        "100 sequences, {checked} prefix checks in {:.2?}",
        start.elapsed()
    ))
}

// ---------------------------------------------------------------------------
// 4. metrics

fn naive_regression(y: &[f64], p: &[f64]) -> (f64, f64, f64) {
    let n = y.len() as f64;
    let mut mean = 0.0;
    for v in y {
        mean += v;
    }
    mean /= n;
    let (mut sse, mut sst, mut abs) = (0.0, 0.0, 0.0);
    for i in 0..y.len() {
        sse += (y[i] - p[i]).powi(2);
        sst += (y[i] - mean).powi(2);
        abs += (y[i] - p[i]).abs();
    }
    (1.0 - sse / sst, abs / n, sse / n)
}

fn naive_classification(y: &[usize], p: &[usize], k: usize) -> (f64, f64) {
    let mut confusion = vec![vec![0usize; k]; k];
    for (&a, &b) in y.iter().zip(p) {
        confusion[a][b] += 1;
    }
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
    let f1 = |c: usize| {
        let tp = confusion[c][c] as f64;
        let fp: f64 = (0..k).filter(|&o| o != c).map(|o| confusion[o][c] as f64).sum();
        let fn_: f64 = (0..k).filter(|&o| o != c).map(|o| confusion[c][o] as f64).sum();
        if tp == 0.0 {
            0.0
        } else {
            2.0 * tp / (2.0 * tp + fp + fn_)
        }
    };
    let f1 = if k == 2 {
        f1(1)
    } else {
        (0..k).map(f1).sum::<f64>() / k as f64
    };
    (correct as f64 / y.len() as f64, f1)
}

fn criterion_metrics() -> Outcome {
    let start = Instant::now();
    let e = |err: tabens::Error| err.to_string();
    let worked = r2(&[10.0, 20.0, 30.0, 40.0], &[12.0, 18.0, 33.0, 39.0]).map_err(e)?;
    check(close(worked, 0.964, 1e-12), || format!("worked r2 {worked}"))?;
    let y = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
    let p = [1, 1, 0, 1, 0, 0, 0, 0, 0, 0];
    let (_, f1) = classification_metrics(&y, &p, 2).map_err(e)?;
    check(close(f1, 2.0 / 3.0, 1e-12), || format!("worked f1 {f1}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..1000 {
        let n = rng.random_range(2..=60);
        if case % 2 == 0 {
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
            let scale = rng.random_range(0.5..40.0);
            let p: Vec<f64> = y.iter().map(|v| v + rng.random_range(-scale..scale)).collect();
            let (r, a, m) = naive_regression(&y, &p);
            let got = (r2(&y, &p).map_err(e)?, mae(&y, &p).map_err(e)?, mse(&y, &p).map_err(e)?);
            check(
                close(got.0, r, 1e-12) && close(got.1, a, 1e-12) && close(got.2, m, 1e-12),
                || format!("case {case}: {got:?} vs oracle {:?}", (r, a, m)),
            )?;
        } else {
            let k = rng.random_range(2..=4);
            let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let p: Vec<usize> = y
                .iter()
                .map(|&l| {
                    if rng.random_bool(0.6) {
                        l
                    } else {
                        rng.random_range(0..k)
                    }
                })
                .collect();
            let (acc, f1) = naive_classification(&y, &p, k);
            let got = classification_metrics(&y, &p, k).map_err(e)?;
            check(close(got.0, acc, 1e-12) && close(got.1, f1, 1e-12), || {
                format!("case {case}: {got:?} vs oracle {:?}", (acc, f1))
            })?;
        }
    }
    within(Duration::from_secs(5), start.elapsed())?;
    Ok(format!(
        "worked values and 1000 random instances in {:.2?}",
        start.elapsed()
    ))
}

// ---------------------------------------------------------------------------
// 5. split discipline

fn criterion_split_discipline() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let max_years = rng.random_range(1..=18);
        let cfg = SyntheticConfig {
            n_companies: rng.random_range(50..=250),
            min_years: rng.random_range(1..=max_years),
            max_years,
            n_numerical: 4,
            n_categorical: 2,
            seed: rng.random(),
            ..SyntheticConfig::default()
        };
        let table = generate(&cfg).map_err(|e| e.to_string())?.table;
        let split = grouped_split(&table, DEFAULT_RATIOS, rng.random()).map_err(|e| e.to_string())?;
        let owners: Vec<BTreeSet<&str>> = Partition::ALL
            .iter()
            .map(|&p| {
                split
                    .indices(p)
                    .iter()
                    .map(|&r| table.rows()[r].company.as_str())
                    .collect()
            })
            .collect();
        for i in 0..3 {
            for j in i + 1..3 {
                check(owners[i].is_disjoint(&owners[j]), || {
                    format!("case {case}: partitions {i} and {j} share a company")
                })?;
            }
        }
        for (f, target) in split.fractions().iter().zip(DEFAULT_RATIOS) {
            let off = (f - target).abs();
            worst = worst.max(off);
            check(off <= 0.05, || format!("case {case}: fraction {f:.3} vs {target}"))?;
        }
    }
    Ok(format!(
        "50 tables disjoint, worst fraction deviation {:.2} points in {:.2?}",
        100.0 * worst,
        start.elapsed()
    ))
}

// ---------------------------------------------------------------------------
// benchmark runs shared by 6 to 9

struct BenchRun {
    dir: PathBuf,
    elapsed: Duration,
}

fn run_benchmark_cli(dir: &Path) -> std::result::Result<BenchRun, String> {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_tabens"))
        .args(["benchmark", "--seed", "42", "--workers", "1", "--out"])
        .arg(dir)
        .env_remove("TABENS_SEED")
        .output()
        .map_err(|e| format!("cannot launch tabens: {e}"))?;
    check(out.status.success(), || {
        format!(
            "benchmark exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        )
    })?;
    Ok(BenchRun {
        dir: dir.to_path_buf(),
        elapsed: start.elapsed(),
    })
}

fn read_results(run: &BenchRun) -> std::result::Result<BenchmarkResults, String> {
    let text = fs::read_to_string(run.dir.join("results.json")).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn criterion_median_bound(runs: &[BenchRun]) -> Outcome {
    let mut rows = 0;
    for run in runs {
        let mut reader = csv::Reader::from_path(run.dir.join("test_predictions.csv")).map_err(|e| e.to_string())?;
        let headers = reader.headers().map_err(|e| e.to_string())?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or(format!("missing column {name}"))
        };
        let (target_col, truth_col, hetero_col) = (col("target")?, col("truth")?, col("hetero")?);
        let member_cols = HETERO_MEMBERS
            .iter()
            .map(|m| col(m))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        for rec in reader.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            if !CONTINUOUS_TARGETS.contains(&&rec[target_col]) {
                continue;
            }
            let num = |i: usize| rec[i].parse::<f64>().map_err(|e| format!("{}: {e}", &rec[i]));
            let truth = num(truth_col)?;
            let err = (num(hetero_col)? - truth).abs();
            let mut max_member: f64 = 0.0;
            for &c in &member_cols {
                max_member = max_member.max((num(c)? - truth).abs());
            }
            check(err <= max_member, || {
                format!(
                    "{} {} {}: ensemble error {err} above member max {max_member}",
                    &rec[0], &rec[1], &rec[target_col]
                )
            })?;
            rows += 1;
        }
    }
    Ok(format!("{rows} test rows across {} runs, zero violations", runs.len()))
}

fn criterion_ordering(run: &BenchRun) -> Outcome {
    within(Duration::from_secs(15 * 60), run.elapsed)?;
    let res = read_results(run)?;
    let get_r2 = |t: &str, m: &str| {
        res.report(t, m)
            .and_then(MetricsReport::r2)
            .ok_or(format!("no R² for {t}/{m}"))
    };
    let get_mae = |t: &str, m: &str| {
        res.report(t, m)
            .and_then(MetricsReport::mae)
            .ok_or(format!("no MAE for {t}/{m}"))
    };
    let he = get_r2(ESG_TARGET, "hetero")?;
    let linear = get_r2(ESG_TARGET, "linear")?;
    let industry = get_r2(ESG_TARGET, "industry_mean")?;
    check(he - linear >= 0.10, || {
        format!("(a) hetero R² {he:.3} vs linear {linear:.3}")
    })?;
    check(he - industry >= 0.20, || {
        format!("(a) hetero R² {he:.3} vs industry mean {industry:.3}")
    })?;
    let he_mae = get_mae(ESG_TARGET, "hetero")?;
    let best_member = HETERO_MEMBERS
        .iter()
        .map(|m| get_mae(ESG_TARGET, m))
        .collect::<std::result::Result<Vec<_>, _>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    check(he_mae <= best_member + 0.5, || {
        format!("(b) hetero MAE {he_mae:.2} vs best member {best_member:.2}")
    })?;
    let g = get_r2(G_TARGET, "hetero")?;
    check(g <= he - 0.10, || format!("(c) G R² {g:.3} vs ESG {he:.3}"))?;
    for row in &res.rows {
        if let (Some(r), Some(ceiling)) = (row.report.r2(), res.bayes_r2.get(&row.target)) {
            check(r <= ceiling + 0.02, || {
                format!("(d) {}/{} R² {r:.3} above ceiling {ceiling:.3}", row.target, row.model)
            })?;
        }
    }
    Ok(format!(
        "ESG R² hetero {he:.3}, linear {linear:.3}, industry {industry:.3}; MAE {he_mae:.2} vs {best_member:.2}; G R² {g:.3}; run {:.0?}",
        run.elapsed
    ))
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).expect("readable directory") {
            let path = entry.expect("directory entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).expect("under root").to_path_buf();
                out.insert(rel, fs::read(&path).expect("readable file"));
            }
        }
    }
    out
}

fn criterion_determinism(a: &BenchRun, b: &BenchRun) -> Outcome {
    let fa = files_under(&a.dir);
    let fb = files_under(&b.dir);
    let names_a: Vec<&PathBuf> = fa.keys().collect();
    let names_b: Vec<&PathBuf> = fb.keys().collect();
    check(names_a == names_b, || {
        format!("file sets differ: {names_a:?} vs {names_b:?}")
    })?;
    for (name, bytes) in &fa {
        check(&fb[name] == bytes, || {
            format!("{} differs between runs", name.display())
        })?;
    }
    let total: usize = fa.values().map(Vec::len).sum();
    Ok(format!("{} files, {total} bytes identical", fa.len()))
}

fn criterion_unseen(run: &BenchRun, scratch: &Path) -> Outcome {
    let schema = FeatureSchema::load(run.dir.join("schema.json")).map_err(|e| e.to_string())?;
    let table = load_csv(run.dir.join("data.csv"), &schema).map_err(|e| e.to_string())?;
    let split = SplitAssignment::load_csv(run.dir.join("split.csv"), &table).map_err(|e| e.to_string())?;
    let train_companies: BTreeSet<String> = split
        .indices(Partition::Train)
        .iter()
        .map(|&r| table.rows()[r].company.clone())
        .collect();
    let test_rows = split.indices(Partition::Test);
    let chosen: BTreeSet<&str> = test_rows
        .iter()
        .map(|&r| table.rows()[r].company.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .take(50)
        .collect();
    check(chosen.len() == 50, || format!("only {} test companies", chosen.len()))?;
    check(chosen.iter().all(|c| !train_companies.contains(*c)), || {
        "a chosen company was trained on".into()
    })?;
    let rows: Vec<usize> = test_rows
        .into_iter()
        .filter(|&r| chosen.contains(table.rows()[r].company.as_str()))
        .collect();
    let unseen = table.select(&rows).without_targets();
    fs::create_dir_all(scratch).map_err(|e| e.to_string())?;
    let input = scratch.join("unseen.csv");
    save_csv(&unseen, &input).map_err(|e| e.to_string())?;

    let out_dir = scratch.join("predict");
    let out = Command::new(env!("CARGO_BIN_EXE_tabens"))
        .args(["predict", "--model"])
        .arg(run.dir.join("models").join("hetero"))
        .arg("--data")
        .arg(&input)
        .arg("--schema")
        .arg(run.dir.join("schema.json"))
        .arg("--out")
        .arg(&out_dir)
        .output()
        .map_err(|e| format!("cannot launch tabens: {e}"))?;
    check(out.status.success(), || {
        format!(
            "predict exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        )
    })?;
    let mut reader = csv::Reader::from_path(out_dir.join("predictions.csv")).map_err(|e| e.to_string())?;
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let mut n = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        for (h, v) in headers.iter().zip(rec.iter()) {
            if CONTINUOUS_TARGETS.contains(&h) {
                let v: f64 = v.parse().map_err(|e| format!("{h}: {v:?}: {e}"))?;
                check(v.is_finite() && (0.0..=100.0).contains(&v), || {
                    format!("{h} prediction {v}")
                })?;
            }
        }
        n += 1;
    }
    check(n == unseen.len(), || {
        format!("{n} prediction rows for {} inputs", unseen.len())
    })?;
    Ok(format!(
        "50 unseen companies, {n} rows, all continuous predictions in [0, 100]"
    ))
}

fn main() {
    let scratch = tempfile::tempdir().expect("temporary directory");
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 split-search oracle", criterion_split_oracle()),
        ("2 gradient check", criterion_gradient_check()),
        ("3 ordered target statistics", criterion_ordered_ts()),
        ("4 metric oracle", criterion_metrics()),
        ("5 split discipline", criterion_split_discipline()),
    ];
    let runs = run_benchmark_cli(&scratch.path().join("bench-a"))
        .and_then(|a| run_benchmark_cli(&scratch.path().join("bench-b")).map(|b| vec![a, b]));
    match &runs {
        Ok(runs) => {
            results.push(("6 median bound", criterion_median_bound(runs)));
            results.push(("7 benchmark ordering", criterion_ordering(&runs[0])));
            results.push(("8 determinism", criterion_determinism(&runs[0], &runs[1])));
            results.push((
                "9 unseen-company inference",
                criterion_unseen(&runs[0], &scratch.path().join("unseen")),
            ));
        }
        Err(e) => {
            for name in [
                "6 median bound",
                "7 benchmark ordering",
                "8 determinism",
                "9 unseen-company inference",
            ] {
                results.push((name, Err(format!("benchmark run failed: {e}"))));
            }
        }
    }
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
