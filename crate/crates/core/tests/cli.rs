use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tabens(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tabens"))
        .args(args)
        .current_dir(dir)
        .env_remove("TABENS_SEED")
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    ok(&tabens(&["synth", "--out", "a", "--n-companies", "40"], dir.path()));
    ok(&tabens(&["synth", "--out", "b", "--n-companies", "40"], dir.path()));
    for f in ["data.csv", "schema.json", "ground_truth.json", "run_manifest.json"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    let other = Command::new(env!("CARGO_BIN_EXE_tabens"))
        .args(["synth", "--out", "c", "--n-companies", "40"])
        .current_dir(dir.path())
        .env("TABENS_SEED", "7")
        .output()
        .unwrap();
    ok(&other);
    assert_ne!(
        fs::read(dir.path().join("a/data.csv")).unwrap(),
        fs::read(dir.path().join("c/data.csv")).unwrap()
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tabens(&["no-such-command"], dir.path()).status.code(), Some(2));
    assert_eq!(
        tabens(&["synth", "--out", "x", "--no-such-flag"], dir.path())
            .status
            .code(),
        Some(2)
    );
    let missing = tabens(&["split", "--data", "missing.csv", "--out", "s"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));
}

#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("small.json"),
        r#"{"nn": {"hidden_widths": [8], "max_epochs": 10, "learning_rate": 0.05}, "catboost": {"gbdt": {"n_trees": 40, "learning_rate": 0.2, "max_depth": 3}}, "xgboost": {"n_trees": 20, "max_depth": 3}, "ensemble_size": 2}"#,
    )
    .unwrap();
    fs::write(d.join("grid.json"), r#"{"max_depth": [2, 3], "n_trees": [10]}"#).unwrap();
    ok(&tabens(&["synth", "--out", "syn", "--n-companies", "60"], d));
    ok(&tabens(&["split", "--data", "syn/data.csv", "--out", "split"], d));
    ok(&tabens(
        &[
            "preprocess",
            "--data",
            "syn/data.csv",
            "--split",
            "split/split.csv",
            "--out",
            "prep",
        ],
        d,
    ));
    ok(&tabens(
        &[
            "train",
            "--data",
            "syn/data.csv",
            "--split",
            "split/split.csv",
            "--model",
            "hetero,linear,industry-mean,nn-ensemble",
            "--config",
            "small.json",
            "--out",
            "models",
        ],
        d,
    ));
    ok(&tabens(
        &[
            "gridsearch",
            "--data",
            "syn/data.csv",
            "--split",
            "split/split.csv",
            "--family",
            "xgboost-style",
            "--grid",
            "grid.json",
            "--target",
            "esg_score",
            "--out",
            "gs",
        ],
        d,
    ));
    let log = fs::read_to_string(d.join("gs/gridsearch_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 3);
    assert!(d.join("gs/best_arm.json").exists() && d.join("gs/best_model/manifest.json").exists());

    let eval = tabens(
        &[
            "evaluate",
            "--data",
            "syn/data.csv",
            "--split",
            "split/split.csv",
            "--model",
            "models/hetero",
            "--out",
            "eval",
        ],
        d,
    );
    ok(&eval);
    let report: serde_json::Value = serde_json::from_slice(&eval.stdout).unwrap();
    assert!(report["esg_score"]["r2"].is_number());
    assert!(report["controversy"]["accuracy"].is_number());

    // Strip targets and rename every category to something never seen.
    let text = fs::read_to_string(d.join("syn/data.csv")).unwrap();
    let mut rows = text.lines();
    let header: Vec<&str> = rows.next().unwrap().split(',').collect();
    let keep = header.len() - 5;
    let mut out = header[..keep].join(",") + "\n";
    for line in rows.take(12) {
        let cells: Vec<String> = line
            .split(',')
            .take(keep)
            .enumerate()
            .map(|(i, c)| {
                if header[i].starts_with('x') || i < 2 {
                    c.to_string()
                } else {
                    format!("unseen-{c}")
                }
            })
            .collect();
        out += &(cells.join(",") + "\n");
    }
    fs::write(d.join("new.csv"), out).unwrap();
    for model in ["hetero", "linear", "industry-mean", "nn-ensemble"] {
        let dir = format!("pred-{model}");
        ok(&tabens(
            &[
                "predict",
                "--data",
                "new.csv",
                "--schema",
                "syn/schema.json",
                "--model",
                &format!("models/{model}"),
                "--out",
                &dir,
            ],
            d,
        ));
        let preds = fs::read_to_string(d.join(&dir).join("predictions.csv")).unwrap();
        let mut lines = preds.lines();
        let cols: Vec<&str> = lines.next().unwrap().split(',').collect();
        let mut n = 0;
        for line in lines {
            for (h, v) in cols.iter().zip(line.split(',')) {
                if h.ends_with("_score") {
                    let v: f64 = v.parse().unwrap();
                    assert!((0.0..=100.0).contains(&v), "{model} {h} {v}");
                }
            }
            n += 1;
        }
        assert_eq!(n, 12);
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(d.join("models/run_manifest.json")).unwrap()).unwrap();
    assert!(manifest["artifacts"]["hetero/manifest.json"].is_string());
}
