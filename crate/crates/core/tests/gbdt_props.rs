use ndarray::{Array2, ArrayView1};
use proptest::prelude::*;
use tabens::gbdt::{best_split, fit_gbdt, EarlyStopping, GbdtParams, Node, SplitDecision, Tree};
use tabens::metrics::mse;
use tabens::task::Targets;

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Array2<f64>> {
    (2..=max_rows, 1..=max_cols).prop_flat_map(|(n, k)| {
        prop::collection::vec(0i32..8, n * k).prop_map(move |v| {
            Array2::from_shape_vec((n, k), v.into_iter().map(|x| x as f64 * 0.25).collect()).unwrap()
        })
    })
}

/// Exhaustive search: every feature, every midpoint, first maximum wins.
fn oracle(x: &Array2<f64>, g: &[f64], h: &[f64], p: &GbdtParams) -> Option<SplitDecision> {
    let score = |g: f64, h: f64| g * g / (h + p.lambda);
    let mut best: Option<SplitDecision> = None;
    for f in 0..x.ncols() {
        let mut vals: Vec<f64> = x.column(f).to_vec();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (mut gl, mut hl, mut gr, mut hr) = (0.0, 0.0, 0.0, 0.0);
            for r in 0..x.nrows() {
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
            let gain = 0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr)) - p.gamma;
            if best.as_ref().map_or(gain > 0.0, |b| gain > b.gain) {
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

fn leaf_of(tree: &Tree, row: ArrayView1<'_, f64>) -> usize {
    let mut i = 0;
    loop {
        match &tree.nodes[i] {
            Node::Leaf { .. } => return i,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                i = if row[*feature] < *threshold {
                    *left as usize
                } else {
                    *right as usize
                };
            }
        }
    }
}

fn regression_data() -> impl Strategy<Value = (Array2<f64>, Vec<f64>)> {
    matrix(40, 3).prop_flat_map(|x| {
        let n = x.nrows();
        (Just(x), prop::collection::vec(-10.0f64..10.0, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn best_split_matches_exhaustive_search(
        x in matrix(32, 3),
        seed_g in prop::collection::vec(-4i32..=4, 32),
        seed_h in prop::collection::vec(1i32..=3, 32),
        lambda in 0u8..=1,
        gamma in 0u8..=1,
    ) {
        let n = x.nrows();
        let g: Vec<f64> = seed_g[..n].iter().map(|&v| v as f64).collect();
        let h: Vec<f64> = seed_h[..n].iter().map(|&v| v as f64).collect();
        let p = GbdtParams { lambda: lambda as f64, gamma: gamma as f64, min_child_weight: 1.0, ..GbdtParams::default() };
        let rows: Vec<usize> = (0..n).collect();
        prop_assert_eq!(best_split(x.view(), &rows, &g, &h, &p), oracle(&x, &g, &h, &p));
    }

    #[test]
    fn training_mse_never_increases((x, y) in regression_data(), depth in 1usize..4) {
        let p = GbdtParams {
            max_depth: depth,
            n_trees: 15,
            learning_rate: 0.3,
            gamma: 0.0,
            early_stopping: EarlyStopping::Off,
            ..GbdtParams::default()
        };
        let mut model = fit_gbdt(x.view(), &Targets::Continuous(y.clone()), None, &p).unwrap();
        let mut last = f64::INFINITY;
        for k in 0..=p.n_trees {
            model.best_iteration = Some(k);
            let pred = model.predict(x.view()).unwrap();
            let m = mse(&y, pred.continuous().unwrap()).unwrap();
            prop_assert!(m <= last + 1e-9 * last.abs().max(1.0), "round {}: {} after {}", k, m, last);
            last = m;
        }
    }

    #[test]
    fn fitting_is_deterministic((x, y) in regression_data()) {
        let p = GbdtParams { n_trees: 10, max_depth: 3, early_stopping: EarlyStopping::Off, ..GbdtParams::default() };
        let t = Targets::Continuous(y);
        prop_assert_eq!(fit_gbdt(x.view(), &t, None, &p).unwrap(), fit_gbdt(x.view(), &t, None, &p).unwrap());
    }

    #[test]
    fn min_child_weight_bounds_leaf_size((x, y) in regression_data(), min_rows in 1usize..8) {
        let p = GbdtParams {
            n_trees: 5,
            max_depth: 4,
            min_child_weight: min_rows as f64,
            early_stopping: EarlyStopping::Off,
            ..GbdtParams::default()
        };
        let model = fit_gbdt(x.view(), &Targets::Continuous(y), None, &p).unwrap();
        for round in &model.trees {
            let tree = &round[0];
            if tree.nodes.len() == 1 {
                continue;
            }
            let mut counts = vec![0usize; tree.nodes.len()];
            for row in x.rows() {
                counts[leaf_of(tree, row)] += 1;
            }
            for (i, node) in tree.nodes.iter().enumerate() {
                if matches!(node, Node::Leaf { .. }) {
                    prop_assert!(counts[i] >= min_rows, "leaf {} holds {} rows", i, counts[i]);
                }
            }
        }
    }
}
