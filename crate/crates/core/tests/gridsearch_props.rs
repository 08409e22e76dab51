mod common;

use tabens::catboost::CatBoostStyleParams;
use tabens::gridsearch::{fit_arm, grid_search, ArmConfig, Family, Grid};
use tabens::models::{fit_nn, fit_xgboost_style, MemberModel};
use tabens::nn::{ladder_widths, NnConfig};
use tabens::synth::{CONTROVERSY_TARGET, ESG_TARGET};
use tabens::workers::WorkerPool;

const NN_GRID: &str = r#"{"depth": [2], "width": [50], "dropout": [0.1], "learning_rate": [0.05], "epochs": [20], "batch_norm": [false]}"#;
const CB_GRID: &str = r#"{"depth": [3], "learning_rate": [0.1], "iterations": [30]}"#;
const XGB_GRID: &str = r#"{"max_depth": [3], "n_trees": [25], "learning_rate": [0.2]}"#;

#[test]
fn singleton_grid_equals_direct_fit() {
    let p = common::prepared(60, 11);
    let pool = WorkerPool::new(1).unwrap();
    for (family, text) in [
        (Family::Nn, NN_GRID),
        (Family::CatboostStyle, CB_GRID),
        (Family::XgboostStyle, XGB_GRID),
    ] {
        let grid = Grid::from_json(family, text).unwrap();
        let arms = grid.enumerate().unwrap();
        assert_eq!(arms.len(), 1);
        for target in [ESG_TARGET, CONTROVERSY_TARGET] {
            let outcome = grid_search(&grid, &p.train, &p.val, &p.prep, target, 7, &pool).unwrap();
            let direct = match &arms[0].1 {
                ArmConfig::Nn(c) => MemberModel::Nn(fit_nn(&p.train, Some(&p.val), &p.prep, target, c, 7).unwrap()),
                ArmConfig::CatboostStyle(c) => MemberModel::Catboost(
                    tabens::catboost::fit_catboost_style(
                        &p.train,
                        Some(&p.val),
                        &p.prep,
                        target,
                        &CatBoostStyleParams { seed: 7, ..*c },
                    )
                    .unwrap(),
                ),
                ArmConfig::XgboostStyle(c) => {
                    MemberModel::Xgboost(fit_xgboost_style(&p.train, Some(&p.val), &p.prep, target, c).unwrap())
                }
            };
            assert_eq!(outcome.best, direct, "{family} on {target}");
            assert_eq!(outcome.log.best_arm, 0);
        }
    }
}

#[test]
fn nn_grid_uses_the_width_ladder() {
    let grid = Grid::from_json(Family::Nn, r#"{"depth": [3], "width": [500]}"#).unwrap();
    match &grid.enumerate().unwrap()[0].1 {
        ArmConfig::Nn(c) => {
            assert_eq!(c.hidden_widths, vec![500, 250, 100]);
            assert_eq!(c.hidden_widths, ladder_widths(3, 500).unwrap());
        }
        other => panic!("unexpected arm {other:?}"),
    }
    assert!(Grid::from_json(Family::Nn, r#"{"width": [7]}"#)
        .unwrap()
        .enumerate()
        .is_err());
}

#[test]
fn failing_arms_are_logged_and_skipped() {
    let p = common::prepared(50, 3);
    let pool = WorkerPool::new(1).unwrap();
    // A huge learning rate diverges; the sane arm must win.
    let grid = Grid::from_json(
        Family::Nn,
        r#"{"depth": [1], "width": [50], "learning_rate": [1e9, 0.05], "epochs": [5], "batch_norm": [false], "early_stopping": [false]}"#,
    )
    .unwrap();
    let outcome = grid_search(&grid, &p.train, &p.val, &p.prep, ESG_TARGET, 1, &pool).unwrap();
    assert!(outcome.log.arms[0].error.is_some());
    assert_eq!(outcome.log.best_arm, 1);
    let cfg = NnConfig {
        hidden_widths: vec![50],
        learning_rate: 1e9,
        max_epochs: 5,
        batch_norm: false,
        early_stopping: tabens::gbdt::EarlyStopping::Off,
        ..NnConfig::default()
    };
    let all_bad = Grid::from_json(
        Family::Nn,
        r#"{"depth": [1], "width": [50], "learning_rate": [1e9], "epochs": [5], "batch_norm": [false], "early_stopping": [false]}"#,
    )
    .unwrap();
    assert!(fit_arm(&ArmConfig::Nn(cfg), &p.train, &p.val, &p.prep, ESG_TARGET, 1).is_err());
    assert!(matches!(
        grid_search(&all_bad, &p.train, &p.val, &p.prep, ESG_TARGET, 1, &pool),
        Err(tabens::Error::Search(_))
    ));
}
