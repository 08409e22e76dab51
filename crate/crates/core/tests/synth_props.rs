use proptest::prelude::*;
use tabens::data::write_csv;
use tabens::synth::{generate, SyntheticConfig, CONTINUOUS_TARGETS, E_TARGET};

fn config(n: usize, seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        n_companies: n,
        min_years: 2,
        max_years: 6,
        n_numerical: 8,
        n_categorical: 3,
        seed,
        ..SyntheticConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn continuous_targets_are_scores(n in 5usize..60, seed in any::<u64>()) {
        let t = generate(&config(n, seed)).unwrap().table;
        for name in CONTINUOUS_TARGETS {
            prop_assert!(t.continuous_target(name).unwrap().iter().all(|v| (0.0..=100.0).contains(v)));
        }
    }

    #[test]
    fn same_seed_same_bytes(n in 5usize..40, seed in any::<u64>()) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv(&generate(&config(n, seed)).unwrap().table, &mut a).unwrap();
        write_csv(&generate(&config(n, seed)).unwrap().table, &mut b).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn companies_do_not_depend_on_panel_size(n in 5usize..30, extra in 1usize..30, seed in any::<u64>()) {
        // Each company draws from its own stream, so adding companies leaves
        // existing trajectories alone. The E floor is a sample quantile and
        // is excluded.
        let small = generate(&config(n, seed)).unwrap().table;
        let large = generate(&config(n + extra, seed)).unwrap().table;
        let e = small.schema().target_index(E_TARGET).unwrap();
        for (a, b) in small.rows().iter().zip(large.rows()) {
            prop_assert_eq!(&a.company, &b.company);
            prop_assert_eq!(a.year, b.year);
            prop_assert_eq!(&a.features, &b.features);
            for (i, (ta, tb)) in a.targets.iter().zip(&b.targets).enumerate() {
                if i != e {
                    prop_assert_eq!(ta, tb);
                }
            }
        }
    }
}
