//! Company-disjoint train/validation/test split.

use std::collections::BTreeSet;

use tabens::data::{grouped_split, Partition, DEFAULT_RATIOS};
use tabens::synth::{generate, SyntheticConfig};

fn main() -> tabens::Result<()> {
    let data = generate(&SyntheticConfig {
        n_companies: 120,
        min_years: 1,
        max_years: 12,
        ..SyntheticConfig::default()
    })?;
    let split = grouped_split(&data.table, DEFAULT_RATIOS, 7)?;
    let sizes = split.sizes();
    let fractions = split.fractions();
    for p in Partition::ALL {
        let rows = split.indices(p);
        let companies: BTreeSet<&str> = rows.iter().map(|&r| data.table.rows()[r].company.as_str()).collect();
        println!(
            "{:>10}: {:5} rows ({:4.1}%), {:3} companies",
            p.as_str(),
            sizes[p.index()],
            100.0 * fractions[p.index()],
            companies.len()
        );
    }
    let (train, _, test) = split.apply(&data.table)?;
    let seen: BTreeSet<String> = train.companies().into_iter().collect();
    assert!(test.companies().iter().all(|c| !seen.contains(c)));
    println!("no company crosses partitions");
    Ok(())
}
