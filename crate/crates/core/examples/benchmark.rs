//! Full synthetic benchmark: every model family on every target.
//!
//! `cargo run --release --example benchmark -- [seed] [out_dir]`

use std::path::PathBuf;

use tabens::benchmark::{render_table, run_benchmark, BenchmarkConfig};
use tabens::workers::WorkerPool;

fn main() -> tabens::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(42, |s| s.parse().expect("seed must be an integer"));
    let out = args
        .next()
        .map_or_else(|| std::env::temp_dir().join("tabens-benchmark"), PathBuf::from);
    let cfg = BenchmarkConfig::new(seed);
    let pool = WorkerPool::new(WorkerPool::default_size())?;
    let results = run_benchmark(&cfg, &out, &pool, &mut |line| eprintln!("{line}"))?;
    println!("{}", render_table(&results, &cfg.targets));
    println!("artifacts in {}", out.display());
    Ok(())
}
