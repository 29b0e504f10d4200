//! Runs randomized scenarios and prints the stop-reason histogram.
//!
//! `cargo run --release --example sweep -- 1000`

use std::time::Instant;

use liquid_deliberation::analysis::batch_with;
use liquid_deliberation::ScenarioConfig;

fn main() {
    let count: u64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(100);
    let seeds: Vec<u64> = (1..=count).collect();
    let started = Instant::now();
    let table = batch_with(&seeds, 0, ScenarioConfig::random);
    let agg = table.aggregate();
    println!("{} runs in {:.2?}", agg.runs, started.elapsed());
    println!("mean T {:?}, median T {:?}", agg.mean_t, agg.median_t);
    for (reason, n) in &agg.stop_reasons {
        println!("  {reason}: {n}");
    }
    let worst = table
        .rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .max_by_key(|s| s.terminal_iteration);
    if let Some(s) = worst {
        println!("longest run: seed {} with T = {}", s.seed, s.terminal_iteration);
    }
    for r in table.rows.iter().filter(|r| r.outcome.is_err()) {
        println!("seed {} failed: {:?}", r.seed, r.outcome);
    }
}
