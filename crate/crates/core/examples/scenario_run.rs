//! Loads a scenario file, runs every trial and prints the accuracy summary.
//!
//!     cargo run --example scenario_run -- crates/core/examples/scenarios/noisy.toml

use std::path::PathBuf;

use wakearb::harness::{run_scenario, RunOptions, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/scenarios/quiet.toml"));
    let scenario = Scenario::load(&path)?;
    let out = run_scenario(&scenario, &RunOptions { trials: Some(50), ..RunOptions::default() })?;
    print!("{}", out.summary());
    for rec in out.records.iter().filter(|r| !r.correct()).take(5) {
        println!(
            "trial {}: expected {}, winner {:?}, failure {:?}, master {:?}",
            rec.trial, rec.expected, rec.winner, rec.failure, rec.master
        );
    }
    Ok(())
}
