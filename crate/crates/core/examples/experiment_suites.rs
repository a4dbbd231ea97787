//! The three built-in comparisons: network quality, talker orientation and
//! ambient noise. Pass one of `network`, `orientation`, `noise` to run a
//! single suite.

use wakearb::harness::{experiment_suite, RunOptions, SuiteKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kinds = match std::env::args().nth(1) {
        Some(name) => vec![SuiteKind::parse(&name).ok_or(format!("unknown suite {name:?}"))?],
        None => vec![SuiteKind::Network, SuiteKind::Orientation, SuiteKind::Noise],
    };
    for kind in kinds {
        let report = experiment_suite(kind, &RunOptions::default())?;
        println!("{}", report.to_table());
    }
    Ok(())
}
