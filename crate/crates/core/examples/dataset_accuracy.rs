//! k-NN versus KDE accuracy and agreement on the shipped datasets.
//!
//! cargo run --release --example dataset_accuracy -- [data_dir] [seed]

use ppkde::harness::{compare, ComparisonReport, ExperimentConfig};
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data".into()));
    let seed: u64 = args.next().map_or(Ok(7), |s| s.parse())?;
    let mut reports = Vec::new();
    for name in ["cancer1", "cancer2", "diabetes", "mnist"] {
        let report = compare(&ExperimentConfig::preset(name, &dir, seed)?)?;
        eprintln!(
            "{name}: {:.1}s, {} rows dropped",
            report.seconds, report.dropped_missing
        );
        reports.push(report);
    }
    print!("{}", ComparisonReport::table(&reports));
    Ok(())
}
