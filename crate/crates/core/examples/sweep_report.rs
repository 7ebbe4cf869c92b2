//! Runs a TOML experiment config and writes the JSON report, the aggregate
//! CSV table and one plot-data file per method.
//!
//! cargo run --release --example sweep_report -- [config.toml] [out_dir]

use std::path::PathBuf;

use tlnp::experiment::{emit_report, run_experiment, ExperimentConfig, ReportFormat};

fn main() -> tlnp::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/quick.toml"));
    let out = args.next().map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let cfg = ExperimentConfig::load(&config)?;
    let report = run_experiment(&cfg)?;
    let stem = format!("sweep-{}", report.config_hash);
    for f in emit_report(&report, &out, &stem, &[ReportFormat::Json, ReportFormat::Csv, ReportFormat::Plot])? {
        println!("wrote {}", f.display());
    }
    print!("{}", tlnp::experiment::aggregate_csv(&report));
    Ok(())
}
