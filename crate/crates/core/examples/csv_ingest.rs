//! Percentile labelling of a CSV file, then one TLNP fit with its tuning
//! audit.
//!
//! cargo run --release --example csv_ingest

use std::path::PathBuf;

use tlnp::data::{ingest_csv, CsvIngestSpec};
use tlnp::risk::{zero_one_type1, zero_one_type2};
use tlnp::trainer::{BatchKeyword, BatchSize};
use tlnp::{run_tlnp, Arch, ModelKind, Problem, SurrogateLoss, TlnpConfig, TrainConfig};

fn main() -> tlnp::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let spec = CsvIngestSpec {
        path: dir.join("climate_target.csv"),
        source_path: Some(dir.join("climate_source.csv")),
        feature_columns: ["temperature", "humidity", "pressure", "wind"].map(String::from).to_vec(),
        label_column: "rain_rate".into(),
        percentile: 90.0,
        split_fractions: vec![0.7, 0.3],
        seed: 1,
        standardize: true,
        max_normal_train: None,
        max_target_train: None,
        max_source_train: None,
    };
    let b = ingest_csv(&spec)?;
    println!(
        "train: {} normal, {} target, {} source; test: {} normal, {} target; {} rows dropped",
        b.normal_train.len(),
        b.target_train.len(),
        b.source_train.len(),
        b.normal_test.len(),
        b.target_test.len(),
        b.dropped_rows
    );

    let problem = Problem {
        kind: ModelKind::Quadratic,
        arch: Arch::new(b.dim()),
        loss: SurrogateLoss::exponential(),
        normal: &b.normal_train,
        target: &b.target_train,
        source: Some(&b.source_train),
    };
    let cfg = TlnpConfig {
        alpha: 0.1,
        epsilon0: 0.04,
        ..TlnpConfig::default()
    };
    let train = TrainConfig {
        learning_rate: 0.01,
        epochs: 150,
        batch_size: BatchSize::Keyword(BatchKeyword::Full),
        ..TrainConfig::default()
    };
    let out = run_tlnp(&problem, &cfg, &train)?;
    for rec in &out.audit.grid {
        let path: Vec<String> = rec.trajectory.iter().map(|s| format!("{:.3}", s.lambda_0)).collect();
        println!(
            "lambda_s {:>7}: {} attempts, accepted {}, lambda_0 path {}",
            rec.lambda_s,
            rec.trajectory.len(),
            rec.accepted,
            path.join(" > ")
        );
    }
    let f = &out.audit.filter;
    println!("filter keeps {} of {} (threshold {:.3})", f.kept.len(), out.members.len(), f.threshold);
    let h = &out.selected;
    println!(
        "selected lambda_s {} lambda_0 {:.4}; test type1 {:.3}, test type2 {:.3}",
        h.lambda_s,
        h.lambda_0,
        zero_one_type1(&h.model, &b.normal_test)?,
        zero_one_type2(&h.model, &b.target_test)?
    );
    Ok(())
}
