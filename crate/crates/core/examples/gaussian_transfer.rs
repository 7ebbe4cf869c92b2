//! Gaussian transfer experiment: every method on the default 15-dimensional
//! setup, averaged over repeated runs.
//!
//! cargo run --release --example gaussian_transfer -- [runs]

use tlnp::data::GaussianSpec;
use tlnp::experiment::{run_experiment, DataSource, ExperimentConfig, Method, ModelSpec};
use tlnp::{ModelKind, SurrogateLoss, TlnpConfig, TrainConfig};

fn main() -> tlnp::Result<()> {
    let runs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let cfg = ExperimentConfig {
        data: DataSource::Gaussian(GaussianSpec::default()),
        methods: vec![
            Method::Tlnp,
            Method::OnlySourceNp,
            Method::PooledNp,
            Method::OnlyTargetNp,
            Method::ThresholdTarget,
            Method::Tlod,
        ],
        alpha: 0.05,
        epsilon0: 0.01,
        runs,
        master_seed: 2024,
        workers: 0,
        sweep: None,
        model: ModelSpec {
            kind: ModelKind::Quadratic,
            hidden_units: 0,
        },
        loss: SurrogateLoss::default(),
        train: TrainConfig::default(),
        tlnp: TlnpConfig::default(),
        oracle_class: None,
        oracle_c_tilde: 0.0,
    };
    let report = run_experiment(&cfg)?;
    println!("{:<18} {:>8} {:>8} {:>8}", "method", "type2", "std", "type1");
    for a in &report.aggregates {
        println!(
            "{:<18} {:>8.3} {:>8.3} {:>8.3}",
            a.method.name(),
            a.mean_test_type2,
            a.std_test_type2,
            a.mean_test_type1
        );
    }
    for c in &report.cells {
        println!("{} run {} {:.1}s", c.method.name(), c.run, c.wall_time_s);
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}
