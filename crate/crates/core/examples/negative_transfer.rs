//! An unrelated source domain: source outliers sit at mean -0.5 while the
//! target outliers sit at +0.5. Pooling suffers; TLNP should stay close to
//! the target-only baseline.
//!
//! cargo run --release --example negative_transfer -- [runs]

use tlnp::data::{GaussianSpec, Mean};
use tlnp::experiment::{run_experiment, DataSource, ExperimentConfig, Method, ModelSpec};
use tlnp::{ModelKind, SurrogateLoss, TlnpConfig, TrainConfig};

fn main() -> tlnp::Result<()> {
    let runs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let cfg = ExperimentConfig {
        data: DataSource::Gaussian(GaussianSpec {
            mean_source_abnormal: Mean::Scalar(-0.5),
            ..GaussianSpec::default()
        }),
        methods: vec![Method::Tlnp, Method::OnlyTargetNp, Method::PooledNp, Method::Tlod],
        alpha: 0.05,
        epsilon0: 0.01,
        runs,
        master_seed: 3,
        workers: 0,
        sweep: None,
        model: ModelSpec {
            kind: ModelKind::Quadratic,
            hidden_units: 0,
        },
        loss: SurrogateLoss::exponential(),
        train: TrainConfig::default(),
        tlnp: TlnpConfig::default(),
        oracle_class: None,
        oracle_c_tilde: 0.0,
    };
    let report = run_experiment(&cfg)?;
    for a in &report.aggregates {
        println!("{:<16} type2 {:.3} ± {:.3}", a.method.name(), a.mean_test_type2, a.std_test_type2);
    }
    for c in report.cells_for(Method::Tlnp) {
        println!("run {}: tlnp picked lambda_s = {:?}", c.run, c.lambda_s);
    }
    Ok(())
}
