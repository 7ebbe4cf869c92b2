//! Constant-slack and variance-based target filters on the same problem.
//!
//! cargo run --release --example variance_filter

use tlnp::data::{gen_gaussian, GaussianSpec, Mean};
use tlnp::risk::zero_one_type2;
use tlnp::trainer::{BatchKeyword, BatchSize};
use tlnp::{run_tlnp, Arch, FilterMode, ModelKind, Problem, SurrogateLoss, TlnpConfig, TrainConfig};

fn main() -> tlnp::Result<()> {
    let b = gen_gaussian(&GaussianSpec {
        dim: 4,
        mean_target_abnormal: Mean::Scalar(1.0),
        mean_source_abnormal: Mean::Vector(vec![1.0, 1.0, 0.0, 0.0]),
        n_normal: 1500,
        n_target: 40,
        n_source: 800,
        seed: 12,
        ..GaussianSpec::default()
    })?;
    let problem = Problem {
        kind: ModelKind::Quadratic,
        arch: Arch::new(4),
        loss: SurrogateLoss::exponential(),
        normal: &b.normal_train,
        target: &b.target_train,
        source: Some(&b.source_train),
    };
    let train = TrainConfig {
        learning_rate: 0.02,
        epochs: 100,
        batch_size: BatchSize::Keyword(BatchKeyword::Full),
        seed: 5,
        ..TrainConfig::default()
    };
    for mode in [FilterMode::ConstantC, FilterMode::VarianceMethod] {
        let cfg = TlnpConfig {
            filter_mode: mode,
            ..TlnpConfig::default()
        };
        let out = run_tlnp(&problem, &cfg, &train)?;
        let f = &out.audit.filter;
        println!(
            "{mode:?}: slack {:.4}{}, kept {}/{}, picked lambda_s {}, test type2 {:.3}",
            f.slack,
            f.variance.map(|v| format!(" (VAR {v:.3})")).unwrap_or_default(),
            f.kept.len(),
            out.members.len(),
            out.selected.lambda_s,
            zero_one_type2(&out.selected.model, &b.target_test)?
        );
    }
    Ok(())
}
