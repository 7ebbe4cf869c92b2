//! Balanced classifiers shifted to the Type-I level, next to NP-tuned fits.
//!
//! cargo run --release --example threshold_baselines

use tlnp::baselines::{only_target_np, pooled_np, threshold_classifier};
use tlnp::data::{gen_gaussian, GaussianSpec, Mean};
use tlnp::risk::{zero_one_type1, zero_one_type2};
use tlnp::trainer::{BatchKeyword, BatchSize};
use tlnp::{Arch, ModelKind, Problem, SurrogateLoss, TlnpConfig, TrainConfig, TunedHypothesis};

fn main() -> tlnp::Result<()> {
    let b = gen_gaussian(&GaussianSpec {
        dim: 5,
        mean_target_abnormal: Mean::Scalar(0.8),
        mean_source_abnormal: Mean::Scalar(0.8),
        n_normal: 2000,
        n_target: 30,
        n_source: 1000,
        seed: 8,
        ..GaussianSpec::default()
    })?;
    let problem = Problem {
        kind: ModelKind::Quadratic,
        arch: Arch::new(5),
        loss: SurrogateLoss::exponential(),
        normal: &b.normal_train,
        target: &b.target_train,
        source: Some(&b.source_train),
    };
    let cfg = TlnpConfig::default();
    let train = TrainConfig {
        learning_rate: 0.02,
        epochs: 100,
        batch_size: BatchSize::Keyword(BatchKeyword::Full),
        seed: 2,
        ..TrainConfig::default()
    };
    let show = |name: &str, h: &TunedHypothesis| -> tlnp::Result<()> {
        println!(
            "{name:<18} train type1 {:.4}  test type1 {:.4}  test type2 {:.3}",
            h.train_type1,
            zero_one_type1(&h.model, &b.normal_test)?,
            zero_one_type2(&h.model, &b.target_test)?
        );
        Ok(())
    };
    show("threshold target", &threshold_classifier(&problem, &cfg, &train, false)?)?;
    show("threshold pooled", &threshold_classifier(&problem, &cfg, &train, true)?)?;
    show("np target", &only_target_np(&problem, &cfg, &train)?)?;
    show("np pooled", &pooled_np(&problem, &cfg, &train)?)?;
    Ok(())
}
