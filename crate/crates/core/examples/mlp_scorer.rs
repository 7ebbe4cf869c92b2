//! TLNP with a two-layer ReLU scorer instead of the quadratic one.
//!
//! cargo run --release --example mlp_scorer

use tlnp::data::{gen_gaussian, GaussianSpec, Mean};
use tlnp::risk::{zero_one_type1, zero_one_type2};
use tlnp::trainer::{BatchKeyword, BatchSize};
use tlnp::{run_tlnp, Arch, ModelKind, Problem, SurrogateLoss, TlnpConfig, TrainConfig};

fn main() -> tlnp::Result<()> {
    let b = gen_gaussian(&GaussianSpec {
        dim: 3,
        mean_target_abnormal: Mean::Vector(vec![1.5, -1.0, 0.0]),
        mean_source_abnormal: Mean::Vector(vec![1.5, 0.0, 0.0]),
        n_normal: 1000,
        n_target: 30,
        n_source: 500,
        seed: 21,
        ..GaussianSpec::default()
    })?;
    let problem = Problem {
        kind: ModelKind::Mlp2,
        arch: Arch::with_hidden(3, 16),
        loss: SurrogateLoss::new(tlnp::LossFamily::Logistic, 20.0)?,
        normal: &b.normal_train,
        target: &b.target_train,
        source: Some(&b.source_train),
    };
    let train = TrainConfig {
        learning_rate: 0.01,
        epochs: 80,
        batch_size: BatchSize::Keyword(BatchKeyword::Full),
        seed: 4,
        ..TrainConfig::default()
    };
    let out = run_tlnp(&problem, &TlnpConfig::default(), &train)?;
    let h = &out.selected;
    println!(
        "{} members, picked lambda_s {} lambda_0 {:.3}: test type1 {:.3}, test type2 {:.3}",
        out.members.len(),
        h.lambda_s,
        h.lambda_0,
        zero_one_type1(&h.model, &b.normal_test)?,
        zero_one_type2(&h.model, &b.target_test)?
    );
    Ok(())
}
