mod common;

use common::random_dataset;
use tlnp::risk::surrogate_type1;
use tlnp::trainer::{lagrangian_cost, train, BatchKeyword, BatchSize, TrainingSet};
use tlnp::{Arch, Model, ModelKind, Role, SurrogateLoss, TrainConfig};

fn fixture() -> (tlnp::Dataset, tlnp::Dataset, tlnp::Dataset) {
    (
        random_dataset(11, 200, 3, 0.0, Role::Normal),
        random_dataset(12, 20, 3, 0.6, Role::TargetAbnormal),
        random_dataset(13, 100, 3, 0.4, Role::SourceAbnormal),
    )
}

fn full_batch(epochs: usize, lr: f64) -> TrainConfig {
    TrainConfig {
        learning_rate: lr,
        epochs,
        batch_size: BatchSize::Keyword(BatchKeyword::Full),
        seed: 5,
        ..TrainConfig::default()
    }
}

#[test]
fn full_batch_cost_does_not_increase() {
    let (n, t, s) = fixture();
    let set = TrainingSet::new(&n, &t, Some(&s));
    let loss = SurrogateLoss::exponential();
    for kind in [ModelKind::Linear, ModelKind::Quadratic] {
        let arch = Arch::new(3);
        let mut previous = lagrangian_cost(&loss, &Model::init(kind, arch, 5).unwrap(), &set, 2.0, 1.5).unwrap();
        for epochs in [1, 5, 25, 100, 300] {
            let model = train(kind, arch, &loss, &set, 2.0, 1.5, &full_batch(epochs, 1e-3)).unwrap();
            let cost = lagrangian_cost(&loss, &model, &set, 2.0, 1.5).unwrap();
            assert!(cost <= previous, "{kind:?}: cost rose from {previous} to {cost} at {epochs} epochs");
            previous = cost;
        }
    }
}

#[test]
fn larger_lambda0_does_not_raise_surrogate_type1() {
    let (n, t, s) = fixture();
    let set = TrainingSet::new(&n, &t, Some(&s));
    let loss = SurrogateLoss::exponential();
    let cfg = full_batch(400, 1e-2);
    let mut previous = f64::INFINITY;
    for lambda0 in [0.1, 1.0, 10.0, 100.0] {
        let model = train(ModelKind::Quadratic, Arch::new(3), &loss, &set, 1.0, lambda0, &cfg).unwrap();
        let r0 = surrogate_type1(&loss, &model, &n).unwrap();
        assert!(r0 <= previous + 1e-6, "lambda0 {lambda0}: {r0} > {previous}");
        previous = r0;
    }
}

#[test]
fn training_is_deterministic_with_minibatches() {
    let (n, t, s) = fixture();
    let set = TrainingSet::new(&n, &t, Some(&s));
    let cfg = TrainConfig {
        batch_size: BatchSize::Size(32),
        epochs: 20,
        seed: 9,
        ..TrainConfig::default()
    };
    let loss = SurrogateLoss::exponential();
    let a = train(ModelKind::Mlp2, Arch::with_hidden(3, 4), &loss, &set, 1.0, 1.0, &cfg).unwrap();
    let b = train(ModelKind::Mlp2, Arch::with_hidden(3, 4), &loss, &set, 1.0, 1.0, &cfg).unwrap();
    assert_eq!(a, b);
    let c = train(ModelKind::Mlp2, Arch::with_hidden(3, 4), &loss, &set, 1.0, 1.0, &cfg.with_seed(10)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn zero_source_weight_ignores_source() {
    let (n, t, s) = fixture();
    let loss = SurrogateLoss::exponential();
    let cfg = full_batch(30, 1e-2);
    let with = train(ModelKind::Linear, Arch::new(3), &loss, &TrainingSet::new(&n, &t, Some(&s)), 0.0, 1.0, &cfg).unwrap();
    let without = train(ModelKind::Linear, Arch::new(3), &loss, &TrainingSet::new(&n, &t, None), 0.0, 1.0, &cfg).unwrap();
    assert_eq!(with, without);
    let empty = s.select(&[]);
    assert!(train(ModelKind::Linear, Arch::new(3), &loss, &TrainingSet::new(&n, &t, Some(&empty)), 1.0, 1.0, &cfg).is_err());
}

#[test]
fn invalid_settings_are_rejected() {
    let (n, t, _) = fixture();
    let set = TrainingSet::new(&n, &t, None);
    let loss = SurrogateLoss::exponential();
    let bad = TrainConfig {
        learning_rate: 0.0,
        ..TrainConfig::default()
    };
    assert!(train(ModelKind::Linear, Arch::new(3), &loss, &set, 0.0, 1.0, &bad).is_err());
    assert!(train(ModelKind::Linear, Arch::new(3), &loss, &set, 0.0, -1.0, &TrainConfig::default()).is_err());
    assert!(train(ModelKind::Linear, Arch::new(2), &loss, &set, 0.0, 1.0, &TrainConfig::default()).is_err());
}
