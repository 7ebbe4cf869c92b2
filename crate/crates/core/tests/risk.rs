mod common;

use common::random_dataset;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tlnp::risk::{surrogate_type1, surrogate_type2, zero_one_type1, zero_one_type2};
use tlnp::{Arch, Model, ModelKind, Role, SurrogateLoss};

fn quad(seed: u64) -> Model {
    let mut m = Model::init(ModelKind::Quadratic, Arch::new(3), seed).unwrap();
    for p in m.params.iter_mut() {
        *p *= 50.0;
    }
    m
}

fn losses() -> [SurrogateLoss; 3] {
    [
        SurrogateLoss::exponential(),
        SurrogateLoss::new(tlnp::LossFamily::Logistic, 20.0).unwrap(),
        SurrogateLoss::new(tlnp::LossFamily::Hinge, 20.0).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permutation_leaves_risks_bitwise_unchanged(seed in any::<u64>(), n in 1usize..80) {
        let model = quad(seed);
        let normal = random_dataset(seed, n, 3, 0.0, Role::Normal);
        let abnormal = random_dataset(seed ^ 1, n, 3, 0.5, Role::TargetAbnormal);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (pn, pa) = (normal.select(&order), abnormal.select(&order));
        for loss in losses() {
            prop_assert_eq!(surrogate_type1(&loss, &model, &normal).unwrap().to_bits(),
                            surrogate_type1(&loss, &model, &pn).unwrap().to_bits());
            prop_assert_eq!(surrogate_type2(&loss, &model, &abnormal).unwrap().to_bits(),
                            surrogate_type2(&loss, &model, &pa).unwrap().to_bits());
        }
        prop_assert_eq!(zero_one_type1(&model, &normal).unwrap().to_bits(), zero_one_type1(&model, &pn).unwrap().to_bits());
        prop_assert_eq!(zero_one_type2(&model, &abnormal).unwrap().to_bits(), zero_one_type2(&model, &pa).unwrap().to_bits());
    }

    #[test]
    fn concatenation_is_weighted_average(seed in any::<u64>(), n1 in 1usize..60, n2 in 1usize..60) {
        let model = quad(seed);
        let a = random_dataset(seed, n1, 3, 0.0, Role::Normal);
        let b = random_dataset(seed ^ 7, n2, 3, 0.3, Role::Normal);
        let ab = a.concat(&b).unwrap();
        let w = |x: f64, y: f64| (n1 as f64 * x + n2 as f64 * y) / (n1 + n2) as f64;
        for loss in losses() {
            let expected = w(surrogate_type1(&loss, &model, &a).unwrap(), surrogate_type1(&loss, &model, &b).unwrap());
            let got = surrogate_type1(&loss, &model, &ab).unwrap();
            prop_assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        }
        let expected = w(zero_one_type1(&model, &a).unwrap(), zero_one_type1(&model, &b).unwrap());
        prop_assert!((zero_one_type1(&model, &ab).unwrap() - expected).abs() <= 1e-12);
    }

    #[test]
    fn zero_one_never_exceeds_surrogate(seed in any::<u64>(), n in 1usize..80) {
        let model = quad(seed);
        let normal = random_dataset(seed, n, 3, 0.0, Role::Normal);
        let abnormal = random_dataset(seed ^ 3, n, 3, 0.5, Role::SourceAbnormal);
        for loss in losses() {
            prop_assert!(zero_one_type1(&model, &normal).unwrap() <= surrogate_type1(&loss, &model, &normal).unwrap());
            prop_assert!(zero_one_type2(&model, &abnormal).unwrap() <= surrogate_type2(&loss, &model, &abnormal).unwrap());
        }
    }
}

#[test]
fn roles_are_enforced() {
    let model = quad(1);
    let normal = random_dataset(1, 5, 3, 0.0, Role::Normal);
    let abnormal = random_dataset(2, 5, 3, 0.0, Role::TargetAbnormal);
    assert!(zero_one_type1(&model, &abnormal).is_err());
    assert!(zero_one_type2(&model, &normal).is_err());
    let empty = normal.select(&[]);
    assert!(matches!(zero_one_type1(&model, &empty), Err(tlnp::Error::Undefined(_))));
}
