#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tlnp::data::{gen_gaussian, DatasetBundle, GaussianSpec, Mean};
use tlnp::{Dataset, Role, Split};

pub fn random_dataset(seed: u64, n: usize, dim: usize, shift: f64, role: Role) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0) + shift).collect())
        .collect();
    Dataset::from_rows(&rows, role, Split::Train).expect("finite rows")
}

/// A small two-dimensional Gaussian problem that trains in milliseconds.
pub fn small_bundle(seed: u64, source_mean: f64) -> DatasetBundle {
    gen_gaussian(&GaussianSpec {
        dim: 2,
        mean_normal: Mean::Scalar(0.0),
        mean_target_abnormal: Mean::Scalar(1.5),
        mean_source_abnormal: Mean::Scalar(source_mean),
        n_normal: 400,
        n_target: 20,
        n_source: 200,
        n_test_normal: 400,
        n_test_target: 200,
        n_test_source: 0,
        seed,
    })
    .expect("valid spec")
}
