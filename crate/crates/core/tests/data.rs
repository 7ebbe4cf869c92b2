mod common;

use std::path::PathBuf;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tlnp::data::{
    gen_gaussian, ingest_csv, percentile_labels, split_dataset, split_indices, CsvIngestSpec, DatasetBundle,
    GaussianSpec, Standardizer,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn csv_spec(standardize: bool) -> CsvIngestSpec {
    CsvIngestSpec {
        path: fixture("climate_target.csv"),
        source_path: Some(fixture("climate_source.csv")),
        feature_columns: ["temperature", "humidity", "pressure", "wind"].map(String::from).to_vec(),
        label_column: "rain_rate".into(),
        percentile: 95.0,
        split_fractions: vec![0.7, 0.3],
        seed: 3,
        standardize,
        max_normal_train: None,
        max_target_train: None,
        max_source_train: None,
    }
}

proptest! {
    #[test]
    fn split_parts_partition_the_input(n in 3usize..300, a in 1u32..10, b in 1u32..10, c in 0u32..10, seed in any::<u64>()) {
        let total = (a + b + c) as f64;
        let fractions = [a as f64 / total, b as f64 / total, c as f64 / total];
        let parts = split_indices(n, &fractions, seed).unwrap();
        let mut all: Vec<usize> = parts.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        for (k, p) in parts.iter().enumerate().skip(1) {
            prop_assert_eq!(p.len(), (fractions[k] * n as f64).floor() as usize);
        }
    }

    #[test]
    fn percentile_labels_ignore_row_order(values in prop::collection::vec(-100.0f64..100.0, 1..200), p in 1.0f64..99.0, seed in any::<u64>()) {
        let labels = percentile_labels(&values, p).unwrap();
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let shuffled: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        let relabelled = percentile_labels(&shuffled, p).unwrap();
        for (k, &i) in order.iter().enumerate() {
            prop_assert_eq!(relabelled[k], labels[i]);
        }
    }
}

#[test]
fn split_dataset_rows_are_disjoint_and_complete() {
    let data = common::random_dataset(4, 101, 3, 0.0, tlnp::Role::Normal);
    let parts = split_dataset(&data, &[0.7, 0.3], 8).unwrap();
    let mut rows: Vec<Vec<f64>> = parts.iter().flat_map(|p| p.rows().map(|r| r.to_vec())).collect();
    let mut original: Vec<Vec<f64>> = data.rows().map(|r| r.to_vec()).collect();
    rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
    original.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(rows, original);
    assert_eq!(parts[1].len(), 30);
    assert!(split_indices(10, &[0.5, 0.6], 0).is_err());
    assert!(split_indices(1, &[0.5, 0.5], 0).is_err());
}

#[test]
fn standardization_uses_training_normal_statistics() {
    let raw = ingest_csv(&csv_spec(false)).unwrap();
    let std = ingest_csv(&csv_spec(true)).unwrap();
    let fitted = Standardizer::fit(&raw.normal_train).unwrap();
    assert_eq!(std.standardizer.as_ref(), Some(&fitted));
    let pairs: [(&tlnp::Dataset, &tlnp::Dataset); 6] = [
        (&raw.normal_train, &std.normal_train),
        (&raw.target_train, &std.target_train),
        (&raw.source_train, &std.source_train),
        (&raw.normal_test, &std.normal_test),
        (&raw.target_test, &std.target_test),
        (&raw.source_test, &std.source_test),
    ];
    for (r, s) in pairs {
        let mut expected = r.clone();
        fitted.apply(&mut expected);
        assert_eq!(expected.values(), s.values());
    }
}

#[test]
fn percentile_labeling_of_fixture() {
    let b = ingest_csv(&csv_spec(false)).unwrap();
    let abnormal = b.target_train.len() + b.target_test.len();
    let normal = b.normal_train.len() + b.normal_test.len();
    assert_eq!(normal + abnormal + 4, 400);
    // ties at the cut stay normal, so at most 5% are abnormal
    assert!((15..=396 / 20).contains(&abnormal));
    assert_eq!(b.dropped_rows, 6);
}

#[test]
fn caps_truncate_training_samples() {
    let capped = ingest_csv(&CsvIngestSpec {
        max_target_train: Some(5),
        max_source_train: Some(7),
        ..csv_spec(false)
    })
    .unwrap();
    let full = ingest_csv(&csv_spec(false)).unwrap();
    assert_eq!(capped.target_train.len(), 5);
    assert_eq!(capped.source_train.len(), 7);
    assert_eq!(capped.target_train.values(), &full.target_train.values()[..5 * 4]);
}

#[test]
fn unreadable_inputs_error() {
    let missing = CsvIngestSpec {
        path: fixture("nope.csv"),
        ..csv_spec(false)
    };
    assert!(matches!(ingest_csv(&missing), Err(tlnp::Error::Io { .. })));
    let bad_column = CsvIngestSpec {
        label_column: "snow".into(),
        ..csv_spec(false)
    };
    assert!(matches!(ingest_csv(&bad_column), Err(tlnp::Error::Ingest(_))));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("holes.csv");
    std::fs::write(&path, "a,y\n1,2\n,3\nx,4\n5,6\n").unwrap();
    let holes = CsvIngestSpec {
        path,
        source_path: None,
        feature_columns: vec!["a".into()],
        label_column: "y".into(),
        ..csv_spec(false)
    };
    assert!(matches!(ingest_csv(&holes), Err(tlnp::Error::Ingest(_))));
}

#[test]
fn gaussian_samples_have_requested_shape_and_moments() {
    let spec = GaussianSpec {
        n_normal: 5000,
        n_target: 5000,
        seed: 17,
        ..GaussianSpec::default()
    };
    let b = gen_gaussian(&spec).unwrap();
    assert_eq!(b.dim(), 15);
    assert_eq!(b.source_train.len(), 2500);
    assert_eq!(b.target_test.len(), 2000);
    let mean = |d: &tlnp::Dataset| d.values().iter().sum::<f64>() / d.values().len() as f64;
    assert!(mean(&b.normal_train).abs() < 0.02);
    assert!((mean(&b.target_train) - 0.5).abs() < 0.02);

    // more source points extend the same stream
    let more = gen_gaussian(&GaussianSpec { n_source: 3000, ..spec }).unwrap();
    assert_eq!(&more.source_train.values()[..2500 * 15], b.source_train.values());
    assert_eq!(more.normal_train, b.normal_train);
}

#[test]
fn bundle_json_round_trip() {
    let b = common::small_bundle(9, 1.0);
    let dir = tempfile::tempdir().unwrap();
    let path = DatasetBundle::cache_path(dir.path(), "abc");
    b.save_json(&path).unwrap();
    assert_eq!(DatasetBundle::load_json(&path).unwrap(), b);
}
