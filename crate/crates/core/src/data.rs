//! Synthetic Gaussian data, CSV ingestion with percentile labels,
//! deterministic splits and standardization.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk::{Dataset, Role, Split};
use crate::seed::mix;

/// Maximum fraction of rows that may be dropped for missing or unparseable
/// values before ingestion fails.
pub const MAX_DROPPED_FRACTION: f64 = 0.10;

/// A mean given either per coordinate or as one value broadcast to all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Mean {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Mean {
    fn expand(&self, dim: usize) -> Result<Vec<f64>> {
        match self {
            Mean::Scalar(m) => Ok(vec![*m; dim]),
            Mean::Vector(v) if v.len() == dim => Ok(v.clone()),
            Mean::Vector(v) => Err(Error::Config(format!(
                "mean vector has length {}, expected {dim}",
                v.len()
            ))),
        }
    }
}

/// Three unit-covariance Gaussians: normal, target abnormal, source abnormal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaussianSpec {
    pub dim: usize,
    pub mean_normal: Mean,
    pub mean_target_abnormal: Mean,
    pub mean_source_abnormal: Mean,
    pub n_normal: usize,
    pub n_target: usize,
    pub n_source: usize,
    pub n_test_normal: usize,
    pub n_test_target: usize,
    pub n_test_source: usize,
    pub seed: u64,
}

impl Default for GaussianSpec {
    fn default() -> Self {
        Self {
            dim: 15,
            mean_normal: Mean::Scalar(0.0),
            mean_target_abnormal: Mean::Scalar(0.5),
            mean_source_abnormal: Mean::Scalar(0.5),
            n_normal: 4000,
            n_target: 50,
            n_source: 2500,
            n_test_normal: 4000,
            n_test_target: 2000,
            n_test_source: 0,
            seed: 0,
        }
    }
}

/// Train and test samples for each role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetBundle {
    pub normal_train: Dataset,
    pub target_train: Dataset,
    pub source_train: Dataset,
    pub normal_test: Dataset,
    pub target_test: Dataset,
    pub source_test: Dataset,
    #[serde(default)]
    pub standardizer: Option<Standardizer>,
    /// Rows dropped during ingestion for missing or unparseable values.
    #[serde(default)]
    pub dropped_rows: usize,
}

impl DatasetBundle {
    pub fn dim(&self) -> usize {
        self.normal_train.dim()
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Sidecar location for a bundle built from a config with this hash.
    pub fn cache_path(dir: &Path, config_hash: &str) -> PathBuf {
        dir.join(format!("bundle-{config_hash}.json"))
    }
}

fn sample_gaussian(mean: &[f64], n: usize, seed: u64, stream: u64, role: Role, split: Split) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let d = mean.len();
    let mut values = Vec::with_capacity(n * d);
    for _ in 0..n {
        for &m in mean {
            let z: f64 = StandardNormal.sample(&mut rng);
            values.push(m + z);
        }
    }
    Dataset::new(d, values, role, split).expect("gaussian samples are finite")
}

/// Samples every role from `N(mean, I)` on its own RNG stream.
pub fn gen_gaussian(spec: &GaussianSpec) -> Result<DatasetBundle> {
    if spec.dim == 0 {
        return Err(Error::Config("gaussian dim must be at least 1".into()));
    }
    let normal = spec.mean_normal.expand(spec.dim)?;
    let target = spec.mean_target_abnormal.expand(spec.dim)?;
    let source = spec.mean_source_abnormal.expand(spec.dim)?;
    let s = spec.seed;
    Ok(DatasetBundle {
        normal_train: sample_gaussian(&normal, spec.n_normal, s, 0, Role::Normal, Split::Train),
        target_train: sample_gaussian(&target, spec.n_target, s, 1, Role::TargetAbnormal, Split::Train),
        source_train: sample_gaussian(&source, spec.n_source, s, 2, Role::SourceAbnormal, Split::Train),
        normal_test: sample_gaussian(&normal, spec.n_test_normal, s, 3, Role::Normal, Split::Test),
        target_test: sample_gaussian(&target, spec.n_test_target, s, 4, Role::TargetAbnormal, Split::Test),
        source_test: sample_gaussian(&source, spec.n_test_source, s, 5, Role::SourceAbnormal, Split::Test),
        standardizer: None,
        dropped_rows: 0,
    })
}

/// Shuffled partition of `0..n`. Part sizes are `floor(f_i * n)` with the
/// remainder added to the first part.
pub fn split_indices(n: usize, fractions: &[f64], seed: u64) -> Result<Vec<Vec<usize>>> {
    if fractions.is_empty() {
        return Err(Error::Split("no split fractions given".into()));
    }
    if fractions.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
        return Err(Error::Split("split fractions must be finite and >= 0".into()));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Split(format!("split fractions sum to {total}, not 1")));
    }
    if n < fractions.len() {
        return Err(Error::Split(format!(
            "cannot split {n} rows into {} parts",
            fractions.len()
        )));
    }
    let mut sizes: Vec<usize> = fractions.iter().map(|f| (f * n as f64).floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    sizes[0] += n - assigned;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut parts = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for size in sizes {
        parts.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(parts)
}

pub fn split_dataset(data: &Dataset, fractions: &[f64], seed: u64) -> Result<Vec<Dataset>> {
    Ok(split_indices(data.len(), fractions, seed)?
        .iter()
        .map(|idx| data.select(idx))
        .collect())
}

/// Per-feature affine map `(x - mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Population mean and standard deviation of `data`. Constant features
    /// get scale 1.
    pub fn fit(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Undefined("standardization sample".into()));
        }
        let d = data.dim();
        let n = data.len() as f64;
        let mut mean = vec![0.0; d];
        for x in data.rows() {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for x in data.rows() {
            for ((s, v), m) in var.iter_mut().zip(x).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, data: &mut Dataset) {
        let d = data.dim();
        for row in data.values_mut().chunks_exact_mut(d) {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvIngestSpec {
    /// Target-domain file: supplies normal and target abnormal rows.
    pub path: PathBuf,
    /// Source-domain file: supplies source abnormal rows only.
    #[serde(default)]
    pub source_path: Option<PathBuf>,
    pub feature_columns: Vec<String>,
    pub label_column: String,
    #[serde(default = "default_percentile")]
    pub percentile: f64,
    /// Train / test fractions.
    #[serde(default = "default_split")]
    pub split_fractions: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub standardize: bool,
    /// Optional caps on training sample sizes (applied after shuffling).
    #[serde(default)]
    pub max_normal_train: Option<usize>,
    #[serde(default)]
    pub max_target_train: Option<usize>,
    #[serde(default)]
    pub max_source_train: Option<usize>,
}

fn default_percentile() -> f64 {
    95.0
}

fn default_split() -> Vec<f64> {
    vec![0.7, 0.3]
}

fn default_true() -> bool {
    true
}

/// Nearest-rank percentile: the value at rank `ceil(p/100 * n)` of the
/// sorted sample.
pub fn nearest_rank_percentile(values: &[f64], percentile: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Undefined("percentile of empty column".into()));
    }
    if !(percentile > 0.0 && percentile < 100.0) {
        return Err(Error::Config(format!("percentile must lie in (0, 100), got {percentile}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((percentile / 100.0) * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// `true` (abnormal) for values strictly above the nearest-rank percentile.
pub fn percentile_labels(values: &[f64], percentile: f64) -> Result<Vec<bool>> {
    let cut = nearest_rank_percentile(values, percentile)?;
    Ok(values.iter().map(|&v| v > cut).collect())
}

struct Table {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    dropped: usize,
}

fn read_table(path: &Path, feature_columns: &[String], label_column: &str) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Ingest(format!("{}: {other:?}", path.display())),
        })?;
    let headers = reader.headers()?.clone();
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Ingest(format!("column '{name}' not found in {}", path.display())))
    };
    let feature_idx: Vec<usize> = feature_columns.iter().map(|c| position(c)).collect::<Result<_>>()?;
    let label_idx = position(label_column)?;

    let parse = |record: &csv::StringRecord, i: usize| -> Option<f64> {
        record
            .get(i)
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite())
    };

    let mut table = Table {
        features: Vec::new(),
        labels: Vec::new(),
        dropped: 0,
    };
    let mut total = 0usize;
    for record in reader.records() {
        total += 1;
        let Ok(record) = record else {
            table.dropped += 1;
            continue;
        };
        let label = parse(&record, label_idx);
        let row: Option<Vec<f64>> = feature_idx.iter().map(|&i| parse(&record, i)).collect();
        match (row, label) {
            (Some(row), Some(label)) => {
                table.features.push(row);
                table.labels.push(label);
            }
            _ => table.dropped += 1,
        }
    }
    if total > 0 && table.dropped as f64 / total as f64 > MAX_DROPPED_FRACTION {
        return Err(Error::Ingest(format!(
            "{} of {total} rows in {} are missing or unparseable",
            table.dropped,
            path.display()
        )));
    }
    if table.dropped > 0 {
        log::warn!("dropped {} rows with missing values from {}", table.dropped, path.display());
    }
    Ok(table)
}

fn rows_to_dataset(rows: &[Vec<f64>], dim: usize, role: Role, split: Split) -> Dataset {
    Dataset::new(dim, rows.concat(), role, split).expect("parsed values are finite")
}

/// Splits one class into (train, test). An empty class yields empty parts.
fn split_class(
    rows: &[Vec<f64>],
    dim: usize,
    role: Role,
    fractions: &[f64],
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let all = rows_to_dataset(rows, dim, role, Split::Train);
    if all.is_empty() {
        return Ok((all, Dataset::empty(dim, role, Split::Test)));
    }
    let mut parts = split_dataset(&all, fractions, seed)?;
    let mut test = parts.swap_remove(1);
    test.split = Split::Test;
    Ok((parts.swap_remove(0), test))
}

pub fn ingest_csv(spec: &CsvIngestSpec) -> Result<DatasetBundle> {
    if spec.feature_columns.is_empty() {
        return Err(Error::Config("no feature columns selected".into()));
    }
    if spec.split_fractions.len() != 2 {
        return Err(Error::Config("split_fractions must give (train, test)".into()));
    }
    let dim = spec.feature_columns.len();
    let target = read_table(&spec.path, &spec.feature_columns, &spec.label_column)?;
    if target.labels.is_empty() {
        return Err(Error::Ingest(format!("{} has no usable rows", spec.path.display())));
    }
    let labels = percentile_labels(&target.labels, spec.percentile)?;
    let (abnormal, normal): (Vec<_>, Vec<_>) = target
        .features
        .into_iter()
        .zip(labels)
        .partition(|(_, is_abnormal)| *is_abnormal);
    let normal: Vec<Vec<f64>> = normal.into_iter().map(|(r, _)| r).collect();
    let abnormal: Vec<Vec<f64>> = abnormal.into_iter().map(|(r, _)| r).collect();

    let f = &spec.split_fractions;
    let (mut normal_train, mut normal_test) = split_class(&normal, dim, Role::Normal, f, mix(spec.seed, 0))?;
    let (mut target_train, mut target_test) =
        split_class(&abnormal, dim, Role::TargetAbnormal, f, mix(spec.seed, 1))?;

    let mut dropped = target.dropped;
    let (mut source_train, mut source_test) = match &spec.source_path {
        Some(path) => {
            let source = read_table(path, &spec.feature_columns, &spec.label_column)?;
            dropped += source.dropped;
            let rows: Vec<Vec<f64>> = if source.labels.is_empty() {
                Vec::new()
            } else {
                let labels = percentile_labels(&source.labels, spec.percentile)?;
                source
                    .features
                    .into_iter()
                    .zip(labels)
                    .filter_map(|(r, a)| a.then_some(r))
                    .collect()
            };
            split_class(&rows, dim, Role::SourceAbnormal, f, mix(spec.seed, 2))?
        }
        None => (
            Dataset::empty(dim, Role::SourceAbnormal, Split::Train),
            Dataset::empty(dim, Role::SourceAbnormal, Split::Test),
        ),
    };

    if let Some(n) = spec.max_normal_train {
        normal_train = normal_train.truncated(n);
    }
    if let Some(n) = spec.max_target_train {
        target_train = target_train.truncated(n);
    }
    if let Some(n) = spec.max_source_train {
        source_train = source_train.truncated(n);
    }

    let standardizer = if spec.standardize {
        let s = Standardizer::fit(&normal_train)?;
        for d in [
            &mut normal_train,
            &mut target_train,
            &mut source_train,
            &mut normal_test,
            &mut target_test,
            &mut source_test,
        ] {
            s.apply(d);
        }
        Some(s)
    } else {
        None
    };

    Ok(DatasetBundle {
        normal_train,
        target_train,
        source_train,
        normal_test,
        target_test,
        source_test,
        standardizer,
        dropped_rows: dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes() {
        let p = split_indices(10, &[0.7, 0.3], 1).unwrap();
        assert_eq!((p[0].len(), p[1].len()), (7, 3));
        let p = split_indices(9, &[0.7, 0.3], 1).unwrap();
        assert_eq!((p[0].len(), p[1].len()), (7, 2));
        assert_eq!(split_indices(9, &[0.7, 0.3], 1).unwrap(), p);
        assert!(matches!(split_indices(1, &[0.7, 0.3], 1), Err(Error::Split(_))));
        assert!(matches!(split_indices(10, &[0.7, 0.2], 1), Err(Error::Split(_))));
    }

    #[test]
    fn nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(nearest_rank_percentile(&v, 95.0).unwrap(), 95.0);
        assert_eq!(percentile_labels(&v, 95.0).unwrap().iter().filter(|&&a| a).count(), 5);
        let flat = vec![2.0; 30];
        assert!(percentile_labels(&flat, 95.0).unwrap().iter().all(|&a| !a));
        assert!(nearest_rank_percentile(&v, 100.0).is_err());
    }

    #[test]
    fn gaussian_is_deterministic() {
        let spec = GaussianSpec {
            n_normal: 20,
            n_target: 5,
            n_source: 7,
            n_test_normal: 3,
            n_test_target: 3,
            seed: 4,
            ..GaussianSpec::default()
        };
        let a = gen_gaussian(&spec).unwrap();
        assert_eq!(a, gen_gaussian(&spec).unwrap());
        assert_eq!(a.source_train.len(), 7);
        assert_eq!(a.source_test.len(), 0);
        assert_ne!(a.target_train.row(0), a.source_train.row(0));
    }

    #[test]
    fn mean_length_checked() {
        let spec = GaussianSpec {
            mean_normal: Mean::Vector(vec![0.0; 3]),
            ..GaussianSpec::default()
        };
        assert!(matches!(gen_gaussian(&spec), Err(Error::Config(_))));
    }
}
