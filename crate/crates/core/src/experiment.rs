//! Reproducible experiment runner: repeated runs over an optional sample
//! size sweep, per-method evaluation on test data, aggregation and report
//! files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{only_source_np, only_target_np, pooled_np, threshold_classifier, tlod};
use crate::data::{gen_gaussian, ingest_csv, CsvIngestSpec, DatasetBundle, GaussianSpec};
use crate::error::{Error, Result};
use crate::losses::SurrogateLoss;
use crate::models::{Arch, Model, ModelKind};
use crate::oracle::{solve_procedure8, FiniteClass, RiskTable};
use crate::procedure::{run_tlnp, FilterMode, Problem, TlnpConfig, TunedHypothesis};
use crate::risk::{zero_one_type1, zero_one_type2};
use crate::seed::stable_hash;
use crate::trainer::TrainConfig;

pub const ENV_MASTER_SEED: &str = "TLNP_MASTER_SEED";
pub const ENV_WORKERS: &str = "TLNP_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Tlnp,
    TlnpVariance,
    OnlyTargetNp,
    OnlySourceNp,
    PooledNp,
    ThresholdTarget,
    ThresholdPooled,
    Tlod,
    OracleFixture,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Tlnp,
        Method::TlnpVariance,
        Method::OnlyTargetNp,
        Method::OnlySourceNp,
        Method::PooledNp,
        Method::ThresholdTarget,
        Method::ThresholdPooled,
        Method::Tlod,
        Method::OracleFixture,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Tlnp => "tlnp",
            Method::TlnpVariance => "tlnp_variance",
            Method::OnlyTargetNp => "only_target_np",
            Method::OnlySourceNp => "only_source_np",
            Method::PooledNp => "pooled_np",
            Method::ThresholdTarget => "threshold_target",
            Method::ThresholdPooled => "threshold_pooled",
            Method::Tlod => "tlod",
            Method::OracleFixture => "oracle_fixture",
        }
    }

    /// Methods whose training Type-I error is tuned into the band.
    pub fn is_np(self) -> bool {
        matches!(
            self,
            Method::Tlnp | Method::TlnpVariance | Method::OnlyTargetNp | Method::OnlySourceNp | Method::PooledNp | Method::Tlod
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Gaussian(GaussianSpec),
    Csv(CsvIngestSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    NS,
    NT,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default)]
    pub hidden_units: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            kind: ModelKind::Quadratic,
            hidden_units: 0,
        }
    }
}

fn default_runs() -> usize {
    10
}

fn default_alpha() -> f64 {
    0.05
}

fn default_epsilon0() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub methods: Vec<Method>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_epsilon0")]
    pub epsilon0: f64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub loss: SurrogateLoss,
    #[serde(default)]
    pub train: TrainConfig,
    /// `alpha` and `epsilon0` here are overridden by the top-level values.
    #[serde(default)]
    pub tlnp: TlnpConfig,
    /// JSON list of models solved by the `oracle_fixture` method.
    #[serde(default)]
    pub oracle_class: Option<PathBuf>,
    #[serde(default)]
    pub oracle_c_tilde: f64,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML config and applies environment overrides.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.apply_env()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(ENV_MASTER_SEED) {
            self.master_seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{ENV_MASTER_SEED}={v} is not an integer")))?;
        }
        if let Ok(v) = std::env::var(ENV_WORKERS) {
            self.workers = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{ENV_WORKERS}={v} is not an integer")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() || s.values.contains(&0) {
                return Err(Error::Config("sweep values must be positive".into()));
            }
        }
        if self.methods.contains(&Method::OracleFixture) && self.oracle_class.is_none() {
            return Err(Error::Config("oracle_fixture needs oracle_class".into()));
        }
        self.loss.validate()?;
        self.train.validate()?;
        self.tlnp_config().validate()
    }

    pub fn tlnp_config(&self) -> TlnpConfig {
        TlnpConfig {
            alpha: self.alpha,
            epsilon0: self.epsilon0,
            ..self.tlnp.clone()
        }
    }

    /// Hex digest (16 chars) of the canonical JSON form. Any field change
    /// changes it.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest[..8].iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    fn arch(&self, dim: usize) -> Arch {
        Arch::with_hidden(dim, self.model.hidden_units)
    }
}

fn sweep_label(value: Option<usize>) -> String {
    value.map_or_else(|| "none".to_string(), |v| v.to_string())
}

/// Seed for the data of one run. It ignores the sweep value so every sweep
/// point sees the same normal and target samples, and the swept sample grows
/// by prefix.
pub fn data_seed(master: u64, run: usize) -> u64 {
    stable_hash(&[&master.to_le_bytes(), &(run as u64).to_le_bytes(), b"data"])
}

/// Seed for one method in one run; adding methods never changes others.
/// Shared across sweep values, like [`data_seed`].
pub fn cell_seed(master: u64, run: usize, method: Method) -> u64 {
    stable_hash(&[
        &master.to_le_bytes(),
        &(run as u64).to_le_bytes(),
        method.name().as_bytes(),
    ])
}

/// Builds the data bundle for one (sweep value, run) pair.
pub fn build_bundle(cfg: &ExperimentConfig, value: Option<usize>, run: usize) -> Result<DatasetBundle> {
    let seed = data_seed(cfg.master_seed, run);
    let variable = cfg.sweep.as_ref().map(|s| s.variable);
    match &cfg.data {
        DataSource::Gaussian(g) => {
            let mut spec = GaussianSpec { seed, ..g.clone() };
            match (variable, value) {
                (Some(SweepVariable::NS), Some(v)) => spec.n_source = v,
                (Some(SweepVariable::NT), Some(v)) => spec.n_target = v,
                _ => {}
            }
            gen_gaussian(&spec)
        }
        DataSource::Csv(c) => {
            let mut spec = CsvIngestSpec { seed, ..c.clone() };
            match (variable, value) {
                (Some(SweepVariable::NS), Some(v)) => spec.max_source_train = Some(v),
                (Some(SweepVariable::NT), Some(v)) => spec.max_target_train = Some(v),
                _ => {}
            }
            ingest_csv(&spec)
        }
    }
}

/// Runs one method on one bundle.
pub fn run_method(
    method: Method,
    bundle: &DatasetBundle,
    cfg: &ExperimentConfig,
    train_cfg: &TrainConfig,
    oracle_class: Option<&FiniteClass>,
) -> Result<TunedHypothesis> {
    let tlnp_cfg = cfg.tlnp_config();
    let problem = Problem {
        kind: cfg.model.kind,
        arch: cfg.arch(bundle.dim()),
        loss: cfg.loss,
        normal: &bundle.normal_train,
        target: &bundle.target_train,
        source: Some(&bundle.source_train),
    };
    match method {
        Method::Tlnp => Ok(run_tlnp(
            &problem,
            &TlnpConfig {
                filter_mode: FilterMode::ConstantC,
                ..tlnp_cfg
            },
            train_cfg,
        )?
        .selected),
        Method::TlnpVariance => Ok(run_tlnp(
            &problem,
            &TlnpConfig {
                filter_mode: FilterMode::VarianceMethod,
                ..tlnp_cfg
            },
            train_cfg,
        )?
        .selected),
        Method::OnlyTargetNp => only_target_np(&problem, &tlnp_cfg, train_cfg),
        Method::OnlySourceNp => only_source_np(&problem, &tlnp_cfg, train_cfg),
        Method::PooledNp => pooled_np(&problem, &tlnp_cfg, train_cfg),
        Method::ThresholdTarget => threshold_classifier(&problem, &tlnp_cfg, train_cfg, false),
        Method::ThresholdPooled => threshold_classifier(&problem, &tlnp_cfg, train_cfg, true),
        Method::Tlod => tlod(&problem, &tlnp_cfg, train_cfg),
        Method::OracleFixture => {
            let class = oracle_class.ok_or_else(|| Error::Config("oracle class not loaded".into()))?;
            let table = RiskTable::compute(class, &cfg.loss, problem.normal, problem.target, &bundle.source_train)?;
            let sol = solve_procedure8(&table, cfg.alpha, cfg.epsilon0, cfg.oracle_c_tilde)?;
            let model = class.hypotheses[sol.selected].clone();
            Ok(TunedHypothesis {
                train_type1: zero_one_type1(&model, problem.normal)?,
                train_target_type2: zero_one_type2(&model, problem.target)?,
                train_source_type2: Some(zero_one_type2(&model, &bundle.source_train)?),
                model,
                lambda_s: f64::NAN,
                lambda_0: f64::NAN,
                grid_index: sol.selected,
            })
        }
    }
}

/// One (method, sweep value, run) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub method: Method,
    pub sweep_value: Option<usize>,
    pub run: usize,
    pub data_seed: u64,
    pub seed: u64,
    pub error: Option<String>,
    pub train_type1: Option<f64>,
    pub train_type2: Option<f64>,
    pub test_type1: Option<f64>,
    pub test_type2: Option<f64>,
    pub lambda_s: Option<f64>,
    pub lambda_0: Option<f64>,
    pub wall_time_s: f64,
}

impl CellResult {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: Method,
    pub sweep_value: Option<usize>,
    pub runs_ok: usize,
    pub runs_failed: usize,
    pub mean_test_type2: f64,
    pub std_test_type2: f64,
    pub mean_test_type1: f64,
    pub std_test_type1: f64,
    pub mean_train_type1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub cells: Vec<CellResult>,
    pub aggregates: Vec<Aggregate>,
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn aggregate(&self, method: Method, sweep_value: Option<usize>) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.method == method && a.sweep_value == sweep_value)
    }

    pub fn cells_for(&self, method: Method) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(move |c| c.method == method)
    }

    /// JSON with wall times zeroed; identical configs give identical bytes.
    pub fn canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.cells.iter_mut().for_each(|c| c.wall_time_s = 0.0);
        serde_json::to_string_pretty(&copy).expect("report serializes")
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn aggregate_cells(cells: &[CellResult], methods: &[Method], values: &[Option<usize>]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for &method in methods {
        for &value in values {
            let group: Vec<&CellResult> = cells
                .iter()
                .filter(|c| c.method == method && c.sweep_value == value)
                .collect();
            let ok: Vec<&&CellResult> = group.iter().filter(|c| c.ok()).collect();
            let pick = |f: fn(&CellResult) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|c| f(c)).collect() };
            let (m2, s2) = mean_std(&pick(|c| c.test_type2));
            let (m1, s1) = mean_std(&pick(|c| c.test_type1));
            let (mt, _) = mean_std(&pick(|c| c.train_type1));
            out.push(Aggregate {
                method,
                sweep_value: value,
                runs_ok: ok.len(),
                runs_failed: group.len() - ok.len(),
                mean_test_type2: m2,
                std_test_type2: s2,
                mean_test_type1: m1,
                std_test_type1: s1,
                mean_train_type1: mt,
            });
        }
    }
    out
}

fn evaluate_cell(
    method: Method,
    value: Option<usize>,
    run: usize,
    bundle: &Result<DatasetBundle>,
    cfg: &ExperimentConfig,
    oracle_class: Option<&FiniteClass>,
) -> CellResult {
    let seed = cell_seed(cfg.master_seed, run, method);
    let start = Instant::now();
    let outcome = bundle
        .as_ref()
        .map_err(|e| Error::Algorithm(format!("data: {e}")))
        .and_then(|b| {
            let h = run_method(method, b, cfg, &cfg.train.with_seed(seed), oracle_class)?;
            let test1 = zero_one_type1(&h.model, &b.normal_test)?;
            let test2 = zero_one_type2(&h.model, &b.target_test)?;
            Ok((h, test1, test2))
        });
    let mut cell = CellResult {
        method,
        sweep_value: value,
        run,
        data_seed: data_seed(cfg.master_seed, run),
        seed,
        error: None,
        train_type1: None,
        train_type2: None,
        test_type1: None,
        test_type2: None,
        lambda_s: None,
        lambda_0: None,
        wall_time_s: 0.0,
    };
    match outcome {
        Ok((h, t1, t2)) => {
            cell.train_type1 = Some(h.train_type1);
            cell.train_type2 = Some(h.train_target_type2);
            cell.test_type1 = Some(t1);
            cell.test_type2 = Some(t2);
            cell.lambda_s = h.lambda_s.is_finite().then_some(h.lambda_s);
            cell.lambda_0 = h.lambda_0.is_finite().then_some(h.lambda_0);
        }
        Err(e) => cell.error = Some(e.to_string()),
    }
    cell.wall_time_s = start.elapsed().as_secs_f64();
    cell
}

/// Runs every (sweep value, run, method) cell. Failed cells are recorded
/// and left out of the aggregates.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let oracle_class = match (&cfg.oracle_class, cfg.methods.contains(&Method::OracleFixture)) {
        (Some(path), true) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let models: Vec<Model> = serde_json::from_str(&text)?;
            Some(FiniteClass::new(models)?)
        }
        _ => None,
    };
    let values: Vec<Option<usize>> = match &cfg.sweep {
        Some(s) => s.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let cells = pool.install(|| {
        let keys: Vec<(Option<usize>, usize)> = values
            .iter()
            .flat_map(|&v| (0..cfg.runs).map(move |r| (v, r)))
            .collect();
        let bundles: Vec<Result<DatasetBundle>> = keys.par_iter().map(|&(v, r)| build_bundle(cfg, v, r)).collect();
        let jobs: Vec<(usize, Method)> = (0..keys.len())
            .flat_map(|k| cfg.methods.iter().map(move |&m| (k, m)))
            .collect();
        jobs.par_iter()
            .map(|&(k, m)| {
                let (v, r) = keys[k];
                evaluate_cell(m, v, r, &bundles[k], cfg, oracle_class.as_ref())
            })
            .collect::<Vec<_>>()
    });

    let mut warnings = Vec::new();
    for c in cells.iter().filter(|c| !c.ok()) {
        let msg = format!(
            "{} sweep={} run={} failed: {}",
            c.method.name(),
            sweep_label(c.sweep_value),
            c.run,
            c.error.as_deref().unwrap_or("")
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let aggregates = aggregate_cells(&cells, &cfg.methods, &values);
    Ok(ExperimentReport {
        config_hash: cfg.hash(),
        config: cfg.clone(),
        cells,
        aggregates,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Plot,
}

fn fmt_opt(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Aggregate table, one row per (method, sweep value).
pub fn aggregate_csv(report: &ExperimentReport) -> String {
    let mut s = String::from(
        "method,sweep_value,mean_test_type2,std_test_type2,mean_test_type1,std_test_type1,mean_train_type1,runs_ok,runs_failed\n",
    );
    for a in &report.aggregates {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            a.method.name(),
            fmt_opt(a.sweep_value),
            a.mean_test_type2,
            a.std_test_type2,
            a.mean_test_type1,
            a.std_test_type1,
            a.mean_train_type1,
            a.runs_ok,
            a.runs_failed
        );
    }
    s
}

/// Whitespace-delimited `x y yerr` rows for one method's Type-II curve.
pub fn plot_data(report: &ExperimentReport, method: Method) -> String {
    let mut s = String::from("# x mean_test_type2 std_test_type2\n");
    for a in report.aggregates.iter().filter(|a| a.method == method) {
        let _ = writeln!(
            s,
            "{} {} {}",
            a.sweep_value.unwrap_or(0),
            a.mean_test_type2,
            a.std_test_type2
        );
    }
    s
}

/// Writes the requested files as `<dir>/<stem>.json`, `<dir>/<stem>.csv`
/// and `<dir>/<stem>_<method>.dat`. Returns the paths written.
pub fn emit_report(report: &ExperimentReport, dir: &Path, stem: &str, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut write = |path: PathBuf, text: String| -> Result<()> {
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    for f in formats {
        match f {
            ReportFormat::Json => write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(report)?)?,
            ReportFormat::Csv => write(dir.join(format!("{stem}.csv")), aggregate_csv(report))?,
            ReportFormat::Plot => {
                for &m in &report.config.methods {
                    write(dir.join(format!("{stem}_{}.dat", m.name())), plot_data(report, m))?;
                }
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_values() {
        assert_eq!(mean_std(&[0.5]), (0.5, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn seeds_depend_on_every_part() {
        let base = cell_seed(1, 0, Method::Tlnp);
        assert_ne!(base, cell_seed(2, 0, Method::Tlnp));
        assert_ne!(base, cell_seed(1, 1, Method::Tlnp));
        assert_ne!(base, cell_seed(1, 0, Method::Tlod));
        assert_ne!(data_seed(1, 3), data_seed(1, 4));
        assert_ne!(data_seed(1, 3), cell_seed(1, 3, Method::Tlnp));
    }

    #[test]
    fn toml_config_parses() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            methods = ["tlnp", "only_target_np"]
            runs = 2
            master_seed = 9

            [data.gaussian]
            dim = 3
            n_normal = 100

            [sweep]
            variable = "n_s"
            values = [10, 20]

            [model]
            kind = "linear"

            [train]
            epochs = 5
            batch_size = "full"

            [tlnp]
            c_universal = 0.25
            "#,
        )
        .unwrap();
        assert_eq!(cfg.runs, 2);
        assert_eq!(cfg.tlnp_config().c_universal, 0.25);
        assert_eq!(cfg.tlnp_config().alpha, 0.05);
        match &cfg.data {
            DataSource::Gaussian(g) => {
                assert_eq!(g.dim, 3);
                assert_eq!(g.n_target, 50);
            }
            _ => panic!("expected gaussian"),
        }
        assert!(ExperimentConfig::from_toml_str("methods = []\nruns = 0\n[data.gaussian]\n").is_err());
    }
}
