//! Transfer-learning Neyman-Pearson selection.
//!
//! 1. For each `lambda_s` on a grid, tune `lambda_0` multiplicatively until
//!    the training 0-1 Type-I error lands in `[alpha - eps0/2, alpha + eps0/2]`.
//!    The tuned models form the reduced class.
//! 2. Keep the members whose target Type-II error is within a slack of the
//!    best member (constant `c / sqrt(n_T)`, or a variance estimate from a
//!    held-out reference).
//! 3. Return the survivor with the smallest source Type-II error.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::split_dataset;
use crate::error::{Error, Result};
use crate::losses::SurrogateLoss;
use crate::models::{Arch, Model, ModelKind};
use crate::risk::{zero_one_type1, zero_one_type2, Dataset};
use crate::seed::{grid_point_seed, mix};
use crate::trainer::{train, TrainConfig, TrainingSet};

/// Starting `lambda_0` for every grid point.
pub const INITIAL_LAMBDA0: f64 = 1.0;
/// Starting multiplicative increment for `lambda_0` tuning.
pub const INITIAL_INCREMENT: f64 = 0.5;
/// Adjacent grid points closer than this ratio are not refined further.
pub const MIN_REFINE_RATIO: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    ConstantC,
    VarianceMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TlnpConfig {
    pub alpha: f64,
    pub epsilon0: f64,
    pub lambda_s_grid: Vec<f64>,
    pub c_universal: f64,
    pub max_tune_attempts: usize,
    pub lambda0_bounds: (f64, f64),
    pub lambda_s_bounds: (f64, f64),
    pub min_successes: usize,
    pub target_success_count: usize,
    pub filter_mode: FilterMode,
}

impl Default for TlnpConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            epsilon0: 0.01,
            lambda_s_grid: vec![0.0, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 20.0, 40.0, 60.0, 80.0, 100.0],
            c_universal: 0.5,
            max_tune_attempts: 60,
            lambda0_bounds: (1e-6, 1e8),
            lambda_s_bounds: (1e-3, 1e4),
            min_successes: 5,
            target_success_count: 12,
            filter_mode: FilterMode::ConstantC,
        }
    }
}

impl TlnpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.epsilon0 > 0.0 && self.epsilon0 < self.alpha) {
            return Err(Error::Config(format!(
                "epsilon0 must lie in (0, alpha), got {}",
                self.epsilon0
            )));
        }
        if self.lambda_s_grid.is_empty() {
            return Err(Error::Config("lambda_s grid is empty".into()));
        }
        if self.lambda_s_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Config("lambda_s grid values must be finite and >= 0".into()));
        }
        if self.lambda_s_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("lambda_s grid must be strictly increasing".into()));
        }
        if self.c_universal.is_nan() || self.c_universal < 0.0 {
            return Err(Error::Config("c_universal must be >= 0".into()));
        }
        let (lo, hi) = self.lambda0_bounds;
        if !(lo > 0.0 && lo < INITIAL_LAMBDA0 && hi > INITIAL_LAMBDA0) {
            return Err(Error::Config("lambda0_bounds must bracket 1".into()));
        }
        let (lo, hi) = self.lambda_s_bounds;
        if !(lo > 0.0 && lo < hi) {
            return Err(Error::Config("lambda_s_bounds must satisfy 0 < lo < hi".into()));
        }
        if self.max_tune_attempts == 0 || self.target_success_count == 0 {
            return Err(Error::Config("attempt and success counts must be positive".into()));
        }
        Ok(())
    }

    pub fn band(&self) -> (f64, f64) {
        (self.alpha - self.epsilon0 / 2.0, self.alpha + self.epsilon0 / 2.0)
    }

    /// The `lambda_s = 0`, source-free configuration used by the
    /// target-only baseline.
    pub fn target_only(&self) -> Self {
        Self {
            lambda_s_grid: vec![0.0],
            min_successes: 1,
            filter_mode: FilterMode::ConstantC,
            ..self.clone()
        }
    }
}

/// A tuned member of the reduced class, with its training errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedHypothesis {
    pub model: Model,
    pub lambda_s: f64,
    pub lambda_0: f64,
    pub train_type1: f64,
    pub train_target_type2: f64,
    pub train_source_type2: Option<f64>,
    /// Position of the `lambda_s` point in the order it was tried.
    pub grid_index: usize,
}

/// Ordering used for every tie: smallest `lambda_s`, then smallest
/// `lambda_0`, then earliest grid index.
pub fn tie_order(a: &TunedHypothesis, b: &TunedHypothesis) -> Ordering {
    a.lambda_s
        .total_cmp(&b.lambda_s)
        .then(a.lambda_0.total_cmp(&b.lambda_0))
        .then(a.grid_index.cmp(&b.grid_index))
}

/// Training errors of a fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub type1: f64,
    pub target_type2: f64,
    pub source_type2: Option<f64>,
}

/// Produces a model for a `(lambda_s, lambda_0)` pair and reports its
/// training errors. Implemented by [`DataFitter`] for real training; tests
/// substitute closed-form stubs.
pub trait HypothesisFitter: Sync {
    fn fit(&self, lambda_s: f64, lambda_0: f64) -> Result<Model>;
    fn assess(&self, model: &Model) -> Result<Assessment>;
}

/// Fits by minimizing the Lagrangian cost on the given training data.
#[derive(Debug, Clone)]
pub struct DataFitter<'a> {
    pub kind: ModelKind,
    pub arch: Arch,
    pub loss: SurrogateLoss,
    pub data: TrainingSet<'a>,
    pub train_cfg: TrainConfig,
}

impl HypothesisFitter for DataFitter<'_> {
    fn fit(&self, lambda_s: f64, lambda_0: f64) -> Result<Model> {
        let cfg = self.train_cfg.with_seed(grid_point_seed(self.train_cfg.seed, lambda_s));
        train(self.kind, self.arch, &self.loss, &self.data, lambda_s, lambda_0, &cfg)
    }

    fn assess(&self, model: &Model) -> Result<Assessment> {
        let source_type2 = match self.data.source {
            Some(s) if !s.is_empty() => Some(zero_one_type2(model, s)?),
            _ => None,
        };
        Ok(Assessment {
            type1: zero_one_type1(model, self.data.normal)?,
            target_type2: zero_one_type2(model, self.data.target)?,
            source_type2,
        })
    }
}

/// One `lambda_0` attempt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneStep {
    pub lambda_0: f64,
    pub type1: f64,
}

/// Audit entry for one `lambda_s` grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneRecord {
    pub lambda_s: f64,
    pub grid_index: usize,
    pub trajectory: Vec<TuneStep>,
    pub accepted: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Miss {
    Over,
    Under,
}

struct TuneOutcome {
    record: TuneRecord,
    result: Result<TunedHypothesis>,
}

fn tune_point<F: HypothesisFitter + ?Sized>(
    fitter: &F,
    lambda_s: f64,
    grid_index: usize,
    cfg: &TlnpConfig,
) -> TuneOutcome {
    let (lo, hi) = cfg.band();
    let (min_l0, max_l0) = cfg.lambda0_bounds;
    let mut lambda_0 = INITIAL_LAMBDA0;
    let mut increment = INITIAL_INCREMENT;
    let mut previous: Option<Miss> = None;
    let mut trajectory = Vec::new();
    let mut last_type1 = f64::NAN;

    let fail = |trajectory: Vec<TuneStep>, last_type1: f64, last_lambda0: f64, why: String| {
        let attempts = trajectory.len();
        let record = TuneRecord {
            lambda_s,
            grid_index,
            trajectory: trajectory.clone(),
            accepted: false,
            failure: Some(why),
        };
        TuneOutcome {
            record,
            result: Err(Error::Tuning {
                lambda_s,
                attempts,
                last_type1,
                last_lambda0,
                trajectory: trajectory.iter().map(|s| s.lambda_0).collect(),
            }),
        }
    };

    for _ in 0..cfg.max_tune_attempts {
        let assessed = fitter
            .fit(lambda_s, lambda_0)
            .and_then(|m| fitter.assess(&m).map(|a| (m, a)));
        let (model, assessment) = match assessed {
            Ok(v) => v,
            Err(e) => return fail(trajectory, last_type1, lambda_0, e.to_string()),
        };
        last_type1 = assessment.type1;
        trajectory.push(TuneStep {
            lambda_0,
            type1: last_type1,
        });
        if last_type1 >= lo && last_type1 <= hi {
            let record = TuneRecord {
                lambda_s,
                grid_index,
                trajectory,
                accepted: true,
                failure: None,
            };
            return TuneOutcome {
                record,
                result: Ok(TunedHypothesis {
                    model,
                    lambda_s,
                    lambda_0,
                    train_type1: assessment.type1,
                    train_target_type2: assessment.target_type2,
                    train_source_type2: assessment.source_type2,
                    grid_index,
                }),
            };
        }
        let miss = if last_type1 > hi { Miss::Over } else { Miss::Under };
        if previous.is_some_and(|p| p != miss) {
            increment /= 2.0;
        }
        previous = Some(miss);
        lambda_0 *= match miss {
            Miss::Over => 1.0 + increment,
            Miss::Under => 1.0 - increment,
        };
        if !(lambda_0 >= min_l0 && lambda_0 <= max_l0) {
            return fail(
                trajectory,
                last_type1,
                lambda_0,
                format!("lambda_0 left bounds at {lambda_0}"),
            );
        }
    }
    let last = lambda_0;
    fail(trajectory, last_type1, last, "attempts exhausted".into())
}

/// Tunes `lambda_0` for one `lambda_s`.
pub fn tune_lambda0<F: HypothesisFitter + ?Sized>(
    fitter: &F,
    lambda_s: f64,
    cfg: &TlnpConfig,
) -> Result<TunedHypothesis> {
    tune_point(fitter, lambda_s, 0, cfg).result
}

/// Output of the grid search: the reduced class and a record per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step1Outcome {
    /// Members sorted by `lambda_s`.
    pub members: Vec<TunedHypothesis>,
    pub records: Vec<TuneRecord>,
}

/// Next `lambda_s` values to try: geometric midpoints between adjacent
/// tried values, half the smallest positive value when 0 is its lower
/// neighbour, and double the largest value. Values outside the bounds or
/// already tried are dropped.
fn expansion_candidates(tried: &[f64], bounds: (f64, f64)) -> Vec<f64> {
    let mut sorted = tried.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    for w in sorted.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == 0.0 {
            out.push(b / 2.0);
        } else if b / a > MIN_REFINE_RATIO {
            out.push((a * b).sqrt());
        }
    }
    if let Some(&top) = sorted.last() {
        if top > 0.0 {
            out.push(top * 2.0);
        }
    }
    out.retain(|&c| c >= bounds.0 && c <= bounds.1 && !sorted.contains(&c));
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

pub fn step1_grid<F: HypothesisFitter + ?Sized>(fitter: &F, cfg: &TlnpConfig) -> Result<Step1Outcome> {
    cfg.validate()?;
    let mut members = Vec::new();
    let mut records = Vec::new();
    let mut tried: Vec<f64> = Vec::new();
    let mut batch = cfg.lambda_s_grid.clone();

    while !batch.is_empty() {
        let offset = tried.len();
        let outcomes: Vec<TuneOutcome> = batch
            .par_iter()
            .enumerate()
            .map(|(i, &ls)| tune_point(fitter, ls, offset + i, cfg))
            .collect();
        tried.extend_from_slice(&batch);
        for outcome in outcomes {
            records.push(outcome.record);
            if let Ok(h) = outcome.result {
                if members.len() < cfg.target_success_count {
                    members.push(h);
                }
            }
        }
        if members.len() >= cfg.target_success_count {
            break;
        }
        batch = expansion_candidates(&tried, cfg.lambda_s_bounds);
    }

    let (lo, hi) = cfg.band();
    for m in &members {
        assert!(
            m.train_type1 >= lo && m.train_type1 <= hi,
            "tuned member outside the type-I band"
        );
    }
    if members.is_empty() || members.len() < cfg.min_successes {
        let diag: Vec<String> = records
            .iter()
            .map(|r| {
                format!(
                    "lambda_s={} attempts={} {}",
                    r.lambda_s,
                    r.trajectory.len(),
                    r.failure.as_deref().unwrap_or("ok")
                )
            })
            .collect();
        return Err(Error::Algorithm(format!(
            "{} of required {} grid points tuned successfully: [{}]",
            members.len(),
            cfg.min_successes.max(1),
            diag.join("; ")
        )));
    }
    members.sort_by(tie_order);
    Ok(Step1Outcome { members, records })
}

/// Result of a Step-2 filter over a reduced class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    /// Index of the best member in the reduced class, when the reference is
    /// one of its members.
    pub reference: Option<usize>,
    pub reference_type2: f64,
    pub slack: f64,
    pub threshold: f64,
    /// Indices into the reduced class, ascending.
    pub kept: Vec<usize>,
    /// Population variance of the reference's signed outputs (variance
    /// mode only).
    pub variance: Option<f64>,
}

fn argmin_by<F>(members: &[TunedHypothesis], candidates: &[usize], key: F) -> Option<usize>
where
    F: Fn(&TunedHypothesis) -> f64,
{
    candidates.iter().copied().min_by(|&i, &j| {
        key(&members[i])
            .total_cmp(&key(&members[j]))
            .then_with(|| tie_order(&members[i], &members[j]))
    })
}

fn keep_within(members: &[TunedHypothesis], threshold: f64) -> Vec<usize> {
    (0..members.len())
        .filter(|&i| members[i].train_target_type2 <= threshold)
        .collect()
}

/// Constant-slack filter: keep members whose target Type-II error is at most
/// `min + c / sqrt(n_target)`.
pub fn step2_filter(members: &[TunedHypothesis], n_target: usize, c: f64) -> Result<FilterOutcome> {
    if members.is_empty() {
        return Err(Error::Input("step 2 needs a non-empty reduced class".into()));
    }
    if n_target == 0 {
        return Err(Error::Undefined("target abnormal training sample".into()));
    }
    let all: Vec<usize> = (0..members.len()).collect();
    let best = argmin_by(members, &all, |h| h.train_target_type2).expect("non-empty");
    let reference_type2 = members[best].train_target_type2;
    let slack = c / (n_target as f64).sqrt();
    let threshold = reference_type2 + slack;
    Ok(FilterOutcome {
        reference: Some(best),
        reference_type2,
        slack,
        threshold,
        kept: keep_within(members, threshold),
        variance: None,
    })
}

/// Population variance of a reference's `±1` outputs on the fitting part of
/// the target sample, and the resulting filter. Member errors must already
/// be measured on `target_fit`.
pub fn variance_filter_with_reference(
    members: &[TunedHypothesis],
    reference: &Model,
    target_fit: &Dataset,
) -> Result<FilterOutcome> {
    if members.is_empty() {
        return Err(Error::Input("step 2 needs a non-empty reduced class".into()));
    }
    if target_fit.is_empty() {
        return Err(Error::Undefined("target abnormal fitting sample".into()));
    }
    let n = target_fit.len() as f64;
    let positives = target_fit.rows().filter(|x| reference.score(x) >= 0.0).count() as f64;
    let mean = (2.0 * positives - n) / n;
    // E[s^2] = 1 for s in {-1, +1}
    let variance = (1.0 - mean * mean).max(0.0);
    let reference_type2 = zero_one_type2(reference, target_fit)?;
    let slack = (variance / n).sqrt();
    let threshold = reference_type2 + slack;
    Ok(FilterOutcome {
        reference: None,
        reference_type2,
        slack,
        threshold,
        kept: keep_within(members, threshold),
        variance: Some(variance),
    })
}

/// Data needed by the variance-method filter.
#[derive(Debug, Clone, Copy)]
pub struct VarianceInputs<'a> {
    pub kind: ModelKind,
    pub arch: Arch,
    pub loss: SurrogateLoss,
    pub normal: &'a Dataset,
    /// Part of the target sample the reduced class was built on (70%).
    pub target_fit: &'a Dataset,
    /// Held-out part used to train the reference (30%).
    pub target_eval: &'a Dataset,
}

/// Variance-method filter: trains a target-only reference on the held-out
/// part and filters with slack `sqrt(VAR / n_fit)`.
pub fn step2_variance_filter(
    members: &[TunedHypothesis],
    inputs: &VarianceInputs<'_>,
    cfg: &TlnpConfig,
    train_cfg: &TrainConfig,
) -> Result<(FilterOutcome, TunedHypothesis)> {
    let reference_fitter = DataFitter {
        kind: inputs.kind,
        arch: inputs.arch,
        loss: inputs.loss,
        data: TrainingSet::new(inputs.normal, inputs.target_eval, None),
        train_cfg: train_cfg.clone(),
    };
    let reference = step1_grid(&reference_fitter, &cfg.target_only())
        .map_err(|e| Error::Algorithm(format!("variance reference: {e}")))?;
    let all: Vec<usize> = (0..reference.members.len()).collect();
    let best = argmin_by(&reference.members, &all, |h| h.train_target_type2).expect("non-empty");
    let reference = reference.members[best].clone();
    let outcome = variance_filter_with_reference(members, &reference.model, inputs.target_fit)?;
    Ok((outcome, reference))
}

/// Smallest source Type-II error among `kept`; target Type-II error when the
/// members carry no source error.
pub fn step3_select(members: &[TunedHypothesis], kept: &[usize]) -> Result<usize> {
    if kept.is_empty() {
        return Err(Error::Algorithm("step 3 received an empty filtered class".into()));
    }
    let has_source = kept.iter().all(|&i| members[i].train_source_type2.is_some());
    let pick = if has_source {
        argmin_by(members, kept, |h| h.train_source_type2.unwrap_or(f64::INFINITY))
    } else {
        argmin_by(members, kept, |h| h.train_target_type2)
    };
    Ok(pick.expect("non-empty"))
}

/// Serializable view of a member, without parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub lambda_s: f64,
    pub lambda_0: f64,
    pub train_type1: f64,
    pub train_target_type2: f64,
    pub train_source_type2: Option<f64>,
    pub grid_index: usize,
}

impl From<&TunedHypothesis> for MemberSummary {
    fn from(h: &TunedHypothesis) -> Self {
        Self {
            lambda_s: h.lambda_s,
            lambda_0: h.lambda_0,
            train_type1: h.train_type1,
            train_target_type2: h.train_target_type2,
            train_source_type2: h.train_source_type2,
            grid_index: h.grid_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlnpAudit {
    pub filter_mode: FilterMode,
    pub grid: Vec<TuneRecord>,
    pub members: Vec<MemberSummary>,
    pub filter: FilterOutcome,
    pub variance_reference: Option<MemberSummary>,
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlnpOutcome {
    pub selected: TunedHypothesis,
    pub members: Vec<TunedHypothesis>,
    pub audit: TlnpAudit,
}

/// Problem definition shared by TLNP and the baselines.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub kind: ModelKind,
    pub arch: Arch,
    pub loss: SurrogateLoss,
    pub normal: &'a Dataset,
    pub target: &'a Dataset,
    pub source: Option<&'a Dataset>,
}

impl<'a> Problem<'a> {
    pub fn fitter(&self, target: &'a Dataset, train_cfg: &TrainConfig) -> DataFitter<'a> {
        DataFitter {
            kind: self.kind,
            arch: self.arch,
            loss: self.loss,
            data: TrainingSet::new(self.normal, target, self.source),
            train_cfg: train_cfg.clone(),
        }
    }
}

/// Seed for the 70/30 target split of the variance method.
pub fn variance_split_seed(train_seed: u64) -> u64 {
    mix(train_seed, 0x7030)
}

/// Full TLNP run: grid search, Step-2 filter per `cfg.filter_mode`, Step-3
/// selection.
pub fn run_tlnp(problem: &Problem<'_>, cfg: &TlnpConfig, train_cfg: &TrainConfig) -> Result<TlnpOutcome> {
    cfg.validate()?;
    train_cfg.validate()?;
    if problem.target.is_empty() {
        return Err(Error::Undefined("target abnormal training sample".into()));
    }
    match cfg.filter_mode {
        FilterMode::ConstantC => {
            let fitter = problem.fitter(problem.target, train_cfg);
            let step1 = step1_grid(&fitter, cfg)?;
            let filter = step2_filter(&step1.members, problem.target.len(), cfg.c_universal)?;
            finish(step1, filter, None, cfg.filter_mode)
        }
        FilterMode::VarianceMethod => {
            if problem.target.len() < 4 {
                return Err(Error::Input(
                    "variance filter needs at least 4 target abnormal points".into(),
                ));
            }
            let parts = split_dataset(problem.target, &[0.7, 0.3], variance_split_seed(train_cfg.seed))?;
            let (fit, eval) = (&parts[0], &parts[1]);
            let fitter = problem.fitter(fit, train_cfg);
            let step1 = step1_grid(&fitter, cfg)?;
            let inputs = VarianceInputs {
                kind: problem.kind,
                arch: problem.arch,
                loss: problem.loss,
                normal: problem.normal,
                target_fit: fit,
                target_eval: eval,
            };
            let (filter, reference) = step2_variance_filter(&step1.members, &inputs, cfg, train_cfg)?;
            finish(step1, filter, Some(MemberSummary::from(&reference)), cfg.filter_mode)
        }
    }
}

fn finish(
    step1: Step1Outcome,
    filter: FilterOutcome,
    variance_reference: Option<MemberSummary>,
    filter_mode: FilterMode,
) -> Result<TlnpOutcome> {
    let selected = step3_select(&step1.members, &filter.kept)?;
    let audit = TlnpAudit {
        filter_mode,
        grid: step1.records,
        members: step1.members.iter().map(MemberSummary::from).collect(),
        filter,
        variance_reference,
        selected,
    };
    Ok(TlnpOutcome {
        selected: step1.members[selected].clone(),
        members: step1.members,
        audit,
    })
}
