//! Adam minimization of the Lagrangian cost
//! `R_T(h) + lambda_s * R_S(h) + lambda_0 * R_0(h)` built from surrogate risks.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::SurrogateLoss;
use crate::models::{Arch, GradientBuffer, Model, ModelKind};
use crate::risk::{surrogate_type1, surrogate_type2, Dataset};

/// Full-batch training is used up to this many samples under `BatchSize::Auto`.
pub const AUTO_FULL_BATCH_LIMIT: usize = 4096;
/// Minibatch size used above the limit under `BatchSize::Auto`.
pub const AUTO_BATCH: usize = 512;
/// Costs above this are treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchKeyword {
    Full,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BatchSize {
    Size(usize),
    Keyword(BatchKeyword),
}

impl BatchSize {
    /// Number of minibatches per epoch for `n` samples.
    fn batches(self, n: usize) -> usize {
        let size = match self {
            BatchSize::Keyword(BatchKeyword::Full) => n,
            BatchSize::Keyword(BatchKeyword::Auto) => {
                if n <= AUTO_FULL_BATCH_LIMIT {
                    n
                } else {
                    AUTO_BATCH
                }
            }
            BatchSize::Size(s) => s.max(1),
        };
        n.div_ceil(size.max(1)).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: BatchSize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 300,
            batch_size: BatchSize::Keyword(BatchKeyword::Auto),
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {b}")));
            }
        }
        if self.adam_eps.is_nan() || self.adam_eps <= 0.0 {
            return Err(Error::Config("adam_eps must be positive".into()));
        }
        if self.batch_size == BatchSize::Size(0) {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// The three training samples entering the cost. `source` may be absent.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSet<'a> {
    pub normal: &'a Dataset,
    pub target: &'a Dataset,
    pub source: Option<&'a Dataset>,
}

impl<'a> TrainingSet<'a> {
    pub fn new(normal: &'a Dataset, target: &'a Dataset, source: Option<&'a Dataset>) -> Self {
        Self {
            normal,
            target,
            source,
        }
    }

    /// Source sample used by the cost for this `lambda_s`, or an error when
    /// a positive weight meets a missing source.
    fn active_source(&self, lambda_s: f64) -> Result<Option<&'a Dataset>> {
        if !(lambda_s >= 0.0 && lambda_s.is_finite()) {
            return Err(Error::Config(format!("lambda_s must be >= 0, got {lambda_s}")));
        }
        let source = self.source.filter(|s| !s.is_empty());
        if lambda_s == 0.0 {
            return Ok(None);
        }
        match source {
            Some(s) => Ok(Some(s)),
            None => Err(Error::Config(
                "lambda_s > 0 requires a non-empty source sample".into(),
            )),
        }
    }
}

fn check_weights<'a>(data: &TrainingSet<'a>, lambda_s: f64, lambda_0: f64) -> Result<Option<&'a Dataset>> {
    if !(lambda_0 >= 0.0 && lambda_0.is_finite()) {
        return Err(Error::Config(format!("lambda_0 must be >= 0, got {lambda_0}")));
    }
    if data.target.is_empty() {
        return Err(Error::Undefined("target abnormal training sample".into()));
    }
    if data.normal.is_empty() {
        return Err(Error::Undefined("normal training sample".into()));
    }
    data.active_source(lambda_s)
}

pub fn lagrangian_cost(
    loss: &SurrogateLoss,
    model: &Model,
    data: &TrainingSet<'_>,
    lambda_s: f64,
    lambda_0: f64,
) -> Result<f64> {
    let source = check_weights(data, lambda_s, lambda_0)?;
    let mut cost = surrogate_type2(loss, model, data.target)?;
    if let Some(s) = source {
        cost += lambda_s * surrogate_type2(loss, model, s)?;
    }
    cost += lambda_0 * surrogate_type1(loss, model, data.normal)?;
    Ok(cost)
}

/// One weighted term of the cost: `weight * mean phi(sign * h(x))`.
struct Term<'a> {
    data: &'a Dataset,
    weight: f64,
    sign: f64,
}

fn terms<'a>(
    data: &TrainingSet<'a>,
    source: Option<&'a Dataset>,
    lambda_s: f64,
    lambda_0: f64,
) -> Vec<Term<'a>> {
    let mut out = vec![Term {
        data: data.target,
        weight: 1.0,
        sign: -1.0,
    }];
    if let Some(s) = source {
        out.push(Term {
            data: s,
            weight: lambda_s,
            sign: -1.0,
        });
    }
    out.push(Term {
        data: data.normal,
        weight: lambda_0,
        sign: 1.0,
    });
    out
}

/// Full-data cost and analytic gradient.
pub fn lagrangian_gradient(
    loss: &SurrogateLoss,
    model: &Model,
    data: &TrainingSet<'_>,
    lambda_s: f64,
    lambda_0: f64,
) -> Result<(f64, GradientBuffer)> {
    let source = check_weights(data, lambda_s, lambda_0)?;
    let mut grad = GradientBuffer::zeros(model.param_count());
    let mut cost = 0.0;
    for term in terms(data, source, lambda_s, lambda_0) {
        if term.data.dim() != model.input_dim() {
            return Err(Error::Input("model and data dimensions differ".into()));
        }
        let scale = term.weight / term.data.len() as f64;
        for x in term.data.rows() {
            let (v, s) = loss.value_and_slope(term.sign * model.score(x));
            cost += scale * v;
            model.accumulate_gradient(x, scale * s * term.sign, &mut grad.0);
        }
    }
    Ok((cost, grad))
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    fn new(n: usize, cfg: &TrainConfig) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr: cfg.learning_rate,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let mh = *m / c1;
            let vh = *v / c2;
            *p -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Trains a freshly initialized model (seeded by `cfg.seed`) for
/// `cfg.epochs` Adam passes.
///
/// Minibatches are stratified: each role's rows are shuffled and dealt into
/// the same number of batches, and each batch gradient is scaled so that the
/// batch gradients of one epoch average to the full gradient.
pub fn train(
    kind: ModelKind,
    arch: Arch,
    loss: &SurrogateLoss,
    data: &TrainingSet<'_>,
    lambda_s: f64,
    lambda_0: f64,
    cfg: &TrainConfig,
) -> Result<Model> {
    cfg.validate()?;
    let source = check_weights(data, lambda_s, lambda_0)?;
    let mut model = Model::init(kind, arch, cfg.seed)?;
    let terms = terms(data, source, lambda_s, lambda_0);
    for t in &terms {
        if t.data.dim() != arch.input_dim {
            return Err(Error::Input(format!(
                "model input dimension {} differs from data dimension {}",
                arch.input_dim,
                t.data.dim()
            )));
        }
    }
    let total: usize = terms.iter().map(|t| t.data.len()).sum();
    let k = cfg.batch_size.batches(total);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut orders: Vec<Vec<usize>> = terms.iter().map(|t| (0..t.data.len()).collect()).collect();
    let mut adam = Adam::new(model.param_count(), cfg);
    let mut grad = vec![0.0; model.param_count()];
    let mut iteration = 0usize;

    for _epoch in 0..cfg.epochs {
        if k > 1 {
            for order in &mut orders {
                order.shuffle(&mut rng);
            }
        }
        for b in 0..k {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut cost = 0.0;
            for (term, order) in terms.iter().zip(&orders) {
                let n = order.len();
                let lo = b * n / k;
                let hi = (b + 1) * n / k;
                let scale = k as f64 * term.weight / n as f64;
                for &i in &order[lo..hi] {
                    let x = term.data.row(i);
                    let (v, s) = loss.value_and_slope(term.sign * model.score(x));
                    cost += scale * v;
                    model.accumulate_gradient(x, scale * s * term.sign, &mut grad);
                }
            }
            if !cost.is_finite() || cost > DIVERGENCE_LIMIT || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::TrainingDiverged { iteration, cost });
            }
            adam.step(&mut model.params, &grad);
            iteration += 1;
        }
    }
    if model.params.iter().any(|p| !p.is_finite()) {
        return Err(Error::TrainingDiverged {
            iteration,
            cost: f64::NAN,
        });
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::{zero_one_type1, Role, Split};

    fn col(xs: &[f64], role: Role) -> Dataset {
        Dataset::new(1, xs.to_vec(), role, Split::Train).unwrap()
    }

    #[test]
    fn cost_examples() {
        let loss = SurrogateLoss::exponential();
        let normal = col(&[0.3, -1.2], Role::Normal);
        let target = col(&[2.0], Role::TargetAbnormal);
        let source = col(&[1.0, 4.0], Role::SourceAbnormal);
        let zero = Model::from_params(ModelKind::Linear, Arch::new(1), vec![0.0, 0.0]).unwrap();
        let set = TrainingSet::new(&normal, &target, Some(&source));
        assert_eq!(lagrangian_cost(&loss, &zero, &set, 1.0, 1.0).unwrap(), 3.0);

        let m = Model::from_params(ModelKind::Linear, Arch::new(1), vec![0.7, -0.1]).unwrap();
        let t2 = surrogate_type2(&loss, &m, &target).unwrap();
        assert_eq!(lagrangian_cost(&loss, &m, &set, 0.0, 0.0).unwrap(), t2);

        // h = -1 on target, +1 on normal: phi(1) + 2 phi(1) = 3e.
        let n1 = col(&[1.0], Role::Normal);
        let t1 = col(&[-1.0], Role::TargetAbnormal);
        let ident = Model::from_params(ModelKind::Linear, Arch::new(1), vec![1.0, 0.0]).unwrap();
        let set = TrainingSet::new(&n1, &t1, None);
        let c = lagrangian_cost(&loss, &ident, &set, 0.0, 2.0).unwrap();
        assert!((c - 8.154845).abs() < 1e-6);
    }

    #[test]
    fn positive_source_weight_needs_source() {
        let loss = SurrogateLoss::exponential();
        let normal = col(&[0.0], Role::Normal);
        let target = col(&[1.0], Role::TargetAbnormal);
        let m = Model::init(ModelKind::Linear, Arch::new(1), 0).unwrap();
        let set = TrainingSet::new(&normal, &target, None);
        assert!(matches!(lagrangian_cost(&loss, &m, &set, 1.0, 1.0), Err(Error::Config(_))));
        let empty = Dataset::empty(1, Role::SourceAbnormal, Split::Train);
        let set = TrainingSet::new(&normal, &target, Some(&empty));
        assert!(matches!(
            train(ModelKind::Linear, Arch::new(1), &loss, &set, 0.5, 1.0, &TrainConfig::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn separable_problem_is_learned() {
        let loss = SurrogateLoss::exponential();
        let normal = col(&[-1.0], Role::Normal);
        let target = col(&[1.0], Role::TargetAbnormal);
        let set = TrainingSet::new(&normal, &target, None);
        let cfg = TrainConfig {
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let m = train(ModelKind::Linear, Arch::new(1), &loss, &set, 0.0, 1.0, &cfg).unwrap();
        assert!(m.forward(&[1.0]).unwrap() > 0.0);
        assert!(m.forward(&[-1.0]).unwrap() < 0.0);
    }

    #[test]
    fn training_is_deterministic() {
        let loss = SurrogateLoss::exponential();
        let normal = col(&(0..50).map(|i| i as f64 / 25.0 - 1.0).collect::<Vec<_>>(), Role::Normal);
        let target = col(&[0.5, 0.9, 1.3], Role::TargetAbnormal);
        let set = TrainingSet::new(&normal, &target, None);
        let cfg = TrainConfig {
            batch_size: BatchSize::Size(8),
            epochs: 20,
            seed: 42,
            ..TrainConfig::default()
        };
        let a = train(ModelKind::Quadratic, Arch::new(1), &loss, &set, 0.0, 3.0, &cfg).unwrap();
        let b = train(ModelKind::Quadratic, Arch::new(1), &loss, &set, 0.0, 3.0, &cfg).unwrap();
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn huge_lambda0_lowers_type1() {
        let loss = SurrogateLoss::exponential();
        let normal = col(&(0..40).map(|i| i as f64 / 20.0 - 1.0).collect::<Vec<_>>(), Role::Normal);
        let target = col(&[0.2, 0.6, 1.0, 1.4], Role::TargetAbnormal);
        let set = TrainingSet::new(&normal, &target, None);
        let cfg = TrainConfig {
            learning_rate: 0.01,
            seed: 3,
            ..TrainConfig::default()
        };
        let lo = train(ModelKind::Linear, Arch::new(1), &loss, &set, 0.0, 0.0, &cfg).unwrap();
        let hi = train(ModelKind::Linear, Arch::new(1), &loss, &set, 0.0, 1e6, &cfg).unwrap();
        assert!(zero_one_type1(&hi, &normal).unwrap() <= zero_one_type1(&lo, &normal).unwrap());
    }

    #[test]
    fn invalid_config_rejected() {
        let bad = TrainConfig {
            adam_beta1: 1.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn batch_counts() {
        let auto = BatchSize::Keyword(BatchKeyword::Auto);
        assert_eq!(auto.batches(4096), 1);
        assert_eq!(auto.batches(6550), 13);
        assert_eq!(BatchSize::Keyword(BatchKeyword::Full).batches(10_000), 1);
        assert_eq!(BatchSize::Size(3).batches(10), 4);
    }
}
