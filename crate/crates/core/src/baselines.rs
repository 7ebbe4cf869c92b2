//! Comparison methods: target-only, source-only and pooled NP, thresholded
//! balanced classifiers, and pick-the-better-of-two transfer.

use crate::error::{Error, Result};
use crate::procedure::{run_tlnp, Problem, TlnpConfig, TunedHypothesis};
use crate::risk::{zero_one_type1, zero_one_type2, Dataset, Role};
use crate::seed::grid_point_seed;
use crate::trainer::{train, TrainConfig, TrainingSet};

/// TLNP restricted to `lambda_s = 0` with the source ignored; the output is
/// the target Type-II minimizer of the reduced class.
pub fn only_target_np(problem: &Problem<'_>, cfg: &TlnpConfig, train_cfg: &TrainConfig) -> Result<TunedHypothesis> {
    let p = Problem {
        source: None,
        ..*problem
    };
    Ok(run_tlnp(&p, &cfg.target_only(), train_cfg)?.selected)
}

/// Target-only NP with the source sample standing in for the target.
pub fn only_source_np(problem: &Problem<'_>, cfg: &TlnpConfig, train_cfg: &TrainConfig) -> Result<TunedHypothesis> {
    let source = nonempty_source(problem)?;
    let p = Problem {
        target: source,
        source: None,
        ..*problem
    };
    let h = only_target_np(&p, cfg, train_cfg)?;
    remeasure(h, problem)
}

/// Target-only NP on the union of target and source abnormal samples.
pub fn pooled_np(problem: &Problem<'_>, cfg: &TlnpConfig, train_cfg: &TrainConfig) -> Result<TunedHypothesis> {
    let pooled = pool(problem)?;
    let p = Problem {
        target: &pooled,
        source: None,
        ..*problem
    };
    let h = only_target_np(&p, cfg, train_cfg)?;
    remeasure(h, problem)
}

/// Balanced classifier (`lambda_0 = 1`, no tuning) whose output bias is then
/// shifted so the training Type-I error is at most `alpha`.
pub fn threshold_classifier(
    problem: &Problem<'_>,
    cfg: &TlnpConfig,
    train_cfg: &TrainConfig,
    pool_source: bool,
) -> Result<TunedHypothesis> {
    let pooled;
    let abnormal = if pool_source {
        pooled = pool(problem)?;
        &pooled
    } else {
        problem.target
    };
    if abnormal.is_empty() {
        return Err(Error::Undefined("abnormal training sample".into()));
    }
    let set = TrainingSet::new(problem.normal, abnormal, None);
    let seeded = train_cfg.with_seed(grid_point_seed(train_cfg.seed, 0.0));
    let scorer = train(problem.kind, problem.arch, &problem.loss, &set, 0.0, 1.0, &seeded)?;
    let model = threshold_to_alpha(&scorer, problem.normal, cfg.alpha)?;
    let h = TunedHypothesis {
        train_type1: zero_one_type1(&model, problem.normal)?,
        train_target_type2: f64::NAN,
        train_source_type2: None,
        model,
        lambda_s: 0.0,
        lambda_0: 1.0,
        grid_index: 0,
    };
    remeasure(h, problem)
}

/// Lowers the output bias so that at most `floor(alpha * n0)` normal scores
/// remain at or above zero, keeping as many as allowed.
pub fn threshold_to_alpha(
    scorer: &crate::models::Model,
    normal: &Dataset,
    alpha: f64,
) -> Result<crate::models::Model> {
    if normal.is_empty() {
        return Err(Error::Undefined("normal training sample".into()));
    }
    let mut scores: Vec<f64> = normal.rows().map(|x| scorer.score(x)).collect();
    scores.sort_by(|a, b| b.total_cmp(a));
    let n = scores.len();
    let allowed = ((alpha * n as f64).floor() as usize).min(n);
    // Cut between the largest excluded score and the next larger distinct one.
    let shift = if allowed == n {
        scores[n - 1] - 1.0
    } else {
        let pivot = scores[allowed];
        match scores[..allowed].iter().rev().find(|&&s| s > pivot) {
            Some(&above) => 0.5 * (pivot + above),
            None => pivot + 1.0,
        }
    };
    let mut model = scorer.shifted(shift);
    // The shift is applied through the bias, so re-check in floating point.
    let limit = allowed as f64 / n as f64;
    let mut bump = shift.abs().max(1.0) * f64::EPSILON;
    for _ in 0..64 {
        if zero_one_type1(&model, normal)? <= limit {
            return Ok(model);
        }
        model = scorer.shifted(shift + bump);
        bump *= 2.0;
    }
    Err(Error::Algorithm("could not place threshold under alpha".into()))
}

/// Better of source-only and target-only NP by training target Type-II
/// error; ties go to target-only.
pub fn tlod(problem: &Problem<'_>, cfg: &TlnpConfig, train_cfg: &TrainConfig) -> Result<TunedHypothesis> {
    let from_source = only_source_np(problem, cfg, train_cfg)?;
    let from_target = only_target_np(problem, cfg, train_cfg)?;
    let from_target = remeasure(from_target, problem)?;
    if from_source.train_target_type2 < from_target.train_target_type2 {
        Ok(from_source)
    } else {
        Ok(from_target)
    }
}

fn nonempty_source<'a>(problem: &Problem<'a>) -> Result<&'a Dataset> {
    problem
        .source
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::Undefined("source abnormal training sample".into()))
}

fn pool(problem: &Problem<'_>) -> Result<Dataset> {
    let target = problem.target.clone().with_role(Role::TargetAbnormal);
    match problem.source {
        Some(s) if !s.is_empty() => target.concat(s),
        _ => Ok(target),
    }
}

/// Re-measures training Type-II errors against the problem's own target and
/// source samples.
fn remeasure(mut h: TunedHypothesis, problem: &Problem<'_>) -> Result<TunedHypothesis> {
    h.train_target_type2 = zero_one_type2(&h.model, problem.target)?;
    h.train_source_type2 = match problem.source {
        Some(s) if !s.is_empty() => Some(zero_one_type2(&h.model, s)?),
        _ => None,
    };
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Arch, Model, ModelKind};
    use crate::risk::Split;

    #[test]
    fn threshold_examples() {
        let ident = Model::from_params(ModelKind::Linear, Arch::new(1), vec![1.0, 0.0]).unwrap();
        let normal = Dataset::new(1, vec![-2.0, -1.0], Role::Normal, Split::Train).unwrap();
        let m = threshold_to_alpha(&ident, &normal, 0.5).unwrap();
        assert_eq!(zero_one_type1(&m, &normal).unwrap(), 0.5);

        let m = threshold_to_alpha(&ident, &normal, 0.1).unwrap();
        assert_eq!(zero_one_type1(&m, &normal).unwrap(), 0.0);
        assert!(m.forward(&[-1.0]).unwrap() < 0.0);

        // ties at the cut cannot be split, so all tied scores go below
        let tied = Dataset::new(1, vec![3.0, 3.0, 3.0, 0.0], Role::Normal, Split::Train).unwrap();
        let m = threshold_to_alpha(&ident, &tied, 0.5).unwrap();
        assert_eq!(zero_one_type1(&m, &tied).unwrap(), 0.0);

        let m = threshold_to_alpha(&ident, &tied, 1.0).unwrap();
        assert_eq!(zero_one_type1(&m, &tied).unwrap(), 1.0);
    }
}
