//! Exact solver of the two-stage constrained procedure over a finite class.
//!
//! Stage one finds the target-risk minimizer among hypotheses whose
//! surrogate Type-I risk is at most `alpha + eps0/2`. Stage two minimizes
//! the source risk subject to the same Type-I constraint and to staying
//! within `2 C / sqrt(n_T)` of the stage-one target risk. Everything is
//! computed by enumeration, so the results serve as ground truth.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::SurrogateLoss;
use crate::models::Model;
use crate::risk::{surrogate_type1, surrogate_type2, Dataset, Role, Split};

/// A finite hypothesis class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteClass {
    pub hypotheses: Vec<Model>,
}

impl FiniteClass {
    pub fn new(hypotheses: Vec<Model>) -> Result<Self> {
        let class = Self { hypotheses };
        class.validate()?;
        Ok(class)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .hypotheses
            .first()
            .ok_or_else(|| Error::Input("finite class must contain at least one hypothesis".into()))?;
        if self.hypotheses.iter().any(|h| h.input_dim() != first.input_dim()) {
            return Err(Error::Input("hypotheses disagree on input dimension".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }
}

/// Empirical surrogate risks of every class member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskTable {
    pub type1: Vec<f64>,
    pub target: Vec<f64>,
    pub source: Vec<f64>,
    pub n_target: usize,
}

impl RiskTable {
    pub fn compute(
        class: &FiniteClass,
        loss: &SurrogateLoss,
        normal: &Dataset,
        target: &Dataset,
        source: &Dataset,
    ) -> Result<Self> {
        class.validate()?;
        let rows: Vec<(f64, f64, f64)> = class
            .hypotheses
            .par_iter()
            .map(|h| {
                Ok((
                    surrogate_type1(loss, h, normal)?,
                    surrogate_type2(loss, h, target)?,
                    surrogate_type2(loss, h, source)?,
                ))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            type1: rows.iter().map(|r| r.0).collect(),
            target: rows.iter().map(|r| r.1).collect(),
            source: rows.iter().map(|r| r.2).collect(),
            n_target: target.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.type1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.type1.is_empty()
    }

    fn check(&self) -> Result<()> {
        let m = self.type1.len();
        if m == 0 || self.target.len() != m || self.source.len() != m {
            return Err(Error::Input("risk table columns must be non-empty and equal length".into()));
        }
        if self.n_target == 0 {
            return Err(Error::Undefined("target abnormal sample".into()));
        }
        Ok(())
    }
}

/// Lowest index attaining the minimum of `key` over `candidates`.
fn first_argmin(candidates: impl Iterator<Item = usize>, key: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in candidates {
        match best {
            Some(b) if key[i] >= key[b] => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Target-risk minimizer subject to `type1 <= alpha + eps0/2`.
pub fn solve_target_hat(table: &RiskTable, alpha: f64, epsilon0: f64) -> Result<usize> {
    table.check()?;
    let cap = alpha + epsilon0 / 2.0;
    let feasible = (0..table.len()).filter(|&i| table.type1[i] <= cap);
    first_argmin(feasible, &table.target).ok_or_else(|| Error::Infeasible {
        min_type1: table.type1.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Procedure8Solution {
    pub target_hat: usize,
    pub selected: usize,
    /// Upper limit on the target risk in stage two.
    pub target_bound: f64,
    pub type1_cap: f64,
}

/// Source-risk minimizer within the target-risk slack of the stage-one
/// solution and the Type-I cap. Ties go to the lowest index.
pub fn solve_procedure8(table: &RiskTable, alpha: f64, epsilon0: f64, c_tilde: f64) -> Result<Procedure8Solution> {
    if c_tilde.is_nan() || c_tilde < 0.0 {
        return Err(Error::Config("c_tilde must be >= 0".into()));
    }
    let target_hat = solve_target_hat(table, alpha, epsilon0)?;
    let type1_cap = alpha + epsilon0 / 2.0;
    let target_bound = table.target[target_hat] + 2.0 * c_tilde / (table.n_target as f64).sqrt();
    let feasible =
        (0..table.len()).filter(|&i| table.target[i] <= target_bound && table.type1[i] <= type1_cap);
    let selected = first_argmin(feasible, &table.source);
    assert!(selected.is_some(), "stage-one solution is always feasible in stage two");
    Ok(Procedure8Solution {
        target_hat,
        selected: selected.expect("checked"),
        target_bound,
        type1_cap,
    })
}

/// A distribution supported on finitely many weighted points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLaw {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl DiscreteLaw {
    fn validate(&self) -> Result<()> {
        if self.points.is_empty() || self.points.len() != self.weights.len() {
            return Err(Error::Input("discrete law needs one weight per point".into()));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || self.weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Input("discrete law weights must be non-negative with positive sum".into()));
        }
        Ok(())
    }

    /// Weighted mean of `phi(sign * h(x))`.
    fn risk(&self, loss: &SurrogateLoss, h: &Model, sign: f64) -> Result<f64> {
        let total: f64 = self.weights.iter().sum();
        let mut acc = 0.0;
        for (x, w) in self.points.iter().zip(&self.weights) {
            acc += w * loss.value(sign * h.forward(x)?);
        }
        Ok(acc / total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferExponent {
    pub rho: f64,
    pub c: f64,
    /// All target excess risks vanish; `(rho, c) = (1, 1)` by convention.
    pub degenerate: bool,
    /// Index of the source solution with the largest target risk.
    pub reference: usize,
    /// Members with Type-I risk within `alpha + r`.
    pub members_checked: usize,
}

/// Fits `(rho, c)` with `c * max(0, dS(h)) >= max(0, dT(h))^rho` over every
/// member whose Type-I risk is at most `alpha + r`, with excesses measured
/// from the source solution that is worst on the target. For each `rho` on
/// the grid the smallest valid `c` is the envelope `max dT^rho / dS`; the
/// result is the smallest `rho` whose envelope is at most 1, or otherwise
/// the `rho` with the smallest envelope. Diagnostic only.
#[allow(clippy::too_many_arguments)]
pub fn estimate_transfer_exponent(
    class: &FiniteClass,
    loss: &SurrogateLoss,
    normal: &DiscreteLaw,
    source: &DiscreteLaw,
    target: &DiscreteLaw,
    alpha: f64,
    r: f64,
    grid: &[f64],
) -> Result<TransferExponent> {
    class.validate()?;
    for law in [normal, source, target] {
        law.validate()?;
    }
    if grid.is_empty() || grid.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(Error::Config("exponent grid must be non-empty and positive".into()));
    }
    let m = class.len();
    let mut r0 = Vec::with_capacity(m);
    let mut rs = Vec::with_capacity(m);
    let mut rt = Vec::with_capacity(m);
    for h in &class.hypotheses {
        r0.push(normal.risk(loss, h, 1.0)?);
        rs.push(source.risk(loss, h, -1.0)?);
        rt.push(target.risk(loss, h, -1.0)?);
    }

    let feasible: Vec<usize> = (0..m).filter(|&i| r0[i] <= alpha).collect();
    let best_source = feasible
        .iter()
        .map(|&i| rs[i])
        .fold(f64::INFINITY, f64::min);
    if feasible.is_empty() {
        return Err(Error::Infeasible {
            min_type1: r0.iter().copied().fold(f64::INFINITY, f64::min),
        });
    }
    // Worst-on-target source solution; lowest index among ties.
    let mut reference = usize::MAX;
    for &i in feasible.iter().filter(|&&i| rs[i] == best_source) {
        if reference == usize::MAX || rt[i] > rt[reference] {
            reference = i;
        }
    }

    let members: Vec<usize> = (0..m).filter(|&i| r0[i] <= alpha + r).collect();
    let excess: Vec<(f64, f64)> = members
        .iter()
        .map(|&i| ((rs[i] - rs[reference]).max(0.0), (rt[i] - rt[reference]).max(0.0)))
        .filter(|&(_, dt)| dt > 0.0)
        .collect();
    if excess.is_empty() {
        return Ok(TransferExponent {
            rho: 1.0,
            c: 1.0,
            degenerate: true,
            reference,
            members_checked: members.len(),
        });
    }

    let envelope = |rho: f64| {
        excess
            .iter()
            .map(|&(ds, dt)| if ds > 0.0 { dt.powf(rho) / ds } else { f64::INFINITY })
            .fold(0.0, f64::max)
    };
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let fits: Vec<(f64, f64)> = sorted.iter().map(|&rho| (rho, envelope(rho))).collect();
    let (rho, c) = fits
        .iter()
        .copied()
        .find(|&(_, c)| c <= 1.0)
        .unwrap_or_else(|| {
            fits.iter()
                .copied()
                .fold((f64::NAN, f64::INFINITY), |best, f| if f.1 < best.1 { f } else { best })
        });
    let rho = if rho.is_nan() { sorted[sorted.len() - 1] } else { rho };
    Ok(TransferExponent {
        rho,
        c,
        degenerate: false,
        reference,
        members_checked: members.len(),
    })
}

/// JSON fixture: a class, three samples and the procedure's constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFixture {
    #[serde(default)]
    pub loss: SurrogateLoss,
    pub alpha: f64,
    pub epsilon0: f64,
    #[serde(default)]
    pub c_tilde: f64,
    pub hypotheses: Vec<Model>,
    pub normal: Vec<Vec<f64>>,
    pub target: Vec<Vec<f64>>,
    pub source: Vec<Vec<f64>>,
    #[serde(default)]
    pub exponent: Option<ExponentFixture>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFixture {
    pub normal: DiscreteLaw,
    pub source: DiscreteLaw,
    pub target: DiscreteLaw,
    pub r: f64,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub risks: RiskTable,
    pub solution: Procedure8Solution,
    pub exponent: Option<TransferExponent>,
}

impl OracleFixture {
    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn datasets(&self) -> Result<(Dataset, Dataset, Dataset)> {
        Ok((
            Dataset::from_rows(&self.normal, Role::Normal, Split::Train)?,
            Dataset::from_rows(&self.target, Role::TargetAbnormal, Split::Train)?,
            Dataset::from_rows(&self.source, Role::SourceAbnormal, Split::Train)?,
        ))
    }

    pub fn solve(&self) -> Result<OracleReport> {
        self.loss.validate()?;
        let class = FiniteClass::new(self.hypotheses.clone())?;
        let (normal, target, source) = self.datasets()?;
        let risks = RiskTable::compute(&class, &self.loss, &normal, &target, &source)?;
        let solution = solve_procedure8(&risks, self.alpha, self.epsilon0, self.c_tilde)?;
        let exponent = match &self.exponent {
            Some(e) => Some(estimate_transfer_exponent(
                &class, &self.loss, &e.normal, &e.source, &e.target, self.alpha, e.r, &e.grid,
            )?),
            None => None,
        };
        Ok(OracleReport {
            risks,
            solution,
            exponent,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(type1: &[f64], target: &[f64], source: &[f64], n_target: usize) -> RiskTable {
        RiskTable {
            type1: type1.to_vec(),
            target: target.to_vec(),
            source: source.to_vec(),
            n_target,
        }
    }

    #[test]
    fn target_hat_examples() {
        let t = table(&[0.04, 0.9], &[0.5, 0.1], &[0.0, 0.0], 10);
        assert_eq!(solve_target_hat(&t, 0.05, 0.01).unwrap(), 0);

        let t = table(&[0.5, 0.9], &[0.5, 0.1], &[0.0, 0.0], 10);
        match solve_target_hat(&t, 0.05, 0.01) {
            Err(Error::Infeasible { min_type1 }) => assert_eq!(min_type1, 0.5),
            other => panic!("{other:?}"),
        }

        let t = table(&[0.01], &[0.7], &[0.2], 4);
        assert_eq!(solve_target_hat(&t, 0.05, 0.01).unwrap(), 0);
    }

    #[test]
    fn procedure8_examples() {
        // h0 is the target optimum, h1 is near-optimal on target and best on
        // source, h2 is best on source but too poor on target.
        let t = table(&[0.03, 0.05, 0.02], &[0.40, 0.45, 0.90], &[0.8, 0.3, 0.1], 100);
        let s = solve_procedure8(&t, 0.05, 0.01, 0.3).unwrap();
        assert_eq!(s.target_hat, 0);
        assert!((s.target_bound - 0.46).abs() < 1e-12);
        assert_eq!(s.selected, 1);

        let s = solve_procedure8(&t, 0.05, 0.01, 0.0).unwrap();
        assert_eq!(s.selected, 0);
        assert_eq!(t.target[s.selected], t.target[s.target_hat]);
    }

    #[test]
    fn ties_resolve_to_lowest_index() {
        let t = table(&[0.0, 0.0, 0.0], &[0.3, 0.3, 0.3], &[0.2, 0.1, 0.1], 9);
        assert_eq!(solve_target_hat(&t, 0.05, 0.01).unwrap(), 0);
        assert_eq!(solve_procedure8(&t, 0.05, 0.01, 0.0).unwrap().selected, 1);
    }
}
