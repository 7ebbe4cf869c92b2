//! Datasets and empirical Type-I / Type-II errors under the 0-1 loss and
//! under a surrogate loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::SurrogateLoss;
use crate::models::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Normal,
    TargetAbnormal,
    SourceAbnormal,
}

impl Role {
    pub fn is_abnormal(self) -> bool {
        !matches!(self, Role::Normal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// Row-major `n x d` feature matrix tagged with its role and split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    values: Vec<f64>,
    pub role: Role,
    pub split: Split,
}

impl Dataset {
    pub fn new(dim: usize, values: Vec<f64>, role: Role, split: Split) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Input("dataset dimension must be at least 1".into()));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::Input(format!(
                "{} values do not form rows of width {dim}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("dataset contains non-finite value {v}")));
        }
        Ok(Self {
            dim,
            values,
            role,
            split,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], role: Role, split: Split) -> Result<Self> {
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Input("from_rows needs at least one row".into()))?;
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Input("ragged rows".into()));
        }
        Self::new(dim, rows.concat(), role, split)
    }

    pub fn empty(dim: usize, role: Role, split: Split) -> Self {
        Self {
            dim,
            values: Vec::new(),
            role,
            split,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            dim: self.dim,
            values,
            role: self.role,
            split: self.split,
        }
    }

    /// First `n` rows (or all, if fewer).
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            dim: self.dim,
            values: self.values[..n * self.dim].to_vec(),
            role: self.role,
            split: self.split,
        }
    }

    /// Rows of `self` followed by rows of `other`; role and split of `self`.
    pub fn concat(&self, other: &Dataset) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Input(format!(
                "cannot concatenate datasets of dimension {} and {}",
                self.dim, other.dim
            )));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(Self {
            dim: self.dim,
            values,
            role: self.role,
            split: self.split,
        })
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// A Type-I / Type-II pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPair {
    pub type1: f64,
    pub type2: f64,
}

fn check_scorable(model: &Model, data: &Dataset, what: &str) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Undefined(what.to_string()));
    }
    if data.dim() != model.input_dim() {
        return Err(Error::Input(format!(
            "{what}: model expects dimension {}, data has {}",
            model.input_dim(),
            data.dim()
        )));
    }
    Ok(())
}

fn require_normal(data: &Dataset) -> Result<()> {
    if data.role != Role::Normal {
        return Err(Error::Input(format!(
            "type-I error needs normal data, got {:?}",
            data.role
        )));
    }
    Ok(())
}

fn require_abnormal(data: &Dataset) -> Result<()> {
    if !data.role.is_abnormal() {
        return Err(Error::Input("type-II error needs abnormal data".into()));
    }
    Ok(())
}

/// Fraction of normal samples flagged abnormal (`h(x) >= 0`).
pub fn zero_one_type1(model: &Model, normal: &Dataset) -> Result<f64> {
    require_normal(normal)?;
    check_scorable(model, normal, "zero_one_type1")?;
    let hits = normal.rows().filter(|x| model.score(x) >= 0.0).count();
    Ok(hits as f64 / normal.len() as f64)
}

/// Fraction of abnormal samples missed (`h(x) < 0`).
pub fn zero_one_type2(model: &Model, abnormal: &Dataset) -> Result<f64> {
    require_abnormal(abnormal)?;
    check_scorable(model, abnormal, "zero_one_type2")?;
    let misses = abnormal.rows().filter(|x| model.score(x) < 0.0).count();
    Ok(misses as f64 / abnormal.len() as f64)
}

/// Mean of `phi(h(x))` over normal samples.
pub fn surrogate_type1(loss: &SurrogateLoss, model: &Model, normal: &Dataset) -> Result<f64> {
    require_normal(normal)?;
    check_scorable(model, normal, "surrogate_type1")?;
    Ok(mean_loss(normal.rows().map(|x| loss.value(model.score(x)))))
}

/// Mean of `phi(-h(x))` over abnormal samples.
pub fn surrogate_type2(loss: &SurrogateLoss, model: &Model, abnormal: &Dataset) -> Result<f64> {
    require_abnormal(abnormal)?;
    check_scorable(model, abnormal, "surrogate_type2")?;
    Ok(mean_loss(abnormal.rows().map(|x| loss.value(-model.score(x)))))
}

pub fn zero_one_errors(model: &Model, normal: &Dataset, abnormal: &Dataset) -> Result<ErrorPair> {
    Ok(ErrorPair {
        type1: zero_one_type1(model, normal)?,
        type2: zero_one_type2(model, abnormal)?,
    })
}

pub fn surrogate_errors(
    loss: &SurrogateLoss,
    model: &Model,
    normal: &Dataset,
    abnormal: &Dataset,
) -> Result<ErrorPair> {
    Ok(ErrorPair {
        type1: surrogate_type1(loss, model, normal)?,
        type2: surrogate_type2(loss, model, abnormal)?,
    })
}

/// Order-independent mean: terms are sorted before pairwise summation, so
/// any permutation of the rows gives the same bits.
fn mean_loss(terms: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = terms.collect();
    v.sort_by(f64::total_cmp);
    pairwise_sum(&v) / v.len() as f64
}

pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if v.len() <= LEAF {
        v.iter().sum()
    } else {
        let mid = v.len() / 2;
        pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
    }
}
