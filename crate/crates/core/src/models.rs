//! Scoring functions `h: R^d -> R` with analytic parameter gradients.
//!
//! Parameters live in one flat vector so that the optimizer and the
//! finite-difference checks treat every kind uniformly. Layouts:
//!
//! * linear: `[b (d), c]`
//! * quadratic: `[A (d*d, row-major), b (d), c]`
//! * mlp2: `[W1 (H*d, row-major), b1 (H), w2 (H), b2]`
//!
//! The output bias is always the last parameter.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Quadratic,
    Mlp2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Arch {
    pub input_dim: usize,
    /// Hidden width, only read by `mlp2`.
    #[serde(default)]
    pub hidden_units: usize,
}

impl Arch {
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_units: 0,
        }
    }

    pub fn with_hidden(input_dim: usize, hidden_units: usize) -> Self {
        Self {
            input_dim,
            hidden_units,
        }
    }
}

/// Number of parameters for a kind and architecture.
pub fn param_count(kind: ModelKind, arch: Arch) -> usize {
    let d = arch.input_dim;
    match kind {
        ModelKind::Linear => d + 1,
        ModelKind::Quadratic => d * d + d + 1,
        ModelKind::Mlp2 => {
            let h = arch.hidden_units;
            h * d + h + h + 1
        }
    }
}

fn validate_arch(kind: ModelKind, arch: Arch) -> Result<()> {
    if arch.input_dim == 0 {
        return Err(Error::Config("input_dim must be at least 1".into()));
    }
    if kind == ModelKind::Mlp2 && arch.hidden_units == 0 {
        return Err(Error::Config("mlp2 needs at least one hidden unit".into()));
    }
    Ok(())
}

/// Accumulated parameter gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBuffer(pub Vec<f64>);

impl GradientBuffer {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn zero(&mut self) {
        self.0.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub kind: ModelKind,
    pub arch: Arch,
    pub params: Vec<f64>,
    /// Seed used for initialization, kept for checkpoints.
    #[serde(default)]
    pub seed: u64,
}

impl Model {
    /// Deterministic initialization. Biases start at zero; mlp2 weights are
    /// uniform in `±1/sqrt(fan_in)`; linear and quadratic weights are
    /// uniform in `±0.01`.
    pub fn init(kind: ModelKind, arch: Arch, seed: u64) -> Result<Self> {
        validate_arch(kind, arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = arch.input_dim;
        let n = param_count(kind, arch);
        let mut params = vec![0.0; n];
        match kind {
            ModelKind::Linear | ModelKind::Quadratic => {
                for p in &mut params[..n - 1] {
                    *p = rng.gen_range(-0.01..0.01);
                }
            }
            ModelKind::Mlp2 => {
                let h = arch.hidden_units;
                let a1 = 1.0 / (d as f64).sqrt();
                for p in &mut params[..h * d] {
                    *p = rng.gen_range(-a1..a1);
                }
                let a2 = 1.0 / (h as f64).sqrt();
                let w2 = h * d + h;
                for p in &mut params[w2..w2 + h] {
                    *p = rng.gen_range(-a2..a2);
                }
            }
        }
        Ok(Self {
            kind,
            arch,
            params,
            seed,
        })
    }

    /// Builds a model from explicit parameters.
    pub fn from_params(kind: ModelKind, arch: Arch, params: Vec<f64>) -> Result<Self> {
        validate_arch(kind, arch)?;
        let expected = param_count(kind, arch);
        if params.len() != expected {
            return Err(Error::Input(format!(
                "{kind:?} with {arch:?} needs {expected} parameters, got {}",
                params.len()
            )));
        }
        Ok(Self {
            kind,
            arch,
            params,
            seed: 0,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.arch.input_dim
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Index of the output bias.
    pub fn output_bias_index(&self) -> usize {
        self.params.len() - 1
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.arch.input_dim {
            return Err(Error::Input(format!(
                "expected input of length {}, got {}",
                self.arch.input_dim,
                x.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.score(x))
    }

    /// Score without the dimension check.
    #[inline]
    pub fn score(&self, x: &[f64]) -> f64 {
        let d = self.arch.input_dim;
        let p = &self.params;
        match self.kind {
            ModelKind::Linear => dot(&p[..d], x) + p[d],
            ModelKind::Quadratic => {
                let (a, rest) = p.split_at(d * d);
                let mut quad = 0.0;
                for (row, &xi) in a.chunks_exact(d).zip(x) {
                    quad += xi * dot(row, x);
                }
                quad + dot(&rest[..d], x) + rest[d]
            }
            ModelKind::Mlp2 => {
                let h = self.arch.hidden_units;
                let (w1, rest) = p.split_at(h * d);
                let (b1, rest) = rest.split_at(h);
                let (w2, b2) = rest.split_at(h);
                let mut out = b2[0];
                for ((row, &bj), &vj) in w1.chunks_exact(d).zip(b1).zip(w2) {
                    let pre = dot(row, x) + bj;
                    if pre > 0.0 {
                        out += vj * pre;
                    }
                }
                out
            }
        }
    }

    /// Gradient of `upstream * h(x)` with respect to the parameters.
    pub fn backward(&self, x: &[f64], upstream: f64) -> Result<GradientBuffer> {
        self.check_dim(x)?;
        let mut grad = GradientBuffer::zeros(self.params.len());
        self.accumulate_gradient(x, upstream, &mut grad.0);
        Ok(grad)
    }

    /// Adds the gradient of `upstream * h(x)` into `grad`. No dimension
    /// checks; `grad` must have the parameter length.
    #[inline]
    pub fn accumulate_gradient(&self, x: &[f64], upstream: f64, grad: &mut [f64]) {
        if upstream == 0.0 {
            return;
        }
        let d = self.arch.input_dim;
        match self.kind {
            ModelKind::Linear => {
                axpy(upstream, x, &mut grad[..d]);
                grad[d] += upstream;
            }
            ModelKind::Quadratic => {
                let (ga, rest) = grad.split_at_mut(d * d);
                for (row, &xi) in ga.chunks_exact_mut(d).zip(x) {
                    axpy(upstream * xi, x, row);
                }
                axpy(upstream, x, &mut rest[..d]);
                rest[d] += upstream;
            }
            ModelKind::Mlp2 => {
                let h = self.arch.hidden_units;
                let p = &self.params;
                let w1 = &p[..h * d];
                let b1 = &p[h * d..h * d + h];
                let w2 = &p[h * d + h..h * d + 2 * h];
                let (gw1, rest) = grad.split_at_mut(h * d);
                let (gb1, rest) = rest.split_at_mut(h);
                let (gw2, gb2) = rest.split_at_mut(h);
                for j in 0..h {
                    let row = &w1[j * d..(j + 1) * d];
                    let pre = dot(row, x) + b1[j];
                    // ReLU subgradient at 0 is 0.
                    if pre > 0.0 {
                        gw2[j] += upstream * pre;
                        let back = upstream * w2[j];
                        axpy(back, x, &mut gw1[j * d..(j + 1) * d]);
                        gb1[j] += back;
                    }
                }
                gb2[0] += upstream;
            }
        }
    }

    /// `+1` (abnormal) when `h(x) >= 0`, otherwise `-1`.
    pub fn predict_sign(&self, x: &[f64]) -> Result<i8> {
        Ok(if self.forward(x)? >= 0.0 { 1 } else { -1 })
    }

    /// Same model with the output bias lowered by `shift`, so the decision
    /// becomes `h(x) - shift >= 0`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut m = self.clone();
        let i = m.output_bias_index();
        m.params[i] -= shift;
        m
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Model = serde_json::from_str(&text)?;
        Model::from_params(model.kind, model.arch, model.params.clone())?;
        Ok(model)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
