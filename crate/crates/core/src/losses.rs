//! Surrogate losses for the Neyman-Pearson objective.
//!
//! Every family is normalized so that `phi(0) = 1` and is evaluated on a
//! margin clamped to `[-M, M]`. The clamp makes the exponential loss bounded
//! and Lipschitz on the domain actually seen by the optimizer.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{Error, Result};

/// Default margin clamp.
pub const DEFAULT_CLAMP: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossFamily {
    Exponential,
    Logistic,
    Hinge,
}

/// A surrogate loss family together with its margin clamp `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateLoss {
    pub family: LossFamily,
    #[serde(default = "default_clamp")]
    pub clamp: f64,
}

fn default_clamp() -> f64 {
    DEFAULT_CLAMP
}

impl Default for SurrogateLoss {
    fn default() -> Self {
        Self {
            family: LossFamily::Exponential,
            clamp: DEFAULT_CLAMP,
        }
    }
}

impl SurrogateLoss {
    pub fn new(family: LossFamily, clamp: f64) -> Result<Self> {
        let loss = Self { family, clamp };
        loss.validate()?;
        Ok(loss)
    }

    pub fn exponential() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clamp.is_finite() && self.clamp > 0.0) {
            return Err(Error::Config(format!(
                "loss clamp must be a positive finite number, got {}",
                self.clamp
            )));
        }
        Ok(())
    }

    /// `phi(clamp(margin))`.
    pub fn eval(&self, margin: f64) -> Result<f64> {
        check_finite(margin)?;
        Ok(self.value(margin))
    }

    /// Derivative of the clamped loss. Zero outside `[-M, M]`; the hinge kink
    /// at `-1` takes the right derivative.
    pub fn deriv(&self, margin: f64) -> Result<f64> {
        check_finite(margin)?;
        Ok(self.slope(margin))
    }

    /// Unchecked evaluation for hot loops. Non-finite input yields a
    /// non-finite or clamped output instead of an error.
    #[inline]
    pub fn value(&self, margin: f64) -> f64 {
        let x = margin.clamp(-self.clamp, self.clamp);
        match self.family {
            LossFamily::Exponential => x.exp(),
            LossFamily::Logistic => softplus(x) / LN_2,
            LossFamily::Hinge => (1.0 + x).max(0.0),
        }
    }

    #[inline]
    pub fn slope(&self, margin: f64) -> f64 {
        if margin < -self.clamp || margin > self.clamp {
            return 0.0;
        }
        match self.family {
            LossFamily::Exponential => margin.exp(),
            LossFamily::Logistic => sigmoid(margin) / LN_2,
            LossFamily::Hinge => {
                if margin >= -1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Value and slope in one call, sharing the exponential.
    #[inline]
    pub fn value_and_slope(&self, margin: f64) -> (f64, f64) {
        match self.family {
            LossFamily::Exponential => {
                let inside = margin >= -self.clamp && margin <= self.clamp;
                let e = margin.clamp(-self.clamp, self.clamp).exp();
                (e, if inside { e } else { 0.0 })
            }
            _ => (self.value(margin), self.slope(margin)),
        }
    }

    /// Lipschitz constant `L` on the clamped domain (the largest slope).
    pub fn lipschitz(&self) -> f64 {
        self.slope(self.clamp)
    }

    /// Bound `C = sup max(phi(x), phi(-x))` over the clamped domain.
    pub fn bound(&self) -> f64 {
        self.value(self.clamp)
    }
}

fn check_finite(margin: f64) -> Result<()> {
    if margin.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("margin must be finite, got {margin}")))
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
