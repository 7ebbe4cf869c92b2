//! Neyman-Pearson outlier detection with transfer from a related source
//! domain.
//!
//! The crate trains scoring functions `h(x)` that flag `x` as abnormal when
//! `h(x) >= 0`, keeping the normal-class error (Type-I) near a target level
//! `alpha` while reducing missed outliers (Type-II) on a target domain that
//! has only a few labelled outliers. A source domain with many outliers is
//! used only as far as it helps the target.
//!
//! Modules, bottom-up:
//!
//! - [`losses`]: clamped surrogate losses.
//! - [`models`]: linear, quadratic and two-layer ReLU scorers.
//! - [`risk`]: datasets and empirical error rates.
//! - [`trainer`]: Adam on the weighted three-term cost.
//! - [`procedure`]: grid search, target filter, source selection.
//! - [`baselines`]: the six comparison methods.
//! - [`oracle`]: exact enumeration over finite classes.
//! - [`data`]: Gaussian generator, CSV ingestion, splits.
//! - [`experiment`]: multi-run harness and report files.

pub mod baselines;
pub mod data;
pub mod error;
pub mod experiment;
pub mod losses;
pub mod models;
pub mod oracle;
pub mod procedure;
pub mod risk;
pub mod seed;
pub mod trainer;

pub use error::{Error, Result};
pub use losses::{LossFamily, SurrogateLoss};
pub use models::{Arch, Model, ModelKind};
pub use procedure::{run_tlnp, FilterMode, Problem, TlnpConfig, TunedHypothesis};
pub use risk::{Dataset, Role, Split};
pub use trainer::TrainConfig;
