//! Influence-function mirror ascent for bandits with distributional utilities.
//!
//! The learner keeps a point of the truncated simplex and samples arms from it.
//! Each round it scores the observed reward with an influence function of the
//! utility (exactly, from the true arm laws, or by plug-in from the data seen so
//! far), takes a multiplicative-weights step and projects back onto the floor
//! constraint in KL geometry.
//!
//! Module map:
//! - [`distributions`]: arm reward laws, empirical arms, mixtures, W1/W2.
//! - [`simplex`]: softmax, KL divergence, multiplicative weights, KL projection.
//! - [`utility`]: exact utilities, influence functions and centered gradients.
//! - [`plugin`]: data-driven (plug-in) score snapshots and the gradient estimator.
//! - [`ascent`]: the per-episode learning loop.
//! - [`oracle`]: offline optimum, bias Monte Carlo, regret bookkeeping.
//! - [`scenario`] and [`experiment`]: the synthetic benchmark instances and the
//!   replicated experiment runner.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ascent;
pub mod distributions;
pub mod error;
pub mod experiment;
pub mod oracle;
pub mod plugin;
pub mod rng;
pub mod scenario;
pub mod simplex;
pub mod special;
pub mod stats;
pub mod utility;

pub use ascent::{run_episode, step, step_size, AscentConfig, EpisodeTrace, Mode, Schedule, StepRecord};
pub use distributions::{ArmKind, ArmLaw, EmpiricalArm, Grid, MixtureView};
pub use error::{Error, Result};
pub use oracle::{active_support, bias_mc, regret_accumulate, solve_offline, BiasEstimate, OracleMethod, OracleOptions, OracleResult};
pub use plugin::{build_plugin_snapshot, score_gradient, shrunk_moments, PluginState, PriorConfig};
pub use scenario::{ScenarioId, ScenarioSpec};
pub use simplex::{kl_divergence, kl_project_floor, mw_update, softmax, softmax_jacobian, FloorParams, Weights};
pub use utility::{BanditInstance, PotentialGrid, ScoreKernel, ScoreSnapshot, ScoreSource, UtilitySpec};
