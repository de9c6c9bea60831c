//! Gradient-boosted regression-tree learning to rank with pluggable
//! node-splitting criteria.
//!
//! The engine trains MART, McRank, LambdaMART, and exponential pair-wise
//! rankers with regression trees whose node splits are scored by one of:
//!
//! - `se` — least square error over pseudo-responses,
//! - `wse` / `rwse` — (robust) weighted square error from second-order
//!   responses and weights,
//! - `ole` — objective-loss-based error, the second-order Taylor estimate of
//!   the achievable loss reduction, with an exact incremental mode for
//!   pair-wise losses,
//! - `mart` — the simplified squared-loss form.
//!
//! A built-in verification suite ([`verify`]) machine-checks the equivalences
//! between the criteria (argmin agreement on the squared loss, the
//! constant-offset reduction of OLE to RWSE for derivative-additive losses)
//! and the derivative computations against finite differences and brute
//! force.

pub mod booster;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod model;
pub mod objective;
pub mod split;
pub mod tree;
pub mod verify;

pub use booster::{train, Ensemble, TrainConfig, TrainingLog};
pub use dataset::{synthetic_dataset, RankingDataset};
pub use error::{Error, Result};
pub use metrics::{evaluate, MetricReport};
pub use objective::{GradientProfile, Objective, ObjectiveState};
pub use split::{Criterion, OleMode, SplitCandidate};
pub use tree::{GrowthOrder, RegressionTree};
pub use verify::{theorem_suite, VerificationReport};
