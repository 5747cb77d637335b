//! Identification of all epsilon-good arms in Gaussian multi-armed bandits.
//!
//! * [`model`]: instances, good sets, margins, simplex helpers, reward draws.
//! * [`oracle`]: closed-form best response to a sampling allocation.
//! * [`solver`]: mirror ascent for the optimal allocation and the
//!   characteristic time.
//! * [`tracker`]: Track-and-Stop with C-tracking and a GLR stopping rule.
//! * [`bounds`]: closed-form lower bounds and diagnostics.
//! * [`harness`]: Monte Carlo campaigns and fixed-budget F1 evaluation.

pub mod bounds;
pub mod error;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod solver;
pub mod tracker;

pub use error::{Error, Result};
pub use model::{BanditInstance, Mode, SimplexWeights};
pub use oracle::{BestResponse, Case, Oracle};
pub use solver::{SolveConfig, SolveResult};
pub use tracker::{TrackerConfig, TrialRecord};
