//! Optimal symmetric incentive-compatible mechanisms for a receiver that
//! acquires information from several exchangeable senders.
//!
//! Profiles of sender reports are collapsed into count-vector classes, which
//! turns the mechanism design problem into a linear program whose size is
//! polynomial in the number of senders. On top of the offline solver sit two
//! online learners: one with full feedback on signal draws and one with only
//! bandit feedback on realized utilities.

// `!(x >= 0.0)` is used on purpose: it rejects NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod experiment;
pub mod game;
pub mod instances;
pub mod lp;
pub mod mechanisms;
pub mod online;
pub mod oracle;
pub mod simplex;
pub mod slope;
pub mod svg;
pub mod verify;

pub use error::{Error, Result};
pub use game::{enumerate_classes, ClassPartition, GameInstance, InstanceSpec};
pub use instances::{fixture_instance, gen_paper_instance, gen_random_instance, Fixture};
pub use lp::{build_lp, solve_lp, MechanismLP, Slack};
pub use mechanisms::{
    build_deviation_matrix, build_deviation_set, compute_utility_vectors, ic_gap, DeviationKind,
    DeviationModel, DeviationSet, SymmetricMechanism, UtilityVector,
};
pub use online::{compute_ground_truth, run_bandit, run_full_feedback, RunConfig, RunResult};
