//! ℓ0-regularized factor analysis.
//!
//! Estimates a covariance as `L + S` with `L` low rank (through a trace
//! penalty) and `S` sparse (through an ℓ0 penalty), by an interior-point
//! scheme on `L > 0, S > 0` whose barrier subproblems are solved with a
//! safeguarded Newton method on the hard-thresholding stationarity system.
//!
//! The modules build on each other bottom up:
//!
//! - [`symbasis`]: symmetric matrices as vectors in an orthonormal basis.
//! - [`objective`]: problem data, the barrier objective and its derivatives.
//! - [`prox`]: the ℓ0 proximal map and the stationarity residual.
//! - [`newton`]: one barrier subproblem.
//! - [`ipm`]: the barrier schedule and solution recovery.
//! - [`baseline`]: a first-order block-coordinate method for comparison.
//! - [`datagen`]: synthetic factor models and recovery metrics.
//! - [`harness`]: config files, CSV I/O and the command implementations.

// `!(x > 0.0)` is the idiom here for "not positive, or NaN".
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod ipm;
pub mod linalg;
pub mod newton;
pub mod objective;
pub mod prox;
pub mod symbasis;
pub mod trace;

pub use baseline::{bcd_solve, BaselineParams, BaselineRun};
pub use datagen::{
    generate_ground_truth, recovery_metrics, sample_observations, GroundTruth, NoiseShape,
    RecoveryMetrics,
};
pub use error::{FaError, Result};
pub use ipm::{default_init, ipm_solve, IpmParams, IpmStatus, RecoveryThresholds, Solution};
pub use newton::{solve_tau_min, InnerSolve, InnerStatus, NewtonParams};
pub use objective::{BarrierObjective, Iterate, ProblemData};
pub use prox::{prox_l0_scalar, prox_l0_vec, stationarity_residual, IndexSet};
pub use symbasis::BasisSet;
pub use trace::{DirectionKind, SolveTrace, TraceRow};
