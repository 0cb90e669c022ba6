//! Error type shared by all solvers and certificates in this crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Magnitude above which marching solvers and bound iterations abort.
pub const BLOWUP_LIMIT: f64 = 1e12;

/// Errors produced by grids, trajectories, solvers, certificates, and bound
/// iterations.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar or dimension argument lies outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The horizon is not an integer multiple of the grid step within
    /// relative tolerance `1e-12`.
    #[error(
        "horizon {horizon} is not an integer multiple of step {step} \
         (nearest node misses by {remainder:.3e})"
    )]
    NonAlignedHorizon {
        horizon: f64,
        step: f64,
        remainder: f64,
    },

    /// An evaluation time lies outside the domain of a trajectory.
    #[error("time {t} is outside the evaluation domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    /// Two node-sampled objects built on different grids were combined.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A marching solver produced a value above [`BLOWUP_LIMIT`].
    #[error(
        "numerical blowup at node {node} (t = {t}): |y| = {magnitude:.6e} \
         exceeds {limit:.1e}"
    )]
    NumericalBlowup {
        node: usize,
        t: f64,
        magnitude: f64,
        limit: f64,
    },

    /// The delayed-control kernel was evaluated at its singularity.
    #[error("kernel is unbounded at tau = {tau}")]
    SingularPoint { tau: f64 },

    /// A perturbed control leaves the admissible set, so the directional
    /// derivative along this direction is not defined within the set.
    #[error(
        "inadmissible direction: perturbed control leaves the admissible \
         set at node {node} (t = {t})"
    )]
    InadmissibleDirection { node: usize, t: f64 },

    /// The relaxed forward–backward sweep exhausted its iteration budget.
    /// Carries the last iterate and the per-iteration sup-norm control
    /// changes for diagnosis.
    #[error(
        "sweep did not converge in {max_iterations} iterations \
         (last sup-norm change {last_change:.3e})"
    )]
    NotConverged {
        max_iterations: usize,
        last_change: f64,
        last: Box<crate::pmp::SweepOutput>,
        changes: Vec<f64>,
    },

    /// A bound iteration exceeded [`BLOWUP_LIMIT`].
    #[error(
        "bound iteration diverged: sup value {magnitude:.6e} exceeds \
         {limit:.1e}"
    )]
    Divergence { magnitude: f64, limit: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
