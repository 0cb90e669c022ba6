//! Numerical toolkit for optimal control of delay differential equations of
//! fractional (Caputo) order and of their weakly singular Volterra
//! integral reformulations.
//!
//! The crate is organized around a small set of value types and a family of
//! product-integration solvers:
//!
//! * [`grid`] — uniform grids aligned with the delay (`step = delay /
//!   nodes_per_delay`), so that every delayed argument `t - h` is again a
//!   node.
//! * [`trajectory`] — node-sampled state paths with pre-history on
//!   `[-h, 0]`, and adjoint paths with a zero tail after the horizon.
//! * [`control`] — admissible sets (boxes and finite sets), projections, and
//!   node-sampled control signals.
//! * [`problem`] — problem containers bundling dynamics, running cost, their
//!   partial derivatives, and the admissible control set.
//! * [`specfun`] — the gamma function and the delayed power series that give
//!   closed-form solutions of linear delay systems of fractional order.
//! * [`volterra`] — exact cell weights for the kernel `(t-s)^(alpha-1)` and a
//!   marching solver for delay Volterra integral equations.
//! * [`fdde`] — marching solvers (product rectangle and fractional
//!   Adams predictor–corrector) for Caputo delay differential equations,
//!   an L1 discrete derivative, and residual checks.
//! * [`adjoint`] — backward/adjoint equations for both problem classes and a
//!   duality-gap diagnostic for the variational identity.
//! * [`pmp`] — objective evaluation, Hamiltonians, pointwise maximization,
//!   maximum-principle residual certificates, a relaxed forward–backward
//!   sweep, and a Gateaux-derivative cross-check.
//! * [`gronwall`] — discrete fractional Gronwall bounds computed as least
//!   fixed points of a monotone Picard operator.
//! * [`linear`] — convenience constructors for the linear problem family
//!   (matrix dynamics, affine/quadratic running cost) shared by the CLI,
//!   the Python bindings, and the test suite.
//!
//! All solvers work on [`nalgebra`] dense vectors/matrices and return
//! [`error::Error`] on domain violations, misaligned grids, or numerical
//! blowup.

pub mod adjoint;
pub mod control;
pub mod error;
pub mod fdde;
pub mod grid;
pub mod gronwall;
pub mod linear;
pub mod pmp;
pub mod problem;
pub mod specfun;
pub mod trajectory;
pub mod volterra;

pub use control::{ControlSet, ControlSignal};
pub use error::{Error, Result};
pub use grid::Grid;
pub use problem::{FddeProblem, Problem, VideProblem};
pub use trajectory::{AdjointTrajectory, History, Trajectory};
