//! Problem containers: dynamics, running cost, partial derivatives, and the
//! admissible control set.
//!
//! Two classes are covered:
//!
//! * [`FddeProblem`] — a Caputo differential equation with one constant lag,
//!   `D^alpha y(t) = f(t, y(t), y(t - h), u(t))` on `[0, T]`, with running
//!   cost `g(t, y(t), y(t - h), u(t))` integrated over `[0, T]`;
//! * [`VideProblem`] — a weakly singular delay Volterra integral equation,
//!   `y(t) = eta(t) + integral_0^t (t - s)^(alpha - 1) f(t, s, y(s),
//!   y(s - h), u(s)) ds`, with the same form of running cost in `s`.
//!
//! Callbacks are shared `Fn` closures so problems clone cheaply and can be
//! captured by solvers, sweeps, and Python wrappers alike. Jacobians follow
//! the convention `(d f_i / d y_j)` (rows follow the field components);
//! cost gradients are column vectors.
//!
//! The fractional order is validated into `(0, 1]`: the open unit interval
//! is the genuinely fractional regime, and `alpha = 1` is admitted so
//! classical-limit cross-checks can exercise the same code paths.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::control::ControlSet;
use crate::error::{Error, Result};
use crate::trajectory::History;

/// Right-hand side `f(t, y, y_h, u)` of a delay differential equation.
pub type Field =
    Arc<dyn Fn(f64, &DVector<f64>, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;

/// Jacobian of a [`Field`] with respect to `y` or `y_h`.
pub type FieldJacobian =
    Arc<dyn Fn(f64, &DVector<f64>, &DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Running cost `g(t, y, y_h, u)`.
pub type RunningCost =
    Arc<dyn Fn(f64, &DVector<f64>, &DVector<f64>, &DVector<f64>) -> f64 + Send + Sync>;

/// Gradient of a [`RunningCost`] with respect to `y` or `y_h` (column).
pub type RunningCostGradient =
    Arc<dyn Fn(f64, &DVector<f64>, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;

/// Kernel field `f(t, s, y, y_h, u)` of a Volterra integral equation.
pub type KernelField = Arc<
    dyn Fn(f64, f64, &DVector<f64>, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync,
>;

/// Jacobian of a [`KernelField`] with respect to `y` or `y_h`.
pub type KernelJacobian = Arc<
    dyn Fn(f64, f64, &DVector<f64>, &DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync,
>;

/// Forcing/history function `eta(t)` of a Volterra equation, defined on
/// `[-h, T]` (negative times provide delayed lookups near the start).
pub type EtaFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

/// Pre-history function `phi(t)` on `[-h, 0]` for differential problems.
pub type HistoryFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

fn check_shape(alpha: f64, horizon: f64, delay: f64, dim: usize, set: &ControlSet) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!(
            "fractional order must lie in (0, 1], got {alpha}"
        )));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
    }
    if !(delay.is_finite() && delay > 0.0) {
        return Err(Error::invalid(format!("delay must be positive, got {delay}")));
    }
    if dim == 0 {
        return Err(Error::invalid("state dimension must be positive"));
    }
    set.validate()
}

fn zero_field(dim: usize) -> Field {
    Arc::new(move |_, _, _, _| DVector::zeros(dim))
}

fn zero_field_jacobian(dim: usize) -> FieldJacobian {
    Arc::new(move |_, _, _, _| DMatrix::zeros(dim, dim))
}

fn zero_cost() -> RunningCost {
    Arc::new(|_, _, _, _| 0.0)
}

fn zero_cost_gradient(dim: usize) -> RunningCostGradient {
    Arc::new(move |_, _, _, _| DVector::zeros(dim))
}

/// Delay differential problem of Caputo type with running cost.
#[derive(Clone)]
pub struct FddeProblem {
    pub alpha: f64,
    pub horizon: f64,
    pub delay: f64,
    pub dim: usize,
    pub f: Field,
    pub f_y: FieldJacobian,
    pub f_yh: FieldJacobian,
    pub g: RunningCost,
    pub g_y: RunningCostGradient,
    pub g_yh: RunningCostGradient,
    pub control_set: ControlSet,
    pub history: Option<HistoryFn>,
}

impl fmt::Debug for FddeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FddeProblem")
            .field("alpha", &self.alpha)
            .field("horizon", &self.horizon)
            .field("delay", &self.delay)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl FddeProblem {
    /// Creates a problem with zero dynamics, zero cost, and zero history;
    /// attach the pieces with the `with_*` builders.
    pub fn new(
        alpha: f64,
        horizon: f64,
        delay: f64,
        dim: usize,
        control_set: ControlSet,
    ) -> Result<FddeProblem> {
        check_shape(alpha, horizon, delay, dim, &control_set)?;
        Ok(FddeProblem {
            alpha,
            horizon,
            delay,
            dim,
            f: zero_field(dim),
            f_y: zero_field_jacobian(dim),
            f_yh: zero_field_jacobian(dim),
            g: zero_cost(),
            g_y: zero_cost_gradient(dim),
            g_yh: zero_cost_gradient(dim),
            control_set,
            history: None,
        })
    }

    /// Sets the field and its two state Jacobians.
    pub fn with_dynamics(mut self, f: Field, f_y: FieldJacobian, f_yh: FieldJacobian) -> Self {
        self.f = f;
        self.f_y = f_y;
        self.f_yh = f_yh;
        self
    }

    /// Sets the running cost and its two state gradients.
    pub fn with_cost(
        mut self,
        g: RunningCost,
        g_y: RunningCostGradient,
        g_yh: RunningCostGradient,
    ) -> Self {
        self.g = g;
        self.g_y = g_y;
        self.g_yh = g_yh;
        self
    }

    /// Sets the pre-history on `[-h, 0]` (default: identically zero).
    pub fn with_history(mut self, history: HistoryFn) -> Self {
        self.history = Some(history);
        self
    }

    /// Samples the pre-history on the history nodes of `grid`.
    pub fn sampled_history(&self, grid: &crate::grid::Grid) -> History {
        match &self.history {
            None => History::Zero,
            Some(phi) => History::sample(grid, |t| phi(t)),
        }
    }

    pub fn control_dim(&self) -> usize {
        self.control_set.dim()
    }
}

/// Weakly singular delay Volterra integral problem with running cost.
#[derive(Clone)]
pub struct VideProblem {
    pub alpha: f64,
    pub horizon: f64,
    pub delay: f64,
    pub dim: usize,
    pub f: KernelField,
    pub f_y: KernelJacobian,
    pub f_yh: KernelJacobian,
    pub g: RunningCost,
    pub g_y: RunningCostGradient,
    pub g_yh: RunningCostGradient,
    pub eta: EtaFn,
    pub control_set: ControlSet,
}

impl fmt::Debug for VideProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VideProblem")
            .field("alpha", &self.alpha)
            .field("horizon", &self.horizon)
            .field("delay", &self.delay)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl VideProblem {
    /// Creates a problem with zero kernel, zero cost, and zero forcing;
    /// attach the pieces with the `with_*` builders.
    pub fn new(
        alpha: f64,
        horizon: f64,
        delay: f64,
        dim: usize,
        control_set: ControlSet,
    ) -> Result<VideProblem> {
        check_shape(alpha, horizon, delay, dim, &control_set)?;
        let d = dim;
        Ok(VideProblem {
            alpha,
            horizon,
            delay,
            dim,
            f: Arc::new(move |_, _, _, _, _| DVector::zeros(d)),
            f_y: Arc::new(move |_, _, _, _, _| DMatrix::zeros(d, d)),
            f_yh: Arc::new(move |_, _, _, _, _| DMatrix::zeros(d, d)),
            g: zero_cost(),
            g_y: zero_cost_gradient(dim),
            g_yh: zero_cost_gradient(dim),
            eta: Arc::new(move |_| DVector::zeros(d)),
            control_set,
        })
    }

    /// Sets the kernel field and its two state Jacobians.
    pub fn with_kernel(mut self, f: KernelField, f_y: KernelJacobian, f_yh: KernelJacobian) -> Self {
        self.f = f;
        self.f_y = f_y;
        self.f_yh = f_yh;
        self
    }

    /// Sets the running cost and its two state gradients.
    pub fn with_cost(
        mut self,
        g: RunningCost,
        g_y: RunningCostGradient,
        g_yh: RunningCostGradient,
    ) -> Self {
        self.g = g;
        self.g_y = g_y;
        self.g_yh = g_yh;
        self
    }

    /// Sets the forcing/history term `eta` on `[-h, T]`.
    pub fn with_eta(mut self, eta: EtaFn) -> Self {
        self.eta = eta;
        self
    }

    pub fn control_dim(&self) -> usize {
        self.control_set.dim()
    }
}

/// Either problem class, for operations defined on both.
#[derive(Debug, Clone)]
pub enum Problem {
    Fdde(FddeProblem),
    Vide(VideProblem),
}

impl Problem {
    pub fn alpha(&self) -> f64 {
        match self {
            Problem::Fdde(p) => p.alpha,
            Problem::Vide(p) => p.alpha,
        }
    }

    pub fn horizon(&self) -> f64 {
        match self {
            Problem::Fdde(p) => p.horizon,
            Problem::Vide(p) => p.horizon,
        }
    }

    pub fn delay(&self) -> f64 {
        match self {
            Problem::Fdde(p) => p.delay,
            Problem::Vide(p) => p.delay,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Problem::Fdde(p) => p.dim,
            Problem::Vide(p) => p.dim,
        }
    }

    pub fn control_set(&self) -> &ControlSet {
        match self {
            Problem::Fdde(p) => &p.control_set,
            Problem::Vide(p) => &p.control_set,
        }
    }

    /// Running cost callback shared by both classes.
    pub fn cost(&self) -> &RunningCost {
        match self {
            Problem::Fdde(p) => &p.g,
            Problem::Vide(p) => &p.g,
        }
    }
}
