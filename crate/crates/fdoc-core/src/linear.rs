//! The linear problem family: matrix dynamics, affine-or-quadratic running
//! cost, and polynomial forcing.
//!
//! Both problem classes share the data
//!
//! ```text
//! dynamics / kernel:  A y(t) + A_h y(t - h) + B u(t)
//! running cost:       c_y . y(t) + c_yh . y(t - h) + cost(u)
//! ```
//!
//! with `cost(u)` either `weight * sum_i u_i` or `weight * sum_i u_i^2`.
//! This covers every configuration the command-line driver accepts and the
//! worked example bundled with it, while the heavy lifting stays in the
//! callback-based solvers.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::control::ControlSet;
use crate::error::{Error, Result};
use crate::problem::{FddeProblem, VideProblem};

/// Control term of the running cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlCost {
    /// `weight * sum_i u_i`.
    Linear { weight: f64 },
    /// `weight * sum_i u_i^2`.
    Quadratic { weight: f64 },
}

impl ControlCost {
    fn eval(&self, u: &DVector<f64>) -> f64 {
        match self {
            ControlCost::Linear { weight } => weight * u.sum(),
            ControlCost::Quadratic { weight } => weight * u.iter().map(|v| v * v).sum::<f64>(),
        }
    }
}

/// Coefficients of a linear delay problem of either class.
#[derive(Debug, Clone)]
pub struct LinearProblem {
    pub alpha: f64,
    pub horizon: f64,
    pub delay: f64,
    pub state_matrix: DMatrix<f64>,
    pub delay_matrix: DMatrix<f64>,
    pub control_matrix: DMatrix<f64>,
    pub cost_state: DVector<f64>,
    pub cost_delayed: DVector<f64>,
    pub control_cost: ControlCost,
    pub control_set: ControlSet,
    /// Constant pre-history vector (differential class only; zero when
    /// absent).
    pub history: Option<DVector<f64>>,
    /// Polynomial forcing per state component, lowest degree first
    /// (integral class only; zero when absent).
    pub eta_coefficients: Option<Vec<Vec<f64>>>,
}

impl LinearProblem {
    fn validate(&self) -> Result<usize> {
        let dim = self.state_matrix.nrows();
        if dim == 0 || self.state_matrix.ncols() != dim {
            return Err(Error::invalid("state matrix must be square and non-empty"));
        }
        if self.delay_matrix.shape() != (dim, dim) {
            return Err(Error::invalid("delay matrix must match the state dimension"));
        }
        if self.control_matrix.nrows() != dim {
            return Err(Error::invalid("control matrix must have one row per state"));
        }
        if self.control_matrix.ncols() != self.control_set.dim() {
            return Err(Error::invalid(
                "control matrix must have one column per control component",
            ));
        }
        if self.cost_state.len() != dim || self.cost_delayed.len() != dim {
            return Err(Error::invalid("cost vectors must match the state dimension"));
        }
        if let Some(h) = &self.history {
            if h.len() != dim {
                return Err(Error::invalid("history vector must match the state dimension"));
            }
        }
        if let Some(eta) = &self.eta_coefficients {
            if eta.len() != dim {
                return Err(Error::invalid(
                    "eta must carry one coefficient list per state component",
                ));
            }
        }
        match self.control_cost {
            ControlCost::Linear { weight } | ControlCost::Quadratic { weight } => {
                if !weight.is_finite() {
                    return Err(Error::invalid("control cost weight must be finite"));
                }
            }
        }
        Ok(dim)
    }

    fn cost_callbacks(
        &self,
    ) -> (
        crate::problem::RunningCost,
        crate::problem::RunningCostGradient,
        crate::problem::RunningCostGradient,
    ) {
        let cy = self.cost_state.clone();
        let cyh = self.cost_delayed.clone();
        let cost = self.control_cost;
        let g: crate::problem::RunningCost = Arc::new(
            move |_t, y: &DVector<f64>, yh: &DVector<f64>, u: &DVector<f64>| {
                cy.dot(y) + cyh.dot(yh) + cost.eval(u)
            },
        );
        let cy = self.cost_state.clone();
        let g_y: crate::problem::RunningCostGradient = Arc::new(move |_, _, _, _| cy.clone());
        let cyh = self.cost_delayed.clone();
        let g_yh: crate::problem::RunningCostGradient = Arc::new(move |_, _, _, _| cyh.clone());
        (g, g_y, g_yh)
    }

    /// Builds the differential-class problem.
    pub fn fdde(&self) -> Result<FddeProblem> {
        let dim = self.validate()?;
        let a = self.state_matrix.clone();
        let ah = self.delay_matrix.clone();
        let b = self.control_matrix.clone();
        let f: crate::problem::Field = Arc::new(
            move |_t, y: &DVector<f64>, yh: &DVector<f64>, u: &DVector<f64>| {
                &a * y + &ah * yh + &b * u
            },
        );
        let a = self.state_matrix.clone();
        let f_y: crate::problem::FieldJacobian = Arc::new(move |_, _, _, _| a.clone());
        let ah = self.delay_matrix.clone();
        let f_yh: crate::problem::FieldJacobian = Arc::new(move |_, _, _, _| ah.clone());
        let (g, g_y, g_yh) = self.cost_callbacks();
        let mut problem = FddeProblem::new(
            self.alpha,
            self.horizon,
            self.delay,
            dim,
            self.control_set.clone(),
        )?
        .with_dynamics(f, f_y, f_yh)
        .with_cost(g, g_y, g_yh);
        if let Some(h) = &self.history {
            let h = h.clone();
            problem = problem.with_history(Arc::new(move |_| h.clone()));
        }
        Ok(problem)
    }

    /// Polynomial forcing `eta(t)` (zero when no coefficients are set).
    pub fn eta(&self, dim: usize) -> crate::problem::EtaFn {
        let coefficients = self.eta_coefficients.clone().unwrap_or_default();
        Arc::new(move |t: f64| {
            DVector::from_fn(dim, |i, _| {
                coefficients
                    .get(i)
                    .map(|c| c.iter().rev().fold(0.0, |acc, k| acc * t + k))
                    .unwrap_or(0.0)
            })
        })
    }

    /// Builds the integral-class problem (the kernel factor does not depend
    /// on the outer time).
    pub fn vide(&self) -> Result<VideProblem> {
        let dim = self.validate()?;
        let a = self.state_matrix.clone();
        let ah = self.delay_matrix.clone();
        let b = self.control_matrix.clone();
        let f: crate::problem::KernelField = Arc::new(
            move |_t, _s, y: &DVector<f64>, yh: &DVector<f64>, u: &DVector<f64>| {
                &a * y + &ah * yh + &b * u
            },
        );
        let a = self.state_matrix.clone();
        let f_y: crate::problem::KernelJacobian = Arc::new(move |_, _, _, _, _| a.clone());
        let ah = self.delay_matrix.clone();
        let f_yh: crate::problem::KernelJacobian = Arc::new(move |_, _, _, _, _| ah.clone());
        let (g, g_y, g_yh) = self.cost_callbacks();
        Ok(VideProblem::new(
            self.alpha,
            self.horizon,
            self.delay,
            dim,
            self.control_set.clone(),
        )?
        .with_kernel(f, f_y, f_yh)
        .with_cost(g, g_y, g_yh)
        .with_eta(self.eta(dim)))
    }
}

/// The worked example bundled with the command-line driver: a half-order
/// double integrator on `[0, 2]` whose drift reads the lagged state,
/// `D^(1/2) y = A y(t - 1/2) + B u` with `B = (-1, -1)`, under running cost
/// `y_1(t - h) - y_2(t - h) + u` minimized over `u(t) in [0, 1]`.
pub fn double_integrator_example() -> LinearProblem {
    LinearProblem {
        alpha: 0.5,
        horizon: 2.0,
        delay: 0.5,
        state_matrix: DMatrix::zeros(2, 2),
        delay_matrix: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
        control_matrix: DMatrix::from_row_slice(2, 1, &[-1.0, -1.0]),
        cost_state: DVector::zeros(2),
        cost_delayed: DVector::from_vec(vec![1.0, -1.0]),
        control_cost: ControlCost::Linear { weight: 1.0 },
        control_set: ControlSet::interval(0.0, 1.0),
        history: None,
        eta_coefficients: None,
    }
}
