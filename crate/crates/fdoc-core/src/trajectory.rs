//! Node-sampled state and adjoint paths.
//!
//! A [`Trajectory`] stores the solution values at the grid nodes of `[0, T]`
//! together with its pre-history on `[-h, 0]`; evaluation interpolates
//! linearly between nodes and falls back to the history for negative times.
//! An [`AdjointTrajectory`] lives on `[0, T]` and extends by zero on
//! `(T, T + h]`, which is exactly the convention backward equations with
//! advanced arguments need.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Absolute slack accepted at the domain endpoints.
fn edge_tol(grid: &Grid) -> f64 {
    1e-9 * grid.horizon().max(1.0)
}

/// Pre-history of a delayed equation on `[-h, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub enum History {
    /// Identically zero history.
    Zero,
    /// Values at the `m + 1` history nodes `-h, -h + step, .., 0`.
    Sampled(Vec<DVector<f64>>),
}

impl History {
    /// Samples `f` at the history nodes of `grid`.
    pub fn sample(grid: &Grid, f: impl Fn(f64) -> DVector<f64>) -> History {
        let m = grid.delay_index();
        History::Sampled(
            (0..=m)
                .map(|i| f(i as f64 * grid.step() - grid.delay()))
                .collect(),
        )
    }

    /// The value carried into the initial node (the final history sample, or
    /// zero for [`History::Zero`]).
    pub fn initial_value(&self, dim: usize) -> DVector<f64> {
        match self {
            History::Zero => DVector::zeros(dim),
            History::Sampled(values) => values[values.len() - 1].clone(),
        }
    }

    fn validate(&self, grid: &Grid, dim: usize) -> Result<()> {
        if let History::Sampled(values) = self {
            if values.len() != grid.delay_index() + 1 {
                return Err(Error::invalid(format!(
                    "history must carry {} samples, got {}",
                    grid.delay_index() + 1,
                    values.len()
                )));
            }
            if values.iter().any(|v| v.len() != dim) {
                return Err(Error::invalid("history samples must match the state dimension"));
            }
        }
        Ok(())
    }

    /// Linear interpolation on `[-h, 0]`; `i` indexes from the node at `-h`.
    fn eval(&self, grid: &Grid, dim: usize, t: f64) -> DVector<f64> {
        match self {
            History::Zero => DVector::zeros(dim),
            History::Sampled(values) => {
                let m = grid.delay_index();
                let s = (t + grid.delay()) / grid.step();
                let i = (s.floor() as isize).clamp(0, m as isize - 1) as usize;
                let theta = (s - i as f64).clamp(0.0, 1.0);
                &values[i] * (1.0 - theta) + &values[i + 1] * theta
            }
        }
    }
}

/// A state path: values at the nodes of `[0, T]` plus pre-history.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: Grid,
    dim: usize,
    values: Vec<DVector<f64>>,
    history: History,
}

impl Trajectory {
    /// Wraps node values and a history after consistency checks: one value
    /// per node, equal dimensions, and `values[0]` equal to the final
    /// history sample (the solution is continuous at `t = 0`).
    pub fn new(grid: Grid, values: Vec<DVector<f64>>, history: History) -> Result<Trajectory> {
        if values.len() != grid.node_count() + 1 {
            return Err(Error::invalid(format!(
                "expected {} node values, got {}",
                grid.node_count() + 1,
                values.len()
            )));
        }
        let dim = values[0].len();
        if dim == 0 || values.iter().any(|v| v.len() != dim) {
            return Err(Error::invalid("node values must share a positive dimension"));
        }
        history.validate(&grid, dim)?;
        let start = history.initial_value(dim);
        let scale = values[0].amax().max(start.amax()).max(1.0);
        if (&values[0] - &start).amax() > 1e-9 * scale {
            return Err(Error::invalid(
                "initial node value must equal the final history sample",
            ));
        }
        Ok(Trajectory { grid, dim, values, history })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Value at node `j` of `[0, T]`.
    pub fn node_value(&self, j: usize) -> &DVector<f64> {
        &self.values[j]
    }

    /// All node values on `[0, T]`.
    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    /// Value at `t_j - h`: a computed node for `j >= m`, a history node
    /// otherwise.
    pub fn delayed_node(&self, j: usize) -> DVector<f64> {
        let m = self.grid.delay_index();
        if j >= m {
            self.values[j - m].clone()
        } else {
            match &self.history {
                History::Zero => DVector::zeros(self.dim),
                History::Sampled(values) => values[j].clone(),
            }
        }
    }

    /// Piecewise-linear evaluation on `[-h, T]`.
    ///
    /// Times in `[-h, 0)` read the history, times in `[0, T]` interpolate the
    /// node values; anything outside returns [`Error::OutOfDomain`].
    pub fn eval(&self, t: f64) -> Result<DVector<f64>> {
        let tol = edge_tol(&self.grid);
        let horizon = self.grid.horizon();
        if t < -self.grid.delay() - tol || t > horizon + tol {
            return Err(Error::OutOfDomain { t, lo: -self.grid.delay(), hi: horizon });
        }
        if t < 0.0 {
            return Ok(self.history.eval(&self.grid, self.dim, t));
        }
        let n = self.grid.node_count();
        let s = t / self.grid.step();
        let j = (s.floor() as isize).clamp(0, n as isize - 1) as usize;
        let theta = (s - j as f64).clamp(0.0, 1.0);
        Ok(&self.values[j] * (1.0 - theta) + &self.values[j + 1] * theta)
    }
}

/// An adjoint path: values at the nodes of `[0, T]`, identically zero on
/// `(T, T + h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointTrajectory {
    grid: Grid,
    dim: usize,
    values: Vec<DVector<f64>>,
}

impl AdjointTrajectory {
    /// Wraps node values (one per node of `[0, T]`, equal dimensions).
    pub fn new(grid: Grid, values: Vec<DVector<f64>>) -> Result<AdjointTrajectory> {
        if values.len() != grid.node_count() + 1 {
            return Err(Error::invalid(format!(
                "expected {} node values, got {}",
                grid.node_count() + 1,
                values.len()
            )));
        }
        let dim = values[0].len();
        if dim == 0 || values.iter().any(|v| v.len() != dim) {
            return Err(Error::invalid("node values must share a positive dimension"));
        }
        Ok(AdjointTrajectory { grid, dim, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_value(&self, j: usize) -> &DVector<f64> {
        &self.values[j]
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    /// Piecewise-linear evaluation on `[0, T]`, zero on `(T, T + h]`.
    ///
    /// The node at `T` returns its stored value; strictly beyond `T` the path
    /// is the zero extension required by advanced-argument lookups.
    pub fn eval(&self, t: f64) -> Result<DVector<f64>> {
        let tol = edge_tol(&self.grid);
        let horizon = self.grid.horizon();
        if t < -tol || t > horizon + self.grid.delay() + tol {
            return Err(Error::OutOfDomain {
                t,
                lo: 0.0,
                hi: horizon + self.grid.delay(),
            });
        }
        if t > horizon + tol {
            return Ok(DVector::zeros(self.dim));
        }
        let n = self.grid.node_count();
        let s = (t.max(0.0) / self.grid.step()).min(n as f64);
        let j = (s.floor() as isize).clamp(0, n as isize - 1) as usize;
        let theta = (s - j as f64).clamp(0.0, 1.0);
        Ok(&self.values[j] * (1.0 - theta) + &self.values[j + 1] * theta)
    }
}
