//! Uniform grids aligned with the delay.
//!
//! Every solver in this crate marches on a uniform grid whose step divides
//! the delay exactly: `step = delay / nodes_per_delay`. On such a grid the
//! delayed argument `t_j - h` of any node is again a node (`j - m` with
//! `m = nodes_per_delay`), so delayed lookups never interpolate. The horizon
//! must in turn be an integer multiple of the step; construction fails with
//! [`Error::NonAlignedHorizon`] otherwise.

use crate::error::{Error, Result};

/// Relative tolerance for deciding that the horizon sits on a node.
const ALIGNMENT_RTOL: f64 = 1e-12;

/// A uniform grid `t_j = j * step`, `j = 0..=node_count`, with
/// `delay = delay_index * step` and `horizon = node_count * step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    horizon: f64,
    delay: f64,
    step: f64,
    delay_index: usize,
    node_count: usize,
}

impl Grid {
    /// Builds the grid with `step = delay / nodes_per_delay`.
    ///
    /// # Errors
    ///
    /// * [`Error::InvalidArgument`] if `horizon` or `delay` is not a positive
    ///   finite number or `nodes_per_delay == 0`;
    /// * [`Error::NonAlignedHorizon`] if `horizon / step` is not an integer
    ///   within relative tolerance `1e-12`.
    pub fn new(horizon: f64, delay: f64, nodes_per_delay: usize) -> Result<Grid> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
        }
        if !(delay.is_finite() && delay > 0.0) {
            return Err(Error::invalid(format!("delay must be positive, got {delay}")));
        }
        if nodes_per_delay == 0 {
            return Err(Error::invalid("nodes_per_delay must be at least 1"));
        }
        let step = delay / nodes_per_delay as f64;
        let ratio = horizon / step;
        let node_count = ratio.round();
        let remainder = (ratio - node_count).abs() * step;
        if node_count < 1.0 || (ratio - node_count).abs() > ALIGNMENT_RTOL * ratio.max(1.0) {
            return Err(Error::NonAlignedHorizon { horizon, step, remainder });
        }
        Ok(Grid {
            horizon,
            delay,
            step,
            delay_index: nodes_per_delay,
            node_count: node_count as usize,
        })
    }

    /// Final time `T`.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Delay `h`.
    pub fn delay(&self) -> f64 {
        self.delay
    }

    /// Grid step `delta = delay / nodes_per_delay`.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of steps spanning one delay (`m`), so `t_{j} - h = t_{j - m}`.
    pub fn delay_index(&self) -> usize {
        self.delay_index
    }

    /// Index `N` of the final node; the grid has `N + 1` nodes.
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Time of node `j` (valid for any `j`, including history nodes when the
    /// caller offsets by the delay).
    pub fn node(&self, j: usize) -> f64 {
        if j == self.node_count {
            // Return the horizon exactly so the final node never drifts by
            // rounding of `j * step`.
            self.horizon
        } else {
            j as f64 * self.step
        }
    }

    /// All node times `t_0..=t_N`.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.node_count).map(|j| self.node(j)).collect()
    }

    /// Index of the node nearest to `t`, or an error if `t` does not lie on
    /// a node within absolute tolerance `1e-9 * max(1, T)`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let ratio = t / self.step;
        let j = ratio.round();
        let tol = 1e-9 * self.horizon.max(1.0);
        if j < 0.0 || j > self.node_count as f64 || (t - j * self.step).abs() > tol {
            return Err(Error::GridMismatch(format!(
                "t = {t} is not a grid node (step = {})",
                self.step
            )));
        }
        Ok(j as usize)
    }

    /// Trapezoid quadrature weights over `[0, T]`: `delta * [1/2, 1, .., 1, 1/2]`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![self.step; self.node_count + 1];
        w[0] *= 0.5;
        w[self.node_count] *= 0.5;
        w
    }

    /// True when both grids describe the same nodes.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.delay_index == other.delay_index
            && self.node_count == other.node_count
            && (self.step - other.step).abs() <= ALIGNMENT_RTOL * self.step.max(other.step)
    }
}
