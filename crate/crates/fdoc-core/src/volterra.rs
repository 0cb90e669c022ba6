//! Product-integration weights for the weakly singular kernel
//! `(t - s)^(alpha - 1)` and a marching solver for delay Volterra integral
//! equations.
//!
//! On a uniform grid the integral over cell `[t_j, t_{j+1}]` with target
//! `t_n` of the kernel alone has the closed form
//!
//! ```text
//! w_{n,j} = integral_{t_j}^{t_{j+1}} (t_n - s)^(alpha - 1) ds
//!         = step^alpha * ((n - j)^alpha - (n - j - 1)^alpha) / alpha,
//! ```
//!
//! which depends only on `n - j`: the weight table is Toeplitz and is stored
//! as the single convolution vector `omega_k = w_{n, n-k}`. Freezing the
//! smooth factor at the left cell endpoint and integrating the kernel
//! exactly yields the product-rectangle marching scheme
//!
//! ```text
//! y_n = eta(t_n) + sum_{j < n} w_{n,j} f(t_n, s_j, y_j, y_{j-m}, u_j),
//! ```
//!
//! which is explicit, first order, and exact whenever the frozen factor is
//! piecewise constant on the grid.

use nalgebra::DVector;

use crate::control::ControlSignal;
use crate::error::{Error, Result, BLOWUP_LIMIT};
use crate::grid::Grid;
use crate::problem::VideProblem;
use crate::trajectory::{History, Trajectory};

/// Exact cell weights for `(t - s)^(alpha - 1)` on a uniform grid.
#[derive(Debug, Clone)]
pub struct SingularWeights {
    alpha: f64,
    step: f64,
    /// `omega[k] = step^alpha (k^alpha - (k-1)^alpha) / alpha` for `k >= 1`;
    /// `omega[0]` is unused and kept at zero.
    omega: Vec<f64>,
}

/// Builds the weights for all targets of `grid`.
pub fn singular_weights(grid: &Grid, alpha: f64) -> Result<SingularWeights> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!(
            "fractional order must lie in (0, 1], got {alpha}"
        )));
    }
    let n = grid.node_count();
    let step = grid.step();
    let scale = step.powf(alpha) / alpha;
    let mut omega = Vec::with_capacity(n + 1);
    omega.push(0.0);
    for k in 1..=n {
        let k = k as f64;
        omega.push(scale * (k.powf(alpha) - (k - 1.0).powf(alpha)));
    }
    Ok(SingularWeights { alpha, step, omega })
}

impl SingularWeights {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of cells covered (`N`).
    pub fn len(&self) -> usize {
        self.omega.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Weight of cell `[t_j, t_{j+1}]` for target `t_n` (zero when `j >= n`).
    pub fn weight(&self, n: usize, j: usize) -> f64 {
        if j < n && n <= self.len() {
            self.omega[n - j]
        } else {
            0.0
        }
    }

    /// Convolution weight `omega_k` for lag `k = n - j >= 1`.
    pub fn lag_weight(&self, k: usize) -> f64 {
        self.omega[k]
    }

    /// Sum of the weights of row `n`; telescopes to `t_n^alpha / alpha`.
    pub fn row_sum(&self, n: usize) -> f64 {
        (1..=n.min(self.len())).map(|k| self.omega[k]).sum()
    }
}

/// Options of the marching solver.
#[derive(Debug, Clone, Copy)]
pub struct VideOptions {
    /// Fixed-point refinement sweeps that replace the frozen left-endpoint
    /// factor by the cell average `(f_j + f_{j+1}) / 2`. Zero keeps the plain
    /// product-rectangle march.
    pub refinement_sweeps: usize,
}

impl Default for VideOptions {
    fn default() -> Self {
        VideOptions { refinement_sweeps: 0 }
    }
}

fn blowup_guard(v: &DVector<f64>, node: usize, t: f64) -> Result<()> {
    let magnitude = v.amax();
    if !magnitude.is_finite() || magnitude > BLOWUP_LIMIT {
        return Err(Error::NumericalBlowup { node, t, magnitude, limit: BLOWUP_LIMIT });
    }
    Ok(())
}

/// Solves the delay Volterra equation by product-rectangle marching.
///
/// `y_0 = eta(0)`; delayed arguments before the first lag read `eta(s - h)`.
/// The trajectory's pre-history is sampled from `eta` so that evaluation at
/// negative times stays consistent with the equation.
///
/// # Errors
///
/// [`Error::GridMismatch`] if `u` lives on a different grid or the grid's
/// delay differs from the problem's; [`Error::NumericalBlowup`] if a value
/// exceeds `1e12`.
pub fn solve_vide(problem: &VideProblem, u: &ControlSignal, grid: &Grid) -> Result<Trajectory> {
    solve_vide_with_options(problem, u, grid, &VideOptions::default())
}

pub(crate) fn check_problem_grid(
    alpha: f64,
    horizon: f64,
    delay: f64,
    control_dim: usize,
    u: &ControlSignal,
    grid: &Grid,
) -> Result<()> {
    if !u.grid().same_as(grid) {
        return Err(Error::GridMismatch(
            "control signal lives on a different grid".into(),
        ));
    }
    if (grid.delay() - delay).abs() > 1e-12 * delay.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "grid delay {} differs from problem delay {delay}",
            grid.delay()
        )));
    }
    if (grid.horizon() - horizon).abs() > 1e-12 * horizon.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "grid horizon {} differs from problem horizon {horizon}",
            grid.horizon()
        )));
    }
    if u.dim() != control_dim {
        return Err(Error::GridMismatch(format!(
            "control dimension {} differs from problem control dimension {control_dim}",
            u.dim()
        )));
    }
    let _ = alpha;
    Ok(())
}

/// [`solve_vide`] with explicit options.
pub fn solve_vide_with_options(
    problem: &VideProblem,
    u: &ControlSignal,
    grid: &Grid,
    options: &VideOptions,
) -> Result<Trajectory> {
    check_problem_grid(
        problem.alpha,
        problem.horizon,
        problem.delay,
        problem.control_dim(),
        u,
        grid,
    )?;
    let n = grid.node_count();
    let m = grid.delay_index();
    let weights = singular_weights(grid, problem.alpha)?;
    let eta = &problem.eta;
    let f = &problem.f;

    let mut values: Vec<DVector<f64>> = Vec::with_capacity(n + 1);
    values.push(eta(0.0));
    // Delayed state at node j (history from eta for j < m).
    let delayed = |values: &Vec<DVector<f64>>, j: usize| -> DVector<f64> {
        if j >= m {
            values[j - m].clone()
        } else {
            eta(grid.node(j) - grid.delay())
        }
    };
    for i in 1..=n {
        let t_i = grid.node(i);
        let mut y = eta(t_i);
        for j in 0..i {
            let fj = f(t_i, grid.node(j), &values[j], &delayed(&values, j), u.node_value(j));
            y += fj * weights.lag_weight(i - j);
        }
        blowup_guard(&y, i, t_i)?;
        values.push(y);
    }

    for _ in 0..options.refinement_sweeps {
        let previous = values.clone();
        for i in 1..=n {
            let t_i = grid.node(i);
            let mut y = eta(t_i);
            for j in 0..i {
                let f_left =
                    f(t_i, grid.node(j), &previous[j], &delayed(&previous, j), u.node_value(j));
                let f_right = f(
                    t_i,
                    grid.node(j + 1),
                    &previous[j + 1],
                    &delayed(&previous, j + 1),
                    u.node_value(j + 1),
                );
                y += (f_left + f_right) * (0.5 * weights.lag_weight(i - j));
            }
            blowup_guard(&y, i, t_i)?;
            values[i] = y;
        }
    }

    let history = History::sample(grid, |t| eta(t));
    Trajectory::new(*grid, values, history)
}

pub(crate) use check_problem_grid as check_signal_grid;
