//! Backward (adjoint) equations for both problem classes and the duality-gap
//! diagnostic linking them to the variational equation.
//!
//! # Differential class
//!
//! The adjoint of the delayed differential problem is a right-sided Caputo
//! equation on `[0, T]` with zero tail on `[T, T + h]`:
//!
//! ```text
//! D^alpha_right psi(t) = -g_y(t) - ind(t) g_yh(t + h)
//!                        + f_y(t)^T psi(t) + ind(t) f_yh(t + h)^T psi(t + h),
//! ```
//!
//! where the advanced rows `g_yh(t + h)`, `f_yh(t + h)` are evaluated along
//! the optimal pair at `t + h` and `ind` gates them to `t <= T - h`. The
//! time reversal `phi(tau) = psi(T - tau)` turns this into a left-sided
//! Caputo equation with *delayed* argument and zero pre-history, which the
//! forward marching schemes of [`crate::fdde`] solve unchanged.
//!
//! Two source conventions are exposed because published example systems
//! differ in how the delayed cost row enters:
//!
//! * [`AdjointSourceConvention::ShiftedIndicator`] (default) — the delayed
//!   cost row is advanced by the lag and gated by `ind`, mirroring the
//!   advanced dynamics row. This is the convention under which the duality
//!   identity below holds and residual certificates are meaningful.
//! * [`AdjointSourceConvention::AsDisplayed`] — the delayed cost row enters
//!   unshifted and ungated, matching the worked linear example this
//!   toolkit reproduces (see the CLI's bundled example and its report).
//!
//! On the reversed grid the gate translates to "reversed node index `>= m`"
//! with no upper cutoff: the final reversed node (original `t = 0`) keeps
//! its source, since the left-endpoint quadrature of the last reversed cell
//! integrates over `(T - step, T]` in original time where the source is
//! active. Gating it off leaves an `O(step^alpha)` hole at `t = 0`.
//!
//! # Integral class
//!
//! The adjoint of the Volterra problem is itself a backward Volterra
//! equation in the advanced variable,
//!
//! ```text
//! psi(s) = source(s)
//!        + integral_s^T (t - s)^(alpha-1) f_y(t, s)^T psi(t) dt
//!        + integral_{s+h}^T (t - s - h)^(alpha-1) f_yh(t, s + h)^T psi(t) dt,
//! ```
//!
//! discretized with the same exact cell weights, the smooth factor frozen at
//! the *right* endpoint of each cell. That makes the backward march explicit
//! (node `s_j` only needs `psi` at nodes `> j`). The value at `s = T` is the
//! bare source there; the zero extension applies strictly beyond `T`.

use nalgebra::DVector;

use crate::control::ControlSignal;
use crate::error::{Error, Result};
use crate::fdde::{march, SolverOptions};
use crate::grid::Grid;
use crate::problem::{FddeProblem, VideProblem};
use crate::trajectory::{AdjointTrajectory, Trajectory};
use crate::volterra::{check_signal_grid, singular_weights};

/// How the delayed cost row `g_yh` enters the adjoint source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdjointSourceConvention {
    /// Advanced by the lag and gated to `t <= T - h` (duality-consistent).
    #[default]
    ShiftedIndicator,
    /// Unshifted and ungated, as displayed in the worked linear example.
    AsDisplayed,
}

/// Options for the differential-class adjoint solve.
#[derive(Debug, Clone, Copy, Default)]
pub struct AdjointOptions {
    pub convention: AdjointSourceConvention,
    /// Scheme for the reversed marching. The default rectangle scheme is
    /// deliberate: the gated source jumps at a grid node, which the
    /// left-endpoint rule integrates exactly while the Adams corrector
    /// smears it into an `O(step^alpha)` local error.
    pub solver: SolverOptions,
}

impl AdjointOptions {
    pub fn with_convention(convention: AdjointSourceConvention) -> Self {
        AdjointOptions { convention, ..Default::default() }
    }
}

fn check_pair_grid(y: &Trajectory, u: &ControlSignal, grid: &Grid) -> Result<()> {
    if !y.grid().same_as(grid) {
        return Err(Error::GridMismatch("state lives on a different grid".into()));
    }
    if !u.grid().same_as(grid) {
        return Err(Error::GridMismatch("control lives on a different grid".into()));
    }
    Ok(())
}

/// Solves the adjoint of the differential problem along the pair `(y, u)`.
///
/// Returns the adjoint path on `[0, T]`; its terminal value is zero and its
/// evaluation extends by zero beyond the horizon.
pub fn solve_adjoint_fdde(
    problem: &FddeProblem,
    y: &Trajectory,
    u: &ControlSignal,
    grid: &Grid,
    options: &AdjointOptions,
) -> Result<AdjointTrajectory> {
    check_signal_grid(
        problem.alpha,
        problem.horizon,
        problem.delay,
        problem.control_dim(),
        u,
        grid,
    )?;
    check_pair_grid(y, u, grid)?;
    let n = grid.node_count();
    let m = grid.delay_index();
    let dim = problem.dim;
    let g_y = &problem.g_y;
    let g_yh = &problem.g_yh;
    let f_y = &problem.f_y;
    let f_yh = &problem.f_yh;
    let shifted = options.convention == AdjointSourceConvention::ShiftedIndicator;

    // Reversed field: node i of the reversed grid is original node j = N - i;
    // the reversed delayed value phi(tau - h) is psi(t + h).
    let field = |i: usize, phi: &DVector<f64>, phi_delayed: &DVector<f64>| -> DVector<f64> {
        let j = n - i;
        let t = grid.node(j);
        let yj = y.node_value(j);
        let yjd = y.delayed_node(j);
        let uj = u.node_value(j);
        let mut rhs = -g_y(t, yj, &yjd, uj) + f_y(t, yj, &yjd, uj).transpose() * phi;
        if shifted {
            if i >= m {
                let ja = j + m;
                let ta = grid.node(ja);
                let ya = y.node_value(ja);
                let ua = u.node_value(ja);
                rhs -= g_yh(ta, ya, yj, ua);
                rhs += f_yh(ta, ya, yj, ua).transpose() * phi_delayed;
            }
        } else {
            rhs -= g_yh(t, yj, &yjd, uj);
            if i >= m {
                let ja = j + m;
                let ta = grid.node(ja);
                let ya = y.node_value(ja);
                let ua = u.node_value(ja);
                rhs += f_yh(ta, ya, yj, ua).transpose() * phi_delayed;
            }
        }
        rhs
    };
    let delayed_start = move |_: usize| DVector::zeros(dim);
    let reversed = march(
        problem.alpha,
        grid,
        &options.solver,
        DVector::zeros(dim),
        &delayed_start,
        &field,
    )?;
    let values: Vec<DVector<f64>> = (0..=n).map(|j| reversed[n - j].clone()).collect();
    AdjointTrajectory::new(*grid, values)
}

/// Solves the adjoint of the Volterra problem along the pair `(y, u)` by the
/// explicit backward march with right-endpoint frozen factors.
pub fn solve_adjoint_vide(
    problem: &VideProblem,
    y: &Trajectory,
    u: &ControlSignal,
    grid: &Grid,
    convention: AdjointSourceConvention,
) -> Result<AdjointTrajectory> {
    check_signal_grid(
        problem.alpha,
        problem.horizon,
        problem.delay,
        problem.control_dim(),
        u,
        grid,
    )?;
    check_pair_grid(y, u, grid)?;
    let n = grid.node_count();
    let m = grid.delay_index();
    let dim = problem.dim;
    let weights = singular_weights(grid, problem.alpha)?;
    let g_y = &problem.g_y;
    let g_yh = &problem.g_yh;
    let f_y = &problem.f_y;
    let f_yh = &problem.f_yh;
    let shifted = convention == AdjointSourceConvention::ShiftedIndicator;

    let mut values: Vec<DVector<f64>> = vec![DVector::zeros(dim); n + 1];
    for j in (0..=n).rev() {
        let s = grid.node(j);
        let yj = y.node_value(j);
        let yjd = y.delayed_node(j);
        let uj = u.node_value(j);
        let mut psi = -g_y(s, yj, &yjd, uj);
        if shifted {
            if j + m <= n {
                let sa = grid.node(j + m);
                psi -= g_yh(sa, y.node_value(j + m), yj, u.node_value(j + m));
            }
        } else {
            psi -= g_yh(s, yj, &yjd, uj);
        }
        // Flow terms: cells [t_k, t_{k+1}] of [s_j, T], factor frozen at the
        // right endpoint t_{k+1} so the march stays explicit.
        for k in j..n {
            let t = grid.node(k + 1);
            psi += f_y(t, s, yj, &yjd, uj).transpose() * &values[k + 1] * weights.lag_weight(k + 1 - j);
        }
        if j + m <= n {
            let sa = grid.node(j + m);
            let ya = y.node_value(j + m);
            let ua = u.node_value(j + m);
            for k in (j + m)..n {
                let t = grid.node(k + 1);
                psi += f_yh(t, sa, ya, yj, ua).transpose()
                    * &values[k + 1]
                    * weights.lag_weight(k + 1 - j - m);
            }
        }
        values[j] = psi;
    }
    AdjointTrajectory::new(*grid, values)
}

/// Both integrals of the variational duality identity, by trapezoid rule:
///
/// * the cost side `integral_0^T [g_y(t) . Y(t) + ind(t) g_yh(t + h) . Y(t)] dt`,
/// * the adjoint side `integral_0^T psi(t)^T forcing(t) dt`.
///
/// For the exact solutions the identity `cost_side = -adjoint_side` holds,
/// so their sum measures the discretization defect.
pub fn duality_parts(
    problem: &FddeProblem,
    y: &Trajectory,
    u: &ControlSignal,
    variational: &Trajectory,
    psi: &AdjointTrajectory,
    forcing: &[DVector<f64>],
    grid: &Grid,
) -> Result<(f64, f64)> {
    check_signal_grid(
        problem.alpha,
        problem.horizon,
        problem.delay,
        problem.control_dim(),
        u,
        grid,
    )?;
    check_pair_grid(y, u, grid)?;
    if !variational.grid().same_as(grid) || !psi.grid().same_as(grid) {
        return Err(Error::GridMismatch(
            "variational or adjoint path lives on a different grid".into(),
        ));
    }
    let n = grid.node_count();
    if forcing.len() != n + 1 {
        return Err(Error::invalid(format!(
            "expected {} forcing samples, got {}",
            n + 1,
            forcing.len()
        )));
    }
    let m = grid.delay_index();
    let w = grid.trapezoid_weights();
    let g_y = &problem.g_y;
    let g_yh = &problem.g_yh;
    let mut cost_side = 0.0;
    let mut adjoint_side = 0.0;
    for j in 0..=n {
        let t = grid.node(j);
        let yj = y.node_value(j);
        let yjd = y.delayed_node(j);
        let uj = u.node_value(j);
        let vj = variational.node_value(j);
        let mut row = g_y(t, yj, &yjd, uj).dot(vj);
        // Indicator on the open interval (0, T - h): strictly interior nodes.
        if j + m < n {
            let ta = grid.node(j + m);
            row += g_yh(ta, y.node_value(j + m), yj, u.node_value(j + m)).dot(vj);
        }
        cost_side += w[j] * row;
        adjoint_side += w[j] * psi.node_value(j).dot(&forcing[j]);
    }
    Ok((cost_side, adjoint_side))
}

/// Absolute defect `| cost_side + adjoint_side |` of the duality identity;
/// see [`duality_parts`].
pub fn duality_gap(
    problem: &FddeProblem,
    y: &Trajectory,
    u: &ControlSignal,
    variational: &Trajectory,
    psi: &AdjointTrajectory,
    forcing: &[DVector<f64>],
    grid: &Grid,
) -> Result<f64> {
    let (cost_side, adjoint_side) =
        duality_parts(problem, y, u, variational, psi, forcing, grid)?;
    Ok((cost_side + adjoint_side).abs())
}
