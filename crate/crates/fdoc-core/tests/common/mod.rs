//! Shared fixtures and reference integrators for the oracle tests.
//!
//! Each integration-test binary compiles this module independently and uses
//! only a subset of the helpers.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use fdoc_core::control::{ControlSet, ControlSignal};
use fdoc_core::grid::Grid;
use fdoc_core::linear::double_integrator_example;
use fdoc_core::problem::FddeProblem;
use fdoc_core::trajectory::Trajectory;

/// The bundled double-integrator example as a differential problem.
pub fn example_fdde() -> FddeProblem {
    double_integrator_example().fdde().unwrap()
}

/// Grid of the bundled example at the given resolution.
pub fn example_grid(nodes_per_delay: usize) -> Grid {
    Grid::new(2.0, 0.5, nodes_per_delay).unwrap()
}

/// Constant scalar control on the example grid.
pub fn example_control(grid: Grid, value: f64) -> ControlSignal {
    let set = ControlSet::interval(0.0, 1.0);
    ControlSignal::constant(grid, DVector::from_element(1, value), &set).unwrap()
}

/// Dynamics matrix, input column, and series vector of the bundled example.
pub fn example_matrices() -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let b = DMatrix::from_row_slice(2, 1, &[-1.0, -1.0]);
    // With u = 1 the forced system is D^alpha y = A y(t - h) + w, w = B * 1.
    let w = DVector::from_vec(vec![-1.0, -1.0]);
    (a, b, w)
}

/// Sup-norm error between a trajectory and a closed form at the nodes.
pub fn sup_node_error(y: &Trajectory, exact: impl Fn(f64) -> DVector<f64>) -> f64 {
    let grid = y.grid();
    (0..=grid.node_count())
        .map(|j| (y.node_value(j) - exact(grid.node(j))).amax())
        .fold(0.0, f64::max)
}

/// Classical (first-order) delayed system integrated by RK4 with the method
/// of steps on a fine uniform grid whose step divides the delay.
///
/// Delayed lookups interpolate the already-computed fine nodes linearly, so
/// every Runge-Kutta stage stays explicit.
pub fn rk4_delayed(
    dim: usize,
    horizon: f64,
    delay: f64,
    fine_per_delay: usize,
    field: impl Fn(f64, &DVector<f64>, &DVector<f64>) -> DVector<f64>,
    history: impl Fn(f64) -> DVector<f64>,
) -> (Vec<f64>, Vec<DVector<f64>>) {
    let step = delay / fine_per_delay as f64;
    let n = (horizon / step).round() as usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut values: Vec<DVector<f64>> = Vec::with_capacity(n + 1);
    times.push(0.0);
    values.push(history(0.0));
    let delayed = |values: &Vec<DVector<f64>>, t: f64| -> DVector<f64> {
        if t < 0.0 {
            return history(t);
        }
        let s = t / step;
        let j = s.floor() as usize;
        let j = j.min(values.len().saturating_sub(2));
        let theta = (s - j as f64).clamp(0.0, 1.0);
        &values[j] * (1.0 - theta) + &values[j + 1] * theta
    };
    let _ = dim;
    for i in 0..n {
        let t = i as f64 * step;
        let y = values[i].clone();
        let k1 = field(t, &y, &delayed(&values, t - delay));
        let half = t + 0.5 * step;
        let k2 = field(half, &(&y + &k1 * (0.5 * step)), &delayed(&values, half - delay));
        let k3 = field(half, &(&y + &k2 * (0.5 * step)), &delayed(&values, half - delay));
        let full = t + step;
        let k4 = field(full, &(&y + &k3 * step), &delayed(&values, full - delay));
        let next = &y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (step / 6.0);
        times.push(full);
        values.push(next);
    }
    (times, values)
}

/// Convenience: shared closure type for scalar linear-quadratic fixtures.
pub fn scalar_lq_problem(
    a: f64,
    b: f64,
    c: f64,
    q: f64,
    r: f64,
    alpha: f64,
    horizon: f64,
    delay: f64,
    set: ControlSet,
) -> FddeProblem {
    FddeProblem::new(alpha, horizon, delay, 1, set)
        .unwrap()
        .with_dynamics(
            Arc::new(move |_, y: &DVector<f64>, yh: &DVector<f64>, u: &DVector<f64>| {
                DVector::from_element(1, a * y[0] + b * yh[0] + c * u[0])
            }),
            Arc::new(move |_, _, _, _| DMatrix::from_element(1, 1, a)),
            Arc::new(move |_, _, _, _| DMatrix::from_element(1, 1, b)),
        )
        .with_cost(
            Arc::new(move |_, y: &DVector<f64>, _: &DVector<f64>, u: &DVector<f64>| {
                0.5 * q * y[0] * y[0] + 0.5 * r * u[0] * u[0]
            }),
            Arc::new(move |_, y: &DVector<f64>, _: &DVector<f64>, _: &DVector<f64>| {
                DVector::from_element(1, q * y[0])
            }),
            Arc::new(move |_, _, _, _| DVector::zeros(1)),
        )
}
