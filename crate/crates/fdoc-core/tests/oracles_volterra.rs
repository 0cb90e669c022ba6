//! Oracles for the weakly singular integral-equation solver.

mod common;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use fdoc_core::control::{ControlSet, ControlSignal};
use fdoc_core::fdde::{solve_fdde, SolverOptions};
use fdoc_core::grid::Grid;
use fdoc_core::problem::{FddeProblem, VideProblem};
use fdoc_core::specfun::gamma;
use fdoc_core::volterra::{singular_weights, solve_vide, solve_vide_with_options, VideOptions};

use common::sup_node_error;

fn unit_set() -> ControlSet {
    ControlSet::interval(-1.0, 1.0)
}

fn zero_control(grid: Grid) -> ControlSignal {
    ControlSignal::constant(grid, DVector::zeros(1), &unit_set()).unwrap()
}

/// A state-independent unit kernel integrates to t^alpha / alpha exactly:
/// the product weights carry no quadrature error for constant factors.
#[test]
fn unit_kernel_factor_integrates_exactly() {
    let alpha = 0.5;
    let problem = VideProblem::new(alpha, 1.0, 0.25, 1, unit_set())
        .unwrap()
        .with_kernel(
            Arc::new(|_, _, _, _, _| DVector::from_element(1, 1.0)),
            Arc::new(|_, _, _, _, _| DMatrix::zeros(1, 1)),
            Arc::new(|_, _, _, _, _| DMatrix::zeros(1, 1)),
        );
    let grid = Grid::new(1.0, 0.25, 64).unwrap();
    let u = zero_control(grid);
    let y = solve_vide(&problem, &u, &grid).unwrap();
    let err = sup_node_error(&y, |t| DVector::from_element(1, 2.0 * t.sqrt()));
    assert!(err <= 1e-12, "exactness gap {err:.3e} exceeds 1e-12");
}

/// A kernel factor that is piecewise constant with a jump on a grid node is
/// still integrated without quadrature error.
#[test]
fn node_aligned_jumps_integrate_exactly() {
    let alpha = 0.5;
    let problem = VideProblem::new(alpha, 1.0, 0.5, 1, unit_set())
        .unwrap()
        .with_kernel(
            Arc::new(|_, s: f64, _: &DVector<f64>, _: &DVector<f64>, _: &DVector<f64>| {
                DVector::from_element(1, if s < 0.5 { 1.0 } else { 2.0 })
            }),
            Arc::new(|_, _, _, _, _| DMatrix::zeros(1, 1)),
            Arc::new(|_, _, _, _, _| DMatrix::zeros(1, 1)),
        );
    let grid = Grid::new(1.0, 0.5, 16).unwrap();
    let u = zero_control(grid);
    let y = solve_vide(&problem, &u, &grid).unwrap();
    let err = sup_node_error(&y, |t| {
        let tail = (t - 0.5).max(0.0);
        DVector::from_element(1, 2.0 * t.sqrt() + 2.0 * tail.sqrt())
    });
    assert!(err <= 1e-12, "exactness gap {err:.3e} exceeds 1e-12");
}

/// Manufactured solution y = t for the coupled delayed kernel
/// f = (y(s) + y(s - h)) / 4 with zero pre-history.
fn manufactured_linear() -> VideProblem {
    let delay = 0.25;
    VideProblem::new(0.5, 1.0, delay, 1, unit_set())
        .unwrap()
        .with_kernel(
            Arc::new(|_, _, y: &DVector<f64>, yh: &DVector<f64>, _: &DVector<f64>| {
                DVector::from_element(1, 0.25 * (y[0] + yh[0]))
            }),
            Arc::new(|_, _, _, _, _| DMatrix::from_element(1, 1, 0.25)),
            Arc::new(|_, _, _, _, _| DMatrix::from_element(1, 1, 0.25)),
        )
        .with_eta(Arc::new(move |t: f64| {
            if t < 0.0 {
                // Pre-history of the manufactured solution.
                DVector::zeros(1)
            } else {
                let tail = (t - delay).max(0.0);
                DVector::from_element(1, t - (t.powf(1.5) + tail.powf(1.5)) / 3.0)
            }
        }))
}

#[test]
fn manufactured_linear_converges_at_first_order() {
    let problem = manufactured_linear();
    let mut errors = Vec::new();
    for npd in [128, 256, 512] {
        let grid = Grid::new(1.0, 0.25, npd).unwrap();
        let u = zero_control(grid);
        let y = solve_vide(&problem, &u, &grid).unwrap();
        errors.push(sup_node_error(&y, |t| DVector::from_element(1, t)));
    }
    let r1 = errors[1] / errors[0];
    let r2 = errors[2] / errors[1];
    assert!(
        r1 <= 0.8 && r2 <= 0.8,
        "refinement ratios {r1:.3}, {r2:.3} exceed 0.8 (errors {errors:?})"
    );
}

/// Endpoint-averaging refinement sweeps must not lose accuracy on a smooth
/// instance, and keep solving the same equation.
#[test]
fn refinement_sweeps_do_not_degrade() {
    let problem = manufactured_linear();
    let grid = Grid::new(1.0, 0.25, 128).unwrap();
    let u = zero_control(grid);
    let base = solve_vide(&problem, &u, &grid).unwrap();
    let refined =
        solve_vide_with_options(&problem, &u, &grid, &VideOptions { refinement_sweeps: 2 })
            .unwrap();
    let e_base = sup_node_error(&base, |t| DVector::from_element(1, t));
    let e_ref = sup_node_error(&refined, |t| DVector::from_element(1, t));
    assert!(
        e_ref <= e_base,
        "refined error {e_ref:.3e} exceeds unrefined {e_base:.3e}"
    );
}

/// Independent fixed-point oracle: twenty Picard applications of the product
/// integral operator on a four-times finer grid.
#[test]
fn matches_fine_grid_picard_iteration() {
    let alpha = 0.5;
    let delay = 0.25;
    let horizon = 1.0;
    let eta = |t: f64| 1.0 + 0.5 * t;
    let problem = VideProblem::new(alpha, horizon, delay, 1, unit_set())
        .unwrap()
        .with_kernel(
            Arc::new(|_, _, y: &DVector<f64>, yh: &DVector<f64>, _: &DVector<f64>| {
                DVector::from_element(1, 0.25 * (y[0] + yh[0]))
            }),
            Arc::new(|_, _, _, _, _| DMatrix::from_element(1, 1, 0.25)),
            Arc::new(|_, _, _, _, _| DMatrix::from_element(1, 1, 0.25)),
        )
        .with_eta(Arc::new(move |t: f64| DVector::from_element(1, eta(t))));

    let coarse = Grid::new(horizon, delay, 128).unwrap();
    let y = solve_vide(&problem, &zero_control(coarse), &coarse).unwrap();

    // Picard iteration on the fine grid, written out directly.
    let fine = Grid::new(horizon, delay, 512).unwrap();
    let weights = singular_weights(&fine, alpha).unwrap();
    let n = fine.node_count();
    let m = fine.delay_index();
    let mut w: Vec<f64> = (0..=n).map(|j| eta(fine.node(j))).collect();
    for _ in 0..20 {
        let prev = w.clone();
        for i in 1..=n {
            let mut acc = eta(fine.node(i));
            for j in 0..i {
                let lagged = if j >= m { prev[j - m] } else { eta(fine.node(j) - delay) };
                acc += weights.lag_weight(i - j) * 0.25 * (prev[j] + lagged);
            }
            w[i] = acc;
        }
    }

    let mut err: f64 = 0.0;
    for j in 0..=coarse.node_count() {
        err = err.max((y.node_value(j)[0] - w[4 * j]).abs());
    }
    assert!(err <= 5e-3, "Picard-oracle gap {err:.3e} exceeds 5e-3");
}

/// The differential march rewritten as an integral equation gives the same
/// nodes: kernel f / Gamma(alpha), forcing equal to the initial value.
#[test]
fn differential_and_integral_marches_coincide() {
    let alpha = 0.5;
    let horizon = 2.0;
    let delay = 0.5;
    let y0 = 0.8;
    let ig = 1.0 / gamma(alpha).unwrap();

    let fdde = FddeProblem::new(alpha, horizon, delay, 1, unit_set())
        .unwrap()
        .with_dynamics(
            Arc::new(|t: f64, y: &DVector<f64>, yh: &DVector<f64>, _: &DVector<f64>| {
                DVector::from_element(1, -0.5 * y[0] + 0.2 * yh[0] + t.sin())
            }),
            Arc::new(|_, _, _, _| DMatrix::from_element(1, 1, -0.5)),
            Arc::new(|_, _, _, _| DMatrix::from_element(1, 1, 0.2)),
        )
        .with_history(Arc::new(move |_| DVector::from_element(1, y0)));

    let vide = VideProblem::new(alpha, horizon, delay, 1, unit_set())
        .unwrap()
        .with_kernel(
            Arc::new(move |_, s: f64, y: &DVector<f64>, yh: &DVector<f64>, _: &DVector<f64>| {
                DVector::from_element(1, ig * (-0.5 * y[0] + 0.2 * yh[0] + s.sin()))
            }),
            Arc::new(move |_, _, _, _, _| DMatrix::from_element(1, 1, -0.5 * ig)),
            Arc::new(move |_, _, _, _, _| DMatrix::from_element(1, 1, 0.2 * ig)),
        )
        .with_eta(Arc::new(move |_| DVector::from_element(1, y0)));

    let grid = Grid::new(horizon, delay, 64).unwrap();
    let u = zero_control(grid);
    let yd = solve_fdde(&fdde, &u, &grid, &SolverOptions::rectangle()).unwrap();
    let yi = solve_vide(&vide, &u, &grid).unwrap();
    let mut gap: f64 = 0.0;
    for j in 0..=grid.node_count() {
        gap = gap.max((yd.node_value(j) - yi.node_value(j)).amax());
    }
    assert!(gap <= 1e-12, "formulation gap {gap:.3e} exceeds 1e-12");
}

/// Raising the forcing raises the solution when the kernel is monotone.
#[test]
fn solution_is_monotone_in_the_forcing() {
    let kernel: fdoc_core::problem::KernelField =
        Arc::new(|_, _, y: &DVector<f64>, yh: &DVector<f64>, _: &DVector<f64>| {
            DVector::from_element(1, 0.3 * (y[0] + yh[0]))
        });
    let make = |lift: f64| {
        VideProblem::new(0.5, 1.0, 0.25, 1, unit_set())
            .unwrap()
            .with_kernel(
                kernel.clone(),
                Arc::new(|_, _, _, _, _| DMatrix::from_element(1, 1, 0.3)),
                Arc::new(|_, _, _, _, _| DMatrix::from_element(1, 1, 0.3)),
            )
            .with_eta(Arc::new(move |t: f64| DVector::from_element(1, 0.5 + 0.1 * t.max(0.0) + lift)))
    };
    let grid = Grid::new(1.0, 0.25, 64).unwrap();
    let u = zero_control(grid);
    let low = solve_vide(&make(0.0), &u, &grid).unwrap();
    let high = solve_vide(&make(0.2), &u, &grid).unwrap();
    for j in 0..=grid.node_count() {
        assert!(
            high.node_value(j)[0] >= low.node_value(j)[0] - 1e-12,
            "monotonicity fails at node {j}"
        );
    }
}
