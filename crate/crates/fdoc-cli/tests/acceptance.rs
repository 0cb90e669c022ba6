//! Acceptance runner: executes every shipped guarantee of the toolkit at its
//! stated tolerance and prints exactly one PASS/FAIL line per check, with the
//! measured value next to its bound.
//!
//! This is a plain binary (`harness = false` in the manifest) so the lines
//! always appear in `cargo test` output; the process exits nonzero as soon as
//! any guarantee fails.

use std::any::Any;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fdoc_core::adjoint::{
    duality_parts, solve_adjoint_fdde, AdjointOptions, AdjointSourceConvention,
};
use fdoc_core::control::{ControlSet, ControlSignal};
use fdoc_core::fdde::{caputo_l1_derivative, solve_fdde, solve_variational, SolverOptions};
use fdoc_core::grid::Grid;
use fdoc_core::gronwall::{picard_bound, GronwallData};
use fdoc_core::linear::double_integrator_example;
use fdoc_core::pmp::{gateaux_check, pmp_residual, solve_costate, solve_state, ArgmaxParams};
use fdoc_core::problem::{FddeProblem, Problem, VideProblem};
use fdoc_core::specfun::{delayed_power_series, gamma, linear_pure_delay_response};
use fdoc_core::trajectory::{History, Trajectory};
use fdoc_core::volterra::{singular_weights, solve_vide};

/// Outputs of one `example4` run of the binary, shared by the checks that
/// grade the shipped optimization artifacts.
struct Artifacts {
    report: serde_json::Value,
}

fn main() {
    let artifacts = match produce_artifacts() {
        Ok(a) => a,
        Err(e) => {
            eprintln!("acceptance: could not produce the worked-example artifacts: {e}");
            std::process::exit(1);
        }
    };

    let checks: &[(&str, fn(&Artifacts) -> Result<String, String>)] = &[
        ("series-solver cross-validation", check_series_solver),
        ("adjoint reproduction", check_adjoint_reproduction),
        ("gradient cross-check", check_gradient),
        ("duality identity", check_duality),
        ("fractional integration by parts", check_by_parts),
        ("bang-bang optimization", check_optimization),
        ("integral-equation convergence", check_vide_convergence),
        ("singular Gronwall domination", check_gronwall),
        ("certificate soundness", check_certificate),
    ];

    let mut failed = 0usize;
    for (index, (label, check)) in checks.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(|| check(&artifacts)));
        let (pass, detail) = match outcome {
            Ok(Ok(detail)) => (true, detail),
            Ok(Err(detail)) => (false, detail),
            Err(panic) => (false, format!("panicked: {}", panic_text(&panic))),
        };
        println!(
            "check {}/{} {label}: {detail} ... {}",
            index + 1,
            checks.len(),
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("acceptance: {failed} check(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all {} checks passed", checks.len());
}

fn panic_text(panic: &Box<dyn Any + Send>) -> String {
    panic
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| panic.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "opaque panic payload".into())
}

/// Runs `example4` once at 128 nodes per delay (512 cells on the horizon)
/// and parses its report.
fn produce_artifacts() -> Result<Artifacts, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_fdoc"))
        .args(["example4", "--nodes-per-delay", "128", "--out"])
        .arg(dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "example4 exited with {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let text = std::fs::read_to_string(dir.path().join("report.json")).map_err(|e| e.to_string())?;
    let report = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    Ok(Artifacts { report })
}

/// Grid of the bundled example at the given resolution.
fn example_grid(nodes_per_delay: usize) -> Grid {
    Grid::new(2.0, 0.5, nodes_per_delay).unwrap()
}

/// Constant scalar control on the example grid.
fn example_control(grid: Grid, value: f64) -> ControlSignal {
    let set = ControlSet::interval(0.0, 1.0);
    ControlSignal::constant(grid, DVector::from_element(1, value), &set).unwrap()
}

/// Sup-norm error between a trajectory and a closed form at the nodes.
fn sup_node_error(y: &Trajectory, exact: impl Fn(f64) -> DVector<f64>) -> f64 {
    let grid = y.grid();
    (0..=grid.node_count())
        .map(|j| (y.node_value(j) - exact(grid.node(j))).amax())
        .fold(0.0, f64::max)
}

/// Scalar linear-quadratic problem `D^a y = a y + b y(t-h) + c u`,
/// running cost `q y^2 / 2 + r u^2 / 2`.
fn scalar_lq_problem(
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

/// 1. The marching solver reproduces the closed-form series response of the
/// bundled pure-delay system under the constant control, quickly.
fn check_series_solver(_: &Artifacts) -> Result<String, String> {
    let lp = double_integrator_example();
    let problem = lp.fdde().unwrap();
    let grid = example_grid(128);
    let u = example_control(grid, 1.0);

    let start = Instant::now();
    let y = solve_fdde(&problem, &u, &grid, &SolverOptions::rectangle()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();

    let reference =
        linear_pure_delay_response(&lp.delay_matrix, &lp.control_matrix, &u, lp.alpha, lp.delay)
            .unwrap();
    let sup = sup_node_error(&y, |t| {
        let j = (t / grid.step()).round() as usize;
        reference.node_value(j).clone()
    });

    let detail =
        format!("sup gap {sup:.3e} (tolerance 5e-3) over 512 cells; solve took {elapsed:.2} s (limit 5 s)");
    if sup <= 5e-3 && elapsed <= 5.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// 2. The backward solver reproduces the closed-form costate series under
/// both source conventions, and the displayed costate's second component is
/// the square-root power law, as the shipped report also states.
fn check_adjoint_reproduction(artifacts: &Artifacts) -> Result<String, String> {
    let lp = double_integrator_example();
    let problem = lp.fdde().unwrap();
    let grid = example_grid(128);
    let n = grid.node_count();
    let u = example_control(grid, 1.0);
    let y = solve_fdde(&problem, &u, &grid, &SolverOptions::rectangle()).unwrap();

    let at = lp.delay_matrix.transpose();
    let load = DVector::from_vec(vec![-1.0, 1.0]);

    let psi = solve_adjoint_fdde(&problem, &y, &u, &grid, &AdjointOptions::default()).unwrap();
    let mut gap_shifted = 0.0f64;
    for j in 0..=n {
        let arg = (lp.horizon - lp.delay - grid.node(j)).max(0.0);
        let exact = delayed_power_series(&at, &load, lp.alpha, lp.delay, arg).unwrap();
        gap_shifted = gap_shifted.max((psi.node_value(j) - exact).amax());
    }

    let displayed = AdjointOptions::with_convention(AdjointSourceConvention::AsDisplayed);
    let psi_d = solve_adjoint_fdde(&problem, &y, &u, &grid, &displayed).unwrap();
    let mut gap_displayed = 0.0f64;
    for j in 0..=n {
        let arg = lp.horizon - grid.node(j);
        let exact = delayed_power_series(&at, &load, lp.alpha, lp.delay, arg).unwrap();
        gap_displayed = gap_displayed.max((psi_d.node_value(j) - exact).amax());
    }

    // Forward march of the untransposed system with the same load: its second
    // component must be t^(1/2)/Gamma(3/2) to well under the tolerance.
    let singleton = ControlSet::singleton(DVector::zeros(1));
    let a = lp.delay_matrix.clone();
    let march = FddeProblem::new(lp.alpha, lp.horizon, lp.delay, 2, singleton.clone())
        .unwrap()
        .with_dynamics(
            Arc::new(move |_, _, yh: &DVector<f64>, _: &DVector<f64>| {
                &a * yh + DVector::from_vec(vec![-1.0, 1.0])
            }),
            Arc::new(|_, _, _, _| DMatrix::zeros(2, 2)),
            Arc::new({
                let a = lp.delay_matrix.clone();
                move |_, _, _, _| a.clone()
            }),
        );
    let zero = ControlSignal::constant(grid, DVector::zeros(1), &singleton).unwrap();
    let lambda = solve_fdde(&march, &zero, &grid, &SolverOptions::rectangle()).unwrap();
    let g32 = gamma(1.5).unwrap();
    let mut lambda_gap = 0.0f64;
    for j in 0..=n {
        lambda_gap = lambda_gap.max((lambda.node_value(j)[1] - grid.node(j).sqrt() / g32).abs());
    }

    let reported = artifacts.report["lambda_convention_match"].as_bool() == Some(true);

    let detail = format!(
        "series gaps {gap_shifted:.3e} / {gap_displayed:.3e} per convention, \
         power-law gap {lambda_gap:.3e} (tolerance 5e-3 each); report flag {}",
        if reported { "set" } else { "NOT set" }
    );
    if gap_shifted <= 5e-3 && gap_displayed <= 5e-3 && lambda_gap <= 5e-3 && reported {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// 3. The adjoint representation of the directional derivative matches a
/// symmetric finite difference on a smooth interior problem.
fn check_gradient(_: &Artifacts) -> Result<String, String> {
    let set = ControlSet::interval(0.0, 1.0);
    let problem = scalar_lq_problem(-0.6, 0.3, 1.0, 1.0, 0.5, 0.5, 2.0, 0.5, set.clone());
    let grid = Grid::new(2.0, 0.5, 256).unwrap();
    let u = ControlSignal::constant(grid, DVector::from_element(1, 0.3), &set).unwrap();
    let direction: Vec<DVector<f64>> = (0..=grid.node_count())
        .map(|j| DVector::from_element(1, (PI * grid.node(j) / 2.0).sin()))
        .collect();
    let report = gateaux_check(
        &Problem::Fdde(problem),
        &u,
        &direction,
        1e-4,
        &SolverOptions::rectangle(),
        &AdjointOptions::default(),
    )
    .unwrap();
    let detail = format!(
        "relative error {:.3e} (tolerance 1e-2) at 1024 cells, step 1e-4",
        report.relative_error
    );
    if report.relative_error <= 1e-2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// 4. The variational cost change equals (minus) the adjoint pairing with the
/// forcing on randomized linear problems, and the defect shrinks under grid
/// refinement on the bundled example.
fn check_duality(_: &Artifacts) -> Result<String, String> {
    let horizon = 2.0;
    let delay = 0.5;
    let set = ControlSet::interval(0.0, 1.0);
    let grid = Grid::new(horizon, delay, 256).unwrap();

    let mut worst_rel = 0.0f64;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-0.5..0.5));
        let ah = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-0.5..0.5));
        let b = DMatrix::from_fn(2, 1, |_, _| rng.random_range(-1.0..1.0));
        let cy = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        let cyh = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        let needle = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));

        let af = a.clone();
        let ahf = ah.clone();
        let bf = b.clone();
        let cyg = cy.clone();
        let cyhg = cyh.clone();
        let problem = FddeProblem::new(0.5, horizon, delay, 2, set.clone())
            .unwrap()
            .with_dynamics(
                Arc::new(move |_, y: &DVector<f64>, yh: &DVector<f64>, u: &DVector<f64>| {
                    &af * y + &ahf * yh + &bf * u
                }),
                Arc::new({
                    let a = a.clone();
                    move |_, _, _, _| a.clone()
                }),
                Arc::new({
                    let ah = ah.clone();
                    move |_, _, _, _| ah.clone()
                }),
            )
            .with_cost(
                Arc::new({
                    let cy = cy.clone();
                    let cyh = cyh.clone();
                    move |_, y: &DVector<f64>, yh: &DVector<f64>, _: &DVector<f64>| {
                        cy.dot(y) + cyh.dot(yh)
                    }
                }),
                Arc::new(move |_, _, _, _| cyg.clone()),
                Arc::new(move |_, _, _, _| cyhg.clone()),
            );

        let u = ControlSignal::constant(grid, DVector::from_element(1, 0.3), &set).unwrap();
        let y = solve_fdde(&problem, &u, &grid, &SolverOptions::rectangle()).unwrap();
        let forcing: Vec<DVector<f64>> = (0..=grid.node_count())
            .map(|j| {
                let t = grid.node(j);
                if (0.6..1.1).contains(&t) { needle.clone() } else { DVector::zeros(2) }
            })
            .collect();
        let variational =
            solve_variational(&problem, &y, &u, &forcing, &grid, &SolverOptions::rectangle())
                .unwrap();
        let psi = solve_adjoint_fdde(&problem, &y, &u, &grid, &AdjointOptions::default()).unwrap();
        let (cost_side, adjoint_side) =
            duality_parts(&problem, &y, &u, &variational, &psi, &forcing, &grid).unwrap();
        let rel = (cost_side + adjoint_side).abs()
            / cost_side.abs().max(adjoint_side.abs()).max(1e-30);
        worst_rel = worst_rel.max(rel);
    }

    // Refinement study on the bundled example with a fixed spike forcing.
    let lp = double_integrator_example();
    let problem = lp.fdde().unwrap();
    let spike = DVector::from_vec(vec![-0.5, -0.5]);
    let mut gaps = Vec::new();
    for npd in [64usize, 128, 256] {
        let grid = example_grid(npd);
        let u = example_control(grid, 1.0);
        let y = solve_fdde(&problem, &u, &grid, &SolverOptions::rectangle()).unwrap();
        let forcing: Vec<DVector<f64>> = (0..=grid.node_count())
            .map(|j| {
                let t = grid.node(j);
                if (0.75..1.25).contains(&t) { spike.clone() } else { DVector::zeros(2) }
            })
            .collect();
        let variational =
            solve_variational(&problem, &y, &u, &forcing, &grid, &SolverOptions::rectangle())
                .unwrap();
        let psi = solve_adjoint_fdde(&problem, &y, &u, &grid, &AdjointOptions::default()).unwrap();
        let (cost_side, adjoint_side) =
            duality_parts(&problem, &y, &u, &variational, &psi, &forcing, &grid).unwrap();
        gaps.push((cost_side + adjoint_side).abs());
    }
    let monotone = gaps[1] < gaps[0] && gaps[2] < gaps[1];

    let detail = format!(
        "worst relative defect {worst_rel:.3e} over 5 seeded problems (tolerance 1e-2); \
         defect {:.2e} -> {:.2e} -> {:.2e} under refinement ({})",
        gaps[0],
        gaps[1],
        gaps[2],
        if monotone { "monotone" } else { "NOT monotone" }
    );
    if worst_rel <= 1e-2 && monotone {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// 5. Discrete fractional integration by parts: the L1 pairing of f with the
/// forward derivative of g equals the pairing of g with the backward
/// derivative of f (boundary kernel included) for f = t^2, g = t^3.
fn check_by_parts(_: &Artifacts) -> Result<String, String> {
    let alpha = 0.5;
    let grid = Grid::new(1.0, 0.5, 1024).unwrap();
    let n = grid.node_count();

    let scalar = |v: f64| DVector::from_element(1, v);
    let g_path = Trajectory::new(
        grid,
        (0..=n).map(|j| scalar(grid.node(j).powi(3))).collect(),
        History::Zero,
    )
    .unwrap();
    // The backward derivative of f is the forward derivative of the
    // time-reversed path, evaluated at the reflected node. The constant
    // pre-history only satisfies the continuity guard; the difference
    // stencil never reads it.
    let f_reversed = Trajectory::new(
        grid,
        (0..=n).map(|j| scalar(grid.node(n - j).powi(2))).collect(),
        History::Sampled(vec![scalar(1.0); grid.delay_index() + 1]),
    )
    .unwrap();
    let dg = caputo_l1_derivative(&g_path, alpha).unwrap();
    let dphi = caputo_l1_derivative(&f_reversed, alpha).unwrap();

    let w = grid.trapezoid_weights();
    let mut lhs = 0.0;
    for j in 1..=n {
        lhs += w[j] * grid.node(j).powi(2) * dg[j - 1][0];
    }
    let mut rhs = 0.0;
    for j in 0..n {
        rhs += w[j] * grid.node(j).powi(3) * dphi[n - j - 1][0];
    }
    // f(1) = 1 times the boundary kernel (1-t)^(-alpha)/Gamma(1-alpha),
    // integrated against g cell-by-cell with the exact kernel primitive.
    let mut singular = 0.0;
    for j in 1..=n {
        let cell = ((1.0 - grid.node(j - 1)).powf(1.0 - alpha)
            - (1.0 - grid.node(j)).powf(1.0 - alpha))
            / (1.0 - alpha);
        singular += cell * 0.5 * (grid.node(j - 1).powi(3) + grid.node(j).powi(3));
    }
    rhs += singular / gamma(1.0 - alpha).unwrap();

    let exact = 6.0 / (gamma(3.5).unwrap() * 5.5);
    let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs());
    let drift = (lhs - exact).abs() / exact;

    let detail = format!(
        "sides differ by {rel:.3e} relative (tolerance 1e-2) at 2048 cells; \
         each side is {drift:.3e} from the exact integral"
    );
    if rel <= 1e-2 && drift <= 1e-2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// 6. The forward-backward sweep on the bundled example converges to a
/// bang-bang control with one switch whose objective matches the best
/// brute-force single-switch candidate; the certificate stays small.
fn check_optimization(artifacts: &Artifacts) -> Result<String, String> {
    let rep = &artifacts.report;
    let converged = rep["converged"].as_bool() == Some(true);
    let iterations = rep["iterations"].as_u64().unwrap_or(u64::MAX);
    let bang_fraction = rep["bang_fraction"].as_f64().unwrap_or(0.0);
    let switches = rep["switch_count"].as_u64().unwrap_or(u64::MAX);
    let j_sweep = rep["J_sweep"].as_f64().unwrap_or(f64::NAN);
    let j_best = rep["J_best"].as_f64().unwrap_or(f64::NAN);
    let residual_max = rep["residual_max"].as_f64().unwrap_or(f64::NAN);

    let objective_gap = j_sweep - j_best;
    let pass = converged
        && iterations <= 200
        && bang_fraction >= 0.95
        && switches == 1
        && objective_gap <= 1e-3
        && residual_max <= 1e-2;
    let detail = format!(
        "{} in {iterations} iterations (limit 200); bang fraction {bang_fraction:.3} \
         (floor 0.95) with {switches} switch(es); objective gap {objective_gap:.2e} \
         (tolerance 1e-3); certificate max {residual_max:.2e} (tolerance 1e-2)",
        if converged { "converged" } else { "did NOT converge" }
    );
    if pass { Ok(detail) } else { Err(detail) }
}

/// 7. The product-integration solver converges on a manufactured integral
/// equation with known solution y(t) = t, at a better-than-0.8 rate.
fn check_vide_convergence(_: &Artifacts) -> Result<String, String> {
    let delay = 0.25;
    let set = ControlSet::interval(0.0, 1.0);
    let problem = VideProblem::new(0.5, 1.0, delay, 1, set.clone())
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
                DVector::zeros(1)
            } else {
                let tail = (t - delay).max(0.0);
                DVector::from_element(1, t - (t.powf(1.5) + tail.powf(1.5)) / 3.0)
            }
        }));

    let mut errors = Vec::new();
    for npd in [128usize, 256, 512] {
        let grid = Grid::new(1.0, delay, npd).unwrap();
        let u = ControlSignal::constant(grid, DVector::zeros(1), &set).unwrap();
        let y = solve_vide(&problem, &u, &grid).unwrap();
        errors.push(sup_node_error(&y, |t| DVector::from_element(1, t)));
    }
    let r1 = errors[1] / errors[0];
    let r2 = errors[2] / errors[1];
    let detail = format!(
        "sup error {:.3e} (tolerance 1e-2) at 2048 cells; halving ratios {r1:.3}, {r2:.3} \
         (ceiling 0.8)",
        errors[2]
    );
    if errors[2] <= 1e-2 && r1 <= 0.8 && r2 <= 0.8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// 8. The Picard fixed point dominates simulated solutions of randomized
/// nonnegative singular delayed inequalities, node by node.
fn check_gronwall(_: &Artifacts) -> Result<String, String> {
    let grid = Grid::new(2.0, 0.5, 32).unwrap();
    let m = grid.delay_index();
    let n = grid.node_count();
    let weights = singular_weights(&grid, 0.5).unwrap();
    let gamma_half = gamma(0.5).unwrap();

    let mut worst_slack = f64::INFINITY;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: f64 = rng.random_range(-1.0..1.0);
        let b: f64 = rng.random_range(-1.0..1.0);
        let c: f64 = rng.random_range(0.0..1.0);
        let h0: f64 = rng.random_range(0.0..1.0);

        let set = ControlSet::singleton(DVector::zeros(1));
        let problem = FddeProblem::new(0.5, 2.0, 0.5, 1, set.clone())
            .unwrap()
            .with_dynamics(
                Arc::new(move |t: f64, y: &DVector<f64>, yh: &DVector<f64>, _: &DVector<f64>| {
                    DVector::from_element(1, a * y[0] + b * yh[0] + c * t.sin().powi(2))
                }),
                Arc::new(move |_, _, _, _| DMatrix::from_element(1, 1, a)),
                Arc::new(move |_, _, _, _| DMatrix::from_element(1, 1, b)),
            )
            .with_history(Arc::new(move |_| DVector::from_element(1, h0)));
        let u = ControlSignal::constant(grid, DVector::zeros(1), &set).unwrap();
        let y = solve_fdde(&problem, &u, &grid, &SolverOptions::rectangle()).unwrap();

        // |y_n| <= h0 + sum_{j<n} w_{n-j}/Gamma(1/2) (L(|y_j| + |y_{j-m}|) + c),
        // with the pre-lag delayed samples equal to the constant history and
        // therefore absorbed into the inhomogeneity.
        let coupling = a.abs().max(b.abs());
        let mut base = vec![h0; n + 1];
        for node in 1..=n {
            let mut acc = 0.0;
            for j in 0..node {
                let history_term = if j < m { coupling * h0 } else { 0.0 };
                acc += weights.lag_weight(node - j) / gamma_half * (c + history_term);
            }
            base[node] += acc;
        }
        let data =
            GronwallData { base, factor: vec![coupling / gamma_half; n + 1], alpha: 0.5 };
        let bound = picard_bound(&data, &grid).unwrap();
        for j in 0..=n {
            worst_slack = worst_slack.min(bound[j] - y.node_value(j)[0].abs());
        }
    }
    let detail =
        format!("worst node slack {worst_slack:.3e} over 20 randomized instances (floor -1e-9)");
    if worst_slack >= -1e-9 { Ok(detail) } else { Err(detail) }
}

/// 9. The maximum-condition residual is nonnegative at every node across a
/// battery of certified pairs, and identically zero on a singleton set.
fn check_certificate(_: &Artifacts) -> Result<String, String> {
    let mut min_residual = f64::INFINITY;
    let mut pairs = 0usize;

    let lp = double_integrator_example();
    let set = ControlSet::interval(0.0, 1.0);
    let grid = example_grid(32);
    for problem in [Problem::Fdde(lp.fdde().unwrap()), Problem::Vide(lp.vide().unwrap())] {
        for options in [SolverOptions::rectangle(), SolverOptions::adams()] {
            for value in [0.0, 0.5, 1.0] {
                let u = example_control(grid, value);
                let y = solve_state(&problem, &u, &grid, &options).unwrap();
                let psi = solve_costate(&problem, &y, &u, &grid, &AdjointOptions::default())
                    .unwrap();
                let report =
                    pmp_residual(&problem, &y, &u, &psi, &set, &ArgmaxParams::default()).unwrap();
                for r in &report.residuals {
                    min_residual = min_residual.min(*r);
                }
                pairs += 1;
            }
        }
    }
    // Oscillating, far-from-optimal control.
    let wild = ControlSignal::from_fn(grid, &set, |t| {
        DVector::from_element(1, 0.5 + 0.5 * (3.0 * t).sin().abs())
    })
    .unwrap();
    let problem = Problem::Fdde(lp.fdde().unwrap());
    let y = solve_state(&problem, &wild, &grid, &SolverOptions::rectangle()).unwrap();
    let psi = solve_costate(&problem, &y, &wild, &grid, &AdjointOptions::default()).unwrap();
    let report = pmp_residual(&problem, &y, &wild, &psi, &set, &ArgmaxParams::default()).unwrap();
    for r in &report.residuals {
        min_residual = min_residual.min(*r);
    }
    pairs += 1;

    // A singleton admissible set leaves no room to improve: the certificate
    // must vanish identically.
    let singleton = ControlSet::singleton(DVector::from_element(1, 0.6));
    let pinned = FddeProblem::new(0.5, 1.0, 0.25, 1, singleton.clone())
        .unwrap()
        .with_dynamics(
            Arc::new(|_, y: &DVector<f64>, yh: &DVector<f64>, u: &DVector<f64>| {
                DVector::from_element(1, -y[0] + 0.5 * yh[0] + u[0])
            }),
            Arc::new(|_, _, _, _| DMatrix::from_element(1, 1, -1.0)),
            Arc::new(|_, _, _, _| DMatrix::from_element(1, 1, 0.5)),
        )
        .with_cost(
            Arc::new(|_, y: &DVector<f64>, _, u: &DVector<f64>| y[0] * y[0] + u[0]),
            Arc::new(|_, y: &DVector<f64>, _, _| DVector::from_element(1, 2.0 * y[0])),
            Arc::new(|_, _, _, _| DVector::zeros(1)),
        );
    let pinned_grid = Grid::new(1.0, 0.25, 16).unwrap();
    let u = ControlSignal::constant(pinned_grid, DVector::from_element(1, 0.6), &singleton)
        .unwrap();
    let wrapped = Problem::Fdde(pinned);
    let y = solve_state(&wrapped, &u, &pinned_grid, &SolverOptions::rectangle()).unwrap();
    let psi = solve_costate(&wrapped, &y, &u, &pinned_grid, &AdjointOptions::default()).unwrap();
    let singleton_report =
        pmp_residual(&wrapped, &y, &u, &psi, &singleton, &ArgmaxParams::default()).unwrap();
    let singleton_max = singleton_report.max_residual;
    pairs += 1;

    let detail = format!(
        "min residual {min_residual:.2e} across {pairs} certified pairs (floor -1e-12); \
         singleton certificate max {singleton_max:.1e} (must be 0)"
    );
    if min_residual >= -1e-12 && singleton_max == 0.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}
