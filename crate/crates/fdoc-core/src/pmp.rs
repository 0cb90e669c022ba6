//! Objective evaluation, Hamiltonians, pointwise maximization, residual
//! certificates of the maximum principle, the relaxed forward–backward
//! sweep, and a Gateaux-derivative cross-check.
//!
//! The maximum principle characterizes an optimal pair through the pointwise
//! condition `H(t, u*(t)) = max_{u in U} H(t, u)` with the problem-class
//! Hamiltonians
//!
//! ```text
//! differential:  H(t, u) = psi(t)^T f(t, y(t), y(t - h), u) - g(t, y(t), y(t - h), u)
//! integral:      H(s, u) = integral_s^T (t - s)^(alpha-1) psi(t)^T
//!                          f(t, s, y(s), y(s - h), u) dt - g(s, y(s), y(s - h), u)
//! ```
//!
//! The pointwise *residual* `r_j = max_u H(t_j, u) - H(t_j, u_j)` is
//! non-negative by construction and vanishes exactly at controls satisfying
//! the maximum condition, which makes it a practical optimality certificate:
//! reports carry the per-node residuals, their maximum, their integral, and
//! the objective value.

use nalgebra::DVector;

use crate::adjoint::{solve_adjoint_fdde, solve_adjoint_vide, AdjointOptions};
use crate::control::{lex_less, ControlSet, ControlSignal};
use crate::error::{Error, Result};
use crate::fdde::{solve_fdde, SolverOptions};
use crate::grid::Grid;
use crate::problem::{FddeProblem, Problem, VideProblem};
use crate::trajectory::{AdjointTrajectory, Trajectory};
use crate::volterra::{singular_weights, solve_vide, SingularWeights};

/// Improvements below this threshold count as ties and keep the incumbent
/// control, so constant Hamiltonians leave the iterate untouched.
const TIE_TOLERANCE: f64 = 1e-12;

/// Resolution of the pointwise maximization over box sets: a coarse scan
/// followed by per-coordinate golden-section refinement.
#[derive(Debug, Clone, Copy)]
pub struct ArgmaxParams {
    /// Scan points per coordinate (lexicographic order, so exact ties pick
    /// the lexicographically smallest point).
    pub scan_points: usize,
    /// Absolute interval width, relative to the coordinate span, at which
    /// golden-section refinement stops.
    pub refine_tolerance: f64,
}

impl Default for ArgmaxParams {
    fn default() -> Self {
        ArgmaxParams { scan_points: 33, refine_tolerance: 1e-8 }
    }
}

/// Parameters of the relaxed forward–backward sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepParams {
    /// Relaxation weight `beta` of the control update
    /// `u <- (1 - beta) u + beta argmax H` (box sets only; finite sets take
    /// the argmax directly).
    pub relaxation: f64,
    /// Sup-norm change of the control at which the sweep stops.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub argmax: ArgmaxParams,
    /// Scheme of the forward solve.
    pub solver: SolverOptions,
    /// Convention and scheme of the backward solve.
    pub adjoint: AdjointOptions,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            relaxation: 0.5,
            tolerance: 1e-6,
            max_iterations: 500,
            argmax: ArgmaxParams::default(),
            solver: SolverOptions::default(),
            adjoint: AdjointOptions::default(),
        }
    }
}

/// Optimality certificate: per-node residuals of the maximum condition.
#[derive(Debug, Clone)]
pub struct PmpReport {
    /// `r_j = max_u H(t_j, u) - H(t_j, u_j)` at every node.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Trapezoid integral of the residuals over `[0, T]`.
    pub l1_residual: f64,
    pub objective: f64,
}

/// Result of a converged forward–backward sweep.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub control: ControlSignal,
    pub state: Trajectory,
    pub adjoint: AdjointTrajectory,
    pub report: PmpReport,
    pub iterations: usize,
    /// Sup-norm control change after each iteration.
    pub changes: Vec<f64>,
}

/// Outcome of comparing the adjoint-based directional derivative of the
/// objective with a symmetric finite difference.
#[derive(Debug, Clone, Copy)]
pub struct GateauxReport {
    /// `-integral_0^T dH/du . direction dt` from the adjoint representation.
    pub adjoint_estimate: f64,
    /// `(J(u + eps d) - J(u - eps d)) / (2 eps)`.
    pub fd_estimate: f64,
    /// `|difference| / max(|adjoint|, |fd|)`, zero when both vanish.
    pub relative_error: f64,
}

/// Solves the state equation of either problem class.
pub fn solve_state(
    problem: &Problem,
    u: &ControlSignal,
    grid: &Grid,
    solver: &SolverOptions,
) -> Result<Trajectory> {
    match problem {
        Problem::Fdde(p) => solve_fdde(p, u, grid, solver),
        Problem::Vide(p) => solve_vide(p, u, grid),
    }
}

/// Solves the adjoint equation of either problem class.
pub fn solve_costate(
    problem: &Problem,
    y: &Trajectory,
    u: &ControlSignal,
    grid: &Grid,
    adjoint: &AdjointOptions,
) -> Result<AdjointTrajectory> {
    match problem {
        Problem::Fdde(p) => solve_adjoint_fdde(p, y, u, grid, adjoint),
        Problem::Vide(p) => solve_adjoint_vide(p, y, u, grid, adjoint.convention),
    }
}

/// Integral objective `J(u) = integral_0^T g(t, y(t), y(t - h), u(t)) dt`
/// by the trapezoid rule on the grid nodes.
pub fn objective(problem: &Problem, y: &Trajectory, u: &ControlSignal) -> Result<f64> {
    let grid = y.grid();
    if !u.grid().same_as(grid) {
        return Err(Error::GridMismatch("control lives on a different grid".into()));
    }
    let g = problem.cost();
    let w = grid.trapezoid_weights();
    let mut total = 0.0;
    for j in 0..=grid.node_count() {
        total += w[j] * g(grid.node(j), y.node_value(j), &y.delayed_node(j), u.node_value(j));
    }
    Ok(total)
}

/// Hamiltonian of the differential class at time `t` and control value `u`.
pub fn hamiltonian_fdde(
    problem: &FddeProblem,
    psi: &AdjointTrajectory,
    y: &Trajectory,
    t: f64,
    u_value: &DVector<f64>,
) -> Result<f64> {
    let yt = y.eval(t)?;
    let yd = y.eval(t - problem.delay)?;
    let p = psi.eval(t)?;
    let f = &problem.f;
    let g = &problem.g;
    Ok(p.dot(&f(t, &yt, &yd, u_value)) - g(t, &yt, &yd, u_value))
}

fn hamiltonian_vide_at(
    problem: &VideProblem,
    weights: &SingularWeights,
    psi: &AdjointTrajectory,
    y: &Trajectory,
    grid: &Grid,
    j: usize,
    u_value: &DVector<f64>,
) -> f64 {
    let s = grid.node(j);
    let yj = y.node_value(j);
    let yjd = y.delayed_node(j);
    let f = &problem.f;
    let g = &problem.g;
    let mut flow = 0.0;
    for k in j..grid.node_count() {
        let t = grid.node(k + 1);
        flow += weights.lag_weight(k + 1 - j)
            * psi.node_value(k + 1).dot(&f(t, s, yj, &yjd, u_value));
    }
    flow - g(s, yj, &yjd, u_value)
}

/// Hamiltonian of the integral class at node time `s` and control value `u`.
///
/// The advanced integral is discretized with the exact cell weights and the
/// factor frozen at right endpoints — the same rule the backward adjoint
/// march uses. `s` must lie on a grid node; at `s = T` the integral is empty
/// and the value is `-g(T, .., u)`.
pub fn hamiltonian_vide(
    problem: &VideProblem,
    psi: &AdjointTrajectory,
    y: &Trajectory,
    s: f64,
    u_value: &DVector<f64>,
    grid: &Grid,
) -> Result<f64> {
    let j = grid.index_of(s)?;
    let weights = singular_weights(grid, problem.alpha)?;
    Ok(hamiltonian_vide_at(problem, &weights, psi, y, grid, j, u_value))
}

fn golden_section_max(
    mut a: f64,
    mut b: f64,
    tol: f64,
    mut eval: impl FnMut(f64) -> f64,
) -> (f64, f64) {
    const INVPHI: f64 = 0.6180339887498949;
    let mut best_x = a;
    let mut best_v = eval(a);
    let vb = eval(b);
    if vb > best_v {
        best_x = b;
        best_v = vb;
    }
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let mut v1 = eval(x1);
    let mut v2 = eval(x2);
    while b - a > tol {
        if v1 >= v2 {
            b = x2;
            x2 = x1;
            v2 = v1;
            x1 = b - INVPHI * (b - a);
            v1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            v1 = v2;
            x2 = a + INVPHI * (b - a);
            v2 = eval(x2);
        }
        let (x, v) = if v1 >= v2 { (x1, v1) } else { (x2, v2) };
        if v > best_v {
            best_x = x;
            best_v = v;
        }
    }
    (best_x, best_v)
}

/// Pointwise maximizer of `h` over the admissible set.
///
/// Finite sets are enumerated exactly (ties resolve to the
/// lexicographically smallest point). Boxes are scanned on a per-coordinate
/// lattice of `scan_points` and refined by coordinate-wise golden-section
/// search, then coordinates within `1e-6` of a bound snap to it when that
/// does not lower the value — so affine Hamiltonians return exact vertices.
pub fn maximize_hamiltonian(
    h: &dyn Fn(&DVector<f64>) -> f64,
    set: &ControlSet,
    params: &ArgmaxParams,
) -> DVector<f64> {
    match set {
        ControlSet::Finite { points } => {
            let mut best = &points[0];
            let mut best_v = h(best);
            for p in &points[1..] {
                let v = h(p);
                if v > best_v || (v == best_v && lex_less(p, best)) {
                    best = p;
                    best_v = v;
                }
            }
            best.clone()
        }
        ControlSet::Box { lo, hi } => {
            let dim = lo.len();
            let points = params.scan_points.max(2);
            // Coarse lattice scan in lexicographic order; strict improvement
            // keeps the lexicographically smallest maximizer on exact ties.
            let coordinate = |i: usize, k: usize| -> f64 {
                if hi[i] == lo[i] {
                    lo[i]
                } else {
                    lo[i] + (hi[i] - lo[i]) * k as f64 / (points - 1) as f64
                }
            };
            let mut index = vec![0usize; dim];
            let mut best = DVector::from_fn(dim, |i, _| coordinate(i, 0));
            let mut best_v = h(&best);
            'scan: loop {
                // Advance the odometer (last coordinate fastest keeps the
                // enumeration lexicographic in the vector ordering).
                let mut pos = dim;
                loop {
                    if pos == 0 {
                        break 'scan;
                    }
                    pos -= 1;
                    index[pos] += 1;
                    if index[pos] < points {
                        break;
                    }
                    index[pos] = 0;
                }
                let candidate = DVector::from_fn(dim, |i, _| coordinate(i, index[i]));
                let v = h(&candidate);
                if v > best_v {
                    best = candidate;
                    best_v = v;
                }
            }
            // Two coordinate-descent passes of golden-section refinement.
            for _ in 0..2 {
                for i in 0..dim {
                    if hi[i] <= lo[i] {
                        continue;
                    }
                    let span = hi[i] - lo[i];
                    let tol = params.refine_tolerance * span.max(1.0);
                    let mut probe = best.clone();
                    let (x, v) = golden_section_max(lo[i], hi[i], tol, |x| {
                        probe[i] = x;
                        h(&probe)
                    });
                    if v > best_v {
                        best[i] = x;
                        best_v = v;
                    }
                }
            }
            // Endpoint snap: golden-section stops within its tolerance of a
            // bound when the maximizer is the bound itself.
            for i in 0..dim {
                let span = (hi[i] - lo[i]).max(1.0);
                for bound in [lo[i], hi[i]] {
                    if best[i] != bound && (best[i] - bound).abs() <= 1e-6 * span {
                        let mut snapped = best.clone();
                        snapped[i] = bound;
                        let v = h(&snapped);
                        if v >= best_v - TIE_TOLERANCE * best_v.abs().max(1.0) {
                            best = snapped;
                            best_v = v;
                        }
                    }
                }
            }
            best
        }
    }
}

enum NodeHamiltonian<'a> {
    Fdde(&'a FddeProblem),
    Vide(&'a VideProblem, SingularWeights),
}

impl NodeHamiltonian<'_> {
    fn new<'a>(problem: &'a Problem, grid: &Grid) -> Result<NodeHamiltonian<'a>> {
        Ok(match problem {
            Problem::Fdde(p) => NodeHamiltonian::Fdde(p),
            Problem::Vide(p) => NodeHamiltonian::Vide(p, singular_weights(grid, p.alpha)?),
        })
    }

    fn eval(
        &self,
        psi: &AdjointTrajectory,
        y: &Trajectory,
        grid: &Grid,
        j: usize,
        u_value: &DVector<f64>,
    ) -> f64 {
        match self {
            NodeHamiltonian::Fdde(p) => {
                let t = grid.node(j);
                let yt = y.node_value(j);
                let yd = y.delayed_node(j);
                psi.node_value(j).dot(&(p.f)(t, yt, &yd, u_value))
                    - (p.g)(t, yt, &yd, u_value)
            }
            NodeHamiltonian::Vide(p, weights) => {
                hamiltonian_vide_at(p, weights, psi, y, grid, j, u_value)
            }
        }
    }
}

fn report_for(
    problem: &Problem,
    hams: &NodeHamiltonian<'_>,
    y: &Trajectory,
    u: &ControlSignal,
    psi: &AdjointTrajectory,
    set: &ControlSet,
    params: &ArgmaxParams,
) -> Result<PmpReport> {
    let grid = y.grid();
    let n = grid.node_count();
    let w = grid.trapezoid_weights();
    let mut residuals = Vec::with_capacity(n + 1);
    let mut max_residual: f64 = 0.0;
    let mut l1 = 0.0;
    for j in 0..=n {
        let h = |v: &DVector<f64>| hams.eval(psi, y, grid, j, v);
        let incumbent = h(u.node_value(j));
        let best = maximize_hamiltonian(&h, set, params);
        let r = h(&best) - incumbent;
        max_residual = max_residual.max(r);
        l1 += w[j] * r;
        residuals.push(r);
    }
    Ok(PmpReport {
        residuals,
        max_residual,
        l1_residual: l1,
        objective: objective(problem, y, u)?,
    })
}

/// Residual certificate of the maximum condition for the pair `(y, u)` with
/// adjoint `psi`, maximizing over `set` at every node.
///
/// Each residual is `max_u H - H(u_j) >= 0`; a pair satisfying the maximum
/// condition at the nodes yields an identically zero report.
pub fn pmp_residual(
    problem: &Problem,
    y: &Trajectory,
    u: &ControlSignal,
    psi: &AdjointTrajectory,
    set: &ControlSet,
    params: &ArgmaxParams,
) -> Result<PmpReport> {
    let hams = NodeHamiltonian::new(problem, y.grid())?;
    report_for(problem, &hams, y, u, psi, set, params)
}

/// Relaxed forward–backward sweep: alternately solve the state and adjoint
/// equations and move every node control toward the pointwise Hamiltonian
/// maximizer.
///
/// Box sets blend `u <- (1 - beta) u + beta u_hat`; finite sets jump to the
/// maximizer. Improvements below an absolute `1e-12` tie threshold keep the
/// incumbent value, so controls at which the Hamiltonian is flat (for
/// instance under zero cost) are fixed points. Stops when the sup-norm
/// change drops to `params.tolerance`; afterwards state, adjoint, and
/// certificate are recomputed at the final control.
///
/// # Errors
///
/// [`Error::NotConverged`] after `max_iterations`, carrying the last iterate
/// and the change history.
pub fn forward_backward_sweep(
    problem: &Problem,
    u0: &ControlSignal,
    params: &SweepParams,
) -> Result<SweepOutput> {
    let grid = *u0.grid();
    let set = problem.control_set().clone();
    let beta = params.relaxation;
    if !(0.0..=1.0).contains(&beta) || beta == 0.0 {
        return Err(Error::invalid(format!(
            "relaxation must lie in (0, 1], got {beta}"
        )));
    }
    let mut u = u0.clone();
    let mut changes = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iterations {
        iterations += 1;
        let y = solve_state(problem, &u, &grid, &params.solver)?;
        let psi = solve_costate(problem, &y, &u, &grid, &params.adjoint)?;
        let hams = NodeHamiltonian::new(problem, &grid)?;
        let mut next = Vec::with_capacity(grid.node_count() + 1);
        for j in 0..=grid.node_count() {
            let h = |v: &DVector<f64>| hams.eval(&psi, &y, &grid, j, v);
            let incumbent_value = h(u.node_value(j));
            let best = maximize_hamiltonian(&h, &set, &params.argmax);
            let target = if h(&best) - incumbent_value
                <= TIE_TOLERANCE * incumbent_value.abs().max(1.0)
            {
                u.node_value(j).clone()
            } else {
                best
            };
            let updated = match &set {
                ControlSet::Box { .. } => {
                    set.project(&(u.node_value(j) * (1.0 - beta) + &target * beta))
                }
                ControlSet::Finite { .. } => target,
            };
            next.push(updated);
        }
        let next = ControlSignal::new(grid, next, &set)?;
        let change = next.sup_distance(&u);
        changes.push(change);
        u = next;
        if change <= params.tolerance {
            converged = true;
            break;
        }
    }
    let y = solve_state(problem, &u, &grid, &params.solver)?;
    let psi = solve_costate(problem, &y, &u, &grid, &params.adjoint)?;
    let report = pmp_residual(problem, &y, &u, &psi, &set, &params.argmax)?;
    let output = SweepOutput {
        control: u,
        state: y,
        adjoint: psi,
        report,
        iterations,
        changes: changes.clone(),
    };
    if converged {
        Ok(output)
    } else {
        Err(Error::NotConverged {
            max_iterations: params.max_iterations,
            last_change: changes.last().copied().unwrap_or(f64::NAN),
            last: Box::new(output),
            changes,
        })
    }
}

/// Compares the adjoint representation of the directional derivative of `J`
/// with a symmetric finite difference along `direction`.
///
/// Fails with [`Error::InadmissibleDirection`] if `u +- eps * direction`
/// leaves the admissible set at some node. The Hamiltonian's control slope
/// is taken by a central difference with step `1e-5` along the direction.
pub fn gateaux_check(
    problem: &Problem,
    u: &ControlSignal,
    direction: &[DVector<f64>],
    eps: f64,
    solver: &SolverOptions,
    adjoint_options: &AdjointOptions,
) -> Result<GateauxReport> {
    let grid = *u.grid();
    let n = grid.node_count();
    if direction.len() != n + 1 {
        return Err(Error::invalid(format!(
            "expected {} direction samples, got {}",
            n + 1,
            direction.len()
        )));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    let set = problem.control_set();
    let mut plus = Vec::with_capacity(n + 1);
    let mut minus = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let p = u.node_value(j) + &direction[j] * eps;
        let q = u.node_value(j) - &direction[j] * eps;
        if !set.contains(&p, 1e-12) || !set.contains(&q, 1e-12) {
            return Err(Error::InadmissibleDirection { node: j, t: grid.node(j) });
        }
        plus.push(p);
        minus.push(q);
    }
    let u_plus = ControlSignal::new(grid, plus, set)?;
    let u_minus = ControlSignal::new(grid, minus, set)?;

    let j_plus = objective(problem, &solve_state(problem, &u_plus, &grid, solver)?, &u_plus)?;
    let j_minus = objective(problem, &solve_state(problem, &u_minus, &grid, solver)?, &u_minus)?;
    let fd_estimate = (j_plus - j_minus) / (2.0 * eps);

    let y = solve_state(problem, u, &grid, solver)?;
    let psi = solve_costate(problem, &y, u, &grid, adjoint_options)?;
    let hams = NodeHamiltonian::new(problem, &grid)?;
    let w = grid.trapezoid_weights();
    let delta = 1e-5;
    let mut adjoint_estimate = 0.0;
    for j in 0..=n {
        let forward = u.node_value(j) + &direction[j] * delta;
        let backward = u.node_value(j) - &direction[j] * delta;
        let slope = (hams.eval(&psi, &y, &grid, j, &forward)
            - hams.eval(&psi, &y, &grid, j, &backward))
            / (2.0 * delta);
        adjoint_estimate -= w[j] * slope;
    }
    let denominator = fd_estimate.abs().max(adjoint_estimate.abs());
    let relative_error = if denominator < 1e-12 {
        0.0
    } else {
        (fd_estimate - adjoint_estimate).abs() / denominator
    };
    Ok(GateauxReport { adjoint_estimate, fd_estimate, relative_error })
}
