//! Python bindings for the toolkit: the linear problem family with both
//! solvers, adjoints, maximum-condition certificates, the forward-backward
//! sweep, closed-form series evaluation, and the discrete Gronwall bound.
//!
//! Everything crosses the boundary as plain floats, lists, and dicts, so the
//! module has no Python-side dependencies. Dense outputs are node-major:
//! `out["y"][j]` is the state vector at the `j`-th grid node.

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fdoc_core::adjoint::{AdjointOptions, AdjointSourceConvention};
use fdoc_core::control::{ControlSet, ControlSignal};
use fdoc_core::fdde::SolverOptions;
use fdoc_core::grid::Grid;
use fdoc_core::gronwall::GronwallData;
use fdoc_core::linear::{double_integrator_example, ControlCost, LinearProblem};
use fdoc_core::pmp::{
    forward_backward_sweep, gateaux_check, objective, pmp_residual, solve_costate, solve_state,
    ArgmaxParams, SweepOutput, SweepParams,
};
use fdoc_core::problem::Problem;
use fdoc_core::trajectory::{AdjointTrajectory, Trajectory};
use fdoc_core::Error;

fn value_error(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: &[Vec<f64>], what: &str) -> PyResult<DMatrix<f64>> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(PyValueError::new_err(format!("{what} must be a non-empty matrix")));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err(format!("{what} rows have unequal lengths")));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn trajectory_rows(y: &Trajectory) -> Vec<Vec<f64>> {
    let n = y.grid().node_count();
    (0..=n).map(|j| y.node_value(j).iter().copied().collect()).collect()
}

fn adjoint_rows(psi: &AdjointTrajectory, n: usize) -> Vec<Vec<f64>> {
    (0..=n).map(|j| psi.node_value(j).iter().copied().collect()).collect()
}

fn parse_scheme(name: &str) -> PyResult<SolverOptions> {
    match name {
        "rectangle" => Ok(SolverOptions::rectangle()),
        "adams" => Ok(SolverOptions::adams()),
        other => Err(PyValueError::new_err(format!(
            "unknown scheme `{other}` (expected `rectangle` or `adams`)"
        ))),
    }
}

fn parse_convention(name: &str) -> PyResult<AdjointSourceConvention> {
    match name {
        "shifted" => Ok(AdjointSourceConvention::ShiftedIndicator),
        "displayed" => Ok(AdjointSourceConvention::AsDisplayed),
        other => Err(PyValueError::new_err(format!(
            "unknown convention `{other}` (expected `shifted` or `displayed`)"
        ))),
    }
}

/// A control argument: per-node rows, one constant vector, or one constant
/// scalar broadcast over the control components.
#[derive(FromPyObject)]
enum ControlArg {
    PerNode(Vec<Vec<f64>>),
    Constant(Vec<f64>),
    Scalar(f64),
}

/// Problem class selector.
#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Fdde,
    Vide,
}

/// A linear delay problem of fractional order:
/// dynamics (or integral kernel) `A y + A_h y(t - h) + B u`, running cost
/// `c_y . y + c_yh . y(t - h) + cost(u)`, minimized over an admissible box
/// or finite set.
#[pyclass]
struct LinearControlProblem {
    inner: LinearProblem,
    kind: Kind,
}

impl LinearControlProblem {
    fn grid(&self, nodes_per_delay: usize) -> PyResult<Grid> {
        Grid::new(self.inner.horizon, self.inner.delay, nodes_per_delay).map_err(value_error)
    }

    fn problem(&self) -> PyResult<Problem> {
        match self.kind {
            Kind::Fdde => Ok(Problem::Fdde(self.inner.fdde().map_err(value_error)?)),
            Kind::Vide => Ok(Problem::Vide(self.inner.vide().map_err(value_error)?)),
        }
    }

    /// Materializes a control argument on the grid; `None` projects the zero
    /// vector onto the admissible set, matching the command-line driver.
    fn signal(&self, grid: Grid, control: Option<ControlArg>) -> PyResult<ControlSignal> {
        let set = &self.inner.control_set;
        let dim = set.dim();
        let built = match control {
            None => {
                ControlSignal::constant(grid, set.project(&DVector::zeros(dim)), set)
            }
            Some(ControlArg::Scalar(v)) => {
                ControlSignal::constant(grid, DVector::from_element(dim, v), set)
            }
            Some(ControlArg::Constant(v)) => {
                ControlSignal::constant(grid, DVector::from_vec(v), set)
            }
            Some(ControlArg::PerNode(rows)) => {
                let values: Vec<DVector<f64>> =
                    rows.into_iter().map(DVector::from_vec).collect();
                ControlSignal::new(grid, values, set)
            }
        };
        built.map_err(value_error)
    }

    fn direction_rows(
        &self,
        grid: Grid,
        direction: ControlArg,
    ) -> PyResult<Vec<DVector<f64>>> {
        let n = grid.node_count();
        let dim = self.inner.control_set.dim();
        Ok(match direction {
            ControlArg::Scalar(v) => vec![DVector::from_element(dim, v); n + 1],
            ControlArg::Constant(v) => vec![DVector::from_vec(v); n + 1],
            ControlArg::PerNode(rows) => {
                if rows.len() != n + 1 {
                    return Err(PyValueError::new_err(format!(
                        "direction must carry {} rows, got {}",
                        n + 1,
                        rows.len()
                    )));
                }
                rows.into_iter().map(DVector::from_vec).collect()
            }
        })
    }
}

fn sweep_dict<'py>(
    py: Python<'py>,
    output: &SweepOutput,
    converged: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let n = output.state.grid().node_count();
    let d = PyDict::new(py);
    d.set_item("converged", converged)?;
    d.set_item("iterations", output.iterations)?;
    d.set_item("changes", output.changes.clone())?;
    d.set_item("t", (0..=n).map(|j| output.state.grid().node(j)).collect::<Vec<f64>>())?;
    d.set_item("control", trajectory_control_rows(&output.control))?;
    d.set_item("y", trajectory_rows(&output.state))?;
    d.set_item("psi", adjoint_rows(&output.adjoint, n))?;
    d.set_item("objective", output.report.objective)?;
    d.set_item("residuals", output.report.residuals.clone())?;
    d.set_item("residual_max", output.report.max_residual)?;
    d.set_item("residual_l1", output.report.l1_residual)?;
    Ok(d)
}

fn trajectory_control_rows(u: &ControlSignal) -> Vec<Vec<f64>> {
    u.values().iter().map(|v| v.iter().copied().collect()).collect()
}

#[pymethods]
impl LinearControlProblem {
    /// Builds a problem of the given class (`kind` is `"fdde"` for the
    /// differential form or `"vide"` for the integral form).
    ///
    /// The admissible set is either the box `[lo, hi]` (componentwise) or
    /// the finite set `points`; exactly one must be given. `control_cost` is
    /// `"linear"` or `"quadratic"` with the given weight. `history` is a
    /// constant pre-history vector (differential class); `eta` lists
    /// polynomial forcing coefficients per state component, lowest degree
    /// first (integral class).
    #[new]
    #[pyo3(signature = (
        kind, alpha, horizon, delay, a_state, a_delay, b_control, c_y, c_yh,
        control_cost = "linear", control_weight = 1.0,
        lo = None, hi = None, points = None, history = None, eta = None
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        kind: &str,
        alpha: f64,
        horizon: f64,
        delay: f64,
        a_state: Vec<Vec<f64>>,
        a_delay: Vec<Vec<f64>>,
        b_control: Vec<Vec<f64>>,
        c_y: Vec<f64>,
        c_yh: Vec<f64>,
        control_cost: &str,
        control_weight: f64,
        lo: Option<Vec<f64>>,
        hi: Option<Vec<f64>>,
        points: Option<Vec<Vec<f64>>>,
        history: Option<Vec<f64>>,
        eta: Option<Vec<Vec<f64>>>,
    ) -> PyResult<Self> {
        let kind = match kind {
            "fdde" => Kind::Fdde,
            "vide" => Kind::Vide,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown kind `{other}` (expected `fdde` or `vide`)"
                )))
            }
        };
        let control_set = match (lo, hi, points) {
            (Some(lo), Some(hi), None) => {
                ControlSet::Box { lo: DVector::from_vec(lo), hi: DVector::from_vec(hi) }
            }
            (None, None, Some(points)) => ControlSet::Finite {
                points: points.into_iter().map(DVector::from_vec).collect(),
            },
            _ => {
                return Err(PyValueError::new_err(
                    "give either both `lo` and `hi`, or `points`",
                ))
            }
        };
        control_set.validate().map_err(value_error)?;
        let control_cost = match control_cost {
            "linear" => ControlCost::Linear { weight: control_weight },
            "quadratic" => ControlCost::Quadratic { weight: control_weight },
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown control cost `{other}` (expected `linear` or `quadratic`)"
                )))
            }
        };
        let inner = LinearProblem {
            alpha,
            horizon,
            delay,
            state_matrix: to_matrix(&a_state, "a_state")?,
            delay_matrix: to_matrix(&a_delay, "a_delay")?,
            control_matrix: to_matrix(&b_control, "b_control")?,
            cost_state: DVector::from_vec(c_y),
            cost_delayed: DVector::from_vec(c_yh),
            control_cost,
            control_set,
            history: history.map(DVector::from_vec),
            eta_coefficients: eta,
        };
        // Surface shape mistakes at construction, not first use.
        match kind {
            Kind::Fdde => inner.fdde().map(|_| ()).map_err(value_error)?,
            Kind::Vide => inner.vide().map(|_| ()).map_err(value_error)?,
        }
        Ok(LinearControlProblem { inner, kind })
    }

    /// The worked example bundled with the command-line driver: a half-order
    /// double integrator whose drift reads the lagged state, with running
    /// cost `y1(t - h) - y2(t - h) + u` over `u in [0, 1]`.
    #[staticmethod]
    fn double_integrator() -> Self {
        LinearControlProblem { inner: double_integrator_example(), kind: Kind::Fdde }
    }

    /// Grid nodes on `[0, horizon]` at the given resolution.
    fn nodes(&self, nodes_per_delay: usize) -> PyResult<Vec<f64>> {
        let grid = self.grid(nodes_per_delay)?;
        Ok((0..=grid.node_count()).map(|j| grid.node(j)).collect())
    }

    /// Solves the state equation; returns `{"t", "y"}`.
    #[pyo3(signature = (nodes_per_delay, control = None, scheme = "rectangle"))]
    fn solve<'py>(
        &self,
        py: Python<'py>,
        nodes_per_delay: usize,
        control: Option<ControlArg>,
        scheme: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        let grid = self.grid(nodes_per_delay)?;
        let u = self.signal(grid, control)?;
        let options = parse_scheme(scheme)?;
        let problem = self.problem()?;
        let y = solve_state(&problem, &u, &grid, &options).map_err(value_error)?;
        let d = PyDict::new(py);
        d.set_item("t", (0..=grid.node_count()).map(|j| grid.node(j)).collect::<Vec<f64>>())?;
        d.set_item("y", trajectory_rows(&y))?;
        Ok(d)
    }

    /// Solves the state and then the backward (costate) equation; returns
    /// `{"t", "y", "psi"}`.
    #[pyo3(signature = (nodes_per_delay, control = None, scheme = "rectangle",
                        convention = "shifted"))]
    fn adjoint<'py>(
        &self,
        py: Python<'py>,
        nodes_per_delay: usize,
        control: Option<ControlArg>,
        scheme: &str,
        convention: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        let grid = self.grid(nodes_per_delay)?;
        let u = self.signal(grid, control)?;
        let options = parse_scheme(scheme)?;
        let problem = self.problem()?;
        let y = solve_state(&problem, &u, &grid, &options).map_err(value_error)?;
        let adjoint_options = AdjointOptions {
            convention: parse_convention(convention)?,
            ..Default::default()
        };
        let psi = solve_costate(&problem, &y, &u, &grid, &adjoint_options).map_err(value_error)?;
        let d = PyDict::new(py);
        d.set_item("t", (0..=grid.node_count()).map(|j| grid.node(j)).collect::<Vec<f64>>())?;
        d.set_item("y", trajectory_rows(&y))?;
        d.set_item("psi", adjoint_rows(&psi, grid.node_count()))?;
        Ok(d)
    }

    /// Trapezoid value of the running cost along the solved state.
    #[pyo3(signature = (nodes_per_delay, control = None, scheme = "rectangle"))]
    fn objective(
        &self,
        nodes_per_delay: usize,
        control: Option<ControlArg>,
        scheme: &str,
    ) -> PyResult<f64> {
        let grid = self.grid(nodes_per_delay)?;
        let u = self.signal(grid, control)?;
        let options = parse_scheme(scheme)?;
        let problem = self.problem()?;
        let y = solve_state(&problem, &u, &grid, &options).map_err(value_error)?;
        objective(&problem, &y, &u).map_err(value_error)
    }

    /// Maximum-condition certificate along the pair solved at `control`;
    /// returns `{"residuals", "residual_max", "residual_l1", "objective"}`.
    /// Residuals are nonnegative; an optimal pair yields zeros.
    #[pyo3(signature = (nodes_per_delay, control = None, scheme = "rectangle",
                        convention = "shifted"))]
    fn certify<'py>(
        &self,
        py: Python<'py>,
        nodes_per_delay: usize,
        control: Option<ControlArg>,
        scheme: &str,
        convention: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        let grid = self.grid(nodes_per_delay)?;
        let u = self.signal(grid, control)?;
        let options = parse_scheme(scheme)?;
        let problem = self.problem()?;
        let y = solve_state(&problem, &u, &grid, &options).map_err(value_error)?;
        let adjoint_options = AdjointOptions {
            convention: parse_convention(convention)?,
            ..Default::default()
        };
        let psi = solve_costate(&problem, &y, &u, &grid, &adjoint_options).map_err(value_error)?;
        let report = pmp_residual(
            &problem,
            &y,
            &u,
            &psi,
            &self.inner.control_set,
            &ArgmaxParams::default(),
        )
        .map_err(value_error)?;
        let d = PyDict::new(py);
        d.set_item("residuals", report.residuals)?;
        d.set_item("residual_max", report.max_residual)?;
        d.set_item("residual_l1", report.l1_residual)?;
        d.set_item("objective", report.objective)?;
        Ok(d)
    }

    /// Relaxed forward-backward sweep from the given starting control.
    ///
    /// Returns the final iterate either way, with `"converged"` telling
    /// whether the control change dropped to the tolerance within the
    /// iteration budget.
    #[pyo3(signature = (nodes_per_delay, start = None, relaxation = 0.5,
                        tolerance = 1e-6, max_iterations = 500,
                        scheme = "adams", convention = "shifted"))]
    #[allow(clippy::too_many_arguments)]
    fn sweep<'py>(
        &self,
        py: Python<'py>,
        nodes_per_delay: usize,
        start: Option<ControlArg>,
        relaxation: f64,
        tolerance: f64,
        max_iterations: usize,
        scheme: &str,
        convention: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        let grid = self.grid(nodes_per_delay)?;
        let u0 = self.signal(grid, start)?;
        let solver = parse_scheme(scheme)?;
        let params = SweepParams {
            relaxation,
            tolerance,
            max_iterations,
            argmax: ArgmaxParams::default(),
            solver,
            adjoint: AdjointOptions {
                convention: parse_convention(convention)?,
                ..Default::default()
            },
        };
        let problem = self.problem()?;
        match forward_backward_sweep(&problem, &u0, &params) {
            Ok(output) => sweep_dict(py, &output, true),
            Err(Error::NotConverged { last, .. }) => sweep_dict(py, &last, false),
            Err(e) => Err(value_error(e)),
        }
    }

    /// Cross-checks the adjoint representation of the directional derivative
    /// of the objective against a symmetric finite difference; returns
    /// `{"adjoint_estimate", "fd_estimate", "relative_error"}`.
    #[pyo3(signature = (nodes_per_delay, control, direction, eps = 1e-4,
                        scheme = "rectangle", convention = "shifted"))]
    #[allow(clippy::too_many_arguments)]
    fn gateaux<'py>(
        &self,
        py: Python<'py>,
        nodes_per_delay: usize,
        control: ControlArg,
        direction: ControlArg,
        eps: f64,
        scheme: &str,
        convention: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        let grid = self.grid(nodes_per_delay)?;
        let u = self.signal(grid, Some(control))?;
        let rows = self.direction_rows(grid, direction)?;
        let solver = parse_scheme(scheme)?;
        let adjoint_options = AdjointOptions {
            convention: parse_convention(convention)?,
            ..Default::default()
        };
        let problem = self.problem()?;
        let report = gateaux_check(&problem, &u, &rows, eps, &solver, &adjoint_options)
            .map_err(value_error)?;
        let d = PyDict::new(py);
        d.set_item("adjoint_estimate", report.adjoint_estimate)?;
        d.set_item("fd_estimate", report.fd_estimate)?;
        d.set_item("relative_error", report.relative_error)?;
        Ok(d)
    }
}

/// Gamma function on the positive half-line (and its analytic continuation
/// away from the poles).
#[pyfunction]
#[pyo3(name = "gamma")]
fn gamma_py(x: f64) -> PyResult<f64> {
    fdoc_core::specfun::gamma(x).map_err(value_error)
}

/// Closed-form solution `x(t)` of `D^alpha x = A x(t - h) + w` with zero
/// history and zero initial value.
#[pyfunction]
fn delayed_power_series(
    a: Vec<Vec<f64>>,
    w: Vec<f64>,
    alpha: f64,
    delay: f64,
    t: f64,
) -> PyResult<Vec<f64>> {
    let a = to_matrix(&a, "a")?;
    let w = DVector::from_vec(w);
    let out =
        fdoc_core::specfun::delayed_power_series(&a, &w, alpha, delay, t).map_err(value_error)?;
    Ok(out.iter().copied().collect())
}

/// Fundamental matrix of the pure-delay system `D^alpha x = B x(t - h)` with
/// identity history.
#[pyfunction]
fn pure_delay_fundamental(
    b: Vec<Vec<f64>>,
    alpha: f64,
    delay: f64,
    t: f64,
) -> PyResult<Vec<Vec<f64>>> {
    let b = to_matrix(&b, "b")?;
    let out =
        fdoc_core::specfun::pure_delay_fundamental(&b, alpha, delay, t).map_err(value_error)?;
    Ok(matrix_rows(&out))
}

/// Control-to-state kernel of the forced pure-delay system at offset `tau`
/// (singular at zero).
#[pyfunction]
fn delay_control_kernel(
    a: Vec<Vec<f64>>,
    alpha: f64,
    delay: f64,
    tau: f64,
) -> PyResult<Vec<Vec<f64>>> {
    let a = to_matrix(&a, "a")?;
    let out =
        fdoc_core::specfun::delay_control_kernel(&a, alpha, delay, tau).map_err(value_error)?;
    Ok(matrix_rows(&out))
}

/// Least fixed point of the monotone Picard operator of the singular delayed
/// inequality `b <= base + K (b + b_delayed)`: a node-wise upper bound for
/// every sequence satisfying the inequality.
#[pyfunction]
fn picard_bound(
    base: Vec<f64>,
    factor: Vec<f64>,
    alpha: f64,
    horizon: f64,
    delay: f64,
    nodes_per_delay: usize,
) -> PyResult<Vec<f64>> {
    let grid = Grid::new(horizon, delay, nodes_per_delay).map_err(value_error)?;
    let data = GronwallData { base, factor, alpha };
    fdoc_core::gronwall::picard_bound(&data, &grid).map_err(value_error)
}

#[pymodule]
fn fdoc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<LinearControlProblem>()?;
    m.add_function(wrap_pyfunction!(gamma_py, m)?)?;
    m.add_function(wrap_pyfunction!(delayed_power_series, m)?)?;
    m.add_function(wrap_pyfunction!(pure_delay_fundamental, m)?)?;
    m.add_function(wrap_pyfunction!(delay_control_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(picard_bound, m)?)?;
    Ok(())
}
