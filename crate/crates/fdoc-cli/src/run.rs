//! Command implementations: problem loading, solves, sweeps, certificates,
//! kernel tables, and the deterministic CSV/JSON writers they share.

use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::Serialize;

use fdoc_core::adjoint::AdjointOptions;
use fdoc_core::control::ControlSignal;
use fdoc_core::error::Error;
use fdoc_core::fdde::SolverOptions;
use fdoc_core::grid::Grid;
use fdoc_core::linear::double_integrator_example;
use fdoc_core::pmp::{
    forward_backward_sweep, hamiltonian_fdde, hamiltonian_vide, pmp_residual, solve_costate,
    solve_state, ArgmaxParams, PmpReport, SweepParams,
};
use fdoc_core::problem::Problem;
use fdoc_core::specfun::{delay_control_kernel, pure_delay_fundamental};
use fdoc_core::trajectory::{AdjointTrajectory, Trajectory};

use crate::config::{ConfigError, Kind, LinearProblemConfig};

/// Driver-level error carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Solver(#[from] Error),
    #[error("{0}")]
    Io(#[from] io::Error),
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical or I/O failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 3,
        }
    }
}

/// Everything a command needs after configuration loading.
pub struct Context {
    pub config: LinearProblemConfig,
    pub problem: Problem,
    pub grid: Grid,
    pub out: PathBuf,
}

impl Context {
    /// Loads the configuration (or falls back to the bundled example of the
    /// given class), applies the resolution override, and builds the problem.
    pub fn build(
        config_path: Option<&Path>,
        nodes_per_delay: Option<usize>,
        out: &Path,
        default_kind: Kind,
    ) -> Result<Context, CliError> {
        let mut config = match config_path {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| ConfigError {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                })?;
                LinearProblemConfig::from_json(&text)?
            }
            None => LinearProblemConfig::from_linear(
                default_kind,
                128,
                &double_integrator_example(),
            ),
        };
        if let Some(npd) = nodes_per_delay {
            config.nodes_per_delay = npd;
        }
        let problem = config.load_problem()?;
        let grid = Grid::new(config.horizon, config.delay, config.nodes_per_delay)
            .map_err(|e| ConfigError {
                path: "horizon".into(),
                reason: e.to_string(),
            })?;
        fs::create_dir_all(out)?;
        Ok(Context { config, problem, grid, out: out.to_path_buf() })
    }

    /// The configured constant control, defaulting to the projection of the
    /// origin onto the admissible set.
    pub fn constant_control(&self) -> Result<ControlSignal, CliError> {
        let set = self.problem.control_set().clone();
        let value = match &self.config.control {
            Some(v) => DVector::from_row_slice(v),
            None => set.project(&DVector::zeros(set.dim())),
        };
        Ok(ControlSignal::constant(self.grid, value, &set)?)
    }

    /// Fails unless the configured class matches the subcommand.
    pub fn expect_kind(&self, kind: Kind) -> Result<(), CliError> {
        if self.config.kind != kind {
            return Err(ConfigError {
                path: "kind".into(),
                reason: format!("this subcommand requires kind `{kind}`"),
            }
            .into());
        }
        Ok(())
    }
}

/// A solved-and-certified run: everything one CSV row per node needs.
pub struct Solution {
    pub grid: Grid,
    pub state: Trajectory,
    pub control: ControlSignal,
    pub adjoint: AdjointTrajectory,
    pub hamiltonian: Vec<f64>,
    pub report: PmpReport,
}

/// Hamiltonian values along a trajectory/costate pair at every node.
pub fn hamiltonian_rows(
    problem: &Problem,
    psi: &AdjointTrajectory,
    y: &Trajectory,
    u: &ControlSignal,
    grid: &Grid,
) -> Result<Vec<f64>, Error> {
    (0..=grid.node_count())
        .map(|j| {
            let t = grid.node(j);
            match problem {
                Problem::Fdde(p) => hamiltonian_fdde(p, psi, y, t, u.node_value(j)),
                Problem::Vide(p) => hamiltonian_vide(p, psi, y, t, u.node_value(j), grid),
            }
        })
        .collect()
}

/// Solves the state, the costate, and the certificate along a fixed control.
pub fn certify(
    problem: &Problem,
    grid: &Grid,
    u: &ControlSignal,
    solver: &SolverOptions,
    adjoint: &AdjointOptions,
) -> Result<Solution, CliError> {
    let state = solve_state(problem, u, grid, solver)?;
    let costate = solve_costate(problem, &state, u, grid, adjoint)?;
    let report = pmp_residual(
        problem,
        &state,
        u,
        &costate,
        problem.control_set(),
        &ArgmaxParams::default(),
    )?;
    let hamiltonian = hamiltonian_rows(problem, &costate, &state, u, grid)?;
    Ok(Solution {
        grid: *grid,
        state,
        control: u.clone(),
        adjoint: costate,
        hamiltonian,
        report,
    })
}

/// Writes the unified per-node table `t,y*,u*,psi*,hamiltonian,residual`.
///
/// Every number is printed as `{:.16e}` (17 significant digits), which makes
/// repeated runs byte-identical.
pub fn write_solution_csv(path: &Path, s: &Solution) -> io::Result<()> {
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    let n = s.state.dim();
    let m = s.control.node_value(0).len();
    write!(w, "t")?;
    for i in 1..=n {
        write!(w, ",y{i}")?;
    }
    for i in 1..=m {
        write!(w, ",u{i}")?;
    }
    for i in 1..=n {
        write!(w, ",psi{i}")?;
    }
    writeln!(w, ",hamiltonian,residual")?;
    for j in 0..=s.grid.node_count() {
        write!(w, "{:.16e}", s.grid.node(j))?;
        for v in s.state.node_value(j).iter() {
            write!(w, ",{v:.16e}")?;
        }
        for v in s.control.node_value(j).iter() {
            write!(w, ",{v:.16e}")?;
        }
        for v in s.adjoint.node_value(j).iter() {
            write!(w, ",{v:.16e}")?;
        }
        writeln!(w, ",{:.16e},{:.16e}", s.hamiltonian[j], s.report.residuals[j])?;
    }
    w.flush()
}

/// Serializes a report as pretty JSON with a trailing newline.
pub fn write_report<T: Serialize>(path: &Path, report: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    fs::write(path, text)
}

#[derive(Serialize)]
struct SolveReport {
    command: String,
    kind: String,
    nodes_per_delay: usize,
    node_count: usize,
    objective: f64,
    residual_max: f64,
    residual_l1: f64,
}

/// `solve-fdde` / `solve-vide`: march the state along the configured constant
/// control, certify it, and write `solution.csv` + `report.json`.
pub fn cmd_solve(ctx: &Context, kind: Kind) -> Result<(), CliError> {
    ctx.expect_kind(kind)?;
    let u = ctx.constant_control()?;
    let solution = certify(
        &ctx.problem,
        &ctx.grid,
        &u,
        &SolverOptions::default(),
        &AdjointOptions::default(),
    )?;
    write_solution_csv(&ctx.out.join("solution.csv"), &solution)?;
    write_report(
        &ctx.out.join("report.json"),
        &SolveReport {
            command: format!("solve-{kind}"),
            kind: kind.to_string(),
            nodes_per_delay: ctx.grid.delay_index(),
            node_count: ctx.grid.node_count(),
            objective: solution.report.objective,
            residual_max: solution.report.max_residual,
            residual_l1: solution.report.l1_residual,
        },
    )?;
    Ok(())
}

/// `check-pmp`: certificate only (solves state and costate along the
/// configured control and reports the residuals).
pub fn cmd_check_pmp(ctx: &Context) -> Result<(), CliError> {
    let u = ctx.constant_control()?;
    let solution = certify(
        &ctx.problem,
        &ctx.grid,
        &u,
        &SolverOptions::default(),
        &AdjointOptions::default(),
    )?;
    write_solution_csv(&ctx.out.join("solution.csv"), &solution)?;
    write_report(
        &ctx.out.join("report.json"),
        &SolveReport {
            command: "check-pmp".into(),
            kind: ctx.config.kind.to_string(),
            nodes_per_delay: ctx.grid.delay_index(),
            node_count: ctx.grid.node_count(),
            objective: solution.report.objective,
            residual_max: solution.report.max_residual,
            residual_l1: solution.report.l1_residual,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct SweepReport {
    command: String,
    kind: String,
    nodes_per_delay: usize,
    node_count: usize,
    converged: bool,
    iterations: usize,
    last_change: f64,
    objective: f64,
    residual_max: f64,
    residual_l1: f64,
}

/// `sweep`: relaxed forward–backward iteration from the configured constant
/// control. On a exhausted iteration budget the last iterate is still
/// written before the command exits with code 3.
pub fn cmd_sweep(
    ctx: &Context,
    tol: f64,
    max_iter: usize,
    beta: f64,
) -> Result<(), CliError> {
    let u0 = ctx.constant_control()?;
    let params = SweepParams {
        relaxation: beta,
        tolerance: tol,
        max_iterations: max_iter,
        ..SweepParams::default()
    };
    let (output, failure) = match forward_backward_sweep(&ctx.problem, &u0, &params) {
        Ok(output) => (output, None),
        Err(Error::NotConverged { max_iterations, last_change, last, changes }) => {
            (*last.clone(), Some(Error::NotConverged { max_iterations, last_change, last, changes }))
        }
        Err(e) => return Err(e.into()),
    };
    let hamiltonian =
        hamiltonian_rows(&ctx.problem, &output.adjoint, &output.state, &output.control, &ctx.grid)?;
    let solution = Solution {
        grid: ctx.grid,
        state: output.state,
        control: output.control,
        adjoint: output.adjoint,
        hamiltonian,
        report: output.report,
    };
    write_solution_csv(&ctx.out.join("solution.csv"), &solution)?;
    write_report(
        &ctx.out.join("report.json"),
        &SweepReport {
            command: "sweep".into(),
            kind: ctx.config.kind.to_string(),
            nodes_per_delay: ctx.grid.delay_index(),
            node_count: ctx.grid.node_count(),
            converged: failure.is_none(),
            iterations: output.iterations,
            last_change: output.changes.last().copied().unwrap_or(0.0),
            objective: solution.report.objective,
            residual_max: solution.report.max_residual,
            residual_l1: solution.report.l1_residual,
        },
    )?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

/// `kernels`: tabulates the pure-delay fundamental matrix and the delayed
/// control kernel of the configured delayed coupling matrix on the grid.
/// The kernel table starts at the first positive node (the kernel is
/// unbounded at zero).
pub fn cmd_kernels(ctx: &Context) -> Result<(), CliError> {
    let linear = ctx.config.to_linear()?;
    let a = &linear.delay_matrix;
    let n = a.nrows();
    let grid = &ctx.grid;

    let path = ctx.out.join("fundamental.csv");
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    write!(w, "t")?;
    for i in 1..=n {
        for j in 1..=n {
            write!(w, ",x{i}_{j}")?;
        }
    }
    writeln!(w)?;
    for node in 0..=grid.node_count() {
        let t = grid.node(node);
        let x = pure_delay_fundamental(a, linear.alpha, linear.delay, t)?;
        write!(w, "{t:.16e}")?;
        for i in 0..n {
            for j in 0..n {
                write!(w, ",{:.16e}", x[(i, j)])?;
            }
        }
        writeln!(w)?;
    }
    w.flush()?;

    let path = ctx.out.join("control_kernel.csv");
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    write!(w, "tau")?;
    for i in 1..=n {
        for j in 1..=n {
            write!(w, ",g{i}_{j}")?;
        }
    }
    writeln!(w)?;
    for node in 1..=grid.node_count() {
        let tau = grid.node(node);
        let g = delay_control_kernel(a, linear.alpha, linear.delay, tau)?;
        write!(w, "{tau:.16e}")?;
        for i in 0..n {
            for j in 0..n {
                write!(w, ",{:.16e}", g[(i, j)])?;
            }
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
