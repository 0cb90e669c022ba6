//! JSON problem configurations for the linear family.
//!
//! The driver deliberately restricts itself to problems of the form
//!
//! ```text
//! dynamics / kernel:  A_state y(t) + A_delay y(t - h) + B_control u(t)
//! running cost:       c_y . y(t) + c_yh . y(t - h) + control cost
//! ```
//!
//! which covers the bundled worked example and everything the file formats
//! need to express; fully general nonlinear callbacks stay a library-level
//! concern.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use fdoc_core::control::ControlSet;
use fdoc_core::linear::{ControlCost, LinearProblem};
use fdoc_core::problem::Problem;

/// A configuration field failed validation; `path` names the offending key.
#[derive(Debug, thiserror::Error)]
#[error("config error at `{path}`: {reason}")]
pub struct ConfigError {
    pub path: String,
    pub reason: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, reason: impl Into<String>) -> ConfigError {
        ConfigError { path: path.into(), reason: reason.into() }
    }
}

/// Problem class selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Fdde,
    Vide,
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Kind::Fdde => "fdde",
            Kind::Vide => "vide",
        })
    }
}

/// Control term of the running cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlCostConfig {
    /// `weight * sum_i u_i`.
    Linear { weight: f64 },
    /// `weight * sum_i u_i^2` with `weight >= 0`.
    Quadratic { weight: f64 },
}

/// Admissible control set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlSetConfig {
    /// Coordinate box `[lo_1, hi_1] x .. x [lo_m, hi_m]`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Finite set of admissible control vectors.
    Finite { points: Vec<Vec<f64>> },
}

/// One linear delay problem of either class, as read from a JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearProblemConfig {
    pub kind: Kind,
    pub alpha: f64,
    pub delay: f64,
    pub horizon: f64,
    pub nodes_per_delay: usize,
    pub state_dim: usize,
    /// `A_state`, row-major (`state_dim` x `state_dim`).
    pub a_state: Vec<Vec<f64>>,
    /// `A_delay`, row-major (`state_dim` x `state_dim`).
    pub a_delay: Vec<Vec<f64>>,
    /// `B_control`, row-major (`state_dim` x control dimension).
    pub b_control: Vec<Vec<f64>>,
    /// Cost row against the current state.
    pub c_y: Vec<f64>,
    /// Cost row against the delayed state.
    pub c_yh: Vec<f64>,
    pub control_cost: ControlCostConfig,
    pub control_set: ControlSetConfig,
    /// Constant pre-history vector (differential class; zero when absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<Vec<f64>>,
    /// Forcing polynomial coefficients per state component, lowest degree
    /// first (integral class; zero when absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<Vec<f64>>>,
    /// Constant control used by the plain solve and certificate commands;
    /// defaults to the projection of the origin onto the admissible set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<Vec<f64>>,
}

fn matrix_from_rows(
    path: &str,
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
) -> Result<DMatrix<f64>, ConfigError> {
    if rows.len() != nrows {
        return Err(ConfigError::new(
            path,
            format!("expected {nrows} rows, got {}", rows.len()),
        ));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(ConfigError::new(
                format!("{path}[{i}]"),
                format!("expected {ncols} entries, got {}", row.len()),
            ));
        }
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn vector_from(path: &str, values: &[f64], len: usize) -> Result<DVector<f64>, ConfigError> {
    if values.len() != len {
        return Err(ConfigError::new(
            path,
            format!("expected {len} entries, got {}", values.len()),
        ));
    }
    Ok(DVector::from_row_slice(values))
}

impl LinearProblemConfig {
    /// Parses a JSON document.
    pub fn from_json(text: &str) -> Result<LinearProblemConfig, ConfigError> {
        serde_json::from_str(text)
            .map_err(|e| ConfigError::new("<document>", e.to_string()))
    }

    /// Canonical JSON emission (field order fixed by the struct).
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }

    fn control_set(&self) -> Result<ControlSet, ConfigError> {
        let set = match &self.control_set {
            ControlSetConfig::Box { lo, hi } => ControlSet::Box {
                lo: DVector::from_row_slice(lo),
                hi: DVector::from_row_slice(hi),
            },
            ControlSetConfig::Finite { points } => ControlSet::Finite {
                points: points.iter().map(|p| DVector::from_row_slice(p)).collect(),
            },
        };
        set.validate()
            .map_err(|e| ConfigError::new("control_set", e.to_string()))?;
        Ok(set)
    }

    /// Validates all fields and assembles the coefficient bundle.
    pub fn to_linear(&self) -> Result<LinearProblem, ConfigError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ConfigError::new(
                "alpha",
                format!("alpha out of (0,1): {}", self.alpha),
            ));
        }
        if !(self.delay > 0.0) {
            return Err(ConfigError::new("delay", "delay must be positive"));
        }
        if !(self.horizon > 0.0) {
            return Err(ConfigError::new("horizon", "horizon must be positive"));
        }
        if self.nodes_per_delay == 0 {
            return Err(ConfigError::new(
                "nodes_per_delay",
                "at least one node per delay interval is required",
            ));
        }
        let n = self.state_dim;
        if n == 0 {
            return Err(ConfigError::new("state_dim", "state dimension must be positive"));
        }
        let set = self.control_set()?;
        let m = set.dim();
        if let ControlCostConfig::Quadratic { weight } = self.control_cost {
            if !(weight >= 0.0) {
                return Err(ConfigError::new(
                    "control_cost.weight",
                    "quadratic weight must be non-negative",
                ));
            }
        }
        let state_matrix = matrix_from_rows("a_state", &self.a_state, n, n)?;
        let delay_matrix = matrix_from_rows("a_delay", &self.a_delay, n, n)?;
        let control_matrix = matrix_from_rows("b_control", &self.b_control, n, m)?;
        let cost_state = vector_from("c_y", &self.c_y, n)?;
        let cost_delayed = vector_from("c_yh", &self.c_yh, n)?;
        let history = match &self.history {
            Some(h) => Some(vector_from("history", h, n)?),
            None => None,
        };
        if let Some(eta) = &self.eta {
            if eta.len() != n {
                return Err(ConfigError::new(
                    "eta",
                    format!("expected {n} coefficient lists, got {}", eta.len()),
                ));
            }
        }
        if let Some(control) = &self.control {
            let v = vector_from("control", control, m)?;
            if !set.contains(&v, 1e-9) {
                return Err(ConfigError::new(
                    "control",
                    "constant control is not in the admissible set",
                ));
            }
        }
        Ok(LinearProblem {
            alpha: self.alpha,
            horizon: self.horizon,
            delay: self.delay,
            state_matrix,
            delay_matrix,
            control_matrix,
            cost_state,
            cost_delayed,
            control_cost: match self.control_cost {
                ControlCostConfig::Linear { weight } => ControlCost::Linear { weight },
                ControlCostConfig::Quadratic { weight } => ControlCost::Quadratic { weight },
            },
            control_set: set,
            history,
            eta_coefficients: self.eta.clone(),
        })
    }

    /// Builds the problem of the configured class.
    pub fn load_problem(&self) -> Result<Problem, ConfigError> {
        let linear = self.to_linear()?;
        match self.kind {
            Kind::Fdde => linear
                .fdde()
                .map(Problem::Fdde)
                .map_err(|e| ConfigError::new("<problem>", e.to_string())),
            Kind::Vide => linear
                .vide()
                .map(Problem::Vide)
                .map_err(|e| ConfigError::new("<problem>", e.to_string())),
        }
    }

    /// Canonical config for a coefficient bundle (inverse of [`to_linear`]
    /// up to the optional constant-control field).
    ///
    /// [`to_linear`]: LinearProblemConfig::to_linear
    pub fn from_linear(kind: Kind, nodes_per_delay: usize, lp: &LinearProblem) -> Self {
        let n = lp.state_matrix.nrows();
        let rows = |mat: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..mat.nrows())
                .map(|i| (0..mat.ncols()).map(|j| mat[(i, j)]).collect())
                .collect()
        };
        LinearProblemConfig {
            kind,
            alpha: lp.alpha,
            delay: lp.delay,
            horizon: lp.horizon,
            nodes_per_delay,
            state_dim: n,
            a_state: rows(&lp.state_matrix),
            a_delay: rows(&lp.delay_matrix),
            b_control: rows(&lp.control_matrix),
            c_y: lp.cost_state.iter().copied().collect(),
            c_yh: lp.cost_delayed.iter().copied().collect(),
            control_cost: match lp.control_cost {
                ControlCost::Linear { weight } => ControlCostConfig::Linear { weight },
                ControlCost::Quadratic { weight } => ControlCostConfig::Quadratic { weight },
            },
            control_set: match &lp.control_set {
                ControlSet::Box { lo, hi } => ControlSetConfig::Box {
                    lo: lo.iter().copied().collect(),
                    hi: hi.iter().copied().collect(),
                },
                ControlSet::Finite { points } => ControlSetConfig::Finite {
                    points: points.iter().map(|p| p.iter().copied().collect()).collect(),
                },
            },
            history: lp.history.as_ref().map(|h| h.iter().copied().collect()),
            eta: lp.eta_coefficients.clone(),
            control: None,
        }
    }
}
