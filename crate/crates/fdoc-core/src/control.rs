//! Admissible control sets and node-sampled control signals.
//!
//! Two admissible-set shapes cover every use in this crate: coordinate boxes
//! `[lo_1, hi_1] x .. x [lo_m, hi_m]` and finite point sets. Projection onto
//! a box clamps componentwise; projection onto a finite set picks the nearest
//! point in Euclidean distance, breaking exact ties by the lexicographically
//! smallest point so the map is deterministic.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Absolute tolerance used when checking membership of computed controls.
const MEMBERSHIP_ATOL: f64 = 1e-9;

/// An admissible control set.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlSet {
    /// Coordinate box `{ u : lo <= u <= hi }` (componentwise).
    Box { lo: DVector<f64>, hi: DVector<f64> },
    /// Finite set of admissible points.
    Finite { points: Vec<DVector<f64>> },
}

/// Lexicographic order on vectors of equal length.
pub(crate) fn lex_less(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

impl ControlSet {
    /// Scalar interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> ControlSet {
        ControlSet::Box {
            lo: DVector::from_element(1, lo),
            hi: DVector::from_element(1, hi),
        }
    }

    /// Singleton set `{point}`.
    pub fn singleton(point: DVector<f64>) -> ControlSet {
        ControlSet::Finite { points: vec![point] }
    }

    /// Validates shapes: box bounds of equal length with `lo <= hi`, finite
    /// sets non-empty with equal-length points.
    pub fn validate(&self) -> Result<()> {
        match self {
            ControlSet::Box { lo, hi } => {
                if lo.len() == 0 || lo.len() != hi.len() {
                    return Err(Error::invalid("box bounds must be non-empty and equal length"));
                }
                if lo.iter().zip(hi.iter()).any(|(a, b)| !(a <= b)) {
                    return Err(Error::invalid("box bounds must satisfy lo <= hi"));
                }
                Ok(())
            }
            ControlSet::Finite { points } => {
                let Some(first) = points.first() else {
                    return Err(Error::invalid("finite control set must be non-empty"));
                };
                if first.len() == 0 || points.iter().any(|p| p.len() != first.len()) {
                    return Err(Error::invalid("finite control points must have equal positive length"));
                }
                Ok(())
            }
        }
    }

    /// Dimension of the control values.
    pub fn dim(&self) -> usize {
        match self {
            ControlSet::Box { lo, .. } => lo.len(),
            ControlSet::Finite { points } => points[0].len(),
        }
    }

    /// Projects `v` onto the set.
    ///
    /// Boxes clamp componentwise. Finite sets return the point of smallest
    /// Euclidean distance; exact distance ties resolve to the
    /// lexicographically smallest point. The projection is idempotent and
    /// fixes every admissible point.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            ControlSet::Box { lo, hi } => {
                DVector::from_fn(lo.len(), |i, _| v[i].max(lo[i]).min(hi[i]))
            }
            ControlSet::Finite { points } => {
                let mut best = &points[0];
                let mut best_d = (v - best).norm_squared();
                for p in &points[1..] {
                    let d = (v - p).norm_squared();
                    if d < best_d || (d == best_d && lex_less(p, best)) {
                        best = p;
                        best_d = d;
                    }
                }
                best.clone()
            }
        }
    }

    /// True when `v` belongs to the set within absolute tolerance `tol`
    /// (componentwise for boxes, sup-norm for finite sets).
    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        if v.len() != self.dim() {
            return false;
        }
        match self {
            ControlSet::Box { lo, hi } => (0..lo.len())
                .all(|i| v[i] >= lo[i] - tol && v[i] <= hi[i] + tol),
            ControlSet::Finite { points } => points
                .iter()
                .any(|p| (0..p.len()).all(|i| (v[i] - p[i]).abs() <= tol)),
        }
    }
}

/// A control signal sampled at the grid nodes `t_0..=t_N` and interpreted as
/// piecewise constant from the left node of each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    grid: Grid,
    values: Vec<DVector<f64>>,
}

impl ControlSignal {
    /// Wraps node values after checking one value per node, equal dimensions,
    /// and admissibility of every value in `set` (tolerance `1e-9`).
    pub fn new(grid: Grid, values: Vec<DVector<f64>>, set: &ControlSet) -> Result<ControlSignal> {
        if values.len() != grid.node_count() + 1 {
            return Err(Error::invalid(format!(
                "expected {} control samples, got {}",
                grid.node_count() + 1,
                values.len()
            )));
        }
        for (j, v) in values.iter().enumerate() {
            if v.len() != set.dim() {
                return Err(Error::invalid(format!(
                    "control sample {j} has dimension {}, set has {}",
                    v.len(),
                    set.dim()
                )));
            }
            if !set.contains(v, MEMBERSHIP_ATOL) {
                return Err(Error::invalid(format!(
                    "control sample {j} (t = {}) is not admissible",
                    grid.node(j)
                )));
            }
        }
        Ok(ControlSignal { grid, values })
    }

    /// Constant signal `u(t) = value`.
    pub fn constant(grid: Grid, value: DVector<f64>, set: &ControlSet) -> Result<ControlSignal> {
        let values = vec![value; grid.node_count() + 1];
        ControlSignal::new(grid, values, set)
    }

    /// Samples `f(t_j)` at every node.
    pub fn from_fn(
        grid: Grid,
        set: &ControlSet,
        f: impl Fn(f64) -> DVector<f64>,
    ) -> Result<ControlSignal> {
        let values = (0..=grid.node_count()).map(|j| f(grid.node(j))).collect();
        ControlSignal::new(grid, values, set)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    /// Value at node `j`.
    pub fn node_value(&self, j: usize) -> &DVector<f64> {
        &self.values[j]
    }

    /// All node values.
    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    /// Piecewise-constant evaluation: the value of the cell containing `t`
    /// (left-continuous at interior nodes, clamped to `[0, T]`).
    pub fn eval(&self, t: f64) -> &DVector<f64> {
        let n = self.grid.node_count();
        let j = ((t / self.grid.step() + 1e-9).floor() as isize).clamp(0, n as isize) as usize;
        &self.values[j]
    }

    /// Largest sup-norm difference over nodes against another signal.
    pub fn sup_distance(&self, other: &ControlSignal) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }
}
