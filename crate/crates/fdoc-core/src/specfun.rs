//! Special functions for linear delay systems of fractional order: the gamma
//! function and the delayed power series that solve them in closed form.
//!
//! For a linear system `D^alpha x(t) = A x(t - h) + w` with zero pre-history
//! and zero initial value the solution is the delayed power series
//!
//! ```text
//! x(t) = sum_{k >= 0} A^k (t - k h)_+^{alpha (k + 1)}
//!        / Gamma(alpha (k + 1) + 1) * w,
//! ```
//!
//! a finite sum for every `t` because `(t - k h)_+` vanishes once `k h >= t`.
//! Two companions cover the homogeneous and the forced parts of pure-delay
//! systems:
//!
//! * the fundamental matrix `X(t) = sum_k B^k (t - k h)_+^(alpha k) /
//!   Gamma(alpha k + 1)` of `D^alpha x(t) = B x(t - h)` with constant unit
//!   history, and
//! * the control kernel `G(tau) = sum_k A^k (tau - k h)_+^(alpha (k + 1) - 1)
//!   / Gamma(alpha (k + 1))`, whose cell-exact antiderivative makes the
//!   response map exact on piecewise-constant inputs.

use nalgebra::{DMatrix, DVector};

use crate::control::ControlSignal;
use crate::error::{Error, Result};
use crate::trajectory::{History, Trajectory};

/// Gamma function on the positive half-line.
///
/// Thin domain-checked wrapper over a Lanczos-type implementation; relative
/// accuracy is far below `1e-12` across the range used by the solvers.
///
/// # Errors
///
/// [`Error::InvalidArgument`] unless `x` is finite and positive.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::invalid(format!(
            "gamma is only evaluated on positive arguments, got {x}"
        )));
    }
    Ok(statrs::function::gamma::gamma(x))
}

fn check_series_args(dim: usize, alpha: f64, delay: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::invalid("matrix dimension must be positive"));
    }
    if !(alpha.is_finite() && alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!(
            "fractional order must lie in (0, 1], got {alpha}"
        )));
    }
    if !(delay.is_finite() && delay > 0.0) {
        return Err(Error::invalid(format!("delay must be positive, got {delay}")));
    }
    Ok(())
}

fn check_square(a: &DMatrix<f64>) -> Result<usize> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::invalid(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

/// Matrix form of the delayed power series:
/// `sum_k A^k (t - k h)_+^(alpha (k + 1)) / Gamma(alpha (k + 1) + 1)`.
///
/// This is also the exact antiderivative of the control kernel
/// ([`delay_control_kernel`]), which is how the response map integrates
/// piecewise-constant inputs without quadrature error.
pub fn delayed_power_series_matrix(
    a: &DMatrix<f64>,
    alpha: f64,
    delay: f64,
    t: f64,
) -> Result<DMatrix<f64>> {
    let dim = check_square(a)?;
    check_series_args(dim, alpha, delay)?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid(format!("time must be non-negative, got {t}")));
    }
    let mut sum = DMatrix::zeros(dim, dim);
    let mut power = DMatrix::identity(dim, dim);
    let mut k = 0usize;
    loop {
        let arg = t - k as f64 * delay;
        if arg <= 0.0 {
            break;
        }
        let exponent = alpha * (k + 1) as f64;
        let coeff = arg.powf(exponent) / gamma(exponent + 1.0)?;
        sum += &power * coeff;
        // Nilpotent matrices terminate the series early.
        power = &power * a;
        if power.amax() == 0.0 {
            break;
        }
        k += 1;
    }
    Ok(sum)
}

/// Closed-form solution `x(t)` of `D^alpha x = A x(t - h) + w` with zero
/// history and zero initial value.
///
/// Evaluates the delayed power series applied to `w`; at `t = 0` the series
/// is empty and the result is the zero vector.
pub fn delayed_power_series(
    a: &DMatrix<f64>,
    w: &DVector<f64>,
    alpha: f64,
    delay: f64,
    t: f64,
) -> Result<DVector<f64>> {
    let dim = check_square(a)?;
    if w.len() != dim {
        return Err(Error::invalid(format!(
            "forcing vector has length {}, matrix is {dim}x{dim}",
            w.len()
        )));
    }
    Ok(delayed_power_series_matrix(a, alpha, delay, t)? * w)
}

/// Fundamental matrix of the pure-delay system `D^alpha x(t) = B x(t - h)`
/// with constant identity history:
/// `X(t) = sum_k B^k (t - k h)_+^(alpha k) / Gamma(alpha k + 1)` for
/// `t >= 0`, and the zero matrix for `t < 0`.
pub fn pure_delay_fundamental(
    b: &DMatrix<f64>,
    alpha: f64,
    delay: f64,
    t: f64,
) -> Result<DMatrix<f64>> {
    let dim = check_square(b)?;
    check_series_args(dim, alpha, delay)?;
    if !t.is_finite() {
        return Err(Error::invalid("time must be finite"));
    }
    if t < 0.0 {
        return Ok(DMatrix::zeros(dim, dim));
    }
    let mut sum = DMatrix::identity(dim, dim);
    let mut power = DMatrix::identity(dim, dim);
    let mut k = 1usize;
    loop {
        let arg = t - k as f64 * delay;
        if arg < 0.0 {
            break;
        }
        power = &power * b;
        if power.amax() == 0.0 {
            break;
        }
        let exponent = alpha * k as f64;
        // 0^0 = 1 keeps the node t = k h exact.
        let coeff = if arg == 0.0 && exponent == 0.0 {
            1.0
        } else {
            arg.powf(exponent) / gamma(exponent + 1.0)?
        };
        sum += &power * coeff;
        k += 1;
    }
    Ok(sum)
}

/// Control kernel of the linear delayed response,
/// `G(tau) = sum_k A^k (tau - k h)_+^(alpha (k + 1) - 1) /
/// Gamma(alpha (k + 1))`.
///
/// # Errors
///
/// [`Error::SingularPoint`] at `tau = 0` (the leading term behaves like
/// `tau^(alpha - 1)`), [`Error::InvalidArgument`] for negative `tau`.
pub fn delay_control_kernel(
    a: &DMatrix<f64>,
    alpha: f64,
    delay: f64,
    tau: f64,
) -> Result<DMatrix<f64>> {
    let dim = check_square(a)?;
    check_series_args(dim, alpha, delay)?;
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::invalid(format!("tau must be non-negative, got {tau}")));
    }
    if tau == 0.0 {
        return Err(Error::SingularPoint { tau });
    }
    let mut sum = DMatrix::zeros(dim, dim);
    let mut power = DMatrix::identity(dim, dim);
    let mut k = 0usize;
    loop {
        let arg = tau - k as f64 * delay;
        if arg <= 0.0 {
            break;
        }
        let exponent = alpha * (k + 1) as f64 - 1.0;
        let coeff = arg.powf(exponent) / gamma(alpha * (k + 1) as f64)?;
        sum += &power * coeff;
        power = &power * a;
        if power.amax() == 0.0 {
            break;
        }
        k += 1;
    }
    Ok(sum)
}

/// Response of the linear delayed system `D^alpha y = A y(t - h) + C u(t)`
/// (zero history, zero initial value) to a piecewise-constant control.
///
/// Integrates the control kernel exactly on every cell via its closed-form
/// antiderivative, so the map is exact (up to rounding) whenever `u` is
/// piecewise constant on the grid:
/// `y(t_n) = sum_{j < n} [Ghat(t_n - t_j) - Ghat(t_n - t_{j+1})] C u_j`.
pub fn linear_pure_delay_response(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    u: &ControlSignal,
    alpha: f64,
    delay: f64,
) -> Result<Trajectory> {
    let dim = check_square(a)?;
    check_series_args(dim, alpha, delay)?;
    if c.nrows() != dim {
        return Err(Error::invalid(format!(
            "input matrix has {} rows, state dimension is {dim}",
            c.nrows()
        )));
    }
    if c.ncols() != u.dim() {
        return Err(Error::GridMismatch(format!(
            "input matrix has {} columns, control dimension is {}",
            c.ncols(),
            u.dim()
        )));
    }
    let grid = *u.grid();
    if (grid.delay() - delay).abs() > 1e-12 * delay.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "control grid delay {} differs from requested delay {delay}",
            grid.delay()
        )));
    }
    let n = grid.node_count();
    // Antiderivative values Ghat(t_i) at every node offset, computed once.
    let mut primitive = Vec::with_capacity(n + 1);
    for i in 0..=n {
        primitive.push(delayed_power_series_matrix(a, alpha, delay, grid.node(i))?);
    }
    let mut values = Vec::with_capacity(n + 1);
    values.push(DVector::zeros(dim));
    for i in 1..=n {
        let mut y = DVector::zeros(dim);
        for j in 0..i {
            let cell = &primitive[i - j] - &primitive[i - j - 1];
            y += cell * (c * u.node_value(j));
        }
        values.push(y);
    }
    Trajectory::new(grid, values, History::Zero)
}
