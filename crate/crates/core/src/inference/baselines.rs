//! Intervals that ignore the selection step.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::covariance::CovEstimate;
use super::{z_quantile, IntervalReport, Method, Side};
use crate::error::{invalid, Error, Result};
use crate::iv::IvEstimate;
use crate::linalg::{ols, select_columns};

fn bounds(centre: f64, half: f64, side: Side) -> (f64, f64) {
    match side {
        Side::One => (centre - half, f64::INFINITY),
        Side::Two => (centre - half, centre + half),
    }
}

/// Classical t interval from least squares on the selected columns.
pub fn t_interval(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    j_hat: &[usize],
    j: usize,
    alpha: f64,
    side: Side,
) -> Result<IntervalReport> {
    let Some(pos) = j_hat.iter().position(|&k| k == j) else {
        return invalid(format!("column {j} is not in the selected set"));
    };
    let (n, m) = (x.nrows(), j_hat.len());
    if m >= n {
        return invalid(format!("|J| = {m} leaves no residual degrees of freedom for n = {n}"));
    }
    let fit = ols(&select_columns(x, j_hat), y)?;
    let df = (n - m) as f64;
    let s = (fit.residuals.norm_squared() / df).sqrt();
    let t = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidConfig(e.to_string()))?.inverse_cdf(1.0 - alpha);
    let (lower, upper) = bounds(fit.coef[pos], t * s * fit.gram_inv[(pos, pos)].sqrt(), side);
    Ok(IntervalReport::new(j, Method::T, side, alpha, lower, upper))
}

/// Normal interval `β̃⁰_j ∓ z_{1−α}√(V_jj/n)` from the projected estimator.
pub fn iv_interval(est: &IvEstimate, cov: &CovEstimate, j: usize, alpha: f64, side: Side) -> Result<IntervalReport> {
    let Some(pos) = est.position(j) else {
        return invalid(format!("column {j} is not in the selected set"));
    };
    let se = cov.std_error(pos);
    if !se.is_finite() {
        return Err(Error::NonFinite("variance estimate"));
    }
    let (lower, upper) = bounds(est.beta_tilde[pos], z_quantile(1.0 - alpha) * se, side);
    Ok(IntervalReport::new(j, Method::Iv, side, alpha, lower, upper))
}
