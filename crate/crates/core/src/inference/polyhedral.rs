//! Selective intervals conditioned on the OGA selection event.
//!
//! With `P_k` the projection onto the first `k` selected columns and
//! `a_j⁽ᵏ⁾ = (I − P_k)X_j/‖X_j‖`, step `k + 1` chooses `ĵ` with sign `s` exactly
//! when `s·a_ĵᵀY ≥ |a_jᵀY|` for every remaining `j`. Each step therefore
//! contributes the rows `−s·a_ĵ` and `±a_j − s·a_ĵ` of a polytope `{AY ≤ 0}`.
//! Along the line `Y = z + c t` with `c = η/‖η‖²` the polytope is an interval
//! `[𝒱^lo, 𝒱^up]` for `t = ηᵀY`, and `ηᵀY` is truncated normal on it.

use nalgebra::{DMatrix, DVector};

use super::truncnorm::solve_mean;
use super::{Flag, IntervalReport, Method, Side};
use crate::error::{invalid, Result};
use crate::linalg::{select_columns, SpdFactor};
use crate::oga::SelectionResult;

/// Implicit constraint matrix of an OGA selection event.
#[derive(Debug, Clone)]
pub struct SelectionEvent<'a> {
    x: &'a DMatrix<f64>,
    q: DMatrix<f64>,
    /// `XᵀQ`
    xtq: DMatrix<f64>,
    norms: Vec<f64>,
    order: Vec<usize>,
    signs: Vec<f64>,
}

impl<'a> SelectionEvent<'a> {
    pub fn new(x: &'a DMatrix<f64>, sel: &SelectionResult) -> Self {
        Self {
            x,
            xtq: x.tr_mul(&sel.q),
            q: sel.q.clone(),
            norms: x.column_iter().map(|c| c.norm()).collect(),
            order: sel.j_hat.clone(),
            signs: sel.signs(),
        }
    }

    fn competitors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        let chosen = &self.order[..=k];
        (0..self.norms.len()).filter(move |j| self.norms[*j] > 0.0 && !chosen.contains(j))
    }

    /// `A v` without forming `A`.
    pub fn apply(&self, v: &DVector<f64>) -> Vec<f64> {
        let mut cur: Vec<f64> = self.x.tr_mul(v).iter().copied().collect();
        let qv = self.q.tr_mul(v);
        let mut out = Vec::new();
        for (k, &w) in self.order.iter().enumerate() {
            let s = self.signs[k];
            let win = s * cur[w] / self.norms[w];
            out.push(-win);
            for j in self.competitors(k) {
                let a = cur[j] / self.norms[j];
                out.push(a - win);
                out.push(-a - win);
            }
            for (t, c) in cur.iter_mut().enumerate() {
                *c -= self.xtq[(t, k)] * qv[k];
            }
        }
        out
    }

    /// The constraint matrix `A`, one row per inequality, in the order used
    /// by [`apply`](Self::apply).
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.x.nrows();
        let mut rows: Vec<DVector<f64>> = Vec::new();
        for (k, &w) in self.order.iter().enumerate() {
            let qk = self.q.columns(0, k);
            let resid = |j: usize| {
                let col = self.x.column(j);
                (col - qk * qk.tr_mul(&col)) / self.norms[j]
            };
            let win = resid(w) * self.signs[k];
            rows.push(-&win);
            for j in self.competitors(k) {
                let a = resid(j);
                rows.push(&a - &win);
                rows.push(-&a - &win);
            }
        }
        DMatrix::from_fn(rows.len(), n, |i, t| rows[i][t])
    }
}

/// Explicit constraint matrix `A` with `{Y : AY ≤ 0}` the selection event.
pub fn selection_constraints(x: &DMatrix<f64>, sel: &SelectionResult) -> DMatrix<f64> {
    SelectionEvent::new(x, sel).matrix()
}

/// Truncation limits of `t = ηᵀY` along `Y = z + c t`.
pub fn truncation_limits(event: &SelectionEvent<'_>, z: &DVector<f64>, c: &DVector<f64>) -> (f64, f64, bool) {
    let az = event.apply(z);
    let ac = event.apply(c);
    let scale = ac.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut feasible = true;
    for (a, b) in az.iter().zip(&ac) {
        if b.abs() <= 1e-12 * scale {
            if *a > 1e-10 * (1.0 + a.abs()) {
                feasible = false;
            }
        } else if *b > 0.0 {
            hi = hi.min(-a / b);
        } else {
            lo = lo.max(-a / b);
        }
    }
    (lo, hi, feasible)
}

/// Selective interval for column `j` given the OGA selection `sel` on `(X, Y)`
/// and a known noise scale `sigma`.
pub fn ps_interval(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    sel: &SelectionResult,
    j: usize,
    alpha: f64,
    sigma: f64,
    side: Side,
) -> Result<IntervalReport> {
    let Some(pos) = sel.j_hat.iter().position(|&k| k == j) else {
        return invalid(format!("column {j} is not in the selected set"));
    };
    if !(sigma > 0.0) {
        return invalid(format!("sigma must be positive, got {sigma}"));
    }
    let xj = select_columns(x, &sel.j_hat);
    let factor = SpdFactor::new(&xj.tr_mul(&xj))?;
    let mut unit = DVector::zeros(sel.m());
    unit[pos] = 1.0;
    let eta = &xj * factor.solve(&unit);
    let eta_sq = eta.norm_squared();
    let estimate = eta.dot(y);
    let c = &eta / eta_sq;
    let z = y - &c * estimate;

    let event = SelectionEvent::new(x, sel);
    let (mut lo, mut hi, feasible) = truncation_limits(&event, &z, &c);
    let mut report = IntervalReport::new(j, Method::Ps, side, alpha, f64::NAN, f64::NAN);
    let slack = 1e-8 * (1.0 + estimate.abs());
    if !feasible || lo > estimate + slack || hi < estimate - slack {
        report.flag(Flag::InfeasibleTruncation);
        return Ok(report);
    }
    // Keep the estimate strictly inside the truncation interval.
    let margin = 4.0 * f64::EPSILON * (1.0 + estimate.abs());
    if lo >= estimate - margin {
        lo = estimate - margin;
        report.flag(Flag::WidenedTruncation);
    }
    if hi <= estimate + margin {
        hi = estimate + margin;
        report.flag(Flag::WidenedTruncation);
    }

    let sd = sigma * eta_sq.sqrt();
    report.lower = solve_mean(estimate, sd, lo, hi, 1.0 - alpha)?;
    report.upper = match side {
        Side::One => f64::INFINITY,
        Side::Two => solve_mean(estimate, sd, lo, hi, alpha)?,
    };
    Ok(report)
}
