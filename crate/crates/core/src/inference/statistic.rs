//! Studentised statistics for `H₀: β_j = θ` that include the selection step.
//!
//! [`test_statistic`] runs selection, factor estimation and the projected
//! estimator from scratch. [`StatisticEngine`] evaluates the same statistic
//! on the resampled responses `Ŷ⁽ᵇ⁾(j,θ) = X_Ĵβ̃_Ĵ + w⁽ᵇ⁾ + (θ − β̃_Ĵ,j)X_j`,
//! which share the design `X`, using precomputed cross products.

use nalgebra::{DMatrix, DVector};

use super::covariance::{covariance, quadratic_form, CovMode};
use super::Side;
use crate::error::{invalid, Result};
use crate::factor::estimate_factors;
use crate::iv::{iv_estimate, IvEstimate};
use crate::linalg::{select_columns, SpdFactor};
use crate::oga::{self, GramOga};
use crate::resample::ResampleSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatisticConfig {
    pub kmax: usize,
    pub cov_mode: CovMode,
}

impl Default for StatisticConfig {
    fn default() -> Self {
        Self { kmax: 5, cov_mode: CovMode::default() }
    }
}

/// Value returned when `j` is not selected.
pub fn sentinel(side: Side) -> f64 {
    match side {
        Side::One => f64::NEG_INFINITY,
        Side::Two => 0.0,
    }
}

/// `T_j = (β̃⁰_j − θ)/√(V_jj/n)` after selecting on `(X, Y)`; the absolute value
/// for two-sided tests.
pub fn test_statistic(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    j: usize,
    theta: f64,
    cfg: &StatisticConfig,
    side: Side,
) -> Result<f64> {
    let sel = oga::select(x, y)?;
    let Some(pos) = sel.j_hat.iter().position(|&k| k == j) else {
        return Ok(sentinel(side));
    };
    let (n, p) = x.shape();
    let f = estimate_factors(x, cfg.kmax.min(n).min(p))?;
    let est = iv_estimate(x, y, &sel.j_hat, &f.f_hat)?;
    let cov = covariance(&est, cfg.cov_mode)?;
    let t = (est.beta_tilde[pos] - theta) / cov.std_error(pos);
    Ok(match side {
        Side::One => t,
        Side::Two => t.abs(),
    })
}

/// Per-resample cross products that do not depend on `j` or `θ`.
#[derive(Debug, Clone)]
struct Draw {
    base: DVector<f64>,
    /// `Xᵀ base`
    c: Vec<f64>,
    /// `X̃ᵀ base`
    ct: Vec<f64>,
    base_sq: f64,
}

/// Signed statistic of a response together with the selected-set size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub beta: f64,
    pub std_error: f64,
}

impl Evaluation {
    pub fn statistic(&self, theta: f64) -> f64 {
        (self.beta - theta) / self.std_error
    }
}

/// Fast evaluation of the statistic over many resampled responses.
#[derive(Debug, Clone)]
pub struct StatisticEngine<'a> {
    x: &'a DMatrix<f64>,
    x_tilde: &'a DMatrix<f64>,
    oga: GramOga,
    gram_t: DMatrix<f64>,
    mode: CovMode,
    draws: Vec<Draw>,
    centre: DVector<f64>,
    j_hat: Vec<usize>,
    observed: IvEstimate,
    observed_se: Vec<f64>,
}

impl<'a> StatisticEngine<'a> {
    /// `x_tilde` is `(I − P_F̂)X`; `observed` is the projected estimate on the
    /// original response for the selected set, with covariance mode `mode`.
    pub fn new(
        x: &'a DMatrix<f64>,
        x_tilde: &'a DMatrix<f64>,
        observed: IvEstimate,
        rs: &ResampleSet,
        mode: CovMode,
    ) -> Result<Self> {
        if observed.j != rs.j_hat {
            return invalid("the observed estimate and the resample set use different selections");
        }
        let cov = covariance(&observed, mode)?;
        let observed_se = (0..observed.j.len()).map(|k| cov.std_error(k)).collect();
        let oga = GramOga::new(x);
        let gram_t = x_tilde.tr_mul(x_tilde);
        let fitted = select_columns(x, &rs.j_hat) * &rs.beta_tilde;
        let draws = rs
            .w_b
            .iter()
            .map(|w| {
                let base = &fitted + w;
                Draw {
                    c: x.tr_mul(&base).iter().copied().collect(),
                    ct: x_tilde.tr_mul(&base).iter().copied().collect(),
                    base_sq: base.norm_squared(),
                    base,
                }
            })
            .collect();
        Ok(Self {
            x,
            x_tilde,
            oga,
            gram_t,
            mode,
            draws,
            centre: rs.beta_tilde.clone(),
            j_hat: rs.j_hat.clone(),
            observed,
            observed_se,
        })
    }

    pub fn resamples(&self) -> usize {
        self.draws.len()
    }

    fn position(&self, j: usize) -> Option<usize> {
        self.j_hat.iter().position(|&k| k == j)
    }

    /// `β̃⁰_j` and its standard error on the original data.
    pub fn observed(&self, j: usize) -> Option<Evaluation> {
        let k = self.position(j)?;
        Some(Evaluation { beta: self.observed.beta_tilde[k], std_error: self.observed_se[k] })
    }

    /// The combined split-sample estimate `β̃_Ĵ,j`.
    pub fn centre(&self, j: usize) -> Option<f64> {
        self.position(j).map(|k| self.centre[k])
    }

    /// Estimate and standard error on resample `b` under `β_j = θ`; `None`
    /// when `j` is not selected there or the fit is degenerate.
    pub fn evaluate(&self, b: usize, j: usize, theta: f64) -> Option<Evaluation> {
        let draw = &self.draws[b];
        let delta = theta - self.centre(j)?;
        let g = self.oga.gram();
        let p = g.ncols();
        let n = self.x.nrows();

        let gj = g.column(j);
        let xty: Vec<f64> = (0..p).map(|t| draw.c[t] + delta * gj[t]).collect();
        let y_sq = draw.base_sq + 2.0 * delta * draw.c[j] + delta * delta * g[(j, j)];
        let sel = self.oga.select(&xty, y_sq);
        let pos = sel.iter().position(|&k| k == j)?;
        let m = sel.len();

        let gram = DMatrix::from_fn(m, m, |a, b| self.gram_t[(sel[a], sel[b])]);
        let rhs = DVector::from_fn(m, |a, _| draw.ct[sel[a]] + delta * self.gram_t[(sel[a], j)]);
        let factor = SpdFactor::new(&gram).ok()?;
        let beta = factor.solve(&rhs);
        let mut unit = DVector::zeros(m);
        unit[pos] = 1.0;
        let h = factor.solve(&unit);

        let xs = self.x.as_slice();
        let xts = self.x_tilde.as_slice();
        let mut r: Vec<f64> = draw.base.iter().zip(&xs[j * n..(j + 1) * n]).map(|(b, x)| b + delta * x).collect();
        let mut z = vec![0.0; n];
        for (a, &col) in sel.iter().enumerate() {
            let (ba, ha) = (beta[a], h[a]);
            let xc = &xs[col * n..(col + 1) * n];
            let xtc = &xts[col * n..(col + 1) * n];
            for t in 0..n {
                r[t] -= ba * xc[t];
                z[t] += ha * xtc[t];
            }
        }
        let quad = quadratic_form(&r, &z, self.mode);
        if !(quad > 0.0) {
            return None;
        }
        Some(Evaluation { beta: beta[pos], std_error: quad.sqrt() })
    }

    /// Signed statistics at `θ` over the resamples in which `j` is selected.
    pub fn conditioned(&self, j: usize, theta: f64) -> Vec<f64> {
        (0..self.draws.len()).filter_map(|b| self.evaluate(b, j, theta)).map(|e| e.statistic(theta)).collect()
    }
}
