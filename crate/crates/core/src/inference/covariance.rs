//! Sandwich covariance `V = n (X̃ᵀX̃)⁻¹ S (X̃ᵀX̃)⁻¹` of the projected estimator.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iv::IvEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum CovMode {
    /// `S = Σ_t ŵ_t² x̃_t x̃_tᵀ`.
    Uncorrelated,
    /// `S = Σ_t ŵ_t x̃_t x̃_tᵀ` with first-power residuals. Not positive
    /// semi-definite in general; kept for sensitivity runs.
    UncorrelatedFirstPower,
    /// Bartlett-weighted autocovariances up to lag `q`.
    Hac { q: usize },
}

impl Default for CovMode {
    fn default() -> Self {
        CovMode::Hac { q: 1 }
    }
}

impl fmt::Display for CovMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovMode::Uncorrelated => f.write_str("uncorrelated"),
            CovMode::UncorrelatedFirstPower => f.write_str("uncorrelated-first-power"),
            CovMode::Hac { q } => write!(f, "hac:{q}"),
        }
    }
}

impl FromStr for CovMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "uncorrelated" => return Ok(CovMode::Uncorrelated),
            "uncorrelated-first-power" => return Ok(CovMode::UncorrelatedFirstPower),
            _ => {}
        }
        s.strip_prefix("hac:")
            .and_then(|q| q.parse().ok())
            .map(|q| CovMode::Hac { q })
            .ok_or_else(|| Error::Parse { what: "covariance mode".into(), detail: format!("{s:?}") })
    }
}

#[derive(Debug, Clone)]
pub struct CovEstimate {
    pub v: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub mode: CovMode,
    pub n: usize,
}

impl CovEstimate {
    /// `√(V_jj / n)` for position `k` of the selected set. NaN when `V_kk < 0`.
    pub fn std_error(&self, k: usize) -> f64 {
        let v = self.v[(k, k)];
        if v < 0.0 {
            f64::NAN
        } else {
            (v / self.n as f64).sqrt()
        }
    }
}

fn bartlett(nu: usize, q: usize) -> f64 {
    1.0 - nu as f64 / (q as f64 + 1.0)
}

pub fn covariance(est: &IvEstimate, mode: CovMode) -> Result<CovEstimate> {
    let xt = &est.x_tilde;
    let (n, m) = xt.shape();
    let r = &est.residuals;
    let s = match mode {
        CovMode::Uncorrelated => weighted_outer(xt, &r.map(|v| v * v)),
        CovMode::UncorrelatedFirstPower => weighted_outer(xt, r),
        CovMode::Hac { q } => {
            // Row t of g is r_t x̃_t.
            let mut g = xt.clone();
            for (t, mut row) in g.row_iter_mut().enumerate() {
                row *= r[t];
            }
            let mut s = g.tr_mul(&g);
            for nu in 1..=q.min(n.saturating_sub(1)) {
                let lead = g.rows(nu, n - nu);
                let lag = g.rows(0, n - nu);
                let gamma = lead.tr_mul(&lag);
                s += (&gamma + gamma.transpose()) * bartlett(nu, q);
            }
            s
        }
    };
    debug_assert_eq!(s.shape(), (m, m));
    let v = &est.gram_inv * &s * &est.gram_inv * n as f64;
    let v = (&v + v.transpose()) * 0.5;
    Ok(CovEstimate { v, s, mode, n })
}

fn weighted_outer(xt: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = xt.clone();
    for (t, mut row) in scaled.row_iter_mut().enumerate() {
        row *= w[t];
    }
    xt.tr_mul(&scaled)
}

/// `hᵀSh` for `S` built from residuals `r` and `z_t = x̃_tᵀh`.
pub fn quadratic_form(r: &[f64], z: &[f64], mode: CovMode) -> f64 {
    match mode {
        CovMode::Uncorrelated => r.iter().zip(z).map(|(r, z)| (r * z).powi(2)).sum(),
        CovMode::UncorrelatedFirstPower => r.iter().zip(z).map(|(r, z)| r * z * z).sum(),
        CovMode::Hac { q } => {
            let u: Vec<f64> = r.iter().zip(z).map(|(r, z)| r * z).collect();
            let n = u.len();
            let mut total: f64 = u.iter().map(|v| v * v).sum();
            for nu in 1..=q.min(n.saturating_sub(1)) {
                let cross: f64 = (nu..n).map(|t| u[t] * u[t - nu]).sum();
                total += 2.0 * bartlett(nu, q) * cross;
            }
            total
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iv::iv_estimate;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn estimate(n: usize, m: usize, seed: u64) -> IvEstimate {
        let mut rng = crate::rng::stream(seed, 0);
        let x = DMatrix::from_fn(n, m + 2, |_, _| rng.sample(StandardNormal));
        let y = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
        let f = DMatrix::from_fn(n, 1, |_, _| rng.sample(StandardNormal));
        let j: Vec<usize> = (0..m).collect();
        iv_estimate(&x, &y, &j, &f).unwrap()
    }

    fn gamma(est: &IvEstimate, nu: usize) -> DMatrix<f64> {
        let (n, m) = est.x_tilde.shape();
        let mut out = DMatrix::zeros(m, m);
        for t in nu..n {
            let a = est.x_tilde.row(t).transpose() * est.residuals[t];
            let b = est.x_tilde.row(t - nu).transpose() * est.residuals[t - nu];
            out += &a * b.transpose();
            if nu > 0 {
                out += &b * a.transpose();
            }
        }
        out
    }

    #[test]
    fn hac_lag_zero_and_one() {
        let est = estimate(40, 3, 1);
        let c0 = covariance(&est, CovMode::Hac { q: 0 }).unwrap();
        assert!((&c0.s - gamma(&est, 0)).amax() < 1e-10);
        let c1 = covariance(&est, CovMode::Hac { q: 1 }).unwrap();
        assert!((&c1.s - (gamma(&est, 0) + gamma(&est, 1) * 0.5)).amax() < 1e-10);
        let un = covariance(&est, CovMode::Uncorrelated).unwrap();
        assert!((&un.v - &c0.v).amax() < 1e-10);
        assert!((c1.v.clone() - c1.v.transpose()).amax() == 0.0);
    }

    #[test]
    fn scalar_hand_computation() {
        let n = 5;
        let r = DVector::from_vec(vec![0.5, -1.0, 2.0, 0.0, 1.5]);
        let est = IvEstimate {
            j: vec![0],
            beta_tilde: DVector::from_element(1, 0.0),
            x_tilde: DMatrix::from_element(n, 1, 1.0),
            gram: DMatrix::from_element(1, 1, n as f64),
            gram_inv: DMatrix::from_element(1, 1, 1.0 / n as f64),
            residuals: r.clone(),
        };
        let cov = covariance(&est, CovMode::Hac { q: 0 }).unwrap();
        let expected = n as f64 * r.norm_squared() / (n * n) as f64;
        assert!((cov.v[(0, 0)] - expected).abs() < 1e-12);
    }

    #[test]
    fn quadratic_form_matches_matrix() {
        let est = estimate(60, 4, 2);
        for mode in
            [CovMode::Uncorrelated, CovMode::UncorrelatedFirstPower, CovMode::Hac { q: 0 }, CovMode::Hac { q: 3 }]
        {
            let cov = covariance(&est, mode).unwrap();
            for k in 0..4 {
                let h = est.gram_inv.column(k);
                let z: Vec<f64> = (&est.x_tilde * h).iter().copied().collect();
                let quad = quadratic_form(est.residuals.as_slice(), &z, mode);
                assert!((quad * 60.0 - cov.v[(k, k)]).abs() < 1e-9 * cov.v[(k, k)].abs().max(1.0), "{mode}");
            }
        }
    }

    #[test]
    fn mode_strings() {
        for mode in [CovMode::Uncorrelated, CovMode::UncorrelatedFirstPower, CovMode::Hac { q: 4 }] {
            assert_eq!(mode.to_string().parse::<CovMode>().unwrap(), mode);
        }
        assert!("hac".parse::<CovMode>().is_err());
    }
}
