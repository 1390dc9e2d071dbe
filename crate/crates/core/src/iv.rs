//! Factor-projected estimation of the coefficients of a selected set.
//!
//! With `P_F` the projection onto the estimated factors and
//! `X̃_J = (I − P_F)X_J`, the estimate is `β̃⁰_J = (X̃_JᵀX̃_J)⁻¹X̃_JᵀY`.
//! Residuals are taken against the unprojected design, `w̃_J = Y − X_Jβ̃⁰_J`,
//! so that they keep the factor component of the response.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::factor::complement_projection;
use crate::linalg::{self, SpdFactor};

#[derive(Debug, Clone)]
pub struct IvEstimate {
    pub j: Vec<usize>,
    pub beta_tilde: DVector<f64>,
    /// `n × m` projected design `X̃_J`.
    pub x_tilde: DMatrix<f64>,
    /// `X̃_JᵀX̃_J`
    pub gram: DMatrix<f64>,
    pub gram_inv: DMatrix<f64>,
    pub residuals: DVector<f64>,
}

impl IvEstimate {
    /// Position of column `j` within the selected set.
    pub fn position(&self, j: usize) -> Option<usize> {
        self.j.iter().position(|&k| k == j)
    }
}

pub fn iv_estimate(x: &DMatrix<f64>, y: &DVector<f64>, j: &[usize], f_hat: &DMatrix<f64>) -> Result<IvEstimate> {
    check(x, y, j, f_hat.ncols())?;
    let xj = linalg::select_columns(x, j);
    let x_tilde = complement_projection(f_hat, &xj)?;
    finish(&xj, x_tilde, y, j)
}

/// As [`iv_estimate`], reusing a precomputed `(I − P_F)X` for all `p` columns.
pub fn iv_estimate_projected(
    x: &DMatrix<f64>,
    x_tilde_full: &DMatrix<f64>,
    y: &DVector<f64>,
    j: &[usize],
) -> Result<IvEstimate> {
    check(x, y, j, 0)?;
    if x_tilde_full.shape() != x.shape() {
        return Err(Error::Dimension("projected design must match the design".into()));
    }
    let xj = linalg::select_columns(x, j);
    finish(&xj, linalg::select_columns(x_tilde_full, j), y, j)
}

fn check(x: &DMatrix<f64>, y: &DVector<f64>, j: &[usize], k: usize) -> Result<()> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::Dimension(format!("design has {n} rows but response has {}", y.len())));
    }
    if let Some(&bad) = j.iter().find(|&&c| c >= p) {
        return invalid(format!("column index {bad} out of range for p = {p}"));
    }
    if j.len() + k > n {
        return invalid(format!("|J| = {} exceeds n - k = {}", j.len(), n.saturating_sub(k)));
    }
    Ok(())
}

fn finish(xj: &DMatrix<f64>, x_tilde: DMatrix<f64>, y: &DVector<f64>, j: &[usize]) -> Result<IvEstimate> {
    let gram = x_tilde.tr_mul(&x_tilde);
    let factor = SpdFactor::new(&gram)?;
    let beta_tilde = factor.solve(&x_tilde.tr_mul(y));
    let residuals = y - xj * &beta_tilde;
    Ok(IvEstimate { j: j.to_vec(), beta_tilde, x_tilde, gram, gram_inv: factor.inverse(), residuals })
}

pub fn residual_vector(est: &IvEstimate) -> &DVector<f64> {
    &est.residuals
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = crate::rng::stream(seed, 11);
        DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    fn vector(n: usize, seed: u64) -> DVector<f64> {
        DVector::from_column_slice(gaussian(n, 1, seed).as_slice())
    }

    #[test]
    fn no_factors_is_ols() {
        let x = gaussian(40, 8, 1);
        let y = vector(40, 2);
        let j = [1, 4, 6];
        let est = iv_estimate(&x, &y, &j, &DMatrix::zeros(40, 0)).unwrap();
        let fit = linalg::ols(&linalg::select_columns(&x, &j), &y).unwrap();
        assert!((&est.beta_tilde - &fit.coef).amax() < 1e-10);
        assert!((residual_vector(&est) - &fit.residuals).amax() < 1e-10);
    }

    #[test]
    fn exact_recovery_with_orthogonal_idiosyncratic_part() {
        let f = gaussian(50, 1, 3);
        let e = complement_projection(&f, &gaussian(50, 3, 4)).unwrap();
        let lam = [0.7, -1.2, 2.0];
        let x = DMatrix::from_fn(50, 3, |t, j| f[(t, 0)] * lam[j] + e[(t, j)]);
        let beta = DVector::from_vec(vec![0.5, -1.0, 0.25]);
        let y = &x * &beta;
        let est = iv_estimate(&x, &y, &[0, 1, 2], &f).unwrap();
        assert!((&est.beta_tilde - &beta).amax() < 1e-8);
        assert!(est.residuals.amax() < 1e-8);
        assert!(f.tr_mul(&est.x_tilde).amax() < 1e-8);
    }

    #[test]
    fn square_design_interpolates() {
        let x = gaussian(6, 6, 5);
        let y = vector(6, 6);
        let est = iv_estimate(&x, &y, &[0, 1, 2, 3, 4, 5], &DMatrix::zeros(6, 0)).unwrap();
        assert!(est.residuals.amax() < 1e-9);
    }

    #[test]
    fn residuals_use_the_unprojected_design() {
        let x = gaussian(50, 10, 7);
        let y = vector(50, 8);
        let f = gaussian(50, 2, 9);
        let j = [2, 3, 9];
        let est = iv_estimate(&x, &y, &j, &f).unwrap();
        let direct = &y - linalg::select_columns(&x, &j) * &est.beta_tilde;
        assert!((residual_vector(&est) - direct).amax() < 1e-12);
        let projected = complement_projection(&f, &x).unwrap();
        let again = iv_estimate_projected(&x, &projected, &y, &j).unwrap();
        assert!((again.beta_tilde - &est.beta_tilde).amax() < 1e-10);
    }

    #[test]
    fn invariant_to_factor_span_perturbation() {
        let x = gaussian(60, 6, 10);
        let y = vector(60, 11);
        let f = gaussian(60, 2, 12);
        let j = [0, 2, 5];
        let est = iv_estimate(&x, &y, &j, &f).unwrap();
        let mut shifted = x.clone();
        let shift = &f * gaussian(2, 6, 13);
        shifted += shift;
        let est2 = iv_estimate(&shifted, &y, &j, &f).unwrap();
        assert!((est.beta_tilde - est2.beta_tilde).amax() < 1e-8);
    }

    #[test]
    fn errors() {
        let x = gaussian(10, 4, 14);
        let y = vector(10, 15);
        assert!(iv_estimate(&x, &y, &[4], &DMatrix::zeros(10, 0)).is_err());
        let dup = DMatrix::from_columns(&[x.column(0), x.column(0)]);
        assert!(matches!(iv_estimate(&dup, &y, &[0, 1], &DMatrix::zeros(10, 0)), Err(Error::SingularGram { .. })));
        assert!(iv_estimate(&x, &vector(9, 1), &[0], &DMatrix::zeros(10, 0)).is_err());
    }
}
