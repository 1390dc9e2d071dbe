//! Principal-components estimation of an approximate factor model.
//!
//! For each candidate rank `k` the factors are the leading principal
//! components of `X`, normalised so that `F̂ᵀF̂/n = I`. The rank is chosen
//! by the information criterion
//!
//! ```text
//! IC(k) = ln V(k) + k · (n + p)/(n p) · ln(n p/(n + p))
//! ```
//!
//! where `V(k)` is the squared Frobenius norm of the residual after
//! regressing every column of `X` on `F̂ᵏ`.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, SpdFactor};

/// `V(k)` values this small relative to `‖X‖²` are treated as exact fits.
const EXACT_FIT_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct FactorEstimate {
    pub k_hat: usize,
    /// `n × k̂` rescaled factors.
    pub f_hat: DMatrix<f64>,
    /// `IC(k)` for `k = 1..=k_max`.
    pub ic_values: Vec<f64>,
    /// `V(k)` for `k = 1..=k_max`.
    pub v_values: Vec<f64>,
}

impl FactorEstimate {
    /// A zero-column factor matrix, for callers that want no factor adjustment.
    pub fn empty(n: usize) -> Self {
        Self { k_hat: 0, f_hat: DMatrix::zeros(n, 0), ic_values: Vec::new(), v_values: Vec::new() }
    }
}

pub fn estimate_factors(x: &DMatrix<f64>, k_max: usize) -> Result<FactorEstimate> {
    let (n, p) = x.shape();
    if k_max < 1 || k_max > n.min(p) {
        return invalid(format!("k_max = {k_max} must lie in 1..={}", n.min(p)));
    }
    if !linalg::all_finite(x.as_slice()) {
        return Err(Error::NonFinite("design matrix"));
    }

    let total: f64 = x.iter().map(|v| v * v).sum();
    let (eigenvalues, factors) = leading_factors(x, k_max)?;

    let (nf, pf) = (n as f64, p as f64);
    let penalty = (nf + pf) / (nf * pf) * (nf * pf / (nf + pf)).ln();
    let floor = EXACT_FIT_FLOOR * total;

    let mut v_values = Vec::with_capacity(k_max);
    let mut ic_values = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        // V(k) = ‖X‖² − Σ_{i≤k} λ_i, evaluated as the tail sum for accuracy.
        let v: f64 = eigenvalues[k..].iter().map(|l| l.max(0.0)).sum();
        v_values.push(v);
        ic_values.push(v.max(floor).ln() + k as f64 * penalty);
    }

    let mut k_hat = 1;
    for k in 2..=k_max {
        if ic_values[k - 1] < ic_values[k_hat - 1] {
            k_hat = k;
        }
    }
    let f_hat = factors.columns(0, k_hat).into_owned();
    Ok(FactorEstimate { k_hat, f_hat, ic_values, v_values })
}

/// All eigenvalues of the smaller Gram matrix (descending) and the first
/// `k_max` rescaled factors `F̂ = F̄ (F̄ᵀF̄/n)^{-1/2}`.
fn leading_factors(x: &DMatrix<f64>, k_max: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let (n, p) = x.shape();
    let nf = n as f64;

    if p < n {
        // Loadings are √p times the eigenvectors of XᵀX; F̄ = X Λ̄ / p.
        let (values, vectors) = linalg::sorted_eigen(x.tr_mul(x))?;
        let loadings = vectors.columns(0, k_max) * (p as f64).sqrt();
        let f_bar = x * loadings / p as f64;
        let scale = f_bar.tr_mul(&f_bar) / nf;
        if let Ok(root) = linalg::inv_sqrt_spd(&scale) {
            return Ok((values, f_bar * root));
        }
        // X has rank below k_max; the n × n route below is well defined.
    }

    // With the eigen-decomposition XXᵀ = U diag(λ) Uᵀ the rescaled factors are
    // exactly √n U, whatever the rank of X.
    let (values, vectors) = linalg::sorted_eigen(x * x.transpose())?;
    let f_hat = vectors.columns(0, k_max) * nf.sqrt();
    Ok((values, f_hat))
}

/// `(I − F̂(F̂ᵀF̂)⁻¹F̂ᵀ) A`. An empty `F̂` leaves `A` unchanged.
pub fn complement_projection(f_hat: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if f_hat.nrows() != a.nrows() {
        return Err(Error::Dimension(format!("factor matrix has {} rows, target has {}", f_hat.nrows(), a.nrows())));
    }
    if f_hat.ncols() == 0 {
        return Ok(a.clone());
    }
    let factor = SpdFactor::new(&f_hat.tr_mul(f_hat))?;
    let coef = factor.solve_matrix(&f_hat.tr_mul(a));
    Ok(a - f_hat * coef)
}
