//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Gram matrices with a larger condition estimate than this are rejected.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Copies the listed columns of `x`, in the listed order.
pub fn select_columns(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), idx.len(), |i, k| x[(i, idx[k])])
}

pub fn select_rows(x: &DMatrix<f64>, start: usize, len: usize) -> DMatrix<f64> {
    x.rows(start, len).into_owned()
}

pub fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

/// Cholesky factor of a symmetric positive-definite matrix, guarded by a
/// condition-number estimate.
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
    pub condition: f64,
}

impl SpdFactor {
    pub fn new(gram: &DMatrix<f64>) -> Result<Self> {
        if !all_finite(gram.as_slice()) {
            return Err(Error::NonFinite("gram matrix"));
        }
        let chol = gram.clone().cholesky().ok_or(Error::SingularGram { condition: f64::INFINITY })?;
        // (max L_ii / min L_ii)^2 bounds cond(G) from below; cheap and adequate
        // for the well-scaled designs seen here.
        let l = chol.l_dirty();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for i in 0..gram.nrows() {
            let d = l[(i, i)].abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let condition = if gram.nrows() == 0 {
            1.0
        } else if lo > 0.0 {
            (hi / lo).powi(2)
        } else {
            f64::INFINITY
        };
        if !(condition <= CONDITION_LIMIT) {
            return Err(Error::SingularGram { condition });
        }
        Ok(Self { chol, condition })
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }

    pub fn solve_matrix(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(rhs)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }
}

/// Ordinary least squares fit of `y` on the columns of `x`.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coef: DVector<f64>,
    /// `(XᵀX)⁻¹`
    pub gram_inv: DMatrix<f64>,
    pub residuals: DVector<f64>,
}

pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!("design has {} rows but response has {}", x.nrows(), y.len())));
    }
    let gram = x.tr_mul(x);
    let factor = SpdFactor::new(&gram)?;
    let coef = factor.solve(&x.tr_mul(y));
    let residuals = y - x * &coef;
    Ok(OlsFit { coef, gram_inv: factor.inverse(), residuals })
}

/// Symmetric inverse square root `A^{-1/2}` of a positive-definite matrix.
pub fn inv_sqrt_spd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Decomposition("symmetric eigendecomposition".into()))?;
    let max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || max / min > CONDITION_LIMIT {
        return Err(Error::SingularGram { condition: if min > 0.0 { max / min } else { f64::INFINITY } });
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Eigenpairs of a symmetric matrix sorted by decreasing eigenvalue.
pub fn sorted_eigen(a: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 0)
        .ok_or_else(|| Error::Decomposition("symmetric eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = select_columns(&eig.eigenvectors, &order);
    Ok((values, vectors))
}
