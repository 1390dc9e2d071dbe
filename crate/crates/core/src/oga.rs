//! Orthogonal greedy algorithm with an incrementally extended QR factorisation,
//! and the HDBIC rule for choosing the number of iterations.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

/// A step whose best normalised correlation is below this fraction of `‖Y‖`
/// has nothing left to explain.
const SCORE_FLOOR: f64 = 1e-12;
/// Relative size of `r_kk` below which a new column is numerically in the
/// span of the already selected ones.
const RANK_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SelectionResult {
    /// Selected column indices in selection order.
    pub j_hat: Vec<usize>,
    /// `n × m` orthonormal basis of the selected columns.
    pub q: DMatrix<f64>,
    /// `m × m` upper-triangular factor with `QR = X_Ĵ`.
    pub r: DMatrix<f64>,
    /// `q_kᵀU⁽ᵏ⁻¹⁾` for each step.
    pub beta_q: Vec<f64>,
    /// Length-`p` coefficient vector, zero outside `Ĵ`.
    pub beta_oga: DVector<f64>,
    /// `‖U⁽ᵏ⁾‖` for `k = 1..=m`.
    pub residual_norms: Vec<f64>,
    /// Norm of the response, `‖U⁽⁰⁾‖`.
    pub y_norm: f64,
    pub p: usize,
}

impl SelectionResult {
    pub fn m(&self) -> usize {
        self.j_hat.len()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.j_hat.contains(&j)
    }

    /// Sign of `X_jᵀU⁽ᵏ⁻¹⁾` for the column chosen at step `k`.
    pub fn signs(&self) -> Vec<f64> {
        self.beta_q.iter().map(|b| if *b < 0.0 { -1.0 } else { 1.0 }).collect()
    }

    /// The result of stopping after the first `m` steps.
    pub fn truncate(&self, m: usize) -> SelectionResult {
        let m = m.min(self.m());
        let j_hat = self.j_hat[..m].to_vec();
        let q = self.q.columns(0, m).into_owned();
        let r = self.r.view((0, 0), (m, m)).into_owned();
        let beta_q = self.beta_q[..m].to_vec();
        let beta_oga = scatter(&r, &beta_q, &j_hat, self.p);
        SelectionResult {
            j_hat,
            q,
            r,
            beta_q,
            beta_oga,
            residual_norms: self.residual_norms[..m].to_vec(),
            y_norm: self.y_norm,
            p: self.p,
        }
    }
}

/// Solves `R b = β^q` by back-substitution and places `b` at the selected
/// positions of a length-`p` vector.
fn scatter(r: &DMatrix<f64>, beta_q: &[f64], j_hat: &[usize], p: usize) -> DVector<f64> {
    let m = beta_q.len();
    let mut b = vec![0.0; m];
    for i in (0..m).rev() {
        let mut s = beta_q[i];
        for k in i + 1..m {
            s -= r[(i, k)] * b[k];
        }
        b[i] = s / r[(i, i)];
    }
    let mut out = DVector::zeros(p);
    for (k, &j) in j_hat.iter().enumerate() {
        out[j] = b[k];
    }
    out
}

/// Runs up to `m` OGA iterations of `y` on the columns of `x`.
///
/// Stops early when every remaining column is zero, orthogonal to the
/// residual, or linearly dependent on the selected columns.
pub fn oga(x: &DMatrix<f64>, y: &DVector<f64>, m: usize) -> Result<SelectionResult> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::Dimension(format!("design has {n} rows but response has {}", y.len())));
    }
    if m > n.min(p) {
        return invalid(format!("m = {m} exceeds min(n, p) = {}", n.min(p)));
    }

    let norms: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
    let y_norm = y.norm();
    let mut used = vec![false; p];
    let mut u = y.clone();
    let mut q = DMatrix::<f64>::zeros(n, m);
    let mut r = DMatrix::<f64>::zeros(m, m);
    let mut j_hat = Vec::with_capacity(m);
    let mut beta_q = Vec::with_capacity(m);
    let mut residual_norms = Vec::with_capacity(m);

    while j_hat.len() < m {
        let k = j_hat.len();
        let corr = x.tr_mul(&u);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..p {
            if used[j] || norms[j] == 0.0 {
                continue;
            }
            let score = corr[j].abs() / norms[j];
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let Some((jk, score)) = best else { break };
        if score <= SCORE_FLOOR * y_norm {
            break;
        }

        // Gram-Schmidt against the current basis, repeated once for stability.
        let mut v = x.column(jk).into_owned();
        let mut coef = vec![0.0; k];
        for _ in 0..2 {
            for (i, ci) in coef.iter_mut().enumerate() {
                let c = q.column(i).dot(&v);
                *ci += c;
                v.axpy(-c, &q.column(i), 1.0);
            }
        }
        let rkk = v.norm();
        if rkk <= RANK_FLOOR * norms[jk] {
            break;
        }
        v /= rkk;
        let bq = v.dot(&u);
        u.axpy(-bq, &v, 1.0);

        q.set_column(k, &v);
        for i in 0..k {
            r[(i, k)] = coef[i];
        }
        r[(k, k)] = rkk;
        used[jk] = true;
        j_hat.push(jk);
        beta_q.push(bq);
        residual_norms.push(u.norm());
    }

    let steps = j_hat.len();
    let q = q.columns(0, steps).into_owned();
    let r = r.view((0, 0), (steps, steps)).into_owned();
    let beta_oga = scatter(&r, &beta_q, &j_hat, p);
    Ok(SelectionResult { j_hat, q, r, beta_q, beta_oga, residual_norms, y_norm, p })
}

/// `K_n = 2⌊√(n / ln p)⌋`, capped at `min(n/2, p)` and at least 1.
pub fn kn(n: usize, p: usize) -> usize {
    let cap = (n / 2).min(p).max(1);
    if p < 2 {
        return cap;
    }
    let raw = 2 * ((n as f64 / (p as f64).ln()).sqrt().floor() as usize);
    raw.clamp(1, cap)
}

/// `argmin_k n ln‖U⁽ᵏ⁾‖² + k ln n ln p`, ties to the smallest `k`.
///
/// An exactly zero residual wins outright. Returns 0 for an empty path.
pub fn hdbic(residual_norms: &[f64], n: usize, p: usize) -> usize {
    let (nf, pf) = (n as f64, p.max(1) as f64);
    let penalty = nf.ln() * pf.ln();
    let mut best = (0, f64::INFINITY);
    for (i, &norm) in residual_norms.iter().enumerate() {
        let k = i + 1;
        if norm == 0.0 {
            return k;
        }
        let value = nf * (norm * norm).ln() + k as f64 * penalty;
        if value < best.1 {
            best = (k, value);
        }
    }
    best.0
}

/// One `K_n`-step OGA pass truncated to the HDBIC choice.
pub fn select(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<SelectionResult> {
    let (n, p) = x.shape();
    let path = oga(x, y, kn(n, p))?;
    let m = hdbic(&path.residual_norms, n, p);
    Ok(path.truncate(m))
}

/// OGA driven by `G = XᵀX` and `XᵀY` instead of the raw design.
///
/// Each step costs `O(p·k)`, which makes repeated selection on many
/// responses sharing one design cheap. The selection order matches [`oga`]
/// up to rounding.
#[derive(Debug, Clone)]
pub struct GramOga {
    gram: DMatrix<f64>,
    norms: Vec<f64>,
    n: usize,
}

/// Outcome of [`GramOga::path`].
#[derive(Debug, Clone, Default)]
pub struct GramPath {
    pub order: Vec<usize>,
    /// `‖U⁽ᵏ⁾‖²` for each step.
    pub residual_sq: Vec<f64>,
}

impl GramPath {
    /// Indices chosen by HDBIC on this path.
    pub fn hdbic_selection(&self, n: usize, p: usize) -> &[usize] {
        let norms: Vec<f64> = self.residual_sq.iter().map(|v| v.sqrt()).collect();
        &self.order[..hdbic(&norms, n, p)]
    }
}

impl GramOga {
    pub fn new(x: &DMatrix<f64>) -> Self {
        Self::from_gram(x.tr_mul(x), x.nrows())
    }

    pub fn from_gram(gram: DMatrix<f64>, n: usize) -> Self {
        let norms = (0..gram.ncols()).map(|j| gram[(j, j)].max(0.0).sqrt()).collect();
        Self { gram, norms, n }
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.norms.len()
    }

    /// Runs up to `steps` iterations given `c = XᵀY` and `‖Y‖²`.
    pub fn path(&self, xty: &[f64], y_sq: f64, steps: usize) -> GramPath {
        let p = self.p();
        let steps = steps.min(p);
        let mut c = xty.to_vec();
        let mut used = vec![false; p];
        // w_k = Xᵀq_k, stored back to back.
        let mut w: Vec<f64> = Vec::with_capacity(steps * p);
        let mut uu = y_sq;
        let floor = SCORE_FLOOR * y_sq.max(0.0).sqrt();
        let mut out = GramPath { order: Vec::with_capacity(steps), residual_sq: Vec::with_capacity(steps) };

        for k in 0..steps {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..p {
                if used[j] || self.norms[j] == 0.0 {
                    continue;
                }
                let score = c[j].abs() / self.norms[j];
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((j, score));
                }
            }
            let Some((jk, score)) = best else { break };
            if score <= floor {
                break;
            }
            let gjj = self.gram[(jk, jk)];
            let mut rkk_sq = gjj;
            for i in 0..k {
                let rik = w[i * p + jk];
                rkk_sq -= rik * rik;
            }
            if rkk_sq <= (RANK_FLOOR * RANK_FLOOR) * gjj {
                break;
            }
            let rkk = rkk_sq.sqrt();
            let col = self.gram.column(jk);
            let start = w.len();
            w.extend(col.iter().copied());
            for i in 0..k {
                let rik = w[i * p + jk];
                for t in 0..p {
                    w[start + t] -= rik * w[i * p + t];
                }
            }
            for t in 0..p {
                w[start + t] /= rkk;
            }
            let bq = c[jk] / rkk;
            for t in 0..p {
                c[t] -= w[start + t] * bq;
            }
            uu = (uu - bq * bq).max(0.0);
            used[jk] = true;
            out.order.push(jk);
            out.residual_sq.push(uu);
        }
        out
    }

    /// `K_n` steps followed by HDBIC truncation.
    pub fn select(&self, xty: &[f64], y_sq: f64) -> Vec<usize> {
        let (n, p) = (self.n, self.p());
        let path = self.path(xty, y_sq, kn(n, p));
        path.hdbic_selection(n, p).to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = crate::rng::stream(seed, 5);
        DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn orthonormal_single_signal() {
        let x = DMatrix::<f64>::identity(8, 8);
        let y = x.column(5) * 3.0;
        let sel = oga(&x, &y, 3).unwrap();
        assert_eq!(sel.j_hat, vec![5]);
        assert!((sel.beta_oga[5] - 3.0).abs() < 1e-12);
        assert_eq!(sel.residual_norms, vec![0.0]);
    }

    #[test]
    fn square_design_interpolates() {
        let x = gaussian(6, 6, 1);
        let y = DVector::from_column_slice(gaussian(6, 1, 2).as_slice());
        let sel = oga(&x, &y, 6).unwrap();
        assert_eq!(sel.m(), 6);
        assert!(sel.residual_norms[5] < 1e-10 * y.norm());
        assert!((&x * &sel.beta_oga - &y).norm() < 1e-9 * y.norm());
    }

    #[test]
    fn zero_columns_are_skipped_and_path_stops() {
        let mut x = gaussian(10, 4, 3);
        x.column_mut(1).fill(0.0);
        let y = x.column(0) + x.column(2);
        let sel = oga(&x, &y, 4).unwrap();
        assert!(!sel.contains(1));
        assert!(sel.m() <= 3);
    }

    #[test]
    fn kn_and_hdbic_arithmetic() {
        assert_eq!(kn(400, 500), 16);
        assert_eq!(kn(200, 250), 12);
        assert_eq!(kn(6, 1), 1);
        assert_eq!(kn(4, 10_000), 1);
        assert_eq!(kn(100, 3), 3);
        assert_eq!(hdbic(&[2.0, 2.0, 2.0], 100, 50), 1);
        assert_eq!(hdbic(&[5.0, 0.0, 0.0], 100, 50), 2);
        assert_eq!(hdbic(&[], 100, 50), 0);
        // A large drop pays for its penalty.
        assert_eq!(hdbic(&[10.0, 1.0, 0.99], 100, 50), 2);
    }

    #[test]
    fn truncate_matches_shorter_run() {
        let x = gaussian(30, 12, 4);
        let y = DVector::from_column_slice(gaussian(30, 1, 5).as_slice());
        let long = oga(&x, &y, 8).unwrap();
        let short = oga(&x, &y, 3).unwrap();
        let cut = long.truncate(3);
        assert_eq!(cut.j_hat, short.j_hat);
        assert!((cut.beta_oga - short.beta_oga).amax() < 1e-10);
    }

    /// Forward stepwise by explicit least-squares refits.
    fn naive(x: &DMatrix<f64>, y: &DVector<f64>, m: usize) -> (Vec<usize>, DVector<f64>) {
        let p = x.ncols();
        let mut chosen: Vec<usize> = Vec::new();
        let mut resid = y.clone();
        for _ in 0..m {
            let mut best = (usize::MAX, -1.0);
            for j in 0..p {
                if chosen.contains(&j) {
                    continue;
                }
                let s = x.column(j).dot(&resid).abs() / x.column(j).norm();
                if s > best.1 {
                    best = (j, s);
                }
            }
            chosen.push(best.0);
            let xs = crate::linalg::select_columns(x, &chosen);
            let fit = crate::linalg::ols(&xs, y).unwrap();
            resid = fit.residuals;
        }
        let xs = crate::linalg::select_columns(x, &chosen);
        let fit = crate::linalg::ols(&xs, y).unwrap();
        let mut beta = DVector::zeros(p);
        for (k, &j) in chosen.iter().enumerate() {
            beta[j] = fit.coef[k];
        }
        (chosen, beta)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn qr_invariants(n in 12usize..30, p in 4usize..15, seed in 0u64..10_000) {
            let m = (p / 2).max(1);
            let x = gaussian(n, p, seed);
            let y = DVector::from_column_slice(gaussian(n, 1, seed + 1).as_slice());
            let sel = oga(&x, &y, m).unwrap();
            let k = sel.m();
            let qtq = sel.q.tr_mul(&sel.q);
            prop_assert!((qtq - DMatrix::identity(k, k)).amax() < 1e-8);
            let xj = crate::linalg::select_columns(&x, &sel.j_hat);
            prop_assert!((&sel.q * &sel.r - xj).amax() < 1e-8);
            for i in 0..k {
                for l in 0..i {
                    prop_assert_eq!(sel.r[(i, l)], 0.0);
                }
            }
            prop_assert!(sel.residual_norms.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            let explained: f64 = sel.beta_q.iter().map(|b| b * b).sum();
            let last = sel.residual_norms.last().copied().unwrap_or(sel.y_norm);
            prop_assert!((explained + last * last - y.norm_squared()).abs() < 1e-8 * (1.0 + y.norm_squared()));
            for j in 0..p {
                if !sel.contains(j) {
                    prop_assert_eq!(sel.beta_oga[j], 0.0);
                }
            }
        }

        #[test]
        fn matches_forward_stepwise(n in 10usize..30, p in 3usize..15, seed in 0u64..10_000) {
            let m = 8.min(p).min(n);
            let x = gaussian(n, p, seed);
            let y = DVector::from_column_slice(gaussian(n, 1, seed + 7).as_slice());
            let sel = oga(&x, &y, m).unwrap();
            let (order, beta) = naive(&x, &y, sel.m());
            prop_assert_eq!(&sel.j_hat, &order);
            prop_assert!((&sel.beta_oga - beta).amax() < 1e-8);
        }

        #[test]
        fn gram_path_matches_literal(n in 15usize..40, p in 4usize..20, seed in 0u64..10_000) {
            let x = gaussian(n, p, seed);
            let y = DVector::from_column_slice(gaussian(n, 1, seed + 3).as_slice());
            let m = (n / 2).min(p);
            let sel = oga(&x, &y, m).unwrap();
            let fast = GramOga::new(&x);
            let xty: Vec<f64> = x.tr_mul(&y).iter().copied().collect();
            let path = fast.path(&xty, y.norm_squared(), m);
            prop_assert_eq!(&path.order, &sel.j_hat);
            for (a, b) in path.residual_sq.iter().zip(&sel.residual_norms) {
                prop_assert!((a - b * b).abs() < 1e-8 * (1.0 + y.norm_squared()));
            }
        }

        #[test]
        fn rescaling_an_unselected_column_is_harmless(seed in 0u64..10_000, scale in 0.1f64..10.0) {
            let x = gaussian(25, 10, seed);
            let y = DVector::from_column_slice(gaussian(25, 1, seed + 9).as_slice());
            let sel = oga(&x, &y, 4).unwrap();
            let Some(j) = (0..10).find(|j| !sel.contains(*j)) else { return Ok(()) };
            let mut x2 = x.clone();
            x2.column_mut(j).scale_mut(scale);
            prop_assert_eq!(oga(&x2, &y, 4).unwrap().j_hat, sel.j_hat);
        }
    }
}
