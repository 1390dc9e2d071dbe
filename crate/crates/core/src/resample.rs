//! Split-sample coefficient estimates and resampled disturbance vectors.
//!
//! The sample is cut into a leading training half and a trailing test half.
//! Variables chosen on one half are estimated on the other, the two estimates
//! are merged into `β̃_Ĵ`, and the residual `w̃_Ĵ = Y − X_Ĵβ̃_Ĵ` is split into
//! a part explained by the factors and the projected unselected columns and
//! an innovation estimate `ε̂`. Bootstrapping `ε̂` gives the disturbance
//! vectors `w⁽ᵇ⁾ = w̃_Ĵ − ε̂ + ε̂⁽ᵇ⁾`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bootstrap::Resample;
use crate::dgp::Dataset;
use crate::error::{invalid, Result};
use crate::factor::estimate_factors;
use crate::iv::iv_estimate;
use crate::linalg::{self, select_columns};
use crate::oga;
use crate::rng;

/// Which half's selection forms the design of the `ε̂` regressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsDesign {
    /// Each half is regressed on the columns selected on the other half.
    #[default]
    CrossIndexed,
    /// Each half is regressed on its own selection.
    SameSide,
}

/// How many OGA steps each half takes when forming `Ĵ^train` and `Ĵ^test`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HalfSelection {
    /// The size `m = |Ĵ|` chosen on the full sample.
    #[default]
    MatchFull,
    /// An independent HDBIC choice on each half.
    Hdbic,
}

#[derive(Debug, Clone)]
pub struct ResampleConfig {
    pub b: usize,
    pub kmax: usize,
    pub eps_design: EpsDesign,
    pub half_selection: HalfSelection,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        Self { b: 50, kmax: 5, eps_design: EpsDesign::CrossIndexed, half_selection: HalfSelection::MatchFull }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResampleDiagnostics {
    pub j_train: Vec<usize>,
    pub j_test: Vec<usize>,
    /// Column indices refer to `[F̂, (I − P_F̂)X_{Ĵ₊ᶜ}]`.
    pub j_w_train: Vec<usize>,
    pub j_w_test: Vec<usize>,
    pub j_w: Vec<usize>,
    /// `Ĵ_w` was empty, so `ε̂ = w̃_Ĵ`.
    pub empty_j_w: bool,
    /// No selected variable was chosen on either half.
    pub degenerate: bool,
    /// `ε̂` came from the cross-indexed regression.
    pub cross_indexed: bool,
}

#[derive(Debug, Clone)]
pub struct ResampleSet {
    pub j_hat: Vec<usize>,
    /// Combined estimate, aligned with `j_hat`.
    pub beta_tilde: DVector<f64>,
    pub j_plus: Vec<usize>,
    pub w_tilde: DVector<f64>,
    pub eps_hat: DVector<f64>,
    pub eps_b: Vec<DVector<f64>>,
    pub w_b: Vec<DVector<f64>>,
    pub diagnostics: ResampleDiagnostics,
}

impl ResampleSet {
    pub fn position(&self, j: usize) -> Option<usize> {
        self.j_hat.iter().position(|&k| k == j)
    }

    /// `β̃_Ĵ,j`, or 0 when `j` was not selected.
    pub fn coef(&self, j: usize) -> f64 {
        self.position(j).map_or(0.0, |k| self.beta_tilde[k])
    }
}

/// Leading `⌊n/2⌋` rows and the remainder.
pub fn split(ds: &Dataset) -> Result<(Dataset, Dataset)> {
    let n = ds.n();
    if n < 8 {
        return invalid(format!("need at least 8 observations to split, got {n}"));
    }
    let half = n / 2;
    Ok((ds.slice_rows(0, half), ds.slice_rows(half, n - half)))
}

/// Merges the per-half estimates for the selected set.
///
/// `est_train` holds estimates for `Ĵ^test` computed on the training half and
/// `est_test` estimates for `Ĵ^train` computed on the test half.
pub fn combine_beta(
    j_hat: &[usize],
    j_train: &[usize],
    est_test: &[f64],
    j_test: &[usize],
    est_train: &[f64],
) -> DVector<f64> {
    let lookup = |set: &[usize], est: &[f64], j: usize| set.iter().position(|&k| k == j).map(|i| est[i]);
    DVector::from_iterator(
        j_hat.len(),
        j_hat.iter().map(|&j| {
            let from_test = lookup(j_train, est_test, j);
            let from_train = lookup(j_test, est_train, j);
            match (from_test, from_train) {
                (Some(a), Some(b)) => (a + b) / 2.0,
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => 0.0,
            }
        }),
    )
}

/// OGA on one half, then the factor-projected estimate on the other half for
/// that selection.
fn cross_estimate(
    select_on: &Dataset,
    estimate_on: &Dataset,
    kmax: usize,
    steps: Option<usize>,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let sel = match steps {
        Some(m) => oga::oga(&select_on.x, &select_on.y, m.min(select_on.n()).min(select_on.p()))?,
        None => oga::select(&select_on.x, &select_on.y)?,
    };
    if sel.j_hat.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    let (n, p) = (estimate_on.n(), estimate_on.p());
    let f = estimate_factors(&estimate_on.x, kmax.min(n).min(p))?;
    let est = iv_estimate(&estimate_on.x, &estimate_on.y, &sel.j_hat, &f.f_hat)?;
    Ok((sel.j_hat, est.beta_tilde.iter().copied().collect()))
}

#[derive(Debug, Clone)]
pub struct SplitEstimate {
    /// Combined estimate aligned with the selected set.
    pub beta_tilde: DVector<f64>,
    pub j_plus: Vec<usize>,
    pub j_train: Vec<usize>,
    pub j_test: Vec<usize>,
}

/// The combined cross-fitted estimate `β̃_Ĵ` for the selected set `j_hat`.
pub fn split_estimate(ds: &Dataset, j_hat: &[usize], kmax: usize, half: HalfSelection) -> Result<SplitEstimate> {
    let (train, test) = split(ds)?;
    let steps = match half {
        HalfSelection::MatchFull => Some(j_hat.len()),
        HalfSelection::Hdbic => None,
    };
    let (j_train, est_test) = cross_estimate(&train, &test, kmax, steps)?;
    let (j_test, est_train) = cross_estimate(&test, &train, kmax, steps)?;
    let beta_tilde = combine_beta(j_hat, &j_train, &est_test, &j_test, &est_train);
    let j_plus = j_hat.iter().zip(beta_tilde.iter()).filter(|(_, b)| **b != 0.0).map(|(&j, _)| j).collect();
    Ok(SplitEstimate { beta_tilde, j_plus, j_train, j_test })
}

/// Builds `β̃_Ĵ`, `ε̂` and `B` disturbance vectors.
///
/// `x_tilde` is `(I − P_F̂)X` for the full-sample factors `f_hat`. Bootstrap
/// draw `b` uses the stream `(seed, b)`.
#[allow(clippy::too_many_arguments)]
pub fn generate_w(
    ds: &Dataset,
    j_hat: &[usize],
    f_hat: &DMatrix<f64>,
    x_tilde: &DMatrix<f64>,
    cfg: &ResampleConfig,
    resampler: &dyn Resample,
    seed: u64,
) -> Result<ResampleSet> {
    if cfg.b < 1 {
        return invalid("B must be at least 1");
    }
    let (n, p) = (ds.n(), ds.p());
    let half = n / 2;
    let SplitEstimate { beta_tilde, j_plus, j_train, j_test } =
        split_estimate(ds, j_hat, cfg.kmax, cfg.half_selection)?;
    let w_tilde = &ds.y - select_columns(&ds.x, j_hat) * &beta_tilde;

    // X̃^F = [F̂, (I − P_F̂)X_{Ĵ₊ᶜ}]
    let rest: Vec<usize> = (0..p).filter(|j| !j_plus.contains(j)).collect();
    let k = f_hat.ncols();
    let mut xf = DMatrix::zeros(n, k + rest.len());
    xf.columns_mut(0, k).copy_from(f_hat);
    for (c, &j) in rest.iter().enumerate() {
        xf.set_column(k + c, &x_tilde.column(j));
    }

    let xf_train = xf.rows(0, half).into_owned();
    let xf_test = xf.rows(half, n - half).into_owned();
    let w_train = w_tilde.rows(0, half).into_owned();
    let w_test = w_tilde.rows(half, n - half).into_owned();
    let j_w_train = oga::select(&xf_train, &w_train)?.j_hat;
    let j_w_test = oga::select(&xf_test, &w_test)?.j_hat;
    let mut j_w: Vec<usize> = j_w_train.iter().copied().filter(|j| j_w_test.contains(j)).collect();
    j_w.sort_unstable();

    let eps_hat = if j_w.is_empty() {
        w_tilde.clone()
    } else {
        let (design_train, design_test) = match cfg.eps_design {
            EpsDesign::CrossIndexed => (&j_w_test, &j_w_train),
            EpsDesign::SameSide => (&j_w_train, &j_w_test),
        };
        let e_train = innovation(&xf_train, &w_train, design_train, &j_w)?;
        let e_test = innovation(&xf_test, &w_test, design_test, &j_w)?;
        DVector::from_iterator(n, e_train.iter().chain(e_test.iter()).copied())
    };

    let base = &w_tilde - &eps_hat;
    let mut eps_b = Vec::with_capacity(cfg.b);
    let mut w_b = Vec::with_capacity(cfg.b);
    for b in 0..cfg.b {
        let draw = DVector::from_vec(resampler.resample(eps_hat.as_slice(), &mut rng::stream(seed, b as u64)));
        w_b.push(&base + &draw);
        eps_b.push(draw);
    }

    let diagnostics = ResampleDiagnostics {
        degenerate: j_plus.is_empty(),
        empty_j_w: j_w.is_empty(),
        cross_indexed: cfg.eps_design == EpsDesign::CrossIndexed,
        j_train,
        j_test,
        j_w_train,
        j_w_test,
        j_w,
    };
    Ok(ResampleSet { j_hat: j_hat.to_vec(), beta_tilde, j_plus, w_tilde, eps_hat, eps_b, w_b, diagnostics })
}

/// `w − X_{J_w} β̂_{J_w}` where `β̂` is the OLS fit of `w` on `X_design`,
/// restricted to the entries for `J_w ⊂ design`.
fn innovation(x: &DMatrix<f64>, w: &DVector<f64>, design: &[usize], j_w: &[usize]) -> Result<DVector<f64>> {
    let fit = linalg::ols(&select_columns(x, design), w)?;
    let coef = DVector::from_iterator(
        j_w.len(),
        j_w.iter().map(|j| fit.coef[design.iter().position(|d| d == j).expect("J_w is within both selections")]),
    );
    Ok(w - select_columns(x, j_w) * coef)
}
