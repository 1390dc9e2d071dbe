//! End-to-end interval computation for one dataset.

use nalgebra::DVector;

use crate::bootstrap::{DoubleBlock, Resample};
use crate::dgp::Dataset;
use crate::error::{invalid, Result};
use crate::factor::{complement_projection, estimate_factors};
use crate::inference::{
    covariance, hybrid_ci_one_sided, hybrid_ci_two_sided, iv_interval, ps_interval, t_interval, BisectConfig, CovMode,
    GridConfig, IntervalReport, Method, Side, StatisticEngine,
};
use crate::iv::iv_estimate_projected;
use crate::oga::{self, SelectionResult};
use crate::resample::{generate_w, split_estimate, EpsDesign, HalfSelection, ResampleConfig, ResampleDiagnostics};
use crate::rng;

#[derive(Debug, Clone)]
pub struct CiOptions {
    pub alpha: f64,
    pub side: Side,
    pub methods: Vec<Method>,
    pub cov_mode: CovMode,
    pub b: usize,
    pub kmax: usize,
    /// Seeds the bootstrap streams.
    pub seed: u64,
    pub eps_design: EpsDesign,
    pub half_selection: HalfSelection,
    /// Noise scale for the selective baseline; estimated from the selected
    /// least-squares fit when absent.
    pub ps_sigma: Option<f64>,
    pub grid: GridConfig,
    pub bisect: BisectConfig,
}

impl Default for CiOptions {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            side: Side::One,
            methods: Method::ALL.to_vec(),
            cov_mode: CovMode::default(),
            b: 50,
            kmax: 5,
            seed: 0,
            eps_design: EpsDesign::default(),
            half_selection: HalfSelection::default(),
            ps_sigma: None,
            grid: GridConfig::default(),
            bisect: BisectConfig::default(),
        }
    }
}

impl CiOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return invalid(format!("alpha = {} must lie in (0, 0.5)", self.alpha));
        }
        if self.kmax < 1 {
            return invalid("kmax must be at least 1");
        }
        if self.methods.contains(&Method::Hr) && self.b < 1 {
            return invalid("B must be at least 1");
        }
        if let Some(s) = self.ps_sigma {
            if !(s > 0.0) {
                return invalid(format!("sigma = {s} must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub selection: SelectionResult,
    pub k_hat: usize,
    /// Full-sample projected estimate aligned with the selection, when it
    /// could be computed.
    pub beta0: Option<DVector<f64>>,
    /// Combined split-sample estimate aligned with the selection.
    pub beta_tilde: Option<DVector<f64>>,
    pub resample: Option<ResampleDiagnostics>,
    /// One report per selected column and method, in selection order.
    pub reports: Vec<IntervalReport>,
}

pub fn compute_intervals(ds: &Dataset, opts: &CiOptions) -> Result<Analysis> {
    compute_intervals_with(ds, opts, &DoubleBlock)
}

/// As [`compute_intervals`] with a caller-chosen residual resampler.
pub fn compute_intervals_with(ds: &Dataset, opts: &CiOptions, resampler: &dyn Resample) -> Result<Analysis> {
    opts.validate()?;
    let (n, p) = (ds.n(), ds.p());
    let selection = oga::select(&ds.x, &ds.y)?;
    let j_hat = selection.j_hat.clone();
    let factors = estimate_factors(&ds.x, opts.kmax.min(n).min(p))?;
    let x_tilde = complement_projection(&factors.f_hat, &ds.x)?;
    let observed = if j_hat.is_empty() { None } else { iv_estimate_projected(&ds.x, &x_tilde, &ds.y, &j_hat).ok() };
    let cov = observed.as_ref().and_then(|e| covariance(e, opts.cov_mode).ok());

    let wants = |m: Method| opts.methods.contains(&m);
    let mut beta_tilde = None;
    let mut resample = None;
    let mut engine = None;
    if !j_hat.is_empty() && n >= 8 {
        if wants(Method::Hr) {
            let cfg = ResampleConfig {
                b: opts.b,
                kmax: opts.kmax,
                eps_design: opts.eps_design,
                half_selection: opts.half_selection,
            };
            let seed = rng::derive_seed(opts.seed, rng::PURPOSE_BOOTSTRAP);
            if let Ok(rs) = generate_w(ds, &j_hat, &factors.f_hat, &x_tilde, &cfg, resampler, seed) {
                beta_tilde = Some(rs.beta_tilde.clone());
                resample = Some(rs.diagnostics.clone());
                if let Some(est) = &observed {
                    engine = StatisticEngine::new(&ds.x, &x_tilde, est.clone(), &rs, opts.cov_mode).ok();
                }
            }
        } else if let Ok(split) = split_estimate(ds, &j_hat, opts.kmax, opts.half_selection) {
            beta_tilde = Some(split.beta_tilde);
        }
    }

    let ps_sigma = opts.ps_sigma.or_else(|| residual_scale(ds, &j_hat));
    let (alpha, side) = (opts.alpha, opts.side);
    let mut reports = Vec::new();
    for &j in &j_hat {
        for &method in &opts.methods {
            let report = match method {
                Method::T => t_interval(&ds.x, &ds.y, &j_hat, j, alpha, side).ok(),
                Method::Iv => match (&observed, &cov) {
                    (Some(est), Some(cov)) => iv_interval(est, cov, j, alpha, side).ok(),
                    _ => None,
                },
                Method::Ps => ps_sigma.and_then(|s| ps_interval(&ds.x, &ds.y, &selection, j, alpha, s, side).ok()),
                Method::Hr => engine.as_ref().map(|e| match side {
                    Side::One => hybrid_ci_one_sided(e, j, alpha, &opts.bisect),
                    Side::Two => hybrid_ci_two_sided(e, j, alpha, &opts.grid),
                }),
            };
            reports.push(report.unwrap_or_else(|| IntervalReport::failed(j, method, side, alpha)));
        }
    }

    Ok(Analysis {
        k_hat: factors.k_hat,
        beta0: observed.map(|e| e.beta_tilde),
        beta_tilde,
        resample,
        reports,
        selection,
    })
}

/// `√(RSS/(n − m))` of least squares on the selected columns.
fn residual_scale(ds: &Dataset, j_hat: &[usize]) -> Option<f64> {
    let (n, m) = (ds.n(), j_hat.len());
    if m == 0 || m >= n {
        return None;
    }
    let fit = crate::linalg::ols(&crate::linalg::select_columns(&ds.x, j_hat), &ds.y).ok()?;
    Some((fit.residuals.norm_squared() / (n - m) as f64).sqrt())
}
