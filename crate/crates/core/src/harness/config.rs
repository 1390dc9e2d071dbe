use serde::{Deserialize, Serialize};

use crate::dgp::Setting;
use crate::error::{invalid, Result};
use crate::inference::{CovMode, Method, Side};
use crate::pipeline::CiOptions;
use crate::resample::{EpsDesign, HalfSelection};

/// Environment variable that overrides the requested worker count.
pub const WORKERS_ENV: &str = "SELCI_WORKERS";

/// How a replication's coefficient error enters the AMSE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmseForm {
    /// `√(‖β̃ − β‖²/m)`
    #[default]
    Rmse,
    /// `√(‖β̃ − β‖/m)`
    Literal,
}

impl AmseForm {
    pub fn apply(self, sq_error: f64, m: usize) -> f64 {
        match self {
            AmseForm::Rmse => (sq_error / m as f64).sqrt(),
            AmseForm::Literal => (sq_error.sqrt() / m as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub setting: Setting,
    pub n: usize,
    pub p: usize,
    pub reps: usize,
    pub b: usize,
    pub alpha: f64,
    pub side: Side,
    pub kmax: usize,
    pub q: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub eps_design: EpsDesign,
    pub half_selection: HalfSelection,
    /// Noise scale for the selective baseline; the setting's error standard
    /// deviation when absent.
    pub ps_sigma: Option<f64>,
    pub amse_form: AmseForm,
}

impl ExperimentConfig {
    pub fn new(setting: Setting, n: usize, p: usize, reps: usize, seed: u64) -> Self {
        Self {
            setting,
            n,
            p,
            reps,
            b: 50,
            alpha: 0.1,
            side: Side::One,
            kmax: 5,
            q: 1,
            methods: Method::ALL.to_vec(),
            seed,
            eps_design: EpsDesign::default(),
            half_selection: HalfSelection::default(),
            ps_sigma: None,
            amse_form: AmseForm::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return invalid("reps must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return invalid(format!("alpha = {} must lie in (0, 0.5)", self.alpha));
        }
        if self.p < 10 {
            return invalid(format!("p = {} is below the 10 nonzero coefficients of the design", self.p));
        }
        crate::dgp::DgpConfig::new(self.setting, self.n, self.p, self.seed).validate()?;
        self.ci_options(0).validate()
    }

    /// Interval options for replication seed `seed`.
    pub fn ci_options(&self, seed: u64) -> CiOptions {
        CiOptions {
            alpha: self.alpha,
            side: self.side,
            methods: self.methods.clone(),
            cov_mode: CovMode::Hac { q: self.q },
            b: self.b,
            kmax: self.kmax,
            seed,
            eps_design: self.eps_design,
            half_selection: self.half_selection,
            ps_sigma: Some(self.ps_sigma.unwrap_or_else(|| self.setting.error_sd())),
            ..Default::default()
        }
    }
}

/// Worker count: the environment override, then `requested`, then the
/// number of available cores.
pub fn resolve_workers(requested: Option<usize>) -> usize {
    let env = std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&w| w > 0);
    env.or(requested.filter(|&w| w > 0)).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
