//! Synthetic data-generating processes.
//!
//! Five designs are supported, all with mean-zero predictors:
//!
//! * `lai`: one common factor, `x_tj = f_t + e_tj`, everything iid N(0,1).
//! * `garch`: loadings `1 + |a_j|` on an AR(1) factor `f_t = 0.9 f_{t-1} + b_t`,
//!   with GARCH(1,1) errors `σ_t² = 0.1 + 0.3 σ_{t-1}² + 0.3 ε_{t-1}²`.
//! * `ar`: as `garch`, but column 1 holds `y_{t-1}` and the errors are iid.
//! * `iid`: `x_tj ~ N(0, 2)` iid.
//! * `mvn`: rows iid N(0, Σ) with unit variances and 0.2 correlations.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{self, Stream};

pub const DEFAULT_BURN_IN: usize = 200;

const GARCH_OMEGA: f64 = 0.1;
const GARCH_BETA: f64 = 0.3;
const GARCH_ALPHA: f64 = 0.3;
const FACTOR_AR: f64 = 0.9;
const MVN_CORRELATION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Lai,
    Garch,
    Ar,
    Iid,
    Mvn,
}

impl Setting {
    pub const ALL: [Setting; 5] = [Setting::Lai, Setting::Garch, Setting::Ar, Setting::Iid, Setting::Mvn];

    pub fn name(self) -> &'static str {
        match self {
            Setting::Lai => "lai",
            Setting::Garch => "garch",
            Setting::Ar => "ar",
            Setting::Iid => "iid",
            Setting::Mvn => "mvn",
        }
    }

    /// Unconditional standard deviation of the regression error.
    pub fn error_sd(self) -> f64 {
        match self {
            Setting::Garch => (GARCH_OMEGA / (1.0 - GARCH_ALPHA - GARCH_BETA)).sqrt(),
            _ => 1.0,
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lai" => Ok(Setting::Lai),
            "garch" => Ok(Setting::Garch),
            "ar" => Ok(Setting::Ar),
            "iid" => Ok(Setting::Iid),
            "mvn" => Ok(Setting::Mvn),
            other => invalid(format!("unknown setting '{other}'")),
        }
    }
}

/// A coefficient vector `β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefVector {
    pub values: Vec<f64>,
}

impl CoefVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(p: usize) -> Self {
        Self { values: vec![0.0; p] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Indices of the nonzero entries.
    pub fn support(&self) -> Vec<usize> {
        self.values.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect()
    }

    pub fn as_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }
}

/// The sparse coefficient vector used in every simulation design:
/// `(0.6, 0.6, 0.4, 0.2, 0.2, 0.2, 0.1, 0.1, 0.1, 0.1, 0, …, 0)`.
pub fn make_beta(p: usize) -> Result<CoefVector> {
    if p < 10 {
        return invalid(format!("p = {p}: the coefficient design needs p >= 10"));
    }
    let mut values = vec![0.0; p];
    values[..10].copy_from_slice(&[0.6, 0.6, 0.4, 0.2, 0.2, 0.2, 0.1, 0.1, 0.1, 0.1]);
    Ok(CoefVector { values })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub setting: Option<Setting>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub truth: Option<CoefVector>,
    /// Realised disturbances, when known (synthetic data only).
    pub eps: Option<DVector<f64>>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Dimension(format!("X has {} rows, Y has {} entries", x.nrows(), y.len())));
        }
        if x.nrows() < 4 {
            return invalid(format!("need at least 4 observations, got {}", x.nrows()));
        }
        if !crate::linalg::all_finite(x.as_slice()) {
            return Err(Error::NonFinite("design matrix"));
        }
        if !crate::linalg::all_finite(y.as_slice()) {
            return Err(Error::NonFinite("response"));
        }
        Ok(Self { x, y, truth: None, eps: None, meta: DatasetMeta::default() })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Rows `start..start+len` as a new dataset (truth and metadata carried over).
    pub fn slice_rows(&self, start: usize, len: usize) -> Dataset {
        Dataset {
            x: self.x.rows(start, len).into_owned(),
            y: self.y.rows(start, len).into_owned(),
            truth: self.truth.clone(),
            eps: self.eps.as_ref().map(|e| e.rows(start, len).into_owned()),
            meta: self.meta.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub setting: Setting,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub burn_in: usize,
}

impl DgpConfig {
    pub fn new(setting: Setting, n: usize, p: usize, seed: u64) -> Self {
        Self { setting, n, p, seed, burn_in: DEFAULT_BURN_IN }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 1 {
            return invalid("p must be positive");
        }
        if self.setting == Setting::Ar && self.p < 2 {
            return invalid("the ar setting needs p >= 2");
        }
        if self.n < 4 {
            return invalid(format!("n = {}: need at least 4 observations", self.n));
        }
        Ok(())
    }
}

/// Draws a dataset from the configured design with coefficients `beta`.
pub fn generate(cfg: &DgpConfig, beta: &CoefVector) -> Result<Dataset> {
    cfg.validate()?;
    if beta.len() != cfg.p {
        return Err(Error::Dimension(format!("beta has length {}, expected p = {}", beta.len(), cfg.p)));
    }
    let mut rng = rng::stream(cfg.seed, rng::PURPOSE_DATA);
    let (n, p) = (cfg.n, cfg.p);

    let (x, y, eps) = match cfg.setting {
        Setting::Lai => {
            let f: Vec<f64> = normals(&mut rng, n);
            let mut x = DMatrix::zeros(n, p);
            for j in 0..p {
                for t in 0..n {
                    x[(t, j)] = f[t] + rng.sample::<f64, _>(StandardNormal);
                }
            }
            let eps = DVector::from_vec(normals(&mut rng, n));
            let y = &x * beta.as_dvector() + &eps;
            (x, y, eps)
        }
        Setting::Iid => {
            let sd = 2.0_f64.sqrt();
            let x = DMatrix::from_fn(n, p, |_, _| sd * rng.sample::<f64, _>(StandardNormal));
            let eps = DVector::from_vec(normals(&mut rng, n));
            let y = &x * beta.as_dvector() + &eps;
            (x, y, eps)
        }
        Setting::Mvn => {
            let common = MVN_CORRELATION.sqrt();
            let own = (1.0 - MVN_CORRELATION).sqrt();
            let z0 = normals(&mut rng, n);
            let mut x = DMatrix::zeros(n, p);
            for j in 0..p {
                for t in 0..n {
                    x[(t, j)] = common * z0[t] + own * rng.sample::<f64, _>(StandardNormal);
                }
            }
            let eps = DVector::from_vec(normals(&mut rng, n));
            let y = &x * beta.as_dvector() + &eps;
            (x, y, eps)
        }
        Setting::Garch => {
            let x = factor_ar_design(&mut rng, n, p, cfg.burn_in, 0);
            let eps = DVector::from_vec(garch_errors(&mut rng, n, cfg.burn_in));
            let y = &x * beta.as_dvector() + &eps;
            (x, y, eps)
        }
        Setting::Ar => {
            let total = n + cfg.burn_in;
            // Column 0 is overwritten with the lagged response below.
            let full = factor_ar_design(&mut rng, total, p, cfg.burn_in, 1);
            let shocks = normals(&mut rng, total);
            let mut x = DMatrix::zeros(n, p);
            let mut y = DVector::zeros(n);
            let mut eps = DVector::zeros(n);
            let mut y_prev = 0.0;
            for t in 0..total {
                let mut signal = 0.0;
                for j in 1..p {
                    signal += beta.values[j] * full[(t, j)];
                }
                let y_t = beta.values[0] * y_prev + signal + shocks[t];
                if t >= cfg.burn_in {
                    let row = t - cfg.burn_in;
                    x[(row, 0)] = y_prev;
                    for j in 1..p {
                        x[(row, j)] = full[(t, j)];
                    }
                    y[row] = y_t;
                    eps[row] = shocks[t];
                }
                y_prev = y_t;
            }
            (x, y, eps)
        }
    };

    Ok(Dataset {
        x,
        y,
        truth: Some(beta.clone()),
        eps: Some(eps),
        meta: DatasetMeta { setting: Some(cfg.setting), seed: Some(cfg.seed) },
    })
}

fn normals(rng: &mut Stream, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// `x_tj = f_t (1 + |a_j|) + e_tj` with an AR(1) factor started at zero and
/// run for `burn_in` unrecorded steps. Columns before `first_col` are left zero.
fn factor_ar_design(rng: &mut Stream, rows: usize, p: usize, burn_in: usize, first_col: usize) -> DMatrix<f64> {
    let loadings: Vec<f64> = (0..p).map(|_| 1.0 + rng.sample::<f64, _>(StandardNormal).abs()).collect();
    let mut f = 0.0;
    for _ in 0..burn_in {
        f = FACTOR_AR * f + rng.sample::<f64, _>(StandardNormal);
    }
    let factor: Vec<f64> = (0..rows)
        .map(|_| {
            f = FACTOR_AR * f + rng.sample::<f64, _>(StandardNormal);
            f
        })
        .collect();
    let mut x = DMatrix::zeros(rows, p);
    for j in first_col..p {
        for t in 0..rows {
            x[(t, j)] = factor[t] * loadings[j] + rng.sample::<f64, _>(StandardNormal);
        }
    }
    x
}

/// GARCH(1,1) path started at the stationary second moment.
fn garch_errors(rng: &mut Stream, n: usize, burn_in: usize) -> Vec<f64> {
    let stationary = GARCH_OMEGA / (1.0 - GARCH_ALPHA - GARCH_BETA);
    let mut var_prev = stationary;
    let mut eps_sq_prev = stationary;
    let mut out = Vec::with_capacity(n);
    for t in 0..(burn_in + n) {
        let var = GARCH_OMEGA + GARCH_BETA * var_prev + GARCH_ALPHA * eps_sq_prev;
        let e = var.sqrt() * rng.sample::<f64, _>(StandardNormal);
        if t >= burn_in {
            out.push(e);
        }
        var_prev = var;
        eps_sq_prev = e * e;
    }
    out
}
