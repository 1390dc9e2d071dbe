//! Test statistics, hybrid-resampling intervals and baseline intervals.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod baselines;
pub mod covariance;
pub mod hybrid;
pub mod polyhedral;
pub mod statistic;
pub mod truncnorm;

pub use baselines::{iv_interval, t_interval};
pub use covariance::{covariance, CovEstimate, CovMode};
pub use hybrid::{hybrid_ci_one_sided, hybrid_ci_two_sided, BisectConfig, GridConfig};
pub use polyhedral::{ps_interval, selection_constraints};
pub use statistic::{test_statistic, StatisticConfig, StatisticEngine};
pub use truncnorm::truncnorm_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    T,
    Iv,
    Ps,
    Hr,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::T, Method::Iv, Method::Ps, Method::Hr];

    pub fn name(self) -> &'static str {
        match self {
            Method::T => "t",
            Method::Iv => "iv",
            Method::Ps => "ps",
            Method::Hr => "hr",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::T => "t",
            Method::Iv => "IV",
            Method::Ps => "PS",
            Method::Hr => "HR",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse { what: "method".into(), detail: format!("unknown method {s:?}") })
    }
}

/// Parses a comma-separated method list such as `t,iv,ps,hr`.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let mut out: Vec<Method> = s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Lower confidence bound with `upper = +∞` and coverage `1 − α`.
    #[default]
    One,
    /// Equal-tailed interval with coverage `1 − 2α`.
    Two,
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "one" | "1" => Ok(Side::One),
            "two" | "2" => Ok(Side::Two),
            other => Err(Error::Parse { what: "side".into(), detail: format!("expected one or two, got {other:?}") }),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::One => "one",
            Side::Two => "two",
        })
    }
}

/// Conditions attached to an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    /// Bisection hit an iteration cap.
    NonConverged,
    /// Too few conditioning resamples somewhere; normal quantiles were used.
    NormalFallback,
    /// A bound sits on the edge of the search grid.
    GridEdge,
    /// No grid point was accepted.
    EmptyRegion,
    /// The truncation interval needed widening by rounding slack.
    WidenedTruncation,
    /// The selection event gave an empty truncation interval.
    InfeasibleTruncation,
    /// The estimate or its variance could not be computed.
    Failed,
}

impl Flag {
    pub fn name(self) -> &'static str {
        match self {
            Flag::NonConverged => "non-converged",
            Flag::NormalFallback => "normal-fallback",
            Flag::GridEdge => "grid-edge",
            Flag::EmptyRegion => "empty-region",
            Flag::WidenedTruncation => "widened-truncation",
            Flag::InfeasibleTruncation => "infeasible-truncation",
            Flag::Failed => "failed",
        }
    }

    pub fn invalidates(self) -> bool {
        matches!(self, Flag::InfeasibleTruncation | Flag::Failed)
    }
}

impl FromStr for Flag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        const ALL: [Flag; 7] = [
            Flag::NonConverged,
            Flag::NormalFallback,
            Flag::GridEdge,
            Flag::EmptyRegion,
            Flag::WidenedTruncation,
            Flag::InfeasibleTruncation,
            Flag::Failed,
        ];
        ALL.into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Parse { what: "flag".into(), detail: format!("unknown flag {s:?}") })
    }
}

/// Joins flags with `|`; empty when there are none.
pub fn format_flags(flags: &[Flag]) -> String {
    flags.iter().map(|f| f.name()).collect::<Vec<_>>().join("|")
}

pub fn parse_flags(s: &str) -> Result<Vec<Flag>> {
    s.split('|').filter(|t| !t.is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalDiagnostics {
    /// Statistic evaluations over resamples.
    pub evaluations: usize,
    /// Smallest number of conditioning resamples seen at any `θ`.
    pub min_conditioning: Option<usize>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    /// Zero-based column index.
    pub j: usize,
    pub method: Method,
    pub side: Side,
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    pub flags: Vec<Flag>,
    pub diagnostics: IntervalDiagnostics,
}

impl IntervalReport {
    pub fn new(j: usize, method: Method, side: Side, alpha: f64, lower: f64, upper: f64) -> Self {
        Self { j, method, side, lower, upper, alpha, flags: Vec::new(), diagnostics: IntervalDiagnostics::default() }
    }

    /// A report for a method that could not produce an interval.
    pub fn failed(j: usize, method: Method, side: Side, alpha: f64) -> Self {
        let mut r = Self::new(j, method, side, alpha, f64::NAN, f64::NAN);
        r.flags.push(Flag::Failed);
        r
    }

    pub fn flag(&mut self, flag: Flag) {
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
            self.flags.sort();
        }
    }

    pub fn is_valid(&self) -> bool {
        !self.flags.iter().any(|f| f.invalidates()) && !self.lower.is_nan() && !self.upper.is_nan()
    }

    pub fn covers(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Standard normal quantile.
pub(crate) fn z_quantile(prob: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().inverse_cdf(prob)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsing() {
        assert_eq!(parse_methods("hr, t,iv,t").unwrap(), vec![Method::T, Method::Iv, Method::Hr]);
        assert!(parse_methods("t,lasso").is_err());
        assert_eq!("TWO".parse::<Side>().unwrap(), Side::Two);
        let flags = vec![Flag::NonConverged, Flag::GridEdge];
        assert_eq!(parse_flags(&format_flags(&flags)).unwrap(), flags);
        assert!(parse_flags("").unwrap().is_empty());
    }

    #[test]
    fn report_validity() {
        let mut r = IntervalReport::new(3, Method::Ps, Side::One, 0.1, 0.2, f64::INFINITY);
        assert!(r.is_valid() && r.covers(0.4) && !r.covers(0.1));
        r.flag(Flag::InfeasibleTruncation);
        assert!(!r.is_valid());
        assert!(!IntervalReport::failed(0, Method::T, Side::One, 0.1).is_valid());
        assert!((z_quantile(0.9) - 1.2815515655446004).abs() < 1e-9);
    }
}
