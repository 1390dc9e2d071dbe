//! Coverage and estimation metrics over replication records.
//!
//! For a signal value `θ` with `p(θ)` coefficients equal to `θ`:
//!
//! * `NS(θ)`: selections of those coefficients summed over replications and
//!   divided by `p(θ)`, i.e. the mean selection count per coefficient. The
//!   per-replication average is `NS(θ)/L`.
//! * `CR(θ)`: among `(j, l)` with `β_j = θ`, `j` selected and a valid interval,
//!   the fraction with `LB ≤ β_j ≤ UB`.
//! * `mLB`, `sLB`: mean and sample standard deviation of the finite lower
//!   bounds over those `(j, l)`.
//!
//! The overall coverage pools every selected coefficient, zeros included.

use super::config::AmseForm;
use super::record::{RecordSet, RepStatus};
use crate::inference::Method;

/// Nonzero signal values reported in the tables.
pub const GROUPS: [f64; 4] = [0.6, 0.4, 0.2, 0.1];

#[derive(Debug, Clone, PartialEq)]
pub struct GroupMetrics {
    pub theta: f64,
    /// Valid intervals in the group.
    pub count: usize,
    pub covered: usize,
    /// Intervals that failed or were flagged invalid.
    pub invalid: usize,
    pub cr: Option<f64>,
    pub mlb: Option<f64>,
    pub slb: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodMetrics {
    pub method: Method,
    /// One entry per value of [`GROUPS`] followed by the zero group.
    pub groups: Vec<GroupMetrics>,
    pub overall_cr: Option<f64>,
}

impl MethodMetrics {
    pub fn group(&self, theta: f64) -> Option<&GroupMetrics> {
        self.groups.iter().find(|g| g.theta == theta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub reps: usize,
    /// `NS(θ)` per value of [`GROUPS`] followed by the zero group; `None`
    /// when no coefficient takes that value.
    pub ns: Vec<Option<f64>>,
    pub methods: Vec<MethodMetrics>,
    pub amse: Option<f64>,
    pub amse_form: AmseForm,
    /// Replications entering the AMSE.
    pub amse_reps: usize,
    pub degenerate: usize,
    pub failed: usize,
}

impl MetricsReport {
    pub fn method(&self, method: Method) -> Option<&MethodMetrics> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn cr(&self, method: Method, theta: f64) -> Option<f64> {
        self.method(method)?.group(theta)?.cr
    }
}

fn thetas() -> impl Iterator<Item = f64> {
    GROUPS.into_iter().chain(std::iter::once(0.0))
}

fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let sd = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    };
    (Some(mean), Some(sd))
}

/// Metrics over `records` for true coefficients `beta` (zero-based).
pub fn aggregate(records: &RecordSet, beta: &[f64], methods: &[Method], amse_form: AmseForm) -> MetricsReport {
    let coef = |j: usize| beta.get(j).copied().unwrap_or(0.0);
    let ns = thetas()
        .map(|theta| {
            let members = beta.iter().filter(|&&b| b == theta).count();
            (members > 0).then(|| {
                let hits: usize =
                    records.reps.iter().map(|r| r.selected.iter().filter(|&&j| coef(j) == theta).count()).sum();
                hits as f64 / members as f64
            })
        })
        .collect();

    let methods = methods
        .iter()
        .map(|&method| {
            let groups: Vec<GroupMetrics> = thetas()
                .map(|theta| {
                    let rows = records.intervals.iter().filter(|r| r.method == method && r.beta == theta);
                    let (mut count, mut covered, mut invalid, mut lbs) = (0, 0, 0, Vec::new());
                    for r in rows {
                        if !r.is_valid() {
                            invalid += 1;
                            continue;
                        }
                        count += 1;
                        if r.lower <= r.beta && r.beta <= r.upper {
                            covered += 1;
                        }
                        if r.lower.is_finite() {
                            lbs.push(r.lower);
                        }
                    }
                    let (mlb, slb) = mean_sd(&lbs);
                    let cr = (count > 0).then(|| covered as f64 / count as f64);
                    GroupMetrics { theta, count, covered, invalid, cr, mlb, slb }
                })
                .collect();
            let (count, covered) = groups.iter().fold((0, 0), |(c, v), g| (c + g.count, v + g.covered));
            MethodMetrics { method, groups, overall_cr: (count > 0).then(|| covered as f64 / count as f64) }
        })
        .collect();

    let errors: Vec<f64> = records
        .reps
        .iter()
        .filter(|r| r.status != RepStatus::Failed && r.m() > 0 && r.sq_error.is_finite())
        .map(|r| amse_form.apply(r.sq_error, r.m()))
        .collect();
    MetricsReport {
        reps: records.reps.len(),
        ns,
        methods,
        amse: (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64),
        amse_form,
        amse_reps: errors.len(),
        degenerate: records.reps.iter().filter(|r| r.status == RepStatus::Degenerate).count(),
        failed: records.reps.iter().filter(|r| r.status == RepStatus::Failed).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::record::{IntervalRecord, RepRecord};
    use crate::inference::Flag;

    fn beta() -> Vec<f64> {
        let mut b = vec![0.0; 12];
        b[..10].copy_from_slice(&[0.6, 0.6, 0.4, 0.2, 0.2, 0.2, 0.1, 0.1, 0.1, 0.1]);
        b
    }

    fn rep(rep: usize, selected: Vec<usize>, sq_error: f64) -> RepRecord {
        RepRecord { rep, status: RepStatus::Ok, k_hat: 1, selected, sq_error, message: String::new() }
    }

    fn iv(rep: usize, j: usize, lower: f64) -> IntervalRecord {
        IntervalRecord { rep, j, beta: beta()[j], method: Method::Iv, lower, upper: f64::INFINITY, flags: vec![] }
    }

    #[test]
    fn infinite_lower_bounds_always_cover() {
        let set = RecordSet {
            reps: vec![rep(0, vec![0, 2, 11], 0.0)],
            intervals: vec![iv(0, 0, f64::NEG_INFINITY), iv(0, 2, f64::NEG_INFINITY), iv(0, 11, f64::NEG_INFINITY)],
        };
        let m = aggregate(&set, &beta(), &[Method::Iv], AmseForm::Rmse);
        assert_eq!(m.cr(Method::Iv, 0.6), Some(1.0));
        assert_eq!(m.cr(Method::Iv, 0.4), Some(1.0));
        assert_eq!(m.cr(Method::Iv, 0.2), None);
        assert_eq!(m.method(Method::Iv).unwrap().overall_cr, Some(1.0));
        assert_eq!(m.method(Method::Iv).unwrap().group(0.6).unwrap().mlb, None);
    }

    #[test]
    fn bound_above_truth_misses() {
        let set = RecordSet { reps: vec![rep(0, vec![0], 0.01)], intervals: vec![iv(0, 0, 0.7)] };
        let m = aggregate(&set, &beta(), &[Method::Iv], AmseForm::Rmse);
        assert_eq!(m.cr(Method::Iv, 0.6), Some(0.0));
        assert_eq!(m.amse, Some(0.1));
        assert_eq!(m.ns[0], Some(0.5));
    }

    #[test]
    fn overall_is_weighted_combination_and_invalid_rows_are_excluded() {
        let mut rows = vec![iv(0, 0, 0.5), iv(0, 1, 0.65), iv(0, 3, 0.1), iv(0, 10, -0.2), iv(1, 0, 0.55)];
        let mut bad = iv(1, 6, 0.0);
        bad.flags = vec![Flag::Failed];
        rows.push(bad);
        let set = RecordSet { reps: vec![rep(0, vec![0, 1, 3, 10], 0.04), rep(1, vec![0, 6], 0.09)], intervals: rows };
        let m = aggregate(&set, &beta(), &[Method::Iv], AmseForm::Rmse);
        let mm = m.method(Method::Iv).unwrap();
        let (num, den) = mm
            .groups
            .iter()
            .fold((0.0, 0.0), |(a, b), g| (a + g.cr.unwrap_or(0.0) * g.count as f64, b + g.count as f64));
        assert!((mm.overall_cr.unwrap() - num / den).abs() < 1e-15);
        assert_eq!(mm.overall_cr, Some(4.0 / 5.0));
        let g01 = mm.group(0.1).unwrap();
        assert_eq!((g01.count, g01.invalid, g01.cr), (0, 1, None));
        assert_eq!(m.ns, vec![Some(1.5), Some(0.0), Some(1.0 / 3.0), Some(0.25), Some(0.5)]);
        let g06 = mm.group(0.6).unwrap();
        assert!((g06.mlb.unwrap() - 0.5666666666666667).abs() < 1e-12);
        assert!((g06.slb.unwrap() - 0.07637626158259733).abs() < 1e-12);
        assert!((m.amse.unwrap() - (0.01_f64.sqrt() + 0.045_f64.sqrt()) / 2.0).abs() < 1e-15);
    }
}
