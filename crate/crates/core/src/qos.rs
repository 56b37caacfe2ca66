//! QoS metrics and the constraint checks a run is judged against.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PolicyConfig;

/// Fraction of intervals a host spent overloaded.
pub fn otr(overload_flags: &[bool]) -> Result<f64> {
    if overload_flags.is_empty() {
        return Err(Error::EmptyInput("overloaded time ratio"));
    }
    let overloaded = overload_flags.iter().filter(|&&f| f).count();
    Ok(overloaded as f64 / overload_flags.len() as f64)
}

/// Failed-request ratio; `None` when no request was issued.
pub fn slavr(errors: u64, total: u64) -> Result<Option<f64>> {
    if errors > total {
        return Err(Error::InvalidArgument(format!(
            "{errors} errors exceed {total} requests"
        )));
    }
    Ok((total > 0).then(|| errors as f64 / total as f64))
}

/// Nearest-rank percentile: the value at rank `ceil(k/100 * N)`.
pub fn percentile(samples: &[f64], k: u32) -> Result<f64> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, k)
}

/// [`percentile`] over samples already sorted ascending.
pub fn percentile_sorted(sorted: &[f64], k: u32) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptyInput("percentile"));
    }
    if !(1..=100).contains(&k) {
        return Err(Error::InvalidArgument(format!("percentile k must lie in [1, 100], got {k}")));
    }
    let n = sorted.len() as u64;
    let rank = (u64::from(k) * n).div_ceil(100).max(1);
    Ok(sorted[(rank - 1) as usize])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub bound: f64,
    /// `None` when the metric is not applicable (no samples, no requests).
    pub actual: Option<f64>,
    pub pass: bool,
}

impl ConstraintCheck {
    fn new(name: &str, bound: f64, actual: Option<f64>) -> Self {
        ConstraintCheck {
            name: name.to_string(),
            bound,
            actual,
            pass: actual.is_none_or(|a| a <= bound),
        }
    }
}

/// Run metrics the constraint checker reads.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QosMetrics {
    pub energy_kwh: f64,
    pub otr_per_host: BTreeMap<String, f64>,
    pub otr_mean: f64,
    pub avg_response_ms: Option<f64>,
    pub p_kth_response_ms: Option<f64>,
    pub slavr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tv_violation_ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QosReport {
    pub otr_per_host: BTreeMap<String, f64>,
    pub otr_mean: f64,
    pub avg_response_ms: Option<f64>,
    pub p_kth_response_ms: Option<f64>,
    pub slavr: Option<f64>,
    /// Objective value, reported but never checked.
    pub energy_kwh: f64,
    pub constraints: Vec<ConstraintCheck>,
}

impl QosReport {
    pub fn all_pass(&self) -> bool {
        self.constraints.iter().all(|c| c.pass)
    }
}

/// Checks mean OTR against alpha, average and k-th percentile response time
/// against beta and phi, and the failed-request ratio against gamma. The
/// response-time-limit check is added only when that limit is configured.
pub fn check_constraints(metrics: &QosMetrics, config: &PolicyConfig) -> QosReport {
    let mut constraints = vec![
        ConstraintCheck::new("otr_mean", config.sla_alpha, Some(metrics.otr_mean)),
        ConstraintCheck::new("avg_response_ms", config.sla_beta_ms, metrics.avg_response_ms),
        ConstraintCheck::new(
            &format!("p{}_response_ms", config.percentile_k),
            config.sla_phi_ms,
            metrics.p_kth_response_ms,
        ),
        ConstraintCheck::new("slavr", config.sla_gamma, metrics.slavr),
    ];
    if config.sla_violation_time_ms.is_some() {
        constraints.push(ConstraintCheck::new(
            "tv_violation_ratio",
            config.sla_gamma,
            metrics.tv_violation_ratio,
        ));
    }
    QosReport {
        otr_per_host: metrics.otr_per_host.clone(),
        otr_mean: metrics.otr_mean,
        avg_response_ms: metrics.avg_response_ms,
        p_kth_response_ms: metrics.p_kth_response_ms,
        slavr: metrics.slavr,
        energy_kwh: metrics.energy_kwh,
        constraints,
    }
}
