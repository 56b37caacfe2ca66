//! Domain types shared by the simulator: host power profiles, the container
//! stack deployed on every active host, live host state, and the JSON
//! configuration document that ties a run together.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking that weight sums hit their targets.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

/// One measured `(utilization, watts)` point of a power curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct Breakpoint {
    pub utilization: f64,
    pub power: f64,
}

impl From<(f64, f64)> for Breakpoint {
    fn from((utilization, power): (f64, f64)) -> Self {
        Breakpoint { utilization, power }
    }
}

impl From<Breakpoint> for (f64, f64) {
    fn from(b: Breakpoint) -> Self {
        (b.utilization, b.power)
    }
}

/// Utilization to power curve of a host model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    pub breakpoints: Vec<Breakpoint>,
    pub sleep_power: f64,
    #[serde(default)]
    pub off_power: f64,
}

impl PowerProfile {
    pub fn new(breakpoints: impl IntoIterator<Item = (f64, f64)>, sleep_power: f64) -> Self {
        PowerProfile {
            breakpoints: breakpoints.into_iter().map(Breakpoint::from).collect(),
            sleep_power,
            off_power: 0.0,
        }
    }

    /// Measured curve of a Sun Fire V20z node (2-core Opteron 250), 10 W asleep.
    pub fn sun_fire_v20z() -> Self {
        PowerProfile::new(
            [
                (0.0, 201.0),
                (0.1, 206.0),
                (0.2, 211.0),
                (0.3, 213.0),
                (0.4, 216.0),
                (0.5, 221.0),
                (0.6, 223.0),
                (0.7, 225.0),
                (0.8, 231.0),
                (0.9, 233.0),
                (1.0, 237.0),
            ],
            10.0,
        )
    }

    /// Two-point curve `idle + u * (max - idle)`.
    pub fn linear(idle_power: f64, max_power: f64, sleep_power: f64) -> Self {
        PowerProfile::new([(0.0, idle_power), (1.0, max_power)], sleep_power)
    }

    /// Linear curve spanning the same idle and peak power as `self`.
    pub fn linearized(&self) -> Self {
        PowerProfile::linear(self.idle_power(), self.max_power(), self.sleep_power)
    }

    pub fn idle_power(&self) -> f64 {
        self.breakpoints.first().map_or(0.0, |b| b.power)
    }

    pub fn max_power(&self) -> f64 {
        self.breakpoints.last().map_or(0.0, |b| b.power)
    }

    fn violations(&self, field: &str, out: &mut Vec<Violation>) {
        let bps = &self.breakpoints;
        if bps.len() < 2 {
            out.push(Violation::new(field, "needs at least two breakpoints"));
            return;
        }
        if bps[0].utilization != 0.0 {
            out.push(Violation::new(field, "breakpoints must start at utilization 0.0"));
        }
        if bps[bps.len() - 1].utilization != 1.0 {
            out.push(Violation::new(field, "breakpoints must end at utilization 1.0"));
        }
        if bps.iter().any(|b| !(0.0..=1.0).contains(&b.utilization)) {
            out.push(Violation::new(field, "breakpoint utilization must lie in [0, 1]"));
        }
        if bps.windows(2).any(|w| w[1].utilization <= w[0].utilization) {
            out.push(Violation::new(field, "breakpoint utilizations must be strictly increasing"));
        }
        if bps.windows(2).any(|w| w[1].power < w[0].power) {
            out.push(Violation::new(field, "power must be non-decreasing in utilization"));
        }
        if bps.iter().any(|b| !b.power.is_finite() || b.power < 0.0) {
            out.push(Violation::new(field, "power must be finite and non-negative"));
        }
        if !(self.sleep_power >= 0.0 && self.sleep_power < self.idle_power()) {
            out.push(Violation::new(
                format!("{field}.sleep_power"),
                "sleep power must be non-negative and below idle power",
            ));
        }
        if self.off_power != 0.0 {
            out.push(Violation::new(format!("{field}.off_power"), "off power must be 0"));
        }
    }
}

/// A microservice of the deployed stack. Every active host runs `replicas`
/// instances of it, each consuming `weight` of a request's CPU work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainerSpec {
    pub id: String,
    pub service: String,
    pub weight: f64,
    #[serde(default)]
    pub optional: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection_tag: Option<String>,
    #[serde(default = "one")]
    pub replicas: u32,
}

fn one() -> u32 {
    1
}

impl ContainerSpec {
    pub fn mandatory(id: &str, service: &str, weight: f64) -> Self {
        ContainerSpec {
            id: id.to_string(),
            service: service.to_string(),
            weight,
            optional: false,
            connection_tag: None,
            replicas: 1,
        }
    }

    pub fn optional(id: &str, service: &str, weight: f64) -> Self {
        ContainerSpec {
            optional: true,
            ..ContainerSpec::mandatory(id, service, weight)
        }
    }

    pub fn with_tag(mut self, tag: &str) -> Self {
        self.connection_tag = Some(tag.to_string());
        self
    }

    pub fn with_replicas(mut self, replicas: u32) -> Self {
        self.replicas = replicas;
        self
    }

    /// Weight carried by all replicas of this container together.
    pub fn total_weight(&self) -> f64 {
        self.weight * f64::from(self.replicas)
    }
}

/// A running replica of a [`ContainerSpec`] on one host.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainerInstance {
    pub id: String,
    pub spec_id: String,
    pub host_id: String,
    pub weight: f64,
    pub optional: bool,
    pub connection_tag: Option<String>,
    pub active: bool,
    pub utilization: f64,
}

impl ContainerInstance {
    pub fn deactivate(&mut self) {
        debug_assert!(self.optional, "mandatory instance {} deactivated", self.id);
        if self.optional {
            self.active = false;
            self.utilization = 0.0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HostMode {
    Off,
    Sleep,
    Booting,
    Active,
}

impl HostMode {
    /// Whether the host state machine allows `self -> next`.
    pub fn can_transition_to(self, next: HostMode) -> bool {
        use HostMode::*;
        matches!(
            (self, next),
            (Off, Booting) | (Sleep, Booting) | (Booting, Active) | (Active, Sleep)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostState {
    pub id: String,
    pub mode: HostMode,
    pub boot_remaining: u32,
    pub instances: Vec<ContainerInstance>,
    pub utilization: f64,
    pub power: f64,
}

impl HostState {
    pub fn new(index: usize) -> Self {
        HostState {
            id: host_id(index),
            mode: HostMode::Off,
            boot_remaining: 0,
            instances: Vec::new(),
            utilization: 0.0,
            power: 0.0,
        }
    }

    pub fn is_active(&self) -> bool {
        self.mode == HostMode::Active
    }

    /// Places one full copy of `stack` on this host, all instances active.
    pub fn deploy(&mut self, stack: &[ContainerSpec]) {
        let host_id = self.id.as_str();
        self.instances = stack
            .iter()
            .flat_map(|spec| {
                (0..spec.replicas).map(move |r| ContainerInstance {
                    id: format!("{}.{}@{}", spec.id, r, host_id),
                    spec_id: spec.id.clone(),
                    host_id: host_id.to_string(),
                    weight: spec.weight,
                    optional: spec.optional,
                    connection_tag: spec.connection_tag.clone(),
                    active: true,
                    utilization: 0.0,
                })
            })
            .collect();
    }

    pub fn deactivated_count(&self) -> usize {
        self.instances.iter().filter(|i| !i.active).count()
    }
}

/// Host ids are zero padded so lexicographic order matches index order.
pub fn host_id(index: usize) -> String {
    format!("h{index:03}")
}

/// Policy driving the fleet for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyName {
    /// Non-power-aware: every host stays on, nothing adapts.
    #[serde(rename = "NPA")]
    Npa,
    /// Threshold auto-scaling only.
    #[serde(rename = "AUTOS")]
    Autos,
    /// Auto-scaling plus brownout, lowest utilization container first.
    #[serde(rename = "LUCF")]
    Lucf,
    /// Auto-scaling plus brownout, minimum number of containers first.
    #[serde(rename = "MNCF")]
    Mncf,
    /// Auto-scaling plus brownout, random container selection.
    #[serde(rename = "RSC")]
    Rsc,
}

impl PolicyName {
    pub const ALL: [PolicyName; 5] = [
        PolicyName::Npa,
        PolicyName::Autos,
        PolicyName::Lucf,
        PolicyName::Mncf,
        PolicyName::Rsc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyName::Npa => "NPA",
            PolicyName::Autos => "AUTOS",
            PolicyName::Lucf => "LUCF",
            PolicyName::Mncf => "MNCF",
            PolicyName::Rsc => "RSC",
        }
    }

    pub fn scales(self) -> bool {
        self != PolicyName::Npa
    }

    pub fn uses_brownout(self) -> bool {
        matches!(self, PolicyName::Lucf | PolicyName::Mncf | PolicyName::Rsc)
    }
}

impl fmt::Display for PolicyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyName::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown policy {s:?}, expected one of NPA|AUTOS|LUCF|MNCF|RSC"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerModelKind {
    /// Piecewise-linear interpolation over the measured breakpoints.
    #[default]
    Table,
    /// Straight line between idle and peak power.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostsConfig {
    pub count: usize,
    /// Per-policy fleet size overrides, e.g. a larger fleet for NPA.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub count_by_policy: BTreeMap<PolicyName, usize>,
    pub power_profile: PowerProfile,
    #[serde(default)]
    pub power_model: PowerModelKind,
    /// Intervals a host spends booting before it serves requests.
    #[serde(default = "one")]
    pub boot_delay: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Host utilization above which a host counts as overloaded.
    pub overloaded_threshold: f64,
    /// Share of the stack's CPU weight carried by optional containers.
    pub optional_util_pct: f64,
    /// Sliding window length for request-rate prediction.
    pub window_size: usize,
    /// Requests per interval that saturate one host.
    pub capacity: f64,
    #[serde(default = "default_min_active")]
    pub min_active_hosts: usize,
    /// Bound on the mean overloaded time ratio.
    pub sla_alpha: f64,
    /// Bound on the average response time, ms.
    pub sla_beta_ms: f64,
    /// Bound on the k-th percentile response time, ms.
    pub sla_phi_ms: f64,
    /// Bound on the failed-request ratio.
    pub sla_gamma: f64,
    #[serde(default = "default_percentile")]
    pub percentile_k: u32,
    pub seed: u64,
    /// Response time of an unloaded host, ms.
    #[serde(default = "default_base_response")]
    pub base_response_ms: f64,
    /// When set, predictions weight the window by `decay^age` instead of a plain mean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction_decay: Option<f64>,
    /// Brownout policies size scale-out for the mandatory load only.
    #[serde(default = "default_true")]
    pub brownout_aware_scaling: bool,
    /// Optional response-time limit; requests slower than this count as violations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sla_violation_time_ms: Option<f64>,
}

fn default_min_active() -> usize {
    1
}
fn default_percentile() -> u32 {
    95
}
fn default_base_response() -> f64 {
    50.0
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    /// Path to a `t,requests` CSV, relative to the config file.
    pub path: PathBuf,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_interval")]
    pub interval_seconds: f64,
}

fn default_scale() -> f64 {
    1.0
}
fn default_interval() -> f64 {
    60.0
}

/// The full configuration document of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub hosts: HostsConfig,
    pub services: Vec<ContainerSpec>,
    pub policy: PolicyConfig,
    pub trace: TraceConfig,
    pub policy_name: PolicyName,
    /// Directory relative trace paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// A broken configuration rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

impl SimConfig {
    pub fn from_json_str(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = SimConfig::from_json_str(&text)?;
        config.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        Ok(config)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn trace_path(&self) -> PathBuf {
        if self.trace.path.is_absolute() {
            self.trace.path.clone()
        } else {
            self.base_dir.join(&self.trace.path)
        }
    }

    /// Fleet size for the configured policy.
    pub fn fleet_size(&self) -> usize {
        self.hosts
            .count_by_policy
            .get(&self.policy_name)
            .copied()
            .unwrap_or(self.hosts.count)
    }

    /// Power curve the engine uses, honoring the `power_model` switch.
    pub fn effective_profile(&self) -> PowerProfile {
        match self.hosts.power_model {
            PowerModelKind::Table => self.hosts.power_profile.clone(),
            PowerModelKind::Linear => self.hosts.power_profile.linearized(),
        }
    }

    pub fn optional_weight(&self) -> f64 {
        self.services
            .iter()
            .filter(|s| s.optional)
            .map(ContainerSpec::total_weight)
            .sum()
    }

    pub fn mandatory_weight(&self) -> f64 {
        self.services
            .iter()
            .filter(|s| !s.optional)
            .map(ContainerSpec::total_weight)
            .sum()
    }

    /// Sets `optional_util_pct` and rescales container weights so optional
    /// containers carry exactly that share of the stack.
    pub fn set_optional_pct(&mut self, pct: f64) -> Result<()> {
        let optional = self.optional_weight();
        let mandatory = self.mandatory_weight();
        if pct > 0.0 && optional <= 0.0 {
            return Err(Error::InvalidArgument(
                "cannot give optional containers a share: the stack has none".into(),
            ));
        }
        if mandatory <= 0.0 {
            return Err(Error::InvalidArgument("the stack has no mandatory container".into()));
        }
        for spec in &mut self.services {
            if spec.optional {
                spec.weight *= pct / optional;
            } else {
                spec.weight *= (1.0 - pct) / mandatory;
            }
        }
        self.policy.optional_util_pct = pct;
        Ok(())
    }

    /// Checks every configuration rule; an empty list means the config is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        if self.hosts.count == 0 {
            out.push(Violation::new("hosts.count", "fleet needs at least one host"));
        }
        for (policy, count) in &self.hosts.count_by_policy {
            if *count == 0 {
                out.push(Violation::new(
                    format!("hosts.count_by_policy.{policy}"),
                    "fleet needs at least one host",
                ));
            }
        }
        self.hosts
            .power_profile
            .violations("hosts.power_profile", &mut out);

        self.service_violations(&mut out);
        self.policy_violations(&mut out);

        if !(self.trace.scale > 0.0 && self.trace.scale.is_finite()) {
            out.push(Violation::new("trace.scale", "scale must be positive"));
        }
        if !(self.trace.interval_seconds > 0.0 && self.trace.interval_seconds.is_finite()) {
            out.push(Violation::new("trace.interval_seconds", "interval must be positive"));
        }
        out
    }

    fn service_violations(&self, out: &mut Vec<Violation>) {
        if self.services.is_empty() {
            out.push(Violation::new("services", "stack needs at least one container"));
            return;
        }
        let mut seen = BTreeSet::new();
        for (i, spec) in self.services.iter().enumerate() {
            let field = format!("services[{i}]");
            if !seen.insert(spec.id.as_str()) {
                out.push(Violation::new(format!("{field}.id"), format!("duplicate id {:?}", spec.id)));
            }
            if !(spec.weight > 0.0 && spec.weight <= 1.0) {
                out.push(Violation::new(format!("{field}.weight"), "weight must lie in (0, 1]"));
            }
            if spec.replicas == 0 {
                out.push(Violation::new(format!("{field}.replicas"), "replicas must be positive"));
            }
        }
        if self.services.iter().all(|s| s.optional) {
            out.push(Violation::new("services", "stack needs at least one mandatory container"));
        }
        let total: f64 = self.services.iter().map(ContainerSpec::total_weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            out.push(Violation::new(
                "services",
                format!("replica weights must sum to 1, got {total}"),
            ));
        }
        let optional = self.optional_weight();
        if (optional - self.policy.optional_util_pct).abs() > WEIGHT_TOLERANCE {
            out.push(Violation::new(
                "services",
                format!(
                    "optional weights sum to {optional}, expected policy.optional_util_pct = {}",
                    self.policy.optional_util_pct
                ),
            ));
        }
    }

    fn policy_violations(&self, out: &mut Vec<Violation>) {
        let p = &self.policy;
        let fraction = |name: &str, v: f64, out: &mut Vec<Violation>| {
            if !(0.0..=1.0).contains(&v) {
                out.push(Violation::new(format!("policy.{name}"), "must lie in [0, 1]"));
            }
        };
        let positive = |name: &str, v: f64, out: &mut Vec<Violation>| {
            if !(v > 0.0 && v.is_finite()) {
                out.push(Violation::new(format!("policy.{name}"), "must be positive"));
            }
        };

        if !(0.5..=1.0).contains(&p.overloaded_threshold) {
            out.push(Violation::new("policy.overloaded_threshold", "must lie in [0.5, 1.0]"));
        }
        if !(0.0..=0.5).contains(&p.optional_util_pct) {
            out.push(Violation::new("policy.optional_util_pct", "must lie in [0, 0.5]"));
        }
        if p.window_size == 0 {
            out.push(Violation::new("policy.window_size", "must be at least 1"));
        }
        positive("capacity", p.capacity, out);
        if p.min_active_hosts == 0 {
            out.push(Violation::new("policy.min_active_hosts", "must be at least 1"));
        } else if p.min_active_hosts > self.fleet_size() {
            out.push(Violation::new("policy.min_active_hosts", "exceeds the fleet size"));
        }
        fraction("sla_alpha", p.sla_alpha, out);
        positive("sla_beta_ms", p.sla_beta_ms, out);
        positive("sla_phi_ms", p.sla_phi_ms, out);
        fraction("sla_gamma", p.sla_gamma, out);
        if !(1..=100).contains(&p.percentile_k) {
            out.push(Violation::new("policy.percentile_k", "must lie in [1, 100]"));
        }
        positive("base_response_ms", p.base_response_ms, out);
        if let Some(decay) = p.prediction_decay {
            if !(decay > 0.0 && decay <= 1.0) {
                out.push(Violation::new("policy.prediction_decay", "must lie in (0, 1]"));
            }
        }
        if let Some(tv) = p.sla_violation_time_ms {
            positive("sla_violation_time_ms", tv, out);
        }
    }
}
