//! Discrete-time simulation loop.
//!
//! Each interval predicts the request rate, lets the auto-scaler adjust the
//! fleet, finishes host boots, spreads the interval's requests over active
//! hosts, derives container and host utilization, runs the brownout
//! controller, synthesizes response times and failures, and integrates
//! energy. Runs are single threaded and fully determined by config, trace
//! and seed.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ContainerSpec, HostMode, HostState, PolicyName, PowerProfile, SimConfig};
use crate::policies::{autoscale, brownout_step, BrownoutDecision, Selector};
use crate::power::{hum, EnergyAccumulator};
use crate::qos::{self, QosMetrics, QosReport};
use crate::workload::{Predictor, Trace};

/// Utilization cap of the response-time surrogate.
const SATURATION: f64 = 0.99;
/// Relative half-width of the response-time jitter.
const JITTER: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HostSample {
    pub mode: HostMode,
    pub utilization: f64,
    pub power_w: f64,
    pub overloaded: bool,
}

/// Telemetry of one interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub t: usize,
    pub requests: u64,
    pub predicted_rate: f64,
    pub active_hosts: usize,
    pub per_host: Vec<HostSample>,
    /// Not serialized; a day of samples runs into the hundreds of thousands.
    #[serde(skip)]
    pub response_samples_ms: Vec<f64>,
    pub errors: u64,
    pub deactivated_containers: usize,
    pub dimmer: f64,
}

impl IntervalRecord {
    pub fn total_power_w(&self) -> f64 {
        self.per_host.iter().map(|h| h.power_w).sum()
    }

    pub fn overloaded_hosts(&self) -> usize {
        self.per_host.iter().filter(|h| h.overloaded).count()
    }
}

/// Everything a finished run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub policy: PolicyName,
    pub fleet_size: usize,
    pub seed: u64,
    pub overloaded_threshold: f64,
    pub optional_util_pct: f64,
    pub interval_seconds: f64,
    pub energy_kwh: f64,
    pub energy_per_host_kwh: BTreeMap<String, f64>,
    pub otr_mean: f64,
    pub otr_per_host: BTreeMap<String, f64>,
    pub avg_response_ms: Option<f64>,
    pub percentile_k: u32,
    pub p_kth_response_ms: Option<f64>,
    pub slavr: Option<f64>,
    pub total_requests: u64,
    pub total_errors: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tv_violation_ratio: Option<f64>,
    pub active_host_series: Vec<usize>,
    pub qos: QosReport,
    pub interval_records: Vec<IntervalRecord>,
}

impl RunResult {
    pub fn mean_active_hosts(&self) -> f64 {
        if self.active_host_series.is_empty() {
            return 0.0;
        }
        self.active_host_series.iter().sum::<usize>() as f64 / self.active_host_series.len() as f64
    }
}

/// Wall-clock cost of container selection, kept out of [`RunResult`] so
/// results stay reproducible.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BrownoutStats {
    pub invocations: u64,
    pub selector_calls: u64,
    pub selector_time: Duration,
}

impl BrownoutStats {
    pub fn mean_selector_time(&self) -> Option<Duration> {
        (self.selector_calls > 0).then(|| self.selector_time / self.selector_calls as u32)
    }
}

/// Splits `requests` evenly over `hosts` hosts; the remainder goes to the
/// lowest indices. No hosts yields an empty split.
pub fn route_demand(requests: u64, hosts: usize) -> Vec<u64> {
    if hosts == 0 {
        return Vec::new();
    }
    let n = hosts as u64;
    let (share, rest) = (requests / n, requests % n);
    (0..n).map(|i| share + u64::from(i < rest)).collect()
}

/// Sets instance and host utilization from `assigned` requests.
///
/// Demand is `assigned / capacity`; each active instance carries
/// `demand * weight`. Returns the unclamped stack demand, which exceeds 1
/// when the host cannot serve everything.
pub fn derive_utilization(host: &mut HostState, assigned: u64, capacity: f64) -> f64 {
    let demand = assigned as f64 / capacity;
    let mut raw = 0.0;
    for inst in &mut host.instances {
        if inst.active {
            let u = demand * inst.weight;
            raw += u;
            inst.utilization = u.clamp(0.0, 1.0);
        } else {
            inst.utilization = 0.0;
        }
    }
    host.utilization = raw.clamp(0.0, 1.0);
    raw
}

/// Response times for `requests` served at `utilization`, and how many fail.
///
/// Service time follows `base / (1 - u)` with `u` capped at 0.99 and a ±5%
/// uniform jitter. When `raw_demand` exceeds 1 the excess fraction
/// `(raw - 1) / raw` of the requests fails instead.
pub fn synthesize_response<R: Rng + ?Sized>(
    utilization: f64,
    raw_demand: f64,
    requests: u64,
    base_ms: f64,
    rng: &mut R,
) -> (Vec<f64>, u64) {
    let errors = if raw_demand > 1.0 {
        ((requests as f64) * (raw_demand - 1.0) / raw_demand).round() as u64
    } else {
        0
    }
    .min(requests);
    let mean = base_ms / (1.0 - utilization.clamp(0.0, SATURATION));
    let samples = (0..requests - errors)
        .map(|_| mean * (1.0 + rng.random_range(-JITTER..=JITTER)))
        .collect();
    (samples, errors)
}

/// One simulation run in progress.
pub struct Simulation<'a> {
    config: &'a SimConfig,
    trace: &'a Trace,
    policy: PolicyName,
    profile: PowerProfile,
    stack: Vec<ContainerSpec>,
    mandatory_share: f64,
    predictor: Predictor,
    hosts: Vec<HostState>,
    boot_started: Vec<Option<usize>>,
    history: Vec<u64>,
    energy: EnergyAccumulator,
    jitter_rng: ChaCha8Rng,
    selector: Option<Selector>,
    stats: BrownoutStats,
    records: Vec<IntervalRecord>,
}

impl<'a> Simulation<'a> {
    pub fn new(config: &'a SimConfig, trace: &'a Trace) -> Result<Self> {
        let violations = config.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidConfig(violations));
        }
        if trace.is_empty() {
            return Err(Error::EmptyTrace);
        }
        let seed = config.policy.seed;
        let jitter_rng = ChaCha8Rng::seed_from_u64(seed);
        let mut selection_rng = ChaCha8Rng::seed_from_u64(seed);
        selection_rng.set_stream(1);

        let stack = config.services.clone();
        let mut hosts: Vec<HostState> = (0..config.fleet_size()).map(HostState::new).collect();
        // initial deployment: the whole fleet starts serving
        for h in &mut hosts {
            h.mode = HostMode::Active;
            h.deploy(&stack);
        }
        let boot_started = vec![None; hosts.len()];
        Ok(Simulation {
            config,
            trace,
            policy: config.policy_name,
            profile: config.effective_profile(),
            mandatory_share: config.mandatory_weight(),
            stack,
            predictor: Predictor::new(config.policy.window_size, config.policy.prediction_decay),
            hosts,
            boot_started,
            history: Vec::with_capacity(trace.len()),
            energy: EnergyAccumulator::new(),
            jitter_rng,
            selector: Selector::for_policy(config.policy_name, selection_rng),
            stats: BrownoutStats::default(),
            records: Vec::with_capacity(trace.len()),
        })
    }

    pub fn hosts(&self) -> &[HostState] {
        &self.hosts
    }

    pub fn records(&self) -> &[IntervalRecord] {
        &self.records
    }

    pub fn brownout_stats(&self) -> BrownoutStats {
        self.stats
    }

    fn committed_hosts(&self) -> usize {
        self.hosts
            .iter()
            .filter(|h| matches!(h.mode, HostMode::Active | HostMode::Booting))
            .count()
    }

    fn active_indices(&self) -> Vec<usize> {
        (0..self.hosts.len())
            .filter(|&i| self.hosts[i].is_active())
            .collect()
    }

    fn transition(&mut self, i: usize, next: HostMode) {
        let host = &mut self.hosts[i];
        debug_assert!(
            host.mode.can_transition_to(next),
            "illegal transition {:?} -> {:?} on {}",
            host.mode,
            next,
            host.id
        );
        host.mode = next;
        match next {
            HostMode::Active => {
                host.boot_remaining = 0;
                host.deploy(&self.stack);
                self.boot_started[i] = None;
            }
            HostMode::Sleep | HostMode::Off => {
                host.instances.clear();
                host.utilization = 0.0;
            }
            HostMode::Booting => {}
        }
    }

    fn apply_scaling(&mut self, target: usize, t: usize) {
        let committed = self.committed_hosts();
        if target > committed {
            let mut to_add = target - committed;
            let boot_delay = self.config.hosts.boot_delay;
            for i in 0..self.hosts.len() {
                if to_add == 0 {
                    break;
                }
                if matches!(self.hosts[i].mode, HostMode::Off | HostMode::Sleep) {
                    self.transition(i, HostMode::Booting);
                    if boot_delay == 0 {
                        self.transition(i, HostMode::Active);
                    } else {
                        self.hosts[i].boot_remaining = boot_delay;
                        self.boot_started[i] = Some(t);
                    }
                    to_add -= 1;
                }
            }
        } else if target < committed {
            let mut to_remove = committed - target;
            let mut active = self.active_indices().len();
            for i in (0..self.hosts.len()).rev() {
                if to_remove == 0 || active <= 1 {
                    break;
                }
                if self.hosts[i].is_active() {
                    self.transition(i, HostMode::Sleep);
                    to_remove -= 1;
                    active -= 1;
                }
            }
        }
    }

    fn advance_boots(&mut self, t: usize) {
        for i in 0..self.hosts.len() {
            if self.hosts[i].mode != HostMode::Booting || self.boot_started[i] == Some(t) {
                continue;
            }
            self.hosts[i].boot_remaining -= 1;
            if self.hosts[i].boot_remaining == 0 {
                self.transition(i, HostMode::Active);
            }
        }
    }

    fn target_hosts(&self, predicted: f64) -> usize {
        let p = &self.config.policy;
        let fleet = self.hosts.len();
        let committed = self.committed_hosts();
        let full = autoscale(committed, predicted, p.capacity, fleet, p.min_active_hosts);
        if full > committed && self.policy.uses_brownout() && p.brownout_aware_scaling {
            // brownout can shed the optional share, so only scale out for what must run
            let mandatory = autoscale(
                committed,
                predicted * self.mandatory_share,
                p.capacity,
                fleet,
                p.min_active_hosts,
            );
            mandatory.max(committed)
        } else {
            full
        }
    }

    fn derive_all(&mut self, active: &[usize], split: &[u64]) -> Vec<f64> {
        let capacity = self.config.policy.capacity;
        let raw = active
            .iter()
            .zip(split)
            .map(|(&i, &assigned)| derive_utilization(&mut self.hosts[i], assigned, capacity))
            .collect();
        for host in &mut self.hosts {
            host.power = hum(&self.profile, host.mode, host.utilization);
        }
        raw
    }

    fn apply_decision(&mut self, decision: &BrownoutDecision) {
        if decision.reactivate_all {
            for inst in self.hosts.iter_mut().flat_map(|h| h.instances.iter_mut()) {
                inst.active = true;
            }
            return;
        }
        for host in &mut self.hosts {
            if let Some(dcl) = decision.per_host.get(&host.id) {
                for inst in host.instances.iter_mut().filter(|i| dcl.contains(&i.id)) {
                    inst.deactivate();
                }
            }
        }
    }

    fn run_brownout(&mut self, active: &[usize], split: &[u64]) -> Option<f64> {
        self.selector.as_ref()?;
        // each evaluation starts from the full stack; deactivations last one interval
        for inst in self.hosts.iter_mut().flat_map(|h| h.instances.iter_mut()) {
            inst.active = true;
        }
        self.derive_all(active, split);
        let threshold = self.config.policy.overloaded_threshold;
        let selector = self.selector.as_mut()?;
        let stats = &mut self.stats;
        let decision = brownout_step(&self.hosts, threshold, &self.profile, |ocl, target| {
            let start = Instant::now();
            let dcl = selector.select(ocl, target);
            stats.selector_time += start.elapsed();
            stats.selector_calls += 1;
            dcl
        });
        stats.invocations += 1;
        self.apply_decision(&decision);
        Some(decision.dimmer)
    }

    /// Simulates interval `t`.
    pub fn step(&mut self, t: usize) -> Result<IntervalRecord> {
        let requests = *self.trace.rates.get(t).ok_or_else(|| {
            Error::InvalidArgument(format!("interval {t} beyond trace of {}", self.trace.len()))
        })?;

        let predicted = self.predictor.predict(&self.history);
        if self.policy.scales() && !self.history.is_empty() {
            let target = self.target_hosts(predicted);
            self.apply_scaling(target, t);
        }
        self.advance_boots(t);

        let active = self.active_indices();
        let split = route_demand(requests, active.len());
        self.derive_all(&active, &split);

        let dimmer = self.run_brownout(&active, &split).unwrap_or(0.0);
        let raw = self.derive_all(&active, &split);

        let base_ms = self.config.policy.base_response_ms;
        let mut samples = Vec::with_capacity(requests as usize);
        let mut errors = if active.is_empty() { requests } else { 0 };
        for ((&i, &assigned), &raw) in active.iter().zip(&split).zip(&raw) {
            let (s, e) = synthesize_response(
                self.hosts[i].utilization,
                raw,
                assigned,
                base_ms,
                &mut self.jitter_rng,
            );
            samples.extend(s);
            errors += e;
        }

        self.energy.accumulate(
            self.hosts.iter().map(|h| (h.id.as_str(), h.power)),
            self.trace.interval_seconds,
        )?;

        let threshold = self.config.policy.overloaded_threshold;
        let record = IntervalRecord {
            t,
            requests,
            predicted_rate: predicted,
            active_hosts: active.len(),
            per_host: self
                .hosts
                .iter()
                .map(|h| HostSample {
                    mode: h.mode,
                    utilization: h.utilization,
                    power_w: h.power,
                    overloaded: h.is_active() && h.utilization > threshold,
                })
                .collect(),
            response_samples_ms: samples,
            errors,
            deactivated_containers: self.hosts.iter().map(HostState::deactivated_count).sum(),
            dimmer,
        };
        self.history.push(requests);
        self.records.push(record.clone());
        Ok(record)
    }

    /// Runs every interval of the trace and aggregates the result.
    pub fn run(mut self) -> Result<(RunResult, BrownoutStats)> {
        for t in 0..self.trace.len() {
            self.step(t)?;
        }
        let stats = self.stats;
        Ok((self.finish()?, stats))
    }

    fn finish(self) -> Result<RunResult> {
        let policy = &self.config.policy;
        let mut samples: Vec<f64> = self
            .records
            .iter()
            .flat_map(|r| r.response_samples_ms.iter().copied())
            .collect();
        samples.sort_by(f64::total_cmp);

        let total_requests: u64 = self.records.iter().map(|r| r.requests).sum();
        let total_errors: u64 = self.records.iter().map(|r| r.errors).sum();
        let mut otr_per_host = BTreeMap::new();
        for (i, host) in self.hosts.iter().enumerate() {
            let flags: Vec<bool> = self.records.iter().map(|r| r.per_host[i].overloaded).collect();
            otr_per_host.insert(host.id.clone(), qos::otr(&flags)?);
        }
        let otr_mean = otr_per_host.values().sum::<f64>() / otr_per_host.len() as f64;
        let avg_response_ms = (!samples.is_empty())
            .then(|| samples.iter().sum::<f64>() / samples.len() as f64);
        let p_kth_response_ms = if samples.is_empty() {
            None
        } else {
            Some(qos::percentile_sorted(&samples, policy.percentile_k)?)
        };
        let slavr = qos::slavr(total_errors, total_requests)?;
        let tv_violation_ratio = match policy.sla_violation_time_ms {
            Some(limit) if total_requests > 0 => {
                let slow = samples.len() - samples.partition_point(|&s| s <= limit);
                Some(slow as f64 / total_requests as f64)
            }
            _ => None,
        };

        let metrics = QosMetrics {
            energy_kwh: self.energy.total_kwh(),
            otr_per_host: otr_per_host.clone(),
            otr_mean,
            avg_response_ms,
            p_kth_response_ms,
            slavr,
            tv_violation_ratio,
        };
        let qos = qos::check_constraints(&metrics, policy);
        let mut records = self.records;
        for r in &mut records {
            r.response_samples_ms = Vec::new();
        }

        Ok(RunResult {
            policy: self.policy,
            fleet_size: self.hosts.len(),
            seed: policy.seed,
            overloaded_threshold: policy.overloaded_threshold,
            optional_util_pct: policy.optional_util_pct,
            interval_seconds: self.trace.interval_seconds,
            energy_kwh: metrics.energy_kwh,
            energy_per_host_kwh: self
                .energy
                .per_host_wh
                .iter()
                .map(|(k, wh)| (k.clone(), wh / 1000.0))
                .collect(),
            otr_mean,
            otr_per_host,
            avg_response_ms,
            percentile_k: policy.percentile_k,
            p_kth_response_ms,
            slavr,
            total_requests,
            total_errors,
            tv_violation_ratio,
            active_host_series: records.iter().map(|r| r.active_hosts).collect(),
            qos,
            interval_records: records,
        })
    }
}

/// Runs `config` over `trace` from start to finish.
pub fn simulate(config: &SimConfig, trace: &Trace) -> Result<RunResult> {
    Ok(Simulation::new(config, trace)?.run()?.0)
}
