//! Utilization/power conversion and energy accounting.
//!
//! [`hum`] maps a host's CPU utilization to watts by interpolating the
//! profile's breakpoints; [`hpm`] inverts it. Energy is integrated with the
//! rectangle rule: a host's power is held constant over one interval.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HostMode, PowerProfile};

/// Power drawn by a host in `mode` at `utilization`.
///
/// Booting hosts serve nothing and draw idle power.
pub fn hum(profile: &PowerProfile, mode: HostMode, utilization: f64) -> f64 {
    match mode {
        HostMode::Off => profile.off_power,
        HostMode::Sleep => profile.sleep_power,
        HostMode::Booting => profile.idle_power(),
        HostMode::Active => active_power(profile, utilization),
    }
}

/// Interpolated power of a running host; utilization is clamped to `[0, 1]`.
pub fn active_power(profile: &PowerProfile, utilization: f64) -> f64 {
    let bps = &profile.breakpoints;
    let u = utilization.clamp(0.0, 1.0);
    // first breakpoint strictly above u; everything before it is <= u
    let upper = bps.partition_point(|b| b.utilization <= u);
    if upper == 0 {
        return bps[0].power;
    }
    let lo = bps[upper - 1];
    if lo.utilization == u || upper == bps.len() {
        return lo.power;
    }
    let hi = bps[upper];
    let frac = (u - lo.utilization) / (hi.utilization - lo.utilization);
    lo.power + frac * (hi.power - lo.power)
}

/// Utilization at which an active host draws `power` watts.
///
/// On flat stretches of the curve the lowest matching utilization wins.
pub fn hpm(profile: &PowerProfile, power: f64) -> Result<f64> {
    let bps = &profile.breakpoints;
    let (min, max) = (profile.idle_power(), profile.max_power());
    if !(min..=max).contains(&power) {
        return Err(Error::PowerOutOfRange { power, min, max });
    }
    // first breakpoint with power >= target
    let idx = bps.partition_point(|b| b.power < power);
    let hi = bps[idx];
    if hi.power == power || idx == 0 {
        return Ok(hi.utilization);
    }
    let lo = bps[idx - 1];
    let frac = (power - lo.power) / (hi.power - lo.power);
    Ok(lo.utilization + frac * (hi.utilization - lo.utilization))
}

/// Per-host and fleet energy in watt-hours.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyAccumulator {
    pub per_host_wh: BTreeMap<String, f64>,
    pub total_wh: f64,
}

impl EnergyAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one interval of constant power per host.
    pub fn accumulate<'a, I>(&mut self, host_powers: I, interval_seconds: f64) -> Result<()>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        if !(interval_seconds > 0.0) {
            return Err(Error::NonPositiveInterval(interval_seconds));
        }
        let readings: Vec<_> = host_powers.into_iter().collect();
        if let Some((host, power)) = readings.iter().find(|(_, p)| !(*p >= 0.0)) {
            return Err(Error::NegativePower {
                host: host.to_string(),
                power: *power,
            });
        }
        for (host, power) in readings {
            let wh = power * interval_seconds / 3600.0;
            *self.per_host_wh.entry(host.to_string()).or_insert(0.0) += wh;
            self.total_wh += wh;
        }
        Ok(())
    }

    pub fn total_kwh(&self) -> f64 {
        self.total_wh / 1000.0
    }
}
