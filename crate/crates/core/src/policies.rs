//! Auto-scaling and the brownout controller.
//!
//! The controller counts overloaded hosts, derives a dimmer from that count,
//! turns the dimmer into a per-host utilization reduction target, and asks a
//! [`Selector`] which optional containers to deactivate. Containers that share
//! a connection tag on one host are always handled as a single unit.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{HostState, PolicyName, PowerProfile};
use crate::power::{active_power, hpm};

/// Slack for floating point comparisons of utilization sums.
const EPS: f64 = 1e-12;

/// Largest unit count solved by exhaustive subset search in LUCF.
pub const EXACT_SEARCH_LIMIT: usize = 16;

/// Target number of active hosts: `ceil(predicted / capacity)` clamped to
/// `[min_active, fleet]`.
pub fn autoscale(
    _active: usize,
    predicted_rate: f64,
    capacity: f64,
    fleet: usize,
    min_active: usize,
) -> usize {
    debug_assert!(capacity > 0.0);
    // tolerance keeps 30.000000000000004 / 10 from rounding up
    let needed = (predicted_rate / capacity - 1e-9).ceil().max(0.0) as usize;
    needed.clamp(min_active.min(fleet), fleet)
}

/// `sqrt(overloaded / fleet)`.
pub fn dimmer(overloaded: usize, fleet: usize) -> f64 {
    debug_assert!(fleet > 0 && overloaded <= fleet);
    (overloaded as f64 / fleet as f64).sqrt()
}

/// Utilization an overloaded host should shed for dimmer `theta`.
///
/// The host's power is reduced by `theta * power`, clamped to the profile's
/// active range, and the matching utilization is read back off the curve.
pub fn expected_reduction(profile: &PowerProfile, utilization: f64, theta: f64) -> f64 {
    let power = active_power(profile, utilization);
    let target = (power - theta * power).clamp(profile.idle_power(), profile.max_power());
    let remaining = hpm(profile, target).expect("target clamped into profile range");
    (utilization - remaining).clamp(0.0, utilization.max(0.0))
}

/// An active optional container a selector may pick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionalInstance {
    pub id: String,
    pub utilization: f64,
    pub connection_tag: Option<String>,
}

impl OptionalInstance {
    pub fn new(id: &str, utilization: f64) -> Self {
        OptionalInstance {
            id: id.to_string(),
            utilization,
            connection_tag: None,
        }
    }

    pub fn tagged(id: &str, utilization: f64, tag: &str) -> Self {
        OptionalInstance {
            connection_tag: Some(tag.to_string()),
            ..OptionalInstance::new(id, utilization)
        }
    }
}

/// Containers deactivated together: one untagged container or every
/// container sharing a tag.
#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    pub members: Vec<usize>,
    pub utilization: f64,
    /// Smallest member id, used for deterministic ordering.
    pub key: String,
}

/// Groups `ocl` into units sorted by ascending utilization, then key.
pub fn group_units(ocl: &[OptionalInstance]) -> Vec<Unit> {
    let mut by_tag: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut units = Vec::new();
    for (i, inst) in ocl.iter().enumerate() {
        match &inst.connection_tag {
            Some(tag) => by_tag.entry(tag.as_str()).or_default().push(i),
            None => units.push(vec![i]),
        }
    }
    units.extend(by_tag.into_values());
    let mut units: Vec<Unit> = units
        .into_iter()
        .map(|members| Unit {
            utilization: members.iter().map(|&i| ocl[i].utilization).sum(),
            key: members
                .iter()
                .map(|&i| ocl[i].id.as_str())
                .min()
                .unwrap_or_default()
                .to_string(),
            members,
        })
        .collect();
    units.sort_by(ascending);
    units
}

fn ascending(a: &Unit, b: &Unit) -> Ordering {
    a.utilization
        .total_cmp(&b.utilization)
        .then_with(|| a.key.cmp(&b.key))
}

fn collect_ids(ocl: &[OptionalInstance], units: &[Unit], chosen: impl IntoIterator<Item = usize>) -> Vec<String> {
    let mut ids: Vec<String> = chosen
        .into_iter()
        .flat_map(|u| units[u].members.iter().map(|&i| ocl[i].id.clone()))
        .collect();
    ids.sort();
    ids
}

/// Lowest Utilization Container First.
///
/// When the smallest unit alone covers `target` it is chosen. Otherwise the
/// selection is the subset whose utilization comes closest to `target` from
/// below. Up to [`EXACT_SEARCH_LIMIT`] units are searched exhaustively;
/// larger lists fall back to a descending greedy fill. Ties go to fewer
/// units, then to the lexicographically smaller id list.
pub fn select_lucf(ocl: &[OptionalInstance], target: f64) -> Vec<String> {
    if ocl.is_empty() || target <= 0.0 {
        return Vec::new();
    }
    let units = group_units(ocl);
    if units[0].utilization >= target - EPS {
        return collect_ids(ocl, &units, [0]);
    }
    if units.len() > EXACT_SEARCH_LIMIT {
        return greedy_fill(ocl, &units, target);
    }

    let n = units.len();
    let mut best: Option<(f64, u32, Vec<String>)> = None;
    for mask in 1u32..(1 << n) {
        let total: f64 = (0..n)
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| units[b].utilization)
            .sum();
        if total > target + EPS {
            continue;
        }
        let count = mask.count_ones();
        let better = match &best {
            None => true,
            Some((bt, bc, bids)) => {
                if total > bt + EPS {
                    true
                } else if total < bt - EPS {
                    false
                } else if count != *bc {
                    count < *bc
                } else {
                    let ids = collect_ids(ocl, &units, bits(mask, n));
                    ids < *bids
                }
            }
        };
        if better {
            let ids = collect_ids(ocl, &units, bits(mask, n));
            best = Some((total, count, ids));
        }
    }
    best.map(|(_, _, ids)| ids).unwrap_or_default()
}

fn bits(mask: u32, n: usize) -> impl Iterator<Item = usize> {
    (0..n).filter(move |b| mask & (1 << b) != 0)
}

fn greedy_fill(ocl: &[OptionalInstance], units: &[Unit], target: f64) -> Vec<String> {
    let mut total = 0.0;
    let mut chosen = Vec::new();
    for (i, unit) in units.iter().enumerate().rev() {
        if total + unit.utilization <= target + EPS {
            total += unit.utilization;
            chosen.push(i);
        }
    }
    collect_ids(ocl, units, chosen)
}

/// Minimum Number of Containers First.
///
/// Fewest units whose utilization reaches `target`; among equally small
/// sets the largest total. Taking the largest units first is optimal for
/// both criteria, so no search is needed. If even every unit falls short,
/// all are returned.
pub fn select_mncf(ocl: &[OptionalInstance], target: f64) -> Vec<String> {
    if ocl.is_empty() || target <= 0.0 {
        return Vec::new();
    }
    let mut units = group_units(ocl);
    units.sort_by(|a, b| b.utilization.total_cmp(&a.utilization).then_with(|| a.key.cmp(&b.key)));
    let mut total = 0.0;
    let mut taken = 0;
    for unit in &units {
        total += unit.utilization;
        taken += 1;
        if total >= target - EPS {
            break;
        }
    }
    collect_ids(ocl, &units, 0..taken)
}

/// Random Selection Container: draws units uniformly without replacement
/// until `target` is reached or none remain.
pub fn select_rsc<R: Rng + ?Sized>(ocl: &[OptionalInstance], target: f64, rng: &mut R) -> Vec<String> {
    if ocl.is_empty() || target <= 0.0 {
        return Vec::new();
    }
    let units = group_units(ocl);
    let mut remaining: Vec<usize> = (0..units.len()).collect();
    let mut chosen = Vec::new();
    let mut total = 0.0;
    while !remaining.is_empty() && total < target - EPS {
        let pick = remaining.remove(rng.random_range(0..remaining.len()));
        total += units[pick].utilization;
        chosen.push(pick);
    }
    collect_ids(ocl, &units, chosen)
}

/// Container selection strategy used by the brownout controller.
#[derive(Debug, Clone)]
pub enum Selector {
    Lucf,
    Mncf,
    Rsc(ChaCha8Rng),
}

impl Selector {
    pub fn for_policy(policy: PolicyName, rng: ChaCha8Rng) -> Option<Self> {
        match policy {
            PolicyName::Lucf => Some(Selector::Lucf),
            PolicyName::Mncf => Some(Selector::Mncf),
            PolicyName::Rsc => Some(Selector::Rsc(rng)),
            PolicyName::Npa | PolicyName::Autos => None,
        }
    }

    pub fn select(&mut self, ocl: &[OptionalInstance], target: f64) -> Vec<String> {
        match self {
            Selector::Lucf => select_lucf(ocl, target),
            Selector::Mncf => select_mncf(ocl, target),
            Selector::Rsc(rng) => select_rsc(ocl, target, rng),
        }
    }
}

/// Outcome of one brownout evaluation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BrownoutDecision {
    pub overloaded_hosts: usize,
    pub dimmer: f64,
    /// Instances to deactivate, keyed by overloaded host id.
    pub per_host: BTreeMap<String, Vec<String>>,
    pub tags_used: BTreeSet<String>,
    /// No host is overloaded: bring every deactivated container back.
    pub reactivate_all: bool,
}

impl BrownoutDecision {
    pub fn deactivation_count(&self) -> usize {
        self.per_host.values().map(Vec::len).sum()
    }
}

/// Active optional instances on `host`, as selector input.
pub fn optional_list(host: &HostState) -> Vec<OptionalInstance> {
    host.instances
        .iter()
        .filter(|i| i.optional && i.active)
        .map(|i| OptionalInstance {
            id: i.id.clone(),
            utilization: i.utilization,
            connection_tag: i.connection_tag.clone(),
        })
        .collect()
}

/// One brownout evaluation over the fleet.
///
/// `select` receives each overloaded host's optional list and its reduction
/// target and returns the instance ids to deactivate.
pub fn brownout_step<F>(
    hosts: &[HostState],
    threshold: f64,
    profile: &PowerProfile,
    mut select: F,
) -> BrownoutDecision
where
    F: FnMut(&[OptionalInstance], f64) -> Vec<String>,
{
    let overloaded: Vec<&HostState> = hosts
        .iter()
        .filter(|h| h.is_active() && h.utilization > threshold)
        .collect();
    if overloaded.is_empty() {
        return BrownoutDecision {
            reactivate_all: true,
            ..Default::default()
        };
    }
    let theta = dimmer(overloaded.len(), hosts.len());
    let mut decision = BrownoutDecision {
        overloaded_hosts: overloaded.len(),
        dimmer: theta,
        ..Default::default()
    };
    for host in overloaded {
        let target = expected_reduction(profile, host.utilization, theta);
        let ocl = optional_list(host);
        let dcl = select(&ocl, target);
        for id in &dcl {
            if let Some(tag) = ocl.iter().find(|o| &o.id == id).and_then(|o| o.connection_tag.clone()) {
                decision.tags_used.insert(tag);
            }
        }
        decision.per_host.insert(host.id.clone(), dcl);
    }
    decision
}
