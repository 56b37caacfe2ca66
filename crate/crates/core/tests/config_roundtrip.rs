use std::collections::BTreeMap;
use std::path::PathBuf;

use brownout_sim::model::{
    ContainerSpec, HostsConfig, PolicyConfig, PolicyName, PowerModelKind, PowerProfile, SimConfig,
    TraceConfig,
};
use proptest::prelude::*;

fn policy_name() -> impl Strategy<Value = PolicyName> {
    prop_oneof![
        Just(PolicyName::Npa),
        Just(PolicyName::Autos),
        Just(PolicyName::Lucf),
        Just(PolicyName::Mncf),
        Just(PolicyName::Rsc),
    ]
}

fn config() -> impl Strategy<Value = SimConfig> {
    (
        (1usize..40, prop::option::of(1usize..40), 0u32..4, any::<bool>()),
        (0.05f64..0.5, 1u32..4, prop::option::of("[a-z]{1,6}")),
        (0.5f64..1.0, 1usize..20, 1.0f64..1000.0, any::<u64>(), 50u32..=100),
        (prop::option::of(0.1f64..1.0), any::<bool>(), prop::option::of(10.0f64..5000.0)),
        (0.01f64..2.0, policy_name()),
    )
        .prop_map(|(hosts, stack, policy, extra, (scale, name))| {
            let (count, npa, boot_delay, linear) = hosts;
            let (pct, replicas, tag) = stack;
            let (u_t, window, capacity, seed, k) = policy;
            let (decay, aware, tv) = extra;
            let mut opt = ContainerSpec::optional("opt", "app", pct / 2.0);
            let mut opt2 = ContainerSpec::optional("opt2", "app", pct / 2.0);
            if let Some(tag) = &tag {
                opt = opt.with_tag(tag);
                opt2 = opt2.with_tag(tag);
            }
            let mand = ContainerSpec::mandatory("core", "app", (1.0 - pct) / f64::from(replicas))
                .with_replicas(replicas);
            SimConfig {
                hosts: HostsConfig {
                    count,
                    count_by_policy: npa.map(|n| BTreeMap::from([(PolicyName::Npa, n)])).unwrap_or_default(),
                    power_profile: PowerProfile::sun_fire_v20z(),
                    power_model: if linear { PowerModelKind::Linear } else { PowerModelKind::Table },
                    boot_delay,
                },
                services: vec![mand, opt, opt2],
                policy: PolicyConfig {
                    overloaded_threshold: u_t,
                    optional_util_pct: pct,
                    window_size: window,
                    capacity,
                    min_active_hosts: 1,
                    sla_alpha: 0.1,
                    sla_beta_ms: 500.0,
                    sla_phi_ms: 1000.0,
                    sla_gamma: 0.01,
                    percentile_k: k,
                    seed,
                    base_response_ms: 50.0,
                    prediction_decay: decay,
                    brownout_aware_scaling: aware,
                    sla_violation_time_ms: tv,
                },
                trace: TraceConfig {
                    path: PathBuf::from("trace.csv"),
                    scale,
                    interval_seconds: 60.0,
                },
                policy_name: name,
                base_dir: PathBuf::new(),
            }
        })
}

proptest! {
    #[test]
    fn serialize_parse_is_identity(c in config()) {
        let text = c.to_json_pretty();
        let back = SimConfig::from_json_str(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.validate(), c.validate());
    }
}

#[test]
fn shipped_sample_round_trips() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample.json");
    let c = SimConfig::load(&path).unwrap();
    assert!(c.validate().is_empty());
    let mut back = SimConfig::from_json_str(&c.to_json_pretty()).unwrap();
    back.base_dir = c.base_dir.clone();
    assert_eq!(back, c);
}
