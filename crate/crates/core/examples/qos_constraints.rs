//! Checking a run against its SLA bounds, then against tighter ones.

use brownout_sim::engine::simulate;
use brownout_sim::model::{PolicyName, SimConfig};
use brownout_sim::qos::{check_constraints, percentile, QosMetrics};
use brownout_sim::workload::load_trace;

fn show(title: &str, report: &brownout_sim::qos::QosReport) {
    println!("{title}");
    for c in &report.constraints {
        let actual = c.actual.map_or("n/a".to_string(), |a| format!("{a:.4}"));
        println!("  {:<20} {:>12} <= {:<10} {}", c.name, actual, c.bound, if c.pass { "ok" } else { "VIOLATED" });
    }
}

fn main() -> brownout_sim::Result<()> {
    let mut config = SimConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample.json"))?;
    let trace = load_trace(config.trace_path(), config.trace.scale, config.trace.interval_seconds)?;

    for policy in [PolicyName::Autos, PolicyName::Lucf] {
        config.policy_name = policy;
        let r = simulate(&config, &trace)?;
        show(&format!("{policy} ({:.2} kWh)", r.energy_kwh), &r.qos);
    }

    let r = simulate(&config, &trace)?;
    let metrics = QosMetrics {
        energy_kwh: r.energy_kwh,
        otr_per_host: r.otr_per_host.clone(),
        otr_mean: r.otr_mean,
        avg_response_ms: r.avg_response_ms,
        p_kth_response_ms: r.p_kth_response_ms,
        slavr: r.slavr,
        tv_violation_ratio: r.tv_violation_ratio,
    };
    let mut strict = config.policy.clone();
    strict.sla_alpha = 0.05;
    strict.sla_beta_ms = 200.0;
    strict.sla_gamma = 0.0001;
    show("LUCF against stricter bounds", &check_constraints(&metrics, &strict));

    let samples = [120.0, 80.0, 95.0, 400.0, 101.0, 99.0, 87.0, 2500.0, 110.0, 93.0];
    for k in [50, 90, 95, 99] {
        println!("p{k} of the toy sample: {} ms", percentile(&samples, k)?);
    }
    Ok(())
}
