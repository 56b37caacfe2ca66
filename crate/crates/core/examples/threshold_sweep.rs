//! LUCF over the overloaded threshold / optional share grid.

use brownout_sim::engine::simulate;
use brownout_sim::model::{PolicyName, SimConfig};
use brownout_sim::workload::load_trace;

fn main() -> brownout_sim::Result<()> {
    let base = SimConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample.json"))?;
    let trace = load_trace(base.trace_path(), base.trace.scale, base.trace.interval_seconds)?;

    println!("u_t   opt%   energy kWh   OTR %   avg ms   SLAVR %");
    for u_t in [0.6, 0.7, 0.8, 0.9] {
        for pct in [0.1, 0.2, 0.3, 0.4] {
            let mut c = base.clone();
            c.policy_name = PolicyName::Lucf;
            c.policy.overloaded_threshold = u_t;
            c.set_optional_pct(pct)?;
            let r = simulate(&c, &trace)?;
            println!(
                "{u_t:.1}   {:>4.0}   {:>10.3}   {:>5.1}   {:>6.0}   {:>7.3}",
                pct * 100.0,
                r.energy_kwh,
                r.otr_mean * 100.0,
                r.avg_response_ms.unwrap_or(0.0),
                r.slavr.unwrap_or(0.0) * 100.0
            );
        }
    }
    Ok(())
}
