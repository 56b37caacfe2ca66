//! Fleet size against energy, response time and selector cost.

use brownout_sim::engine::Simulation;
use brownout_sim::model::{PolicyName, SimConfig};
use brownout_sim::workload::load_trace;

fn main() -> brownout_sim::Result<()> {
    let base = SimConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample.json"))?;
    // a busier day than the default so large fleets stay loaded
    let trace = load_trace(base.trace_path(), 0.08, base.trace.interval_seconds)?;

    println!("hosts  policy  energy kWh  avg ms    SLAVR %  selector calls  per call");
    for hosts in [5, 10, 15, 20] {
        for policy in [PolicyName::Lucf, PolicyName::Mncf, PolicyName::Rsc] {
            let mut c = base.clone();
            c.policy_name = policy;
            c.hosts.count = hosts;
            let (r, stats) = Simulation::new(&c, &trace)?.run()?;
            println!(
                "{hosts:>5}  {:<6}  {:>10.2}  {:>7.0}  {:>8.3}  {:>14}  {:>8.2?}",
                policy.to_string(),
                r.energy_kwh,
                r.avg_response_ms.unwrap_or(0.0),
                r.slavr.unwrap_or(0.0) * 100.0,
                stats.selector_calls,
                stats.mean_selector_time().unwrap_or_default()
            );
        }
    }
    Ok(())
}
