//! One simulated day under LUCF, summarised per hour.

use brownout_sim::engine::simulate;
use brownout_sim::model::SimConfig;
use brownout_sim::workload::load_trace;

fn main() -> brownout_sim::Result<()> {
    let config = SimConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample.json"))?;
    let trace = load_trace(config.trace_path(), config.trace.scale, config.trace.interval_seconds)?;
    let result = simulate(&config, &trace)?;

    println!("hour  requests  hosts  dimmer  containers off  avg W   errors");
    for (hour, recs) in result.interval_records.chunks(60).enumerate() {
        let n = recs.len() as f64;
        let mean = |f: &dyn Fn(&brownout_sim::engine::IntervalRecord) -> f64| recs.iter().map(f).sum::<f64>() / n;
        println!(
            "{hour:>4}  {:>8}  {:>5.1}  {:>6.2}  {:>14.1}  {:>6.0}  {:>6}",
            recs.iter().map(|r| r.requests).sum::<u64>(),
            mean(&|r| r.active_hosts as f64),
            mean(&|r| r.dimmer),
            mean(&|r| r.deactivated_containers as f64),
            mean(&|r| r.total_power_w()),
            recs.iter().map(|r| r.errors).sum::<u64>(),
        );
    }

    println!(
        "\n{}: {:.2} kWh, mean OTR {:.1}%, avg {:.0} ms, p{} {:.0} ms, {} of {} requests failed",
        result.policy,
        result.energy_kwh,
        result.otr_mean * 100.0,
        result.avg_response_ms.unwrap_or(0.0),
        result.percentile_k,
        result.p_kth_response_ms.unwrap_or(0.0),
        result.total_errors,
        result.total_requests
    );
    Ok(())
}
