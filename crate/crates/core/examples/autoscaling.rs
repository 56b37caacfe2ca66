//! Host count chosen by the auto-scaler as load moves, and the hosts that
//! actually serve once boot delay is taken into account.

use brownout_sim::engine::Simulation;
use brownout_sim::model::{PolicyName, SimConfig};
use brownout_sim::policies::autoscale;
use brownout_sim::workload::Trace;

fn main() -> brownout_sim::Result<()> {
    for rate in [0.0, 40.0, 95.0, 100.0, 101.0, 640.0, 5000.0] {
        println!("predicted {rate:>6} req -> {} hosts", autoscale(0, rate, 100.0, 10, 1));
    }

    let mut config = SimConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample.json"))?;
    config.policy_name = PolicyName::Autos;
    config.hosts.boot_delay = 2;

    let mut rates = vec![200; 10];
    rates.extend([900; 15]);
    rates.extend([150; 10]);
    let trace = Trace::from_rates(rates, 60.0);

    let mut sim = Simulation::new(&config, &trace)?;
    println!("\n  t  requests  predicted  active  booting  errors");
    for t in 0..trace.len() {
        let r = sim.step(t)?;
        let booting = sim.hosts().iter().filter(|h| h.mode == brownout_sim::model::HostMode::Booting).count();
        println!(
            "{t:>3}  {:>8}  {:>9.1}  {:>6}  {booting:>7}  {:>6}",
            r.requests, r.predicted_rate, r.active_hosts, r.errors
        );
    }
    Ok(())
}
