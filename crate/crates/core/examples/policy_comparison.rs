//! All five policies on the shipped day, written as a sweep directory.
//!
//!     cargo run --release --example policy_comparison -- [out-dir]

use std::path::PathBuf;

use brownout_sim::experiment::{run_experiment, summary_table, ExperimentSpec, SweepAxis};
use brownout_sim::model::{PolicyName, SimConfig};
use brownout_sim::workload::load_trace;

fn main() -> brownout_sim::Result<()> {
    let config_path = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample.json"));
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("brownout-policy-comparison"));

    let config = SimConfig::load(&config_path)?;
    let trace = load_trace(config.trace_path(), config.trace.scale, config.trace.interval_seconds)?;
    let spec = ExperimentSpec {
        base_config: config_path,
        axes: vec![SweepAxis::PolicyName(vec![
            PolicyName::Npa,
            PolicyName::Autos,
            PolicyName::Lucf,
            PolicyName::Mncf,
            PolicyName::Rsc,
        ])],
        repetitions: 1,
        out_dir: out.clone(),
    };
    let rows = run_experiment(&spec, &config, &trace)?;
    print!("{}", summary_table(&rows));

    let npa = rows.iter().find(|r| r.policy == PolicyName::Npa).map(|r| r.energy_kwh);
    let autos = rows.iter().find(|r| r.policy == PolicyName::Autos).map(|r| r.energy_kwh);
    if let (Some(npa), Some(autos)) = (npa, autos) {
        for r in rows.iter().filter(|r| r.policy.uses_brownout()) {
            println!(
                "{} saves {:.1}% vs NPA, {:.1}% vs AUTOS",
                r.name,
                (1.0 - r.energy_kwh / npa) * 100.0,
                (1.0 - r.energy_kwh / autos) * 100.0
            );
        }
    }
    println!("outputs in {}", out.display());
    Ok(())
}
