//! Host power curve lookups in both directions, plus a day of energy.

use brownout_sim::model::{HostMode, PowerProfile};
use brownout_sim::power::{hpm, hum, EnergyAccumulator};

fn main() -> brownout_sim::Result<()> {
    let v20z = PowerProfile::sun_fire_v20z();
    let linear = v20z.linearized();

    println!("util   table W   linear W");
    for step in 0..=20 {
        let u = step as f64 / 20.0;
        println!(
            "{u:>4.2}   {:>7.1}   {:>8.1}",
            hum(&v20z, HostMode::Active, u),
            hum(&linear, HostMode::Active, u)
        );
    }
    println!("asleep {} W, off {} W", hum(&v20z, HostMode::Sleep, 0.0), hum(&v20z, HostMode::Off, 0.0));

    // inverse: how busy is a host drawing 228 W?
    println!("228 W -> utilization {:.3}", hpm(&v20z, 228.0)?);
    if let Err(e) = hpm(&v20z, 250.0) {
        println!("250 W -> {e}");
    }

    let mut energy = EnergyAccumulator::new();
    for minute in 0..1440 {
        let busy = if (480..1080).contains(&minute) { 0.7 } else { 0.1 };
        let watts = [
            ("web-1", hum(&v20z, HostMode::Active, busy)),
            ("web-2", hum(&v20z, HostMode::Sleep, 0.0)),
        ];
        energy.accumulate(watts.iter().map(|(h, w)| (*h, *w)), 60.0)?;
    }
    for (host, wh) in &energy.per_host_wh {
        println!("{host}: {:.3} kWh", wh / 1000.0);
    }
    println!("total {:.3} kWh", energy.total_kwh());
    Ok(())
}
