//! Sliding-window and decay-weighted prediction over the shipped trace.

use brownout_sim::workload::{load_trace, Predictor};

fn main() -> brownout_sim::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/diurnal_trace.csv");
    let trace = load_trace(path, 0.05, 60.0)?;

    let predictors = [
        ("mean(5)", Predictor::new(5, None)),
        ("mean(15)", Predictor::new(15, None)),
        ("decay(15, 0.8)", Predictor::new(15, Some(0.8))),
    ];
    for (name, p) in predictors {
        let mut abs_err = 0.0;
        for t in 1..trace.len() {
            abs_err += (p.predict(&trace.rates[..t]) - trace.rates[t] as f64).abs();
        }
        println!("{name:<15} mean abs error {:.2} req/min", abs_err / (trace.len() - 1) as f64);
    }

    let p = Predictor::new(5, None);
    for t in (0..trace.len()).step_by(120) {
        println!("t={t:>4}  actual {:>5}  predicted {:>8.1}", trace.rates[t], p.predict(&trace.rates[..t]));
    }
    Ok(())
}
