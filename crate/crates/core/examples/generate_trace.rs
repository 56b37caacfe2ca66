//! Writes a synthetic one-day request trace.
//!
//!     cargo run --example generate_trace -- data/diurnal_trace.csv [seed]

use std::fs::File;
use std::io::BufWriter;

use brownout_sim::workload::{synthetic_diurnal, write_trace_csv, DiurnalShape};

fn main() -> brownout_sim::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "diurnal_trace.csv".to_string());
    let seed = args.next().map_or(2017, |s| s.parse().expect("seed must be an integer"));

    let shape = DiurnalShape::default();
    let counts = synthetic_diurnal(&shape, seed);
    let file = File::create(&path).map_err(|e| brownout_sim::Error::InvalidArgument(format!("{path}: {e}")))?;
    write_trace_csv(BufWriter::new(file), &counts, 60.0)?;

    let peak = counts.iter().cloned().fold(0.0, f64::max);
    let low = counts.iter().cloned().fold(f64::MAX, f64::min);
    println!("wrote {} intervals to {path} ({low}..{peak} requests/min)", counts.len());
    Ok(())
}
