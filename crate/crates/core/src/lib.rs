//! Deterministic simulator for brownout-based energy management of
//! container clouds.
//!
//! A run replays a request trace against a fleet of hosts. Each interval an
//! auto-scaler sizes the fleet from a sliding-window rate prediction and,
//! for brownout policies, a controller deactivates optional containers on
//! overloaded hosts. The run reports energy, overload ratios, response-time
//! statistics and failed-request ratios.
//!
//! ```no_run
//! use brownout_sim::{engine, model::SimConfig, workload};
//!
//! let config = SimConfig::load("data/sample.json")?;
//! let trace = workload::load_trace(config.trace_path(), config.trace.scale, config.trace.interval_seconds)?;
//! let result = engine::simulate(&config, &trace)?;
//! println!("{:.2} kWh", result.energy_kwh);
//! # Ok::<(), brownout_sim::Error>(())
//! ```

pub mod cli;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod model;
pub mod policies;
pub mod power;
pub mod qos;
pub mod workload;

pub use error::{Error, Result};
