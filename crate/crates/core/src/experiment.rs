//! Single runs and parameter sweeps, with their on-disk outputs.
//!
//! A run directory holds `result.json` and `intervals.csv`. A sweep writes one
//! run directory per cell under `cells/`, an `experiment.json` manifest, and
//! the summary as `summary.csv` and `summary.txt`. [`report`] rebuilds the
//! summary from an existing sweep directory without simulating anything.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{simulate, RunResult};
use crate::error::{Error, Result};
use crate::model::{PolicyName, SimConfig, Violation};
use crate::workload::Trace;

pub const RESULT_FILE: &str = "result.json";
pub const INTERVALS_FILE: &str = "intervals.csv";
pub const MANIFEST_FILE: &str = "experiment.json";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_TXT: &str = "summary.txt";

/// A swept parameter and the values it takes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "parameter", content = "values", rename_all = "snake_case")]
pub enum SweepAxis {
    PolicyName(Vec<PolicyName>),
    OverloadedThreshold(Vec<f64>),
    OptionalUtilPct(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub base_config: PathBuf,
    pub axes: Vec<SweepAxis>,
    pub repetitions: usize,
    pub out_dir: PathBuf,
}

/// One point of the sweep grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub policy: PolicyName,
    pub overloaded_threshold: f64,
    pub optional_util_pct: f64,
    pub repetition: usize,
    pub seed: u64,
}

impl Cell {
    /// Row label in the style `LUCF-40`; policies without brownout have no suffix.
    pub fn name(&self) -> String {
        if self.policy.uses_brownout() {
            format!("{}-{:.0}", self.policy, self.optional_util_pct * 100.0)
        } else {
            self.policy.to_string()
        }
    }

    pub fn dir_name(&self) -> String {
        format!(
            "{}-ut{:.0}-opt{:.0}-r{}",
            self.policy,
            self.overloaded_threshold * 100.0,
            self.optional_util_pct * 100.0,
            self.repetition
        )
    }

    /// `base` with this cell's parameters applied.
    pub fn configure(&self, base: &SimConfig) -> Result<SimConfig> {
        let mut config = base.clone();
        config.policy_name = self.policy;
        config.policy.overloaded_threshold = self.overloaded_threshold;
        config.policy.seed = self.seed;
        if config.policy.optional_util_pct != self.optional_util_pct {
            config.set_optional_pct(self.optional_util_pct)?;
        }
        Ok(config)
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.repetitions == 0 {
            out.push(Violation::new("repetitions", "must be at least 1"));
        }
        for axis in &self.axes {
            match axis {
                SweepAxis::PolicyName(v) if v.is_empty() => {
                    out.push(Violation::new("axes.policy_name", "needs at least one value"))
                }
                SweepAxis::OverloadedThreshold(v) => {
                    if v.is_empty() || v.iter().any(|u| !(0.5..=1.0).contains(u)) {
                        out.push(Violation::new(
                            "axes.overloaded_threshold",
                            "values must lie in [0.5, 1.0]",
                        ));
                    }
                }
                SweepAxis::OptionalUtilPct(v) => {
                    if v.is_empty() || v.iter().any(|p| !(0.0..=0.5).contains(p)) {
                        out.push(Violation::new(
                            "axes.optional_util_pct",
                            "values must lie in [0, 0.5]",
                        ));
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// Grid cells in axis order, repetitions innermost. Repetition `r` uses
    /// seed `base_seed + r`.
    pub fn cells(&self, base: &SimConfig) -> Vec<Cell> {
        let mut policies = vec![base.policy_name];
        let mut thresholds = vec![base.policy.overloaded_threshold];
        let mut pcts = vec![base.policy.optional_util_pct];
        for axis in &self.axes {
            match axis {
                SweepAxis::PolicyName(v) => policies = v.clone(),
                SweepAxis::OverloadedThreshold(v) => thresholds = v.clone(),
                SweepAxis::OptionalUtilPct(v) => pcts = v.clone(),
            }
        }
        let mut cells = Vec::new();
        for &policy in &policies {
            for &threshold in &thresholds {
                for &pct in &pcts {
                    for repetition in 0..self.repetitions {
                        cells.push(Cell {
                            policy,
                            overloaded_threshold: threshold,
                            optional_util_pct: pct,
                            repetition,
                            seed: base.policy.seed.wrapping_add(repetition as u64),
                        });
                    }
                }
            }
        }
        cells
    }
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub policy: PolicyName,
    pub overloaded_threshold: f64,
    pub optional_util_pct: f64,
    pub repetition: usize,
    pub seed: u64,
    pub fleet_size: usize,
    pub energy_kwh: f64,
    pub avg_response_ms: Option<f64>,
    pub percentile_k: u32,
    pub p_kth_response_ms: Option<f64>,
    pub slavr: Option<f64>,
    pub otr_mean: f64,
}

impl SummaryRow {
    pub fn new(cell: &Cell, result: &RunResult) -> Self {
        SummaryRow {
            name: cell.name(),
            policy: cell.policy,
            overloaded_threshold: cell.overloaded_threshold,
            optional_util_pct: cell.optional_util_pct,
            repetition: cell.repetition,
            seed: cell.seed,
            fleet_size: result.fleet_size,
            energy_kwh: result.energy_kwh,
            avg_response_ms: result.avg_response_ms,
            percentile_k: result.percentile_k,
            p_kth_response_ms: result.p_kth_response_ms,
            slavr: result.slavr,
            otr_mean: result.otr_mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    spec: ExperimentSpec,
    cells: Vec<Cell>,
}

/// Writes `contents` next to `path` and renames it into place.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Per-interval CSV: `t,requests,active_hosts,total_power_w,overloaded_hosts,errors,deactivated`.
pub fn intervals_csv(result: &RunResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "t",
        "requests",
        "active_hosts",
        "total_power_w",
        "overloaded_hosts",
        "errors",
        "deactivated",
    ])?;
    for r in &result.interval_records {
        w.write_record([
            r.t.to_string(),
            r.requests.to_string(),
            r.active_hosts.to_string(),
            r.total_power_w().to_string(),
            r.overloaded_hosts().to_string(),
            r.errors.to_string(),
            r.deactivated_containers.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `result.json` and `intervals.csv` into `dir`.
pub fn write_run_outputs(dir: &Path, result: &RunResult) -> Result<()> {
    create_dir(dir)?;
    let json = serde_json::to_string_pretty(result)?;
    write_atomic(&dir.join(RESULT_FILE), json.as_bytes())?;
    write_atomic(&dir.join(INTERVALS_FILE), intervals_csv(result)?.as_bytes())
}

pub fn read_result(dir: &Path) -> Result<RunResult> {
    let path = dir.join(RESULT_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Simulates one config and writes its outputs to `out_dir`.
pub fn run_single(config: &SimConfig, trace: &Trace, out_dir: &Path) -> Result<RunResult> {
    let result = simulate(config, trace)?;
    write_run_outputs(out_dir, &result)?;
    Ok(result)
}

/// Runs every cell of the sweep (in parallel) and writes all outputs.
pub fn run_experiment(spec: &ExperimentSpec, base: &SimConfig, trace: &Trace) -> Result<Vec<SummaryRow>> {
    let violations = spec.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidConfig(violations));
    }
    let cells = spec.cells(base);
    let configs = cells
        .iter()
        .map(|c| c.configure(base))
        .collect::<Result<Vec<_>>>()?;
    let bad: Vec<Violation> = configs.iter().flat_map(SimConfig::validate).collect();
    if !bad.is_empty() {
        return Err(Error::InvalidConfig(bad));
    }

    let cells_dir = spec.out_dir.join("cells");
    let rows = cells
        .par_iter()
        .zip(configs.par_iter())
        .map(|(cell, config)| {
            let result = run_single(config, trace, &cells_dir.join(cell.dir_name()))?;
            Ok(SummaryRow::new(cell, &result))
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = Manifest {
        spec: spec.clone(),
        cells,
    };
    write_atomic(
        &spec.out_dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;
    write_summary(&spec.out_dir, &rows)?;
    Ok(rows)
}

/// Rebuilds the summary of an existing sweep from its stored results.
pub fn report(out_dir: &Path) -> Result<Vec<SummaryRow>> {
    let path = out_dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let cells_dir = out_dir.join("cells");
    manifest
        .cells
        .iter()
        .map(|cell| Ok(SummaryRow::new(cell, &read_result(&cells_dir.join(cell.dir_name()))?)))
        .collect()
}

pub fn write_summary(out_dir: &Path, rows: &[SummaryRow]) -> Result<()> {
    create_dir(out_dir)?;
    write_atomic(&out_dir.join(SUMMARY_CSV), summary_csv(rows)?.as_bytes())?;
    write_atomic(&out_dir.join(SUMMARY_TXT), summary_table(rows).as_bytes())
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Machine-readable summary; ratios are raw fractions (see column suffixes).
pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "name",
        "policy",
        "overloaded_threshold_frac",
        "optional_util_frac",
        "repetition",
        "seed",
        "fleet_size",
        "energy_kwh",
        "avg_response_ms",
        "percentile_k",
        "pk_response_ms",
        "slavr_frac",
        "otr_mean_frac",
    ])?;
    for r in rows {
        w.write_record([
            r.name.clone(),
            r.policy.to_string(),
            r.overloaded_threshold.to_string(),
            r.optional_util_pct.to_string(),
            r.repetition.to_string(),
            r.seed.to_string(),
            r.fleet_size.to_string(),
            r.energy_kwh.to_string(),
            opt(r.avg_response_ms),
            r.percentile_k.to_string(),
            opt(r.p_kth_response_ms),
            opt(r.slavr),
            r.otr_mean.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Aligned text table in kWh, ms and percent.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let k = rows.first().map_or(95, |r| r.percentile_k);
    let header = [
        "Policy".to_string(),
        "u_t".into(),
        "Rep".into(),
        "Hosts".into(),
        "Energy (kWh)".into(),
        "Avg resp (ms)".into(),
        format!("P{k} resp (ms)"),
        "SLA viol (%)".into(),
        "OTR (%)".into(),
    ];
    let fmt_opt = |v: Option<f64>, scale: f64, prec: usize| {
        v.map_or_else(|| "-".to_string(), |v| format!("{:.*}", prec, v * scale))
    };
    let body: Vec<[String; 9]> = rows
        .iter()
        .map(|r| {
            [
                r.name.clone(),
                format!("{:.0}%", r.overloaded_threshold * 100.0),
                r.repetition.to_string(),
                r.fleet_size.to_string(),
                format!("{:.2}", r.energy_kwh),
                fmt_opt(r.avg_response_ms, 1.0, 1),
                fmt_opt(r.p_kth_response_ms, 1.0, 1),
                fmt_opt(r.slavr, 100.0, 3),
                format!("{:.1}", r.otr_mean * 100.0),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &header);
    let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    for row in &body {
        line(&mut out, row);
    }
    out
}
