use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use brownout_sim::model::SimConfig;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_brownout-sim"))
}

/// Sample config pointed at a short trace, both inside a temp dir.
fn setup() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let mut trace = String::from("t,requests\n");
    for t in 0..40 {
        let r = if (15..25).contains(&t) { 17_000 } else { 9_000 };
        trace += &format!("{},{}\n", t * 60, r);
    }
    fs::write(dir.path().join("trace.csv"), trace).unwrap();
    let sample = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample.json");
    let mut config = SimConfig::load(sample).unwrap();
    config.trace.path = PathBuf::from("trace.csv");
    let path = dir.path().join("config.json");
    fs::write(&path, config.to_json_pretty()).unwrap();
    (dir, path)
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    bin().args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_outputs() {
    let (dir, config) = setup();
    let out = dir.path().join("run");
    let o = run(&["run", "--policy", "LUCF"], &config, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("result.json").is_file());
    let csv = fs::read_to_string(out.join("intervals.csv")).unwrap();
    assert!(csv.starts_with("t,requests,active_hosts,total_power_w,overloaded_hosts,errors,deactivated\n"));
    assert_eq!(csv.lines().count(), 41);
}

#[test]
fn same_seed_same_bytes() {
    let (dir, config) = setup();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert!(run(&["run", "--policy", "RSC", "--seed", "42"], &config, out).status.success());
    }
    for f in ["result.json", "intervals.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn bad_policy_exits_2() {
    let (dir, config) = setup();
    let o = run(&["run", "--policy", "BOGUS"], &config, &dir.path().join("x"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_config_lists_violations() {
    let (dir, config) = setup();
    let mut c = SimConfig::load(&config).unwrap();
    c.policy.overloaded_threshold = 1.5;
    c.policy.window_size = 0;
    fs::write(&config, c.to_json_pretty()).unwrap();
    let o = bin().arg("validate").arg("--config").arg(&config).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("overloaded_threshold") && err.contains("window_size"), "{err}");
    let o = run(&["run"], &config, &dir.path().join("x"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_trace_exits_3() {
    let (dir, config) = setup();
    fs::remove_file(dir.path().join("trace.csv")).unwrap();
    let o = run(&["run"], &config, &dir.path().join("x"));
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn validate_accepts_sample() {
    let (_dir, config) = setup();
    let o = bin().arg("validate").arg("--config").arg(&config).output().unwrap();
    assert!(o.status.success());
}

fn summary_rows(out: &Path) -> Vec<csv::StringRecord> {
    let text = fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    rdr.records().map(Result::unwrap).collect()
}

#[test]
fn compare_policies_then_report() {
    let (dir, config) = setup();
    let out = dir.path().join("cmp");
    let o = run(&["compare", "--policy", "NPA,AUTOS,LUCF"], &config, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = stdout(&o);
    assert_eq!(summary_rows(&out).len(), 3);
    for name in ["NPA", "AUTOS", "LUCF-40"] {
        assert!(table.contains(name), "{table}");
    }

    let csv_before = fs::read(out.join("summary.csv")).unwrap();
    let o = bin().arg("report").arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success());
    assert_eq!(stdout(&o), table);
    assert_eq!(fs::read(out.join("summary.csv")).unwrap(), csv_before);
}

#[test]
fn optional_share_sweep_names_rows() {
    let (dir, config) = setup();
    let out = dir.path().join("pct");
    let o = run(&["compare", "--policy", "LUCF", "--optional-pct", "0.1,0.2,0.3,0.4"], &config, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let names: Vec<String> = summary_rows(&out).iter().map(|r| r[0].to_string()).collect();
    assert_eq!(names, ["LUCF-10", "LUCF-20", "LUCF-30", "LUCF-40"]);
}

#[test]
fn repetitions_get_distinct_seeds() {
    let (dir, config) = setup();
    let out = dir.path().join("reps");
    let o = run(&["compare", "--policy", "RSC", "--reps", "3", "--seed", "7"], &config, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = summary_rows(&out);
    assert_eq!(rows.len(), 3);
    let seeds = fs::read_to_string(out.join("summary.csv")).unwrap();
    for s in ["7", "8", "9"] {
        assert!(rows.iter().any(|r| r.iter().any(|f| f == s)), "seed {s} missing:\n{seeds}");
    }
}

#[test]
fn summary_energy_matches_intervals() {
    let (dir, config) = setup();
    let out = dir.path().join("e");
    assert!(run(&["compare", "--policy", "AUTOS,MNCF"], &config, &out).status.success());
    for entry in fs::read_dir(out.join("cells")).unwrap() {
        let cell = entry.unwrap().path();
        let result: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(cell.join("result.json")).unwrap()).unwrap();
        let mut rdr = csv::Reader::from_path(cell.join("intervals.csv")).unwrap();
        let wh: f64 = rdr
            .records()
            .map(|r| r.unwrap()[3].parse::<f64>().unwrap() * 60.0 / 3600.0)
            .sum();
        let kwh = result["energy_kwh"].as_f64().unwrap();
        assert!((kwh - wh / 1000.0).abs() < 1e-6, "{kwh} vs {}", wh / 1000.0);
    }
}
