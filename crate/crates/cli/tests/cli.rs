//! End-to-end tests of the `conical-glimm` binary: exit codes, written
//! files, determinism and the stable output schema.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin(args: &[&str], config: Option<&str>, out: &Path) -> Output {
    let dir = out.parent().unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_conical-glimm"));
    cmd.args(args).arg("--out").arg(out).env("CONICAL_GLIMM_THREADS", "2");
    if let Some(text) = config {
        let path = dir.join(format!("{}.toml", out.file_name().unwrap().to_string_lossy()));
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn sorted_keys(v: &Value) -> Vec<String> {
    let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
    k.sort();
    k
}

const KINK_M50: &str = r#"
schema_version = 1
[gas]
u_inf = 50.0
[boundary]
kind = "kink"
[boundary.parameters]
xi = 20.0
delta = 0.005
[scheme]
n_steps = 200
"#;

#[test]
fn straight_background_end_to_end() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("bg");
    let o = bin(&["background"], None, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(&out.join("background.json"));
    assert_eq!(j["invariants"]["nodes_checked"], 512);
    assert!(j["boundary_residual"].as_f64().unwrap() <= 1e-8);
    assert!(j["within_attachment_band"].as_bool().unwrap());
    let gap = j["s0_minus_b0"].as_f64().unwrap();
    assert!(gap < 0.0 && gap > -1e-3);
    let csv = fs::read_to_string(out.join("background.csv")).unwrap();
    let first = csv.lines().nth(1).unwrap();
    let mantissa = first.split(',').nth(1).unwrap().split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
}

#[test]
fn malformed_config_exits_2() {
    let tmp = TempDir::new().unwrap();
    for bad in ["schema_version = 1\n[gas]\nmach = 3\n", "schema_version = 1\n[gas]\nu_inf = 0.5\n", "not toml ="] {
        let o = bin(&["run"], Some(bad), &tmp.path().join("bad"));
        assert_eq!(o.status.code(), Some(2), "config {bad:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = bin(&["background", "--mach-sweep", "8:0:16"], None, &tmp.path().join("sweep"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mach_sweep_writes_one_row_per_mach() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("sweep");
    let o = bin(&["background", "--mach-sweep", "8:4:16"], None, &out);
    assert!(o.status.success());
    let csv = fs::read_to_string(out.join("expansion_sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("mach,lambda1,lambda1_residual"));
    let machs: Vec<f64> = rows[1..].iter().map(|r| r.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(machs, vec![8.0, 12.0, 16.0]);
}

#[test]
fn polar_checks_hold() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("polar");
    let o = bin(&["polar", "--rows", "200"], None, &out);
    assert!(o.status.success());
    let j = json(&out.join("polar.json"));
    assert!(j["theta_strictly_increasing"].as_bool().unwrap());
    assert!(j["density_increases_on_admissible_rows"].as_bool().unwrap());
    assert!(j["max_rh_residual"].as_f64().unwrap() < 1e-10);
    // The attached shock turns the flow onto the cone.
    assert!((j["s_plus_flow_slope"].as_f64().unwrap() + 0.5).abs() < 1e-10);
    let csv = fs::read_to_string(out.join("polar.csv")).unwrap();
    assert_eq!(csv.lines().count(), 202);
    assert_eq!(csv.lines().filter(|l| l.ends_with(",true")).count(), 1);
}

#[test]
fn run_is_deterministic_and_straight_cone_stays_put() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = bin(&["run", "--seed", "7"], None, out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["summary.json", "front.csv", "slices/slice_000100.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs between replays");
    }
    let s = json(&a.join("summary.json"));
    assert_eq!(s["seed"], 7);
    assert_eq!(s["steps_completed"], 200);
    assert!(s["max_deviation"].as_f64().unwrap() <= 5e-3);
    assert!(s["max_front_drift"].as_f64().unwrap() <= 5e-3);
}

#[test]
fn kinked_run_moves_the_limit_and_keeps_the_functional_monotone() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("kink");
    let o = bin(&["run"], Some(KINK_M50), &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&out.join("summary.json"));
    assert_ne!(s["s_inf"].as_f64().unwrap(), s["s0"].as_f64().unwrap());
    assert!(s["F_monotone_fraction"].as_f64().unwrap() >= 0.95);
    assert!(s["interaction_bound_holds"].as_bool().unwrap());
    assert!(s["tv_ratio"].as_f64().unwrap() <= 3.0);
}

#[test]
fn report_writes_history_and_verdict() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("rep");
    let o = bin(&["report"], None, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out.join("verdict.json"));
    assert!(v["all_pass"].as_bool().unwrap());
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 201);
}

#[test]
fn verify_passes_at_default_mach() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("v");
    let o = bin(&["verify"], None, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let v = json(&out.join("verify.json"));
    assert!(v["all_pass"].as_bool().unwrap());
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for n in ["identity_eigen_forms", "contraction", "weight_feasibility", "expansion_order_lambda1"] {
        assert!(names.contains(&n), "missing check {n}");
    }
}

#[test]
fn verify_fails_with_values_at_low_mach() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("m2");
    let o = bin(&["verify"], Some("schema_version = 1\n[gas]\nu_inf = 2.0\n"), &out);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&out.join("verify.json"));
    assert!(!v["all_pass"].as_bool().unwrap());
    let failed: Vec<&Value> =
        v["checks"].as_array().unwrap().iter().filter(|c| !c["pass"].as_bool().unwrap()).collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|c| !c["detail"].as_str().unwrap().is_empty()));
}

#[test]
fn output_schema_matches_golden() {
    let golden: Value = serde_json::from_str(include_str!("golden/schema.json")).unwrap();
    let tmp = TempDir::new().unwrap();
    let t = tmp.path();
    assert!(bin(&["background"], None, &t.join("bg")).status.success());
    assert!(bin(&["polar"], None, &t.join("p")).status.success());
    assert!(bin(&["run"], None, &t.join("r")).status.success());
    assert!(bin(&["report"], None, &t.join("rep")).status.success());
    assert!(bin(&["verify"], None, &t.join("v")).status.success());
    let keys = |name: &str, path: &Path| {
        let want: Vec<String> = serde_json::from_value(golden[name].clone()).unwrap();
        assert_eq!(sorted_keys(&json(path)), want, "{name} keys changed");
    };
    keys("background.json", &t.join("bg/background.json"));
    keys("polar.json", &t.join("p/polar.json"));
    keys("summary.json", &t.join("r/summary.json"));
    keys("verdict.json", &t.join("rep/verdict.json"));
    keys("verify.json", &t.join("v/verify.json"));
    let header = |path: &Path| fs::read_to_string(path).unwrap().lines().next().unwrap().to_string();
    let h = &golden["csv_headers"];
    assert_eq!(header(&t.join("bg/background.csv")), h["background.csv"]);
    assert_eq!(header(&t.join("p/polar.csv")), h["polar.csv"]);
    assert_eq!(header(&t.join("r/front.csv")), h["front.csv"]);
    assert_eq!(header(&t.join("r/slices/slice_000000.csv")), h["slice"]);
    assert_eq!(header(&t.join("rep/report.csv")), h["report.csv"]);
}
