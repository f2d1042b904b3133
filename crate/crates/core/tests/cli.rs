use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use asf_bounds::cli::RunManifest;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_asf-bounds"));
    c.env_remove("ASF_BOUNDS_WORKERS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn simulate(dir: &TempDir, n: usize, seed: u64) -> PathBuf {
    let out = dir.path().join(format!("sim-{n}-{seed}"));
    let status = run(&["simulate", "--n", &n.to_string(), "--seed", &seed.to_string(), "--out", out.to_str().unwrap()]);
    assert!(status.status.success());
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_reproducible_files() {
    let dir = TempDir::new().unwrap();
    let a = simulate(&dir, 1000, 7);
    let matched = fs::read_to_string(a.join("matched.csv")).unwrap();
    assert_eq!(matched.lines().count(), 1001);
    assert!(a.join("revealed.csv").exists() && a.join("stated.csv").exists());

    let b = dir.path().join("again");
    assert!(run(&["simulate", "--n", "1000", "--seed", "7", "--out", s(&b)]).status.success());
    for f in ["matched.csv", "revealed.csv", "stated.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let manifest = RunManifest::load(&a.join("manifest.json")).unwrap();
    assert_eq!(manifest.command, "simulate");
    assert!(manifest.stale_files().unwrap().is_empty());
}

#[test]
fn unwritable_output_exits_2() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = run(&["simulate", "--n", "10", "--out", s(&blocker.join("sub"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"kind\":\"io\""));
}

#[test]
fn bounds_on_large_simulated_sample() {
    let dir = TempDir::new().unwrap();
    let d = simulate(&dir, 100_000, 1);
    let v = json(&run(&["bounds", s(&d.join("revealed.csv")), s(&d.join("stated.csv")), "--x", "0"]));
    let (lo, hi) = (v["lower"].as_f64().unwrap(), v["upper"].as_f64().unwrap());
    assert!((lo - 0.371).abs() < 0.02 && (hi - 0.654).abs() < 0.02, "{lo} {hi}");
    assert_eq!(v["per_z"].as_array().unwrap().len(), 2);
}

#[test]
fn bounds_with_impossible_floor_exits_1() {
    let dir = TempDir::new().unwrap();
    let d = simulate(&dir, 500, 2);
    let out = run(&[
        "bounds", s(&d.join("revealed.csv")), s(&d.join("stated.csv")), "--x", "0", "--z-drop-floor", "1000000000",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no retained z"));
}

#[test]
fn atoms_fixture_matches_two_point_example() {
    let v = json(&run(&[
        "bounds",
        s(&fixture("atoms_revealed.csv")),
        s(&fixture("atoms_stated.csv")),
        "--x", "1", "--p-mode", "discrete", "--z-drop-floor", "1",
    ]));
    assert!((v["lower"].as_f64().unwrap() - 0.375).abs() < 1e-9);
    assert!((v["upper"].as_f64().unwrap() - 0.75).abs() < 1e-9);
}

fn infer_args<'a>(d: &'a Path, extra: &[&'a str]) -> Vec<String> {
    let mut a: Vec<String> = ["infer", s(&d.join("revealed.csv")), s(&d.join("stated.csv")), "--x", "0", "--B", "200", "--seed", "11"]
        .iter()
        .map(|v| v.to_string())
        .collect();
    a.extend(extra.iter().map(|v| v.to_string()));
    a
}

#[test]
fn infer_is_deterministic_and_follows_the_formula() {
    let dir = TempDir::new().unwrap();
    let d = simulate(&dir, 500, 3);
    let draws = dir.path().join("draws.csv");
    let args = infer_args(&d, &["--draws-out", s(&draws)]);
    let first = bin().args(&args).output().unwrap();
    let second = bin().args(&args).output().unwrap();
    assert_eq!(first.stdout, second.stdout);

    let with_env = bin().args(infer_args(&d, &[])).env("ASF_BOUNDS_WORKERS", "3").output().unwrap();
    assert_eq!(first.stdout, with_env.stdout);

    let v = json(&first);
    let mut rdr = csv::Reader::from_path(&draws).unwrap();
    let rows: Vec<(f64, f64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[1].parse().unwrap(), r[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 200);
    let mut lower: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut upper: Vec<f64> = rows.iter().map(|r| r.1).collect();
    lower.sort_by(|a, b| b.total_cmp(a));
    upper.sort_by(|a, b| b.total_cmp(a));
    let r_n = v["r_n"].as_f64().unwrap();
    // B = 200, alpha = 0.05: 5th and 195th largest draws.
    let lo = v["lb_hat"].as_f64().unwrap() - lower[4] / r_n;
    let hi = v["ub_hat"].as_f64().unwrap() - upper[194] / r_n;
    assert!((v["lo"].as_f64().unwrap() - lo).abs() < 1e-12);
    assert!((v["hi"].as_f64().unwrap() - hi).abs() < 1e-12);
    assert!((r_n - 500f64.powf(0.4)).abs() < 1e-12);
}

#[test]
fn smaller_alpha_gives_a_wider_region() {
    let dir = TempDir::new().unwrap();
    let d = simulate(&dir, 500, 4);
    let wide = json(&bin().args(infer_args(&d, &["--alpha", "0.05"])).output().unwrap());
    let narrow = json(&bin().args(infer_args(&d, &["--alpha", "0.5"])).output().unwrap());
    assert!(wide["lo"].as_f64() <= narrow["lo"].as_f64());
    assert!(wide["hi"].as_f64() >= narrow["hi"].as_f64());
}

#[test]
fn matched_command_reports_interval() {
    let dir = TempDir::new().unwrap();
    let d = simulate(&dir, 3000, 5);
    let out_file = dir.path().join("matched.json");
    let out = run(&["matched", s(&d.join("matched.csv")), "--x", "1", "--B", "50", "--seed", "2", "--out", s(&out_file)]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&fs::read_to_string(&out_file).unwrap()).unwrap();
    let mu = v["mu_hat"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&mu));
    assert_eq!(v["B"], 50);
    let ci = v["ci"].as_array().unwrap();
    assert!(ci[0].as_f64() <= ci[1].as_f64());
    let manifest = RunManifest::load(&dir.path().join("matched.manifest.json")).unwrap();
    assert_eq!(manifest.inputs.len(), 1);
    assert!(manifest.stale_files().unwrap().is_empty());
}

#[test]
fn analytic_values_and_domain_error() {
    let v = json(&run(&["analytic", "--x", "0"]));
    assert!((v["true_asf"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["lower"].as_f64().unwrap() - 0.371).abs() < 2e-3);
    assert!((v["upper"].as_f64().unwrap() - 0.654).abs() < 2e-3);
    assert!((v["e"]["z0"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((v["e"]["z1"].as_f64().unwrap() - 0.5).abs() < 1e-12);

    let v = json(&run(&["analytic", "--x", "1"]));
    assert!((v["e"]["z1"].as_f64().unwrap() - 0.8270).abs() < 5e-4);

    let out = run(&["analytic", "--x", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"kind\":\"domain\""));
}

#[test]
fn replicate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["replicate", "--scale", "desk", "--repetitions", "2", "--seed", "1", "--out", s(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let table = fs::read_to_string(a.join("coverage.csv")).unwrap();
    assert_eq!(table, fs::read_to_string(b.join("coverage.csv")).unwrap());
    assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(b.join("report.json")).unwrap());
    assert_eq!(table.lines().count(), 1 + 2 * 4);
    assert!(table.starts_with("n,xi_scale,coverage,excess_length,M,B,failures\n"));
}

#[test]
fn malformed_csv_exits_2_with_row() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "d,p1,x\n1,0.5,1\n1,1.5,0\n").unwrap();
    let out = run(&["matched", s(&bad), "--x", "1", "--B", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["bounds"]).status.code(), Some(2));
    assert_eq!(run(&["analytic", "--x", "0", "--K=-1"]).status.code(), Some(2));
    assert_eq!(run(&["analytic", "--x", "0", "--grid-m", "1000"]).status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    let d = simulate(&dir, 200, 6);
    let out = run(&["infer", s(&d.join("revealed.csv")), s(&d.join("stated.csv")), "--x", "0", "--B", "5"]);
    assert_eq!(out.status.code(), Some(2));
}
