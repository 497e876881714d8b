use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tpa_cli::sweep::read_csv;
use tpa_core::transitions::{closed_form, ThreeLevelAtom};
use tpa_core::wavefunctions::{make_sampled, write_grid, Biphoton, Family, GridSpec};

fn tpa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tpa"))
        .args(args)
        .env_remove("TPA_OUT_DIR")
        .output()
        .expect("tpa runs")
}

fn ok(args: &[&str]) -> String {
    let out = tpa(args);
    assert!(
        out.status.success(),
        "tpa {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

#[test]
fn csv_round_trip_reproduces_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let atom = ThreeLevelAtom::new(1.0, 1.0, 1.0, 1.0).unwrap();
    for (family, name, stop) in [
        (Family::Gaussian, "gaussian", 3.0),
        (Family::Rectangular, "rectangular", 4.0 * PI),
    ] {
        let csv = dir.path().join(format!("{name}.csv"));
        ok(&[
            "sweep", "--family", name, "--variable", "delta_tau", "--start", "0", "--stop",
            &stop.to_string(), "--count", "61", "--T", "1", "--tau", "0.01", "--out", s(&csv),
        ]);
        let table = read_csv(&csv).unwrap();
        assert_eq!(table.len(), 61);
        let xs = table.column("x").unwrap();
        for (k, &x) in xs.iter().enumerate() {
            let r = closed_form(family, &atom, 1.0, 0.01, x / 0.01).unwrap();
            for (col, want) in [("P1", r.p1), ("P2", r.p2), ("ratio", r.ratio.unwrap_or(f64::NAN))] {
                let got = table.column(col).unwrap()[k];
                if want.is_nan() {
                    assert!(got.is_nan(), "{name} {col} at x={x}");
                } else {
                    assert!(rel(got, want) <= 1e-12, "{name} {col} at x={x}: {got} vs {want}");
                }
            }
        }
        if family == Family::Rectangular {
            // P2 = π² r1 r2 A² sinc²(Δτ/2), A² = √(2/π³) τT
            let a_sq = (2.0 / PI.powi(3)).sqrt() * 0.01;
            let p2 = table.column("P2").unwrap();
            for (k, &x) in xs.iter().enumerate() {
                let sinc_half = if x == 0.0 { 1.0 } else { (x / 2.0).sin() / (x / 2.0) };
                let want = PI * PI * a_sq * sinc_half * sinc_half;
                assert!((p2[k] - want).abs() <= 1e-12 * PI * PI * a_sq, "x={x}");
                assert!((table.column("sinc_sq_half").unwrap()[k] - sinc_half * sinc_half).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn point_output_is_byte_identical_across_runs() {
    let args = ["point", "--family", "rectangular", "--T", "2", "--tau", "0.05", "--delta-tau", "1.7"];
    let a = ok(&args);
    let b = ok(&args);
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["family"], "rectangular");
    assert_eq!(v["path"], "closed-form");
    assert!(v["tolerances"].is_null());
}

#[test]
fn sweep_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for workers in ["1", "4"] {
        let csv = dir.path().join(format!("w{workers}.csv"));
        ok(&[
            "sweep", "--family", "gaussian", "--variable", "delta_tau", "--start", "0", "--stop", "2",
            "--count", "9", "--T", "1", "--tau", "0.1", "--path", "closed-form,quadrature",
            "--workers", workers, "--out", s(&csv),
        ]);
        files.push(fs::read(&csv).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn two_point_sweep_matches_point_calls() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("two.csv");
    ok(&[
        "sweep", "--family", "gaussian", "--variable", "delta_tau", "--start", "0.5", "--stop", "2.5",
        "--count", "2", "--T", "1", "--tau", "0.01", "--out", s(&csv),
    ]);
    let table = read_csv(&csv).unwrap();
    for (k, dt) in ["0.5", "2.5"].iter().enumerate() {
        let v: Value =
            serde_json::from_str(&ok(&["point", "--family", "gaussian", "--T", "1", "--tau", "0.01", "--delta-tau", dt]))
                .unwrap();
        assert_eq!(table.column("P1").unwrap()[k], v["result"]["p1"].as_f64().unwrap());
        assert_eq!(table.column("P2").unwrap()[k], v["result"]["p2"].as_f64().unwrap());
        assert_eq!(table.column("ratio").unwrap()[k], v["result"]["ratio"].as_f64().unwrap());
    }
}

#[test]
fn usage_errors_exit_with_two() {
    let out = tpa(&["point", "--family", "gaussian", "--delta-tau", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("T, tau"));

    let out = tpa(&["sweep", "--family", "gaussian"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"family\": \"gaussian\", \"T\": ").unwrap();
    for cmd in [&["point"][..], &["validate"][..]] {
        let mut args = vec!["--config", s(&bad)];
        args.extend_from_slice(cmd);
        assert_eq!(tpa(&args).status.code(), Some(2), "{cmd:?}");
    }
    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, r#"{"famly": "gaussian"}"#).unwrap();
    assert_eq!(tpa(&["--config", s(&unknown), "point"]).status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"family": "gaussian", "T": 1.0, "tau": 0.01, "delta_tau": 3.0}"#).unwrap();
    let from_file: Value = serde_json::from_str(&ok(&["--config", s(&cfg), "point"])).unwrap();
    assert_eq!(from_file["parameters"]["delta_tau"].as_f64(), Some(3.0));
    let overridden: Value =
        serde_json::from_str(&ok(&["--config", s(&cfg), "point", "--delta-tau", "0"])).unwrap();
    assert_eq!(overridden["parameters"]["delta_tau"].as_f64(), Some(0.0));
    assert!((overridden["result"]["p2"].as_f64().unwrap() - 2.0 * PI * 0.01).abs() < 1e-15);
}

#[test]
fn rectangular_sweep_finds_two_photon_zero() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rect.csv");
    let out = ok(&[
        "sweep", "--family", "rectangular", "--variable", "delta_tau", "--start", "0", "--stop",
        &(4.0 * PI).to_string(), "--count", "401", "--T", "1", "--tau", "0.01", "--out", s(&csv),
    ]);
    let summary: Value = serde_json::from_str(&out).unwrap();
    let zeros: Vec<f64> = summary["zeros"]["P2"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(zeros.len(), 1, "{zeros:?}");
    assert!((zeros[0] - 2.0 * PI).abs() < 4.0 * PI / 400.0);
    let p1_zeros: Vec<f64> = summary["zeros"]["P1"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(p1_zeros.len(), 3, "{p1_zeros:?}");
    for (z, k) in p1_zeros.iter().zip(1..) {
        assert!((z - k as f64 * PI).abs() < 1e-12, "{z}");
    }
    let on_disk: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("rect.summary.json")).unwrap()).unwrap();
    assert_eq!(on_disk, summary);
    assert_eq!(summary["rows"], 401);
    assert_eq!(summary["failed_points"], 0);
}

#[test]
fn gaussian_plasma_column_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("g.csv");
    ok(&[
        "sweep", "--family", "gaussian", "--variable", "delta_tau", "--start", "0", "--stop", "3",
        "--count", "301", "--T", "1", "--tau", "0.01", "--out", s(&csv),
    ]);
    let t = read_csv(&csv).unwrap();
    let f = t.column("F_sq").unwrap();
    assert!((f[0] - 1.0).abs() < 1e-15);
    assert!(f.windows(2).all(|w| w[1] < w[0]));
    let env = t.column("envelope").unwrap();
    for (x, e) in t.column("x").unwrap().iter().zip(env) {
        assert!(rel(*e, (-2.0 * x * x).exp()) < 1e-14);
    }
    assert_eq!(
        t.header,
        ["x", "P1", "P2", "ratio", "F_sq", "envelope", "flags"]
    );
}

#[test]
fn default_output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tpa"))
        .args([
            "sweep", "--family", "rectangular", "--variable", "T", "--start", "1", "--stop", "10",
            "--count", "4", "--spacing", "log", "--tau", "0.01", "--delta-tau", "3",
        ])
        .env("TPA_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = dir.path().join("sweep_rectangular_T.csv");
    let t = read_csv(&csv).unwrap();
    let xs = t.column("x").unwrap();
    assert_eq!((xs[0], xs[3]), (1.0, 10.0));
    for (k, x) in xs.iter().enumerate() {
        assert!(rel(*x, 10f64.powf(k as f64 / 3.0)) < 1e-15);
    }
    assert!(dir.path().join("sweep_rectangular_T.summary.json").exists());
}

#[test]
fn figures_writes_all_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["figures", "--out", s(dir.path())]);
    let summaries: Vec<Value> = serde_json::from_str(&out).unwrap();
    assert_eq!(summaries.len(), 4);
    for name in ["fig4a", "fig4b", "transparency_two_photon", "transparency_one_photon"] {
        assert!(dir.path().join(format!("{name}.csv")).exists(), "{name}");
        assert!(dir.path().join(format!("{name}.summary.json")).exists(), "{name}");
    }
    assert!(summaries.iter().all(|s| s["failed_points"] == 0));
    let a = read_csv(&dir.path().join("fig4a.csv")).unwrap();
    let (f, env, x) = (a.column("F_sq").unwrap(), a.column("envelope").unwrap(), a.column("x").unwrap());
    assert_eq!((f[0], env[0], x[300]), (1.0, 1.0, 3.0));
    for k in 0..x.len() {
        if x[k] > 1.0 {
            assert!(env[k] < f[k], "x={}", x[k]);
        }
    }
    let b = read_csv(&dir.path().join("fig4b.csv")).unwrap();
    let first_zero = |col: &str| {
        let xs: Vec<f64> = b.column("x").unwrap().to_vec();
        let ys = b.column(col).unwrap();
        tpa_cli::sweep::locate_zeros(&xs, ys)[0]
    };
    assert!((first_zero("sinc_sq_half") - 2.0 * PI).abs() < 1e-9);
    assert!((first_zero("envelope") - PI).abs() < 1e-9);
    let two = read_csv(&dir.path().join("transparency_two_photon.csv")).unwrap();
    for (a, b) in two.column("P2").unwrap().iter().zip(two.column("P2_quad").unwrap()) {
        assert!((a - b).abs() <= 1e-9 * 2.0 * PI * 0.01, "{a} vs {b}");
    }
}

#[test]
fn validate_fast_passes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = tpa(&["validate", "--out", s(&report)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["level"], "fast");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.lines().all(|l| l.starts_with("PASS")), "{stderr}");
}

fn sampled_grid(dir: &Path) -> PathBuf {
    let b = Biphoton::gaussian(1.0, 0.1, 0.5, 0.5).unwrap();
    let s = make_sampled(&b, &GridSpec::for_biphoton(&b, 257, 129)).unwrap();
    let path = dir.join("grid.json");
    write_grid(&s, &path).unwrap();
    path
}

#[test]
fn sampled_grid_point_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let grid = sampled_grid(dir.path());
    let v: Value = serde_json::from_str(&ok(&[
        "point", "--family", "sampled", "--grid", s(&grid), "--delta-tau", "0.5",
    ]))
    .unwrap();
    assert_eq!(v["path"], "quadrature");
    assert_eq!(v["parameters"]["T"].as_f64(), Some(1.0));
    let atom = ThreeLevelAtom::new(1.0, 1.0, 1.0, 1.0).unwrap();
    let exact = closed_form(Family::Gaussian, &atom, 1.0, 0.1, 5.0).unwrap();
    let p2 = v["result"]["p2"].as_f64().unwrap();
    assert!(rel(p2, exact.p2) < 1e-3, "{p2} vs {}", exact.p2);

    let out = tpa(&["point", "--family", "sampled", "--grid", s(&grid), "--T", "1", "--delta-tau", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = tpa(&["point", "--family", "sampled", "--grid", s(&grid), "--delta-tau", "0", "--path", "closed-form"]);
    assert_eq!(out.status.code(), Some(2));

    let csv = dir.path().join("sampled.csv");
    ok(&[
        "sweep", "--family", "sampled", "--grid", s(&grid), "--variable", "delta_tau", "--start", "0",
        "--stop", "1", "--count", "3", "--out", s(&csv),
    ]);
    let t = read_csv(&csv).unwrap();
    assert_eq!(t.len(), 3);
    assert!(t.flags.iter().all(|f| f.contains(&"no_closed_form".to_string())));
    assert!(t.column("F_sq").unwrap().iter().all(|v| v.is_nan()));
    assert!(t.column("P2").unwrap().iter().all(|v| v.is_finite() && *v > 0.0));
}
