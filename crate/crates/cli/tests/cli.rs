use std::fs;
use std::path::Path;
use std::process::Command;

use homlab::lattice::io::load_coefficients;
use serde_json::Value;

fn run(dir: &Path, config: &str, args: &[&str]) -> i32 {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    Command::new(env!("CARGO_BIN_EXE_homlab"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn sample_constant_model_writes_identity() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "n = 16\nconstant = 1\nrealizations = 2\n", &["sample"]), 0);
    let a = load_coefficients(&dir.path().join("out/coefficients_0001.bin")).unwrap();
    for idx in 0..a.grid().len() {
        assert_eq!(a.matrix_at(idx)[..4], [1.0, 0.0, 0.0, 1.0]);
    }
    let m = json(&dir.path().join("out/manifest.json"));
    assert_eq!(m["schema"], 1);
    assert_eq!(m["status"], "ok");
}

#[test]
fn sample_is_byte_identical_across_runs() {
    let cfg = "n = 32\nrealizations = 3\nseed = 4\n";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(a.path(), cfg, &["sample"]), 0);
    assert_eq!(run(b.path(), cfg, &["sample"]), 0);
    for f in ["coefficients_0000.bin", "coefficients_0002.bin", "covariance.csv"] {
        assert_eq!(fs::read(a.path().join("out").join(f)).unwrap(), fs::read(b.path().join("out").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn covariance_csv_decays_like_the_kernel() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "n = 256\ngamma = 1\nrealizations = 64\nseed = 8\n", &["sample"]), 0);
    let text = fs::read_to_string(dir.path().join("out/covariance.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,c,c_plus_deficit,stderr,target"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r[0] >= 4.0 && r[0] <= 32.0).map(|r| (r[0].ln(), r[2].ln())).collect();
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let fit = homlab::ensemble::linear_fit(&x, &y, homlab::ensemble::FitKind::PowerLaw).unwrap();
    assert!((fit.slope + 1.0).abs() <= 0.2, "slope {}", fit.slope);
}

#[test]
fn corrector_on_laminate_and_constant() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "n = 16\nlaminate = 1, 0.5, 0.25, 0.5\ntol = 1e-12\n", &["corrector"]), 0);
    let s = json(&dir.path().join("out/corrector/summary.json"));
    let a: Vec<f64> = s["a_hom"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!((a[0] / (4.0 / 9.0) - 1.0).abs() < 1e-8, "{a:?}");
    assert!((a[3] / (9.0 / 16.0) - 1.0).abs() < 1e-8, "{a:?}");
    assert!(a[1].abs() < 1e-10 && a[2].abs() < 1e-10);

    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "n = 16\nconstant = 0.5\ntol = 1e-8\n", &["corrector"]), 0);
    let s = json(&dir.path().join("out/corrector/summary.json"));
    assert_eq!(s["a_hom"], serde_json::json!([0.5, 0.0, 0.0, 0.5]));
    for r in s["reports"].as_array().unwrap() {
        assert!(r["residual"].as_f64().unwrap() <= 1e-8);
    }
}

#[test]
fn config_errors_exit_2_and_still_write_manifest() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "gama = 2.5\n", &["sample"]), 2);
    let m = json(&dir.path().join("out/manifest.json"));
    assert_eq!(m["status"], "failed");
    assert!(m["error"].as_str().unwrap().contains("unknown key 'gama'"));
    assert_eq!(run(dir.path(), "n = 12\nradii = 4\nrealizations = 8\n", &["experiment", "scaling"]), 2);
    assert_eq!(run(dir.path(), "n = 16\n", &["sample", "--threads", "0"]), 2);
}

#[test]
fn solver_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "n = 32\ntol = 1e-14\nmax_iter = 1\n", &["corrector"]), 3);
    let m = json(&dir.path().join("out/manifest.json"));
    assert_eq!(m["exit_code"], 3);
    assert!(m["error"].as_str().unwrap().contains("converge"));
}

#[test]
fn tail_experiment_on_constant_model_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "n = 16\nconstant = 1\nrealizations = 32\n", &["experiment", "tail"]), 0);
    let s = json(&dir.path().join("out/summary.json"));
    assert_eq!(s["schema"], 1);
    assert_eq!(s["summary"]["series"][0]["fit"]["degenerate"], true);
    let csv = fs::read_to_string(dir.path().join("out/records.csv")).unwrap();
    assert!(csv.starts_with(homlab::ensemble::CSV_HEADER));
}

#[test]
fn experiment_outputs_are_reproducible() {
    let cfg = "n = 32\nrealizations = 8\nradii = 1, 2, 4\ncenters = 4\n";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(a.path(), cfg, &["experiment", "scaling", "--seed", "3"]), 0);
    assert_eq!(run(b.path(), cfg, &["experiment", "scaling", "--seed", "3", "--threads", "1"]), 0);
    for f in ["records.csv", "summary.json"] {
        assert_eq!(fs::read(a.path().join("out").join(f)).unwrap(), fs::read(b.path().join("out").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn diagnose_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "n = 32\n", &["diagnose"]), 0);
    let s = json(&dir.path().join("out/diagnose.json"));
    assert_eq!(s["schema"], 1);
    assert_eq!(s["radii"], serde_json::json!([1.0, 2.0, 4.0]));
}

#[test]
fn partition_check_reports_constants() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "half_width = 13.5\nbetas = 0, 0.3\n", &["partition-check"]), 0);
    let text = fs::read_to_string(dir.path().join("out/partition_check.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "beta,half_width,cells,c_meas,gamma,interaction_sum");
    assert_eq!(rows.len(), 3);
    let s = json(&dir.path().join("out/partition_check.json"));
    for r in s["rows"].as_array().unwrap() {
        assert!(r["c_meas"].as_f64().unwrap() > 0.0);
        assert!(r["interaction_sum"].as_f64().unwrap() >= 1.0);
    }
}

#[test]
fn sensitivity_check_agrees_with_finite_differences() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "n = 32\ntol = 1e-12\nsens_step = 2.5e-5\n", &["sensitivity-check"]), 0);
    let s = json(&dir.path().join("out/sensitivity.json"));
    let rows = s["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert!(r["check"]["relative_error"][0].as_f64().unwrap() <= 1e-4, "{r}");
    }
}
