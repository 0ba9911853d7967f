use std::path::Path;
use std::process::{Command, Output};

fn liegeo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liegeo"))
        .args(args)
        .env("LIEGEO_THREADS", "2")
        .output()
        .unwrap()
}

fn files(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn curvature_runs_and_embeds_hash() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = liegeo(&["curvature", "--group", "so3", "--metric", "rigid-body", "1,2,3", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let hash = summary["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    let written = files(dir.path());
    assert_eq!(written.len(), 3);
    for f in written {
        let text = std::fs::read_to_string(&f).unwrap();
        assert!(text.contains(&hash), "{}", f.display());
    }
    let diag: Vec<f64> = summary["ricci_diagonal"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for (a, e) in diag.iter().zip([0.2, 0.4, 1.0]) {
        assert!((a - e).abs() < 1e-10);
    }
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    // the output path is part of the config, so both runs use the same relative one
    let run = |d: &Path| {
        let o = Command::new(env!("CARGO_BIN_EXE_liegeo"))
            .args(["steady", "--group", "so3", "--metric", "rigid-body", "1,2,3", "--u0", "e13", "--samples", "400"])
            .args(["--out", "run"])
            .current_dir(d)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    run(a.path());
    run(b.path());
    let (fa, fb) = (files(&a.path().join("run")), files(&b.path().join("run")));
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"group": "so(3)", "metric": {"kind": "rigid-body", "mu": [1, 2, 3]}, "u0": "e12", "criterion": "steady-blocks"}"#,
    )
    .unwrap();
    let out = dir.path().join("c");
    let o = liegeo(&["conjugate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("conjugate.json")).unwrap()).unwrap();
    let t = v["conjugate_times"]["times"][0].as_f64().unwrap();
    assert!((t - 9.0869145447).abs() < 1e-8, "{t}");
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"group\": \"so(3)\",\n  \"bogus\": 1\n}\n").unwrap();
    let o = liegeo(&["curvature", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json:3"), "{err}");

    let o = liegeo(&["curvature", "--group", "so3", "--metric", "rigid-body", "1,2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = liegeo(&["geodesic", "--group", "so3", "--metric", "bogus", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn inapplicable_criterion_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let o = liegeo(&[
        "steady", "--group", "so3", "--metric", "rigid-body", "1,2,3", "--u0", "0.3,1,0.2", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["status"], "inapplicable");
}

#[test]
fn locus_writes_svg_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("fig.svg");
    let o = liegeo(&["locus", "--deltas", "-0.25,-0.75", "--angles", "64", "--out", target.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("fig.csv")).unwrap();
    assert!(csv.starts_with("# config_hash="));
    assert_eq!(csv.lines().count(), 2 + 2 * 64);
    let svg = std::fs::read_to_string(target).unwrap();
    assert_eq!(svg.matches("<path").count(), 2);
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_liegeo"))
        .arg("verify")
        .env("LIEGEO_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
