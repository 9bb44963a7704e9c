use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zorich-lab"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("ZORICH_LAB_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

#[test]
fn verify_in_theorem_regime_is_all_ok() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"verify": {"samples": 500, "quad_resolution": 32}, "face_samples": 5000}"#);
    let out = run(&["verify", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["all_ok"], true);
    assert!(v["records"].as_array().unwrap().iter().all(|r| r["ok"] == true));
    assert!(dir.path().join("verify.json").exists());
}

#[test]
fn verify_outside_regime_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"params": {"lambda": 1.0, "nu": 0.2}, "verify": {"samples": 200, "quad_resolution": 16}, "face_samples": 2000}"#,
    );
    let out = run(&["verify", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["all_ok"], false);
}

#[test]
fn regime_reports_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"params": {"lambda": 1.0}, "face_samples": 2000}"#);
    let out = run(&["regime", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdicts"]["lambda_above_l5"], false);
}

#[test]
fn render_rejects_non_orthonormal_frame() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"render": {"plane": {"kind": "affine", "origin": [0,0,0], "e1": [1,0,0], "e2": [1,1,0]}}}"#,
    );
    let out = run(&["render", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("slice.ppm").exists());
}

#[test]
fn render_writes_image_and_is_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"params": {"lambda": 2.0, "nu": 0.5}, "render": {"width": 96, "height": 80, "window": {"u_min": -4, "u_max": 4, "v_min": -4, "v_max": 4}}}"#,
    );
    let out = run(&["render", "--config", &cfg, "--threads", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let ppm = std::fs::read(dir.path().join("slice.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n96 80\n255\n"));
    let one = std::fs::read(dir.path().join("slice.raster")).unwrap();
    let out = run(&["render", "--config", &cfg, "--threads", "4"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(one, std::fs::read(dir.path().join("slice.raster")).unwrap());
}

#[test]
fn unknown_flag_and_bad_config_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["orbit", "--bogus"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let cfg = write_config(dir.path(), r#"{"horizonn": 3}"#);
    assert_eq!(run(&["orbit", "--config", &cfg], dir.path()).status.code(), Some(1));
    let cfg = write_config(dir.path(), "not json");
    assert_eq!(run(&["orbit", "--config", &cfg], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn orbit_itinerary_periodic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"params": {"lambda": 2.0, "nu": 1.0}, "orbit": {"point": [0, 0, 1], "steps": 10}}"#);
    let out = run(&["orbit", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["stop"]["kind"], "escaped");

    let out = run(&["itinerary", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["symbols"].is_array());

    let cfg = write_config(dir.path(), r#"{"periodic": {"word": [[0, 0], [1, 1]]}}"#);
    let out = run(&["periodic", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1), "inadmissible word is a configuration error");

    let cfg = write_config(dir.path(), r#"{"periodic": {"word": [[-2, -2], [0, 2]]}}"#);
    let out = run(&["periodic", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out)["point"]["residual"].as_f64().unwrap() < 1e-7);
}

#[test]
fn surfaces_and_curves_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"params": {"lambda": 2.0, "nu": 1.0}, "surfaces": {"n_max": 3, "quad_resolution": 32}}"#);
    let out = run(&["surfaces", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["tn"].as_array().unwrap().len(), 4);
    assert!(v["tn"][0]["relative_error"].as_f64().unwrap() < 1e-6);
    let csv = std::fs::read_to_string(dir.path().join("surfaces.csv")).unwrap();
    assert!(csv.starts_with("x1,x2,x3,n\n"));

    let out = run(&["curves", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(dir.path().join("gamma_k.csv")).unwrap().starts_with("x1,x2,x3,k\n"));
    assert!(std::fs::read_to_string(dir.path().join("gamma_m.csv")).unwrap().starts_with("x,y,m\n"));
}

#[test]
fn env_threads_must_be_numeric() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_zorich-lab"))
        .args(["render", "--out"])
        .arg(dir.path())
        .env("ZORICH_LAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
