mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{read_tree, DESK_CONFIG};

fn sirwave(config: &Path, out: &Path, cmd: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sirwave"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg(cmd)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn value(stdout: &[u8], key: &str) -> f64 {
    let text = String::from_utf8_lossy(stdout);
    let line = text
        .lines()
        .find(|l| l.starts_with(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing"));
    line.split(" = ").nth(1).unwrap().parse().unwrap()
}

#[test]
fn analyze_reports_reference_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.conf", DESK_CONFIG);
    let out = sirwave(&cfg, &dir.path().join("out"), "analyze");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(value(&out.stdout, "R0"), 2.0);
    assert!((value(&out.stdout, "S_star") - 1.0).abs() < 1e-12);
    assert!((value(&out.stdout, "I_star") - 0.5).abs() < 1e-12);
    assert!((value(&out.stdout, "c_star") - 3.0177).abs() < 1e-4);
    assert!(dir.path().join("out/manifest.txt").exists());
}

#[test]
fn verify_passes_on_desk_preset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.conf", DESK_CONFIG);
    let out_dir = dir.path().join("out");
    let out = sirwave(&cfg, &out_dir, "verify");
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let names: Vec<String> = read_tree(&out_dir).into_iter().map(|(n, _)| n).collect();
    assert_eq!(
        names,
        ["bounds.csv", "lyapunov.csv", "manifest.txt", "profile.csv"]
    );
    let profile = std::fs::read_to_string(out_dir.join("profile.csv")).unwrap();
    assert!(profile.starts_with("xi,S,I,res_S,res_I\n"));
    assert_eq!(profile.lines().count(), 1602);
    let bounds = std::fs::read_to_string(out_dir.join("bounds.csv")).unwrap();
    assert!(bounds.starts_with("xi,ineq1,ineq2,ineq3,ineq4\n"));
    let lyap = std::fs::read_to_string(out_dir.join("lyapunov.csv")).unwrap();
    assert!(lyap.starts_with("xi,L,W1,W2,W3\n"));
}

#[test]
fn slow_speed_exits_with_error_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "a.conf",
        &DESK_CONFIG.replace("profile.c = 3.5", "profile.c = 2.5"),
    );
    let out = sirwave(&cfg, &dir.path().join("out"), "profile");
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error[SPEED_BELOW_CRITICAL]"), "{err}");
}

#[test]
fn failed_verification_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // a loose tolerance stops the iteration long before the wave equations hold
    let cfg = write_config(
        dir.path(),
        "a.conf",
        &DESK_CONFIG.replace("profile.tol = 1e-10", "profile.tol = 0.5"),
    );
    let out = sirwave(&cfg, &dir.path().join("out"), "verify");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("check_residual = fail"));
}

#[test]
fn bad_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "a.conf",
        &DESK_CONFIG.replace("model.beta = 2", "model.beta = -1"),
    );
    let out = sirwave(&cfg, &dir.path().join("out"), "analyze");
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("INVALID_PARAMETER") && err.contains("model.beta"),
        "{err}"
    );
}

#[test]
fn simulate_writes_frames_and_front() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{DESK_CONFIG}sim.N = 100\nsim.t_end = 10\nsim.frame_stride = 50\nsim.track_R = true\n"
    );
    let cfg = write_config(dir.path(), "a.conf", &text);
    let out_dir = dir.path().join("out");
    let out = sirwave(&cfg, &out_dir, "simulate");
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let frames = std::fs::read_to_string(out_dir.join("frames.csv")).unwrap();
    assert!(frames.starts_with("t,n,S,I,R\n"));
    // 1000 steps at stride 50 give 21 frames of 201 sites
    assert_eq!(frames.lines().count(), 1 + 21 * 201);
    let front = std::fs::read_to_string(out_dir.join("front.csv")).unwrap();
    assert!(front.starts_with("t,front_pos\n"));
    assert_eq!(front.lines().count(), 22);
    assert!(value(&out.stdout, "c_est") > 0.0);
}

#[test]
fn manifest_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.conf", DESK_CONFIG);
    let first = dir.path().join("first");
    assert_eq!(sirwave(&cfg, &first, "lyapunov").status.code(), Some(0));
    let second = dir.path().join("second");
    assert_eq!(
        sirwave(&first.join("manifest.txt"), &second, "lyapunov")
            .status
            .code(),
        Some(0)
    );
    for name in ["profile.csv", "lyapunov.csv", "manifest.txt"] {
        let a = std::fs::read(first.join(name)).unwrap();
        let b = std::fs::read(second.join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.conf", DESK_CONFIG);
    for cmd in ["verify-bounds", "profile"] {
        let (a, b) = (
            dir.path().join(format!("{cmd}-a")),
            dir.path().join(format!("{cmd}-b")),
        );
        assert_eq!(sirwave(&cfg, &a, cmd).status.code(), Some(0));
        assert_eq!(sirwave(&cfg, &b, cmd).status.code(), Some(0));
        assert!(read_tree(&a) == read_tree(&b), "{cmd} artifacts differ");
    }
}
