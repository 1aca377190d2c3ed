use std::process::Command;

fn hyhe() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hyhe"));
    c.env_clear();
    c
}

fn stdout(c: &mut Command) -> (String, i32) {
    let out = c.output().unwrap();
    (String::from_utf8(out.stdout).unwrap(), out.status.code().unwrap_or(-1))
}

#[test]
fn solve_single_term() {
    let (out, code) = stdout(hyhe().args(["solve", "--n", "1", "--no-nuclear-motion", "--precision", "40", "--format", "json"]));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["energy"].as_f64().unwrap(), -2.84765625);
    assert!((v["k_opt"].as_f64().unwrap() - 1.6875).abs() < 1e-12);
}

#[test]
fn sweep_csv_has_fixed_columns() {
    let (out, code) = stdout(hyhe().args(["sweep", "--n-list", "1,2,3", "--format", "csv", "--precision", "40"]));
    assert_eq!(code, 0);
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "N,E_inf,dE_inf,E0,dE0,deltaE2,deltaE3,E_total,dE_total,k_opt");
}

#[test]
fn environment_and_config_file_are_read() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "# small run\nprecision_digits = 40\noutput = json\n").unwrap();
    let (out, code) = stdout(hyhe().env("HYHE_ALPHA", "0.0073").args(["corrections", "--n", "2", "--config"]).arg(&path));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["constants"]["alpha"].as_f64().unwrap(), 0.0073);
}

#[test]
fn flags_override_environment() {
    let (out, _) = stdout(hyhe().env("HYHE_ALPHA", "0.0073").args(["corrections", "--n", "1", "--alpha", "0.007", "--format", "json", "--precision", "40"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["constants"]["alpha"].as_f64().unwrap(), 0.007);
}

#[test]
fn bad_input_exits_nonzero() {
    let out = hyhe().args(["solve", "--n", "0"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let out = hyhe().args(["tables", "--format", "xml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = hyhe().env("HYHE_PRECISION_DIGITS", "5").args(["solve", "--n", "1"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn cache_directory_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let (_, code) = stdout(hyhe().args(["solve", "--n", "4", "--precision", "40", "--cache-dir"]).arg(dir.path()));
    assert_eq!(code, 0);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}
