//! Exit codes, output layout and determinism of the `ibsim` binary.

use std::fs;
use std::path::Path;
use std::process::Command;

fn ibsim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ibsim"))
        .args(args)
        .env_remove("PNS_THREADS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const SHORT_STOKES: &str = r#"
mode = "stokes"
n_s = 32
dt = 0.01
t_final = 0.05
[curve]
kind = "ellipse"
a = 1.2
b = 0.8
[output]
cadence = 2
"#;

const SHORT_NS: &str = r#"
mode = "ns"
n_s = 32
dt = 0.01
t_final = 0.03
nu = 1.0
[curve]
kind = "perturbed_circle"
radius = 1.0
modes = [[3, 0.1]]
[u0]
kind = "random_bandlimited"
kmax = 3
amplitude = 0.1
[grid]
n = 32
[output]
cadence = 1
fields = true
"#;

#[test]
fn simulate_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", SHORT_STOKES);
    let out = tmp.path().join("out");
    let res = ibsim(&["simulate", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["config.toml", "diagnostics.csv", "curve_000000.csv", "curve_000002.csv", "curve_000005.csv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let diag = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 1 + 6);
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "ns.toml", SHORT_NS);
    let out = tmp.path().join("out");
    let snapshot = || {
        let mut files: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let mut runs = Vec::new();
    for threads in ["1", "2"] {
        let res = ibsim(&["simulate", &cfg, "--out", out.to_str().unwrap(), "--seed", "9", "--threads", threads]);
        assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
        runs.push(snapshot());
        fs::remove_dir_all(&out).unwrap();
    }
    assert!(runs[0].iter().any(|(n, _)| n.to_string_lossy().ends_with(".pns")));
    assert!(runs[0] == runs[1], "outputs differ between runs");
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.toml", &SHORT_STOKES.replace("n_s = 32", "n_s = 30"));
    assert_eq!(ibsim(&["simulate", &bad]).status.code(), Some(2));
    let unknown = write(tmp.path(), "unknown.toml", &format!("colour = 1\n{SHORT_STOKES}"));
    assert_eq!(ibsim(&["simulate", &unknown]).status.code(), Some(2));
    assert_eq!(ibsim(&["simulate", "/nonexistent/run.toml"]).status.code(), Some(2));
}

#[test]
fn blowup_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{SHORT_NS}\n[thresholds]\nu_lp_ceiling = 1e-12\n");
    let cfg = write(tmp.path(), "blow.toml", &text);
    let res = ibsim(&["simulate", &cfg]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn check_passes() {
    let res = ibsim(&["check"]);
    let stdout = String::from_utf8_lossy(&res.stdout);
    if cfg!(feature = "fault-injection") {
        assert_eq!(res.status.code(), Some(4));
        assert!(stdout.contains("FAIL"));
    } else {
        assert_eq!(res.status.code(), Some(0), "{stdout}");
        assert!(!stdout.contains("FAIL"));
    }
}
