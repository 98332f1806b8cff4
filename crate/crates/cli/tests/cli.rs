use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn weylkms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weylkms")).args(args).output().expect("binary runs")
}

fn result_line(out: &Output) -> Value {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let header: Value = serde_json::from_str(lines.next().expect("header")).unwrap();
    assert!(header.get("command").is_some());
    serde_json::from_str(lines.next().expect("result")).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn no_arguments_is_usage_error() {
    let out = weylkms(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(weylkms(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn critical_density_value() {
    let out = weylkms(&["critical-density", "--beta", "1", "--h", "1", "--nu", "3"]);
    assert!(out.status.success());
    let v = result_line(&out)["rho_c"].as_f64().unwrap();
    assert!((v - 0.165869).abs() < 1e-6);
    let low = weylkms(&["critical-density", "--beta", "1", "--h", "1", "--nu", "2"]);
    assert_eq!(low.status.code(), Some(2));
}

#[test]
fn kms_and_state_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"kind":"ClassicalBoxGibbs","beta":1.5,"mu":-0.3,"nu":1,"box":{"L":1.0,"nu":1,"cutoff":32}}"#,
    );
    let f = write(dir.path(), "f.json", r#"{"modes":[{"n":[1],"c":[0.3,0.1]},{"n":[2],"c":[0.0,0.2]}]}"#);
    let g = write(dir.path(), "g.json", r#"{"modes":[{"n":[1],"c":[0.1,-0.2]},{"n":[4],"c":[0.2,0.0]}]}"#);
    let out = weylkms(&["check-kms", "--spec", &spec, "--f", &f, "--g", &g, "--mode", "analytic"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(result_line(&out)["residual"].as_f64().unwrap() < 1e-12);

    let out = weylkms(&["compute-state", "--spec", &spec, "--testfn", &f]);
    let v = result_line(&out);
    let value = v["value"].as_f64().unwrap();
    assert!(value > 0.0 && value < 1.0);

    let broken = write(dir.path(), "broken.json", "{\"kind\":");
    assert_eq!(weylkms(&["compute-state", "--spec", &broken, "--testfn", &f]).status.code(), Some(2));
}

#[test]
fn tail_failure_is_numerical_exit() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"kind":"ClassicalBoxGibbs","beta":1.0,"mu":-0.5,"nu":1,"box":{"L":1.0,"nu":1,"cutoff":4}}"#,
    );
    let f = write(dir.path(), "f.json", r#"{"nu":1,"terms":[{"amp":[1.0,0.0],"center":[0.0],"sigma":0.2,"wave":[0.0]}]}"#);
    let out = weylkms(&["compute-state", "--spec", &spec, "--testfn", &f, "--tail-tol", "1e-14"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn csv_outputs_are_versioned_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let modes = write(dir.path(), "modes.json", "[1.0, 2.0]");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = weylkms(&["sample-gibbs", "--modes", &modes, "--beta", "1", "--count", "50", "--seed", "3", "--out", p.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema=1"));
    assert_eq!(lines.next(), Some("q1,p1,q2,p2"));
    assert_eq!(lines.count(), 50);

    let out = weylkms(&["witness", "--N", "10"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1) == Some("# schema=1"));
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], 10.0);
    assert!(last[2] > 1e8);
}

#[test]
fn sdq_and_berezin() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.json", "[[1.0, 0.0]]");
    let g = write(dir.path(), "g.json", "[[0.0, 1.0]]");
    let csv = dir.path().join("sdq.csv");
    let out = weylkms(&["check-sdq", "--f", &f, "--g", &g, "--h-grid", "1e-3:1e-1:5:log", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().nth(1), Some("h,dirac_residual,vonneumann_residual,rieffel_lower,rieffel_upper"));
    assert_eq!(text.lines().count(), 7);

    let out = weylkms(&["berezin-verify", "--l", "1", "--lambda", "1", "--mu", "0", "--h", "1"]);
    let v = result_line(&out);
    assert!((v["quad"][0].as_f64().unwrap() - (-0.5f64).exp()).abs() < 1e-10);
    assert!(v["rel_err"].as_f64().unwrap() < 1e-6);
}
