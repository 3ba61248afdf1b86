use std::process::{Command, Output};
use std::sync::Arc;

use rlbesov::criteria::{criterion_full_line, Truncation};
use rlbesov::rliouville::Side;
use rlbesov::weights::Weight;
use serde_json::Value;

fn rlbesov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rlbesov")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

const FULL_LINE: [&str; 12] = ["criteria", "full-line", "--alpha", "1", "--p", "2", "--u", "power t=3", "--v", "power t=1", "--kappa", "0"];

#[test]
fn spline_eval_prints_the_value() {
    let out = rlbesov(&["spline", "eval", "--n", "2", "--x", "1.5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["points"][0]["value"], 0.75);
    let csv = rlbesov(&["spline", "eval", "--n", "2", "--x", "1.5", "--x", "-1", "--format", "csv"]);
    assert_eq!(String::from_utf8(csv.stdout).unwrap(), "x,value\n1.5,0.75\n-1.0,0.0\n");
}

#[test]
fn criteria_json_equals_the_library_call() {
    let out = rlbesov(&FULL_LINE);
    assert_eq!(out.status.code(), Some(0));
    let mut got = json(&out);
    assert_eq!(got.as_object_mut().unwrap().remove("schema"), Some(Value::from(1)));
    let u = Arc::new(Weight::power(3.0, 0.0));
    let v = Arc::new(Weight::power(1.0, 0.0));
    let rep = criterion_full_line(1, 0.0, 2.0, Side::Left, &u, &v, &Truncation::default()).unwrap();
    assert_eq!(got, serde_json::to_value(&rep).unwrap());
    for key in ["functional", "value", "tau_star", "d_star", "windows", "tail_ratio", "verdict"] {
        assert!(got.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn example_ex1_passes() {
    let out = rlbesov(&["verify", "example-ex1", "--p", "2", "--alpha", "1", "--s", "2", "--t", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["outcome"], "PASS");
    assert_eq!(v["regime_ok"], true);
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let args = ["verify", "forward", "--alpha", "1", "--p", "2", "--s", "1", "--w-out", "power t=2", "--w-in", "power t=2", "--kappa", "0", "--members", "12", "--seed", "4", "--tau-window", "32", "--series-window", "256", "--d-max", "8", "--r-w", "1"];
    let a = rlbesov(&args);
    let b = rlbesov(&args);
    let one: Vec<&str> = args.iter().copied().chain(["--threads", "1"]).collect();
    let c = rlbesov(&one);
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    assert_eq!(a.status.code(), c.status.code());
}

#[test]
fn exit_codes() {
    assert_eq!(rlbesov(&["bogus"]).status.code(), Some(1));
    assert_eq!(rlbesov(&["spline", "eval", "--n", "2"]).status.code(), Some(1));
    assert_eq!(rlbesov(&["--help"]).status.code(), Some(0));
    assert_eq!(rlbesov(&["weights", "mass", "--w", "power t=3 delta", "--lo", "0", "--hi", "1"]).status.code(), Some(1));
    // f is nonzero before the origin of I_{2+}
    assert_eq!(rlbesov(&["rl", "apply", "--f", "bspline n=2", "--alpha", "1", "--origin", "2"]).status.code(), Some(1));
    let numeric = rlbesov(&["besov", "norm", "--f", "bspline n=2", "--p", "2", "--q", "2", "--s", "1", "--w", "abs zeta=70", "--d-max", "3"]);
    assert_eq!(numeric.status.code(), Some(2));
    let theta = rlbesov(&["wavelet", "theta", "--n-star", "1", "--m-star", "1"]);
    assert_eq!(json(&theta)["outcome"], "FAIL");
    assert_eq!(theta.status.code(), Some(3));
    assert_eq!(rlbesov(&["wavelet", "constants", "--n", "2", "--format", "csv"]).status.code(), Some(0));
    assert_eq!(rlbesov(&["wavelet", "theta", "--n-star", "1", "--m-star", "1", "--format", "csv"]).status.code(), Some(1));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("w.txt"), "0 1\n1 2\n").unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# mass of a table weight\nw = table file=w.txt\nlo = 0\nhi = 1\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let v = json(&rlbesov(&["--config", cfg, "weights", "mass"]));
    assert!((v["mass"].as_f64().unwrap() - 1.5).abs() < 1e-14);
    let v = json(&rlbesov(&["--config", cfg, "weights", "mass", "--hi", "0.5"]));
    assert!((v["mass"].as_f64().unwrap() - 0.625).abs() < 1e-14);

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "nonsense = 3\n").unwrap();
    assert_eq!(rlbesov(&["--config", bad.to_str().unwrap(), "spline", "eval", "--n", "1", "--x", "0"]).status.code(), Some(1));
}

#[test]
fn output_file_and_csv_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("levels.csv");
    let out = rlbesov(&[
        "besov", "norm", "--f", "bspline n=2", "--p", "2", "--q", "2", "--s", "1", "--w", "constant 1", "--r-w", "1", "--d-max", "3", "--format", "csv",
        "--output", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("level,value"));
    assert_eq!(lines.count(), 4);
}
