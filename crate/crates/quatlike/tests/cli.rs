use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quatlike")).args(args).output().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn rigid_flat_curvature_vanishes() {
    let o = run(&["curvature", "--manifold", "rigid-flat", "--n", "2", "--points", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert_eq!(r["manifold"]["name"], "rigid-flat");
    for c in r["checks"].as_array().unwrap() {
        let v: f64 = c["max_residual"].to_string().parse().unwrap();
        assert!(v < 1e-12, "{} = {v}", c["name"]);
    }
}

#[test]
fn report_layout_is_stable() {
    let o = run(&["connections", "--points", "4", "--seed", "3"]);
    assert!(o.status.success());
    let r = json(&o);
    let keys: Vec<_> = r.as_object().unwrap().keys().cloned().collect();
    assert_eq!(
        keys,
        ["schema", "subcommand", "manifold", "seed", "tolerance", "points", "order", "checks", "errors", "pass"]
    );
    let c = r["checks"][0].as_object().unwrap();
    let keys: Vec<_> = c.keys().cloned().collect();
    assert_eq!(keys, ["name", "relation", "expect", "bound", "max_residual", "samples", "pass"]);
    // floats carry 17 significant digits
    let text = c["max_residual"].to_string();
    let mantissa = text.split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(|x| x.is_ascii_digit()).count(), 17, "{text}");
    assert_eq!(r["seed"], 3);
    assert_eq!(r["points"], 4);
}

#[test]
fn out_flag_writes_the_report() {
    let path = std::env::temp_dir().join(format!("quatlike-cli-{}.json", std::process::id()));
    let p = path.to_str().unwrap();
    let args = ["roundtrip", "--points", "5"];
    let direct = run(&args);
    let o = run(&[&args[..], &["--out", p]].concat());
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn seeds_change_samples_and_threads_do_not() {
    let a = run(&["verify-structure", "--points", "6", "--seed", "1"]);
    let b = run(&["verify-structure", "--points", "6", "--seed", "2"]);
    let c = run(&["verify-structure", "--points", "6", "--seed", "1", "--parallel", "3"]);
    assert!(a.status.success() && b.status.success() && c.status.success());
    assert_ne!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn errors_leave_stdout_empty() {
    for (args, code) in [
        (vec!["curvature", "--manifold", "nowhere"], 3),
        (vec!["curvature", "--points", "-4"], 5),
        (vec!["curvature", "--tol", "0"], 6),
        (vec!["lift", "--order", "0"], 6),
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(code), "{args:?}");
        assert!(o.stdout.is_empty());
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    }
}

#[test]
fn catalog_lists_entries() {
    let o = run(&["catalog", "--nh", "1"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["flat-cone", "compact-cone", "deformed-cone", "rigid-flat"] {
        assert!(text.contains(name), "{name}");
    }
}
