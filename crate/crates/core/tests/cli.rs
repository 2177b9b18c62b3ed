//! End-to-end runs of the `latticeops` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn latticeops(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latticeops"))
        .args(args)
        .env_remove("LATTICEOPS_PRECISION")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

const QQUAD: &str = r#"{"kind": "q-quadratic", "q": "4", "c": ["1/2", "1/3", "1/5"]}"#;

#[test]
fn verify_ops_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let lat = write(dir.path(), "qquad.json", QQUAD);
    let args = ["verify", "ops", "--lattice", lat.as_str(), "--max-degree", "6", "--seed", "7"];
    let a = latticeops(&args);
    let b = latticeops(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    let ids = v["identities"].as_array().unwrap();
    assert_eq!(ids.len(), 5);
    assert!(ids.iter().all(|r| r["exact_zero"] == true));
}

#[test]
fn classify_q_hermite() {
    // q = 4: u = 2/3, 𝔞 = −3/4, α = 5/4, C_1 = (1 − q) c1c2 = −1/2, so
    // φ = −3/4 (z − 1/5)² + 1/4 and ψ = z − 1/5.
    let dir = tempfile::tempdir().unwrap();
    let lat = write(dir.path(), "qquad.json", QQUAD);
    let pair = write(dir.path(), "qhermite.json", r#"{"phi": ["11/50", "3/10", "-3/4"], "psi": ["-1/5", 1]}"#);
    let o = latticeops(&["classify", "--lattice", &lat, "--pair", &pair, "-N", "16"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    let c = v["C"].as_array().unwrap();
    for n in 0..16u32 {
        // (1 − 4^{n+1})/6
        let want = format!("{}/6", 1 - 4i128.pow(n + 1));
        let want = reduce(&want);
        assert_eq!(c[n as usize + 1].as_str().unwrap(), want, "C_{}", n + 1);
    }
    assert!(v["B"].as_array().unwrap().iter().all(|b| b == "1/5"));
}

/// Reduce "p/6" the way the library prints rationals.
fn reduce(frac: &str) -> String {
    let (p, q) = frac.split_once('/').unwrap();
    let (p, q): (i128, i128) = (p.parse().unwrap(), q.parse().unwrap());
    let g = gcd(p.abs(), q);
    if q / g == 1 {
        format!("{}", p / g)
    } else {
        format!("{}/{}", p / g, q / g)
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[test]
fn characterize_reports_failures_with_exit_one() {
    let o = latticeops(&["characterize", "--relation", "lower", "--family", "chebyshev_u", "-N", "8"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("lower fails at n="), "{err}");
    let v = stdout_json(&o);
    assert!(v["report"]["first_failure"].is_u64());
}

#[test]
fn counterexample_on_bigfloat() {
    let o = latticeops(&["characterize", "--relation", "counterexample", "-N", "10", "--precision", "192"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["lattice"]["backend"], "bigfloat(192)");
}

#[test]
fn csv_tables_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let lat = write(dir.path(), "qquad.json", QQUAD);
    let out = dir.path().join("t.csv");
    let o = latticeops(&[
        "family", "--family", "q_hermite", "--lattice", &lat, "-N", "3", "--format", "csv", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "n,B,C\n0,1/5,0\n1,1/5,-1/2\n2,1/5,-5/2\n3,1/5,-21/2\n");
}

#[test]
fn invalid_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let lat = write(dir.path(), "qquad.json", QQUAD);
    let cases: Vec<Vec<&str>> = vec![
        vec!["verify", "ops", "--lattice", "/nonexistent/lattice.json"],
        vec!["verify", "ops", "--lattice", &lat, "--format", "csv"],
        vec!["--backend", "bigfloat", "--precision", "32", "verify", "ops", "--lattice", &lat],
        vec!["characterize", "--relation", "sideways", "--family", "q_hermite"],
        vec!["family", "--family", "askey_wilson", "--params", "[1]"],
        vec!["family", "--family", "meixner2", "--params", "[0, -2]"],
        vec!["nonsense"],
    ];
    for args in cases {
        assert_eq!(latticeops(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn precision_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_latticeops"))
        .args(["family", "--family", "q_hermite", "--backend", "bigfloat", "-N", "1"])
        .env("LATTICEOPS_PRECISION", "256")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["lattice"]["backend"], "bigfloat(256)");
}
