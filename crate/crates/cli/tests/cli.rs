use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SYS1: &str = "\
system {
  domain = [x, y]
  init = x
  leader {
    init = q0
    final = [q0]
    q0 -> q1 : ?y
    q1 -> q0 : !x
  }
  contributor {
    init = c0
    c0 -> c1 : !y
    c1 -> c0 : ?x
  }
}
";

const SYS2: &str = "\
system {
  domain = [x, y]
  init = x
  leader {
    init = q0
    final = [q1]
    q0 -> q1 : ?y
  }
  contributor {
    init = c0
    c0 -> c0 : ?x
  }
}
";

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Workspace {
            dir: TempDir::new().unwrap(),
        };
        ws.write("sys1.lcs", SYS1);
        ws.write("sys2.lcs", SYS2);
        ws
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).display().to_string()
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_lcs"))
            .args(args)
            .current_dir(self.dir.path())
            .env_remove("LCS_MAX_STATES")
            .output()
            .unwrap()
    }
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

/// The fixed result schema: required fields and their types, optional
/// fields only when typed correctly, nothing else at the top level.
fn assert_schema(v: &Value) {
    let obj = v.as_object().expect("object");
    assert!(obj["problem"].is_string());
    assert!(obj["answer"].is_boolean() || obj["answer"].is_string());
    assert!(obj["backend"].is_string());
    assert!(obj["stats"].is_object());
    assert!(obj["timings"]["total_ms"].is_number());
    if let Some(i) = obj.get("interface") {
        assert!(i.is_string());
    }
    if let Some(g) = obj.get("gamma") {
        assert!(g.as_array().unwrap().iter().all(Value::is_string));
    }
    for key in obj.keys() {
        assert!(
            [
                "problem",
                "answer",
                "backend",
                "interface",
                "gamma",
                "stats",
                "timings"
            ]
            .contains(&key.as_str()),
            "unexpected field {key}"
        );
    }
}

#[test]
fn liveness_of_sys1() {
    let ws = Workspace::new();
    for algo in ["subsets", "witness"] {
        let out = ws.run(&["check-liveness", &ws.path("sys1.lcs"), "--algo", algo]);
        assert_eq!(out.status.code(), Some(0));
        let v = json(&out);
        assert_schema(&v);
        assert_eq!(v["problem"], "LCL");
        assert_eq!(v["answer"], true);
        assert_eq!(v["backend"], algo);
        assert_eq!(v["interface"], "c0+c1:q0:x");
        assert_eq!(v["gamma"], serde_json::json!(["x", "y"]));
    }
}

#[test]
fn liveness_with_lasso() {
    let ws = Workspace::new();
    let out = ws.run(&[
        "check-liveness",
        &ws.path("sys1.lcs"),
        "--confirm-bound",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_schema(&v);
    assert!(v["stats"]["lasso"]["cycle"].as_array().unwrap().len() >= 4);
}

#[test]
fn reachability_backends() {
    let ws = Workspace::new();
    for algo in ["subsets", "witness", "oracle"] {
        let out = ws.run(&["check-reach", &ws.path("sys1.lcs"), "--algo", algo]);
        assert_eq!(out.status.code(), Some(0), "{algo}");
        let v = json(&out);
        assert_schema(&v);
        assert_eq!(v["problem"], "LCR");
        assert_eq!(v["answer"], true, "{algo}");
    }
    for algo in ["subsets", "witness"] {
        let v = json(&ws.run(&["check-reach", &ws.path("sys2.lcs"), "--algo", algo]));
        assert_eq!(v["answer"], false, "{algo}");
    }
}

#[test]
fn oracle_cannot_prove_no() {
    let ws = Workspace::new();
    let out = ws.run(&[
        "check-reach",
        &ws.path("sys2.lcs"),
        "--algo",
        "oracle",
        "--bound",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_schema(&v);
    assert_eq!(v["answer"], "no-at-bound");
}

#[test]
fn cycle_backends() {
    let ws = Workspace::new();
    for algo in ["fixpoint", "enum", "oracle"] {
        let out = ws.run(&[
            "check-cycle",
            &ws.path("sys1.lcs"),
            "--interface",
            "c0+c1:q0:x",
            "--algo",
            algo,
        ]);
        assert_eq!(out.status.code(), Some(0), "{algo}");
        let v = json(&out);
        assert_schema(&v);
        assert_eq!(v["problem"], "CYC");
        assert_eq!(v["answer"], true, "{algo}");
        assert_eq!(v["interface"], "c0+c1:q0:x");
    }
    let v = json(&ws.run(&[
        "check-cycle",
        &ws.path("sys2.lcs"),
        "--interface",
        "c0:q1:y",
    ]));
    assert_eq!(v["answer"], false);
}

#[test]
fn text_format() {
    let ws = Workspace::new();
    let out = ws.run(&["--format", "text", "check-liveness", &ws.path("sys1.lcs")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("LCL (subsets): true"), "{text}");
    assert!(text.contains("interface: c0+c1:q0:x"));
}

#[test]
fn gen_is_deterministic() {
    let ws = Workspace::new();
    let args = [
        "gen",
        "--leader",
        "3",
        "--contrib",
        "2",
        "--domain",
        "2",
        "--density",
        "0.4",
        "--seed",
        "42",
    ];
    let a = ws.run(&args);
    let b = ws.run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let p = ws.write("g.lcs", std::str::from_utf8(&a.stdout).unwrap());
    let out = ws.run(&["check-reach", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn crosscheck_agrees() {
    let ws = Workspace::new();
    let out = ws.run(&["crosscheck", "--seeds", "1..12", "--out", &ws.path("")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_schema(&v);
    assert_eq!(v["stats"]["instances"], 12);
    assert_eq!(v["stats"]["disagreements"], 0);
    let out = ws.run(&[
        "crosscheck",
        "--seeds",
        "5..6",
        "--params",
        "2,2,2,0.5",
        "--out",
        &ws.path(""),
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_2() {
    let ws = Workspace::new();
    for args in [
        vec!["check-reach"],
        vec!["frobnicate"],
        vec!["check-reach", "missing.lcs"],
        vec!["check-cycle", "sys1.lcs", "--interface", "c0:q7:x"],
        vec!["crosscheck", "--seeds", "9..3"],
        vec!["crosscheck", "--seeds", "1..2", "--params", "2,2"],
        vec![
            "gen",
            "--leader",
            "0",
            "--contrib",
            "1",
            "--domain",
            "1",
            "--density",
            "0.5",
            "--seed",
            "1",
        ],
    ] {
        let out = ws.run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn parse_errors_exit_4() {
    let ws = Workspace::new();
    let p = ws.write("bad.lcs", "system {\n  domain = [x]\n  init = z\n}\n");
    let out = ws.run(&["check-reach", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bad.lcs:"), "{err}");
}

#[test]
fn oracle_cap_exits_3() {
    let ws = Workspace::new();
    let p = ws.write("far.lcs", &SYS1.replace("final = [q0]", "final = [q1]"));
    let out = Command::new(env!("CARGO_BIN_EXE_lcs"))
        .args(["check-reach", p.to_str().unwrap(), "--algo", "oracle"])
        .env("LCS_MAX_STATES", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}
