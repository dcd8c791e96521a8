use std::process::{Command, Output};

use serde_json::Value;

fn plat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plat"))
        .args(args)
        .output()
        .unwrap()
}

fn reports(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn nu_and_orbit() {
    let out = plat(&["nu", "--p", "2", "--k", "1,0"]);
    assert!(out.status.success());
    assert_eq!(reports(&out)[0]["nu"], "3");
    let out = plat(&["orbit", "--p", "2", "--k", "1,0", "--list"]);
    let list: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(list.as_array().unwrap().len(), 3);
    assert!(list[0].as_str().unwrap().starts_with("p=2 n=2"));
    let out = plat(&["nu", "--p", "3", "--k", "2,-1", "--exact"]);
    assert!(out.status.success());
    assert_eq!(reports(&out)[0]["pass"], true);
}

#[test]
fn phi_routes_agree() {
    let out = plat(&["phi", "--p", "2", "--k", "1,0", "--s", "0.3,1.1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &reports(&out)[0];
    assert_eq!(r["claim"], "spherical-routes");
    assert!(r["rel_err"].as_f64().unwrap() < 1e-10);
}

#[test]
fn beta_verify_with_negative_parameters() {
    let out = plat(&[
        "beta", "verify", "--p", "2", "--alpha", "12,12", "--beta", "-6,-7", "--box", "4",
        "--exact",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = reports(&out);
    assert_eq!(r.len(), 2);
    assert_eq!(r[1]["meta"]["rational"], "133055/121086");
}

#[test]
fn failing_claim_exits_one() {
    let out = plat(&[
        "beta", "verify", "--p", "2", "--alpha", "12,12", "--beta", "-6,-7", "--box", "1", "--tol",
        "1e-12",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(reports(&out)[0]["pass"], false);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(plat(&["run", "nope"]).status.code(), Some(2));
    assert_eq!(plat(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        plat(&["nu", "--p", "4", "--k", "1,0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        plat(&["depend", "verify", "--n", "2", "--m", "2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn gram_witness_for_disallowed_alpha() {
    let out = plat(&["gram", "--alpha", "0.5", "--box", "1", "--eig"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &reports(&out)[0];
    assert_eq!(r["claim"], "psd-witness");
    assert!(r["lhs"][0].as_f64().unwrap() < -1e-6);
}

#[test]
fn plancherel_and_continuation() {
    let out = plat(&[
        "plancherel",
        "verify",
        "--n",
        "2",
        "--p",
        "2",
        "--alpha",
        "2.5",
        "--k",
        "1,0",
        "--grid",
        "48",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        reports(&out)[0]["meta"]["convergence"]
            .as_array()
            .unwrap()
            .len(),
        3
    );
    let out = plat(&["continuation", "verify", "--alpha", "0.5", "--k", "1,0"]);
    assert_eq!(out.status.code(), Some(0));
    let out = plat(&["degenerate", "--alpha", "1", "--k", "1,-1"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn depend_routes() {
    for route in ["field", "gram"] {
        let out = plat(&[
            "depend", "verify", "--n", "2", "--m", "1", "--p", "2", "--route", route,
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", route);
        assert!(reports(&out)
            .iter()
            .all(|r| r["exact"] == true && r["abs_err"] == 0.0));
    }
}

#[test]
fn run_suite_is_deterministic_and_csv_works() {
    let a = plat(&["run", "dependence", "--m", "1", "--p", "2"]);
    let b = plat(&["run", "dependence", "--m", "1", "--p", "2"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(!String::from_utf8_lossy(&a.stdout).contains("wall_ms"));
    let t = plat(&["run", "lattice", "--timings"]);
    assert!(reports(&t).iter().all(|r| r["wall_ms"].is_number()));
    let c = plat(&[
        "run",
        "enumeration",
        "--p",
        "2",
        "--n",
        "2",
        "--format",
        "csv",
    ]);
    assert_eq!(c.status.code(), Some(0));
    let text = String::from_utf8_lossy(&c.stdout);
    assert!(text.starts_with("claim,params,"));
    assert!(text.lines().count() >= 3);
}

#[test]
fn run_reads_config_file() {
    let dir = std::env::temp_dir().join(format!("plat-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("cfg.json");
    std::fs::write(&path, r#"{"p": 3, "m": 0}"#).unwrap();
    let out = plat(&["run", "dependence", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(reports(&out)
        .iter()
        .filter(|r| r["params"].get("p").is_some())
        .all(|r| r["params"]["p"] == 3));
    std::fs::write(&path, r#"{"prime": 3}"#).unwrap();
    assert_eq!(
        plat(&["run", "dependence", "--config", path.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    std::fs::remove_dir_all(&dir).unwrap();
}
