use std::process::Command;

use serde_json::Value;

fn bsunit(args: &[&str], cache: &std::path::Path) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_bsunit"))
        .args(args)
        .env("BSUNIT_CACHE", cache)
        .output()
        .expect("binary runs");
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap_or(-1), json)
}

fn zetas(v: &Value) -> Vec<String> {
    let mut z: Vec<String> = v["classes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["zeta"].as_str().unwrap().to_string())
        .collect();
    z.sort();
    z
}

#[test]
fn zeta_uses_the_cache_on_the_second_run() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("zeta.cache");
    let (code, cold) = bsunit(&["zeta", "-D", "221", "-p", "3", "-l", "5"], &cache);
    assert_eq!(code, 0);
    assert!(cold["piece_evaluations"].as_u64().unwrap() > 0);
    let (code, warm) = bsunit(&["zeta", "-D", "221", "-p", "3", "-l", "5"], &cache);
    assert_eq!(code, 0);
    assert_eq!(warm["piece_evaluations"], 0);
    assert_eq!(warm["cache"]["hits"], 4);
    assert_eq!(zetas(&cold), zetas(&warm));
    assert_eq!(zetas(&cold), ["-1", "-5", "1", "5"]);
    assert_eq!(cold["schema"], 1);
}

#[test]
fn zeta_with_the_extra_inert_prime() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = bsunit(&["zeta", "-D", "221", "-p", "3", "-l", "5", "--extra-t", "2"], &dir.path().join("c"));
    assert_eq!(code, 0);
    assert_eq!(zetas(&v), ["-15", "-3", "15", "3"]);
}

#[test]
fn configuration_errors_have_their_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("never.cache");
    let (code, v) = bsunit(&["compute", "-D", "9", "-p", "3", "-l", "5"], &cache);
    assert_eq!(code, 3);
    assert_eq!(v["error"]["kind"], "config");
    let (code, v) = bsunit(&["zeta", "-D", "221", "-p", "5", "-l", "7"], &cache);
    assert_eq!(code, 3);
    assert!(v["error"]["message"].as_str().unwrap().contains("not inert"));
    assert!(!cache.exists(), "a rejected configuration must not create the cache");
}

#[test]
fn precision_errors_have_their_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = bsunit(&["compute", "-D", "221", "-p", "3", "-l", "5", "-M", "4", "--guard", "60"], &dir.path().join("c"));
    assert_eq!(code, 4, "{v}");
    assert_eq!(v["error"]["kind"], "precision");
}

#[test]
fn compute_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("c");
    let args = ["compute", "-D", "221", "-p", "3", "-l", "5", "-M", "40"];
    let (c1, a) = bsunit(&args, &cache);
    let (c2, b) = bsunit(&args, &cache);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    assert_eq!(a["minpoly"]["degree"], 4);
    let mut ords: Vec<i64> = a["ords"].as_array().unwrap().iter().map(|x| x.as_i64().unwrap()).collect();
    ords.sort();
    assert_eq!(ords, [-5, -1, 1, 5]);
}

#[test]
fn gross_check_reports_each_odd_character() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = bsunit(&["gross-check", "-D", "221", "-p", "3", "-l", "5", "-m", "3"], &dir.path().join("c"));
    assert_eq!(code, 0);
    assert_eq!(v["characters"].as_array().unwrap().len(), 2);
    assert!(v["min_residual_valuation"].as_i64().unwrap() >= 2);
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = bsunit(&["selftest"], &dir.path().join("c"));
    assert_eq!(code, 0);
    assert_eq!(v["passed"], true);
}
