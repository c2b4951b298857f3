use std::process::Command;

fn zzsim() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_zzsim"));
    c.env_remove("ZZSIM_PLAN_CACHE");
    c
}

#[test]
fn prints_effective_config() {
    let out = zzsim().args(["config", "--workers", "3", "--seed", "7"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let c = zzsim::config::RunConfig::from_toml(&text).unwrap();
    assert_eq!((c.engine.workers, c.engine.budget.seed), (3, 7));
}

#[test]
fn oracle_check_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = zzsim().args(["oracle-check", "--count", "3", "--max-qubits", "4", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("oracle.json")).unwrap()).unwrap();
    assert_eq!(json["cases"].as_array().unwrap().len(), 3);
    let csv = std::fs::read_to_string(dir.path().join("oracle.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(dir.path().join("config.toml").exists());
}

#[test]
fn bad_config_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "rounds = 0\n").unwrap();
    let out = zzsim().arg("plan").arg("--config").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rounds"));
}
