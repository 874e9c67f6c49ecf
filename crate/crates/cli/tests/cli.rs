use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn vibelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vibelab")).args(args).output().unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn scenario(dir: &Path, name: &str) -> PathBuf {
    let p = dir.join(format!("{name}.toml"));
    fs::write(
        &p,
        format!(
            "name = \"{name}\"\nprotocols = [\"prt\", \"rct\"]\n[plant]\npreset = \"linear\"\n\
             [protocol]\ntime_scale = 0.1\n[protocol.prt]\nlevels = 3\n[protocol.rct]\nlevels = 2\n"
        ),
    )
    .unwrap();
    p
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = scenario(dir.path(), "lin");
    let o = vibelab(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--repeat", "2"]);
    assert!(o.status.success(), "{}", text(&o));
    for f in ["lin_prt_run001.csv", "lin_rct_run002.csv", "lin_report_run002.json", "lin_summary_run001.md"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let o = vibelab(&["report", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(out.join("comparison.md").is_file() && out.join("comparison.json").is_file());
    assert!(String::from_utf8_lossy(&o.stdout).contains("lin"));
}

#[test]
fn protocol_override_limits_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "only");
    let o = vibelab(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--protocol", "rct"]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(dir.path().join("only_rct_run001.csv").is_file());
    assert!(!dir.path().join("only_prt_run001.csv").exists());
}

#[test]
fn report_lists_every_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = scenario(dir.path(), "a");
    let b = scenario(dir.path(), "b");
    let o = vibelab(&["report", "--config", a.to_str().unwrap(), b.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    let t = text(&o);
    assert!(t.contains("a_report_run001.json") && t.contains("b_report_run001.json"), "{t}");
}

#[test]
fn calibrate_writes_oracle_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/hardening.toml");
    let o = vibelab(&["calibrate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--points", "5"]);
    assert!(o.status.success(), "{}", text(&o));
    let csv = fs::read_to_string(dir.path().join("hardening_oracle.csv")).unwrap();
    assert!(csv.starts_with("# config_hash="));
    assert_eq!(csv.lines().count(), 2 + 5);
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(&p, "name = \"bad\"\n[plant]\npreset = \"linear\"\nd1 = -1\n").unwrap();
    let o = vibelab(&["run", "--config", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(text(&o).contains("error:"));
    let o = vibelab(&["run", "--config", dir.path().join("none.toml").to_str().unwrap()]);
    assert!(!o.status.success());
}
