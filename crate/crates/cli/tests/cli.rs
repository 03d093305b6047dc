use std::path::Path;
use std::process::{Command, Output};

use mntc_cli::commands;
use mntc_cli::output::config_from_header;

fn mntc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mntc")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn spectrum_to_stdout() {
    let out = mntc(&["spectrum", "--gamma", "0.1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(
        lines.next().unwrap(),
        "q,gamma,re_eps_up,re_eps_lp,im_eps_up,im_eps_lp,gamma_up,gamma_lp,vg_up,vg_lp"
    );
    assert_eq!(lines.count(), 400);
}

#[test]
fn header_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "seed = 4\n[model]\ng = 0.25\n[time]\nt_max = 4.0\ndt = 0.5\n");
    let out = mntc(&["dynamics", "--config", &cfg, "--gamma", "0.2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# mntc "));
    let recovered = config_from_header(&text).unwrap();
    assert_eq!(recovered.seed, 4);
    assert_eq!(recovered.model.g, 0.25);
    assert_eq!(recovered.scan.gammas, Some(vec![0.2]));
    let again = commands::cmd_dynamics(&recovered).unwrap();
    assert_eq!(again.rows.len(), 9);
}

#[test]
fn json_output_parses() {
    let out = mntc(&["phase", "--format", "json", "--gamma", "0.6"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["command"], "phase");
    assert!(v["summary"].as_str().unwrap().contains("exceptional point"));
}

#[test]
fn fit_reads_a_dynamics_file() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.csv").to_string_lossy().into_owned();
    let out = mntc(&["dynamics", "--gamma", "0.3", "--tmax", "40", "--dt", "0.1", "--out", &traj]);
    assert!(out.status.success());
    let out = mntc(&["fit", "--trajectory", &traj]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().filter(|l| !l.starts_with('#')).nth(1).unwrap();
    assert!(row.starts_with("up,0.3,"), "{row}");
    assert!(row.ends_with(",ok"), "{row}");
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[model]\ngama = 0.1\n");
    let out = mntc(&["spectrum", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gama"));
}

#[test]
fn invalid_values_exit_2() {
    assert_eq!(mntc(&["spectrum", "--gamma", "-0.1"]).status.code(), Some(2));
    assert_eq!(mntc(&["dynamics", "--p", "3.1"]).status.code(), Some(2));
    assert_eq!(mntc(&["dynamics", "--dt", "0"]).status.code(), Some(2));
    assert_eq!(mntc(&["nonsense"]).status.code(), Some(2));
    assert_eq!(mntc(&["spectrum", "--config", "/nonexistent/x.toml"]).status.code(), Some(2));
}

#[test]
fn malformed_trajectory_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "branch,gamma,t,population,msd\nup,0.1,0.0,1.0,zero\n");
    let out = mntc(&["fit", "--trajectory", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn wrap_around_exits_3() {
    let out = mntc(&["dynamics", "--nmodes", "64", "--tmax", "200", "--dt", "10"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_exits_0() {
    let out = mntc(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("phase"));
}
