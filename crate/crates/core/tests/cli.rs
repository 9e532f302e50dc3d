use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mdmsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdmsim"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

const SMALL: &str = r#"
name = "small"
preset = "paper3"
sweep = [6.0]
rx_subsets = [3]
n_captures = 1

[tx]
n_symbols = 16384

[eq]
n_train = 6000

[rx]
front_end = "coherent"
"#;

#[test]
fn presets_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let out = mdmsim(&["presets"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["paper6", "paper3", "paper3-calibrated"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn validate_reports_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "rx_subsets = [7]\n[tx.rrc]\nroll_off = 1.5\n").unwrap();
    let out = mdmsim(&["validate", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("tx.rrc.roll_off") && err.contains("[0, 1]"), "{err}");
    assert!(err.contains("rx_subsets[0]"), "{err}");
}

#[test]
fn validate_points_at_syntax_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("broken.toml"), "sweep = [1.0,\nseed = \n").unwrap();
    let out = mdmsim(&["validate", "broken.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line "));
}

#[test]
fn validate_resolves_presets() {
    let dir = tempfile::tempdir().unwrap();
    let out = mdmsim(&["validate", "paper3"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("rx_subsets = [3, 4, 5, 6]"), "{text}");
}

#[test]
fn unknown_config_and_usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(mdmsim(&["run", "nope.toml"], dir.path()).status.code(), Some(1));
    assert_eq!(mdmsim(&["frobnicate"], dir.path()).status.code(), Some(1));
}

#[test]
fn run_then_export() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let out = mdmsim(
        &["run", "small.toml", "--out", "res", "--seed", "42", "--jobs", "1", "--dump-matrices"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = dir.path().join("res");
    for f in ["results.csv", "results.json", "resolved_config.toml", "failures.json", "matrices/channel.json"] {
        assert!(res.join(f).exists(), "missing {f}");
    }
    let cfg = fs::read_to_string(res.join("resolved_config.toml")).unwrap();
    assert!(cfg.starts_with("# seeds: base 42"), "{cfg}");
    assert!(cfg.contains("seed = 42"));
    assert!(fs::read_dir(res.join("matrices")).unwrap().count() >= 2);

    let out = mdmsim(&["export", "res", "--figure", "xt_matrix"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(res.join("xt_spatial_k3.csv").exists() && res.join("xt_group_k3.csv").exists());

    let out = mdmsim(&["export", "res/results.json", "--figure", "mdl_vs_power", "--out", "plots"], dir.path());
    assert!(out.status.success());
    assert!(dir.path().join("plots/mdl_vs_power.csv").exists());

    let out = mdmsim(&["export", "res", "--figure", "fig7"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn failed_points_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SMALL.replace("n_train = 6000", "n_train = 6000\nmu_train = 0.5");
    fs::write(dir.path().join("unstable.toml"), cfg).unwrap();
    let out = mdmsim(&["run", "unstable.toml", "--out", "res", "--jobs", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let failures = fs::read_to_string(dir.path().join("res/failures.json")).unwrap();
    assert!(failures.contains("diverged"), "{failures}");
}
