use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cbf_cli::{parse_config, render_config};
use proptest::prelude::*;

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn cbf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbf")).args(args).output().unwrap()
}

fn read_manifest(dir: &Path) -> String {
    std::fs::read_to_string(dir.join("manifest.txt")).unwrap()
}

#[test]
fn dry_run_prints_config_with_defaults() {
    let out = cbf(&["lyapunov", "--config", config("lyapunov_frozen_zero.ini").to_str().unwrap(), "--dry-run"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("pad = 2"), "{text}");
    assert!(text.contains("cfl = 0.5"), "{text}");
    assert!(text.contains("kappa_tilde = 1.0"), "{text}");
    // the printed config is itself a valid config
    parse_config(&text).unwrap();
}

#[test]
fn subcommand_must_match_experiment_kind() {
    let out = cbf(&["simulate", "--config", config("lyapunov_frozen_zero.ini").to_str().unwrap(), "--dry-run"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("lyapunov"), "{err}");
}

#[test]
fn missing_config_is_an_error() {
    let out = cbf(&["simulate", "--config", "/nonexistent/cbf.ini"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_identical_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let mut manifests = Vec::new();
    for _ in 0..2 {
        let out = cbf(&[
            "lyapunov",
            "--config",
            config("lyapunov_frozen_zero.ini").to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        manifests.push(read_manifest(&out_dir));
    }
    assert_eq!(manifests[0], manifests[1]);
    for name in ["config.ini", "exponents.csv", "reports.csv", "summary.csv", "series.csv"] {
        assert!(manifests[0].contains(&format!("  {name}\n")), "{name} missing:\n{}", manifests[0]);
    }
}

#[test]
fn seed_override_changes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str| {
        let out_dir = dir.path().join(seed);
        let out = cbf(&[
            "simulate",
            "--config",
            config("simulate.ini").to_str().unwrap(),
            "--seed",
            seed,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read_to_string(out_dir.join("series.csv")).unwrap()
    };
    assert_ne!(run("1"), run("2"));
}

fn template(mu: f64, beta: f64, r: u32, dt: f64, seed: u64, amp: f64, k: u32) -> String {
    format!(
        "seed = {seed}\n\n[grid]\nn = 16\n\n[physics]\nmu = {mu}\nbeta = {beta}\nr = {r}\nforcing = kolmogorov({k}, {amp})\n\n\
         [stepper]\ndt = {dt}\nt_end = 1\n\n[experiment]\nkind = simulate\n"
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn render_then_parse_is_identity(
        mu in 1e-3f64..10.0,
        beta in 0.0f64..5.0,
        r in 1u32..=3,
        steps in 10u32..5000,
        seed in any::<u64>(),
        amp in -3.0f64..3.0,
        k in 1u32..7,
    ) {
        let cfg = parse_config(&template(mu, beta, r, 1.0 / steps as f64, seed, amp, k)).unwrap();
        let again = parse_config(&render_config(&cfg)).unwrap();
        prop_assert_eq!(again, cfg);
    }

    #[test]
    fn unsupported_exponent_is_rejected(r in 4u32..100) {
        let err = parse_config(&template(0.1, 0.1, r, 0.01, 0, 1.0, 2)).unwrap_err().to_string();
        prop_assert!(err.contains("line 9"), "{}", err);
    }
}
