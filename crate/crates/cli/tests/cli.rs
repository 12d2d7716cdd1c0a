use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use contact_hj_lab::{preset, ExperimentConfig, PRESET_NAMES};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_contact-hj-lab"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> i32 {
    bin().args(args).output().unwrap().status.code().unwrap()
}

#[test]
fn shipped_configs_match_presets() {
    for name in PRESET_NAMES {
        let cfg = ExperimentConfig::load(&configs().join(format!("{name}.toml"))).unwrap();
        assert_eq!(cfg, preset(name).unwrap(), "{name}");
    }
}

#[test]
fn convergence_writes_artifacts() {
    let out = tempfile::tempdir().unwrap();
    let cfg = configs().join("quad.toml");
    let code = run(&["convergence", "--config", cfg.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    for f in [
        "sup_error.csv",
        "hausdorff.csv",
        "residual.csv",
        "rates.csv",
        "u_minus.csv",
        "jets_u_minus.csv",
        "minimizer.csv",
        "convergence.svg",
        "report.txt",
        "snapshots/manifest.csv",
        "snapshots/u_0000.csv",
    ] {
        assert!(out.path().join(f).is_file(), "{f}");
    }
    let rates = fs::read_to_string(out.path().join("rates.csv")).unwrap();
    let rows: Vec<&str> = rates.lines().collect();
    assert_eq!(rows[0], "kind,exponent,prefactor,r2,t_min,t_max,n");
    assert_eq!(rows.len(), 4);
    let exponent: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((-1.05..=-0.95).contains(&exponent));
    let report = fs::read_to_string(out.path().join("report.txt")).unwrap();
    assert!(report.contains("lambda estimate"));
}

#[test]
fn properties_exit_codes_and_seed_override() {
    let out = tempfile::tempdir().unwrap();
    let concave = configs().join("concave.toml");
    let dir = out.path().join("concave");
    assert_eq!(run(&["properties", "--config", concave.to_str().unwrap(), "--out", dir.to_str().unwrap()]), 1);
    let csv = fs::read_to_string(dir.join("properties.csv")).unwrap();
    assert!(csv.starts_with("name,verdict,margin\n"));
    assert!(csv.contains("models/H1,fail,"));

    let text = fs::read_to_string(configs().join("counterexample.toml"))
        .unwrap()
        .replace("pairs = 200", "pairs = 10");
    let cfg = out.path().join("ce.toml");
    fs::write(&cfg, text).unwrap();
    let (a, b) = (out.path().join("a"), out.path().join("b"));
    for (d, seed) in [(&a, "3"), (&b, "4")] {
        let code = run(&["properties", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap(), "--seed", seed]);
        assert_eq!(code, 0);
    }
    let pa = fs::read_to_string(a.join("properties.csv")).unwrap();
    assert!(pa.contains("evolve/strict_contraction,skipped: lambda_lower = 0,"));
    assert_ne!(pa, fs::read_to_string(b.join("properties.csv")).unwrap());
}

#[test]
fn config_errors_exit_2() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    assert_eq!(run(&["convergence", "--config", "/nonexistent/config.toml", "--out", o]), 2);
    let bad = out.path().join("bad.toml");
    fs::write(&bad, "[model]\nname = \"quad\"\n[grid]\nn = 4\n").unwrap();
    assert_eq!(run(&["convergence", "--config", bad.to_str().unwrap(), "--out", o]), 2);
    let missing = out.path().join("missing.toml");
    fs::write(&missing, "[model]\nname = \"quad\"\n[initial]\nkind = \"file\"\npath = \"nope.csv\"\n").unwrap();
    assert_eq!(run(&["convergence", "--config", missing.to_str().unwrap(), "--out", o]), 2);
}

#[test]
fn solver_failures_exit_3() {
    let out = tempfile::tempdir().unwrap();
    let frozen = configs().join("frozen.toml");
    let o = out.path().to_str().unwrap();
    // h^a does not depend on a, so no bracket encloses a sign change
    assert_eq!(run(&["critical", "--config", frozen.to_str().unwrap(), "--out", o]), 3);
    let text = fs::read_to_string(configs().join("quad.toml"))
        .unwrap()
        .replace("t_max = 300.0", "t_max = 2.0");
    let cfg = out.path().join("short.toml");
    fs::write(&cfg, text).unwrap();
    assert_eq!(run(&["convergence", "--config", cfg.to_str().unwrap(), "--out", o]), 3);
}

#[test]
fn initial_data_from_file() {
    let out = tempfile::tempdir().unwrap();
    let g = contact_hj::TorusGrid::new(32).unwrap();
    let phi = contact_hj::GridFn::from_fn(g, |x| 0.2 * (6.0 * x).cos());
    let mut buf = Vec::new();
    phi.write_csv(&mut buf).unwrap();
    fs::write(out.path().join("phi.csv"), buf).unwrap();
    let cfg = out.path().join("file.toml");
    fs::write(
        &cfg,
        "[model]\nname = \"quad\"\n[grid]\nn = 32\n[initial]\nkind = \"file\"\npath = \"phi.csv\"\n[run]\nt_final = 6.0\nsnapshot_every = 0.5\n[rates]\nkind = \"exponential\"\nwindow = [1.0, 6.0]\nresidual_window = [1.0, 6.0]\nfloor_factor = 10.0\n",
    )
    .unwrap();
    let dir = out.path().join("run");
    assert_eq!(run(&["convergence", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]), 0);
    let u0 = fs::read_to_string(dir.join("snapshots/u_0000.csv")).unwrap();
    let back = contact_hj::GridFn::read_csv(u0.as_bytes()).unwrap();
    assert_eq!(back, phi);
}
