use std::path::Path;
use std::process::{Command, Output};

fn homog(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_homog"))
        .args(args)
        .current_dir(dir)
        .env("HOMOG_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn space_to_decomposition_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gen = json(&homog(d, &["space", "gen", "--spec", r#"{"kind":"grid1d","n":16,"spacing":0.125}"#, "--out", "s.json"]));
    assert_eq!(gen["n"], 16);
    let dys = json(&homog(d, &["dyadic", "build", "--space", "s.json"]));
    assert_eq!(dys["valid"], true);
    let fam = json(&homog(d, &["kernels", "build", "--space", "s.json", "--family", "haar", "--out", "h.fam"]));
    assert!(fam["marginal_error"].as_f64().unwrap() < 1e-14);
    assert!(d.join("h.fam").exists());

    homog(d, &["norm", "--space", "s.json", "--which", "radial", "--f", "const:1", "--csv", "r.csv", "--summary", "r.json"]);
    let csv = std::fs::read_to_string(d.join("r.csv")).unwrap();
    assert_eq!(csv.lines().count(), 17);
    assert!(csv.starts_with("point,f,radial\n"));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    assert!((summary["lp_quasinorm"].as_f64().unwrap() - 16.0).abs() < 1e-8);

    let dec = json(&homog(d, &["decompose", "--space", "s.json", "--route", "wavelet", "--p", "0.9", "--f", "noise:3", "--out", "dec.json"]));
    assert!(dec["residual"].as_f64().unwrap() < 1e-8);
    assert_eq!(dec["route"]["invalid_atoms"], 0);
    let rep = json(&homog(d, &["reproduce", "--space", "s.json", "--f", "noise:3"]));
    assert!(rep["residuals"].as_array().unwrap().last().unwrap().as_f64().unwrap() < 1e-10);
    let dual = json(&homog(d, &["dual", "--space", "s.json", "--which", "lipschitz", "--alpha", "0", "--f", "const:2"]));
    assert_eq!(dual["norm"], 2.0);
}

#[test]
fn atom_validation_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    homog(d, &["space", "gen", "--spec", r#"{"kind":"grid1d","n":2}"#, "--out", "s.json"]);
    // (1, -1)/2 on B(0, 2) = {0, 1}: mean zero, sup 1/2 = μ(B)^{-1}
    std::fs::write(d.join("a.json"), "[0.5, -0.5]").unwrap();
    let ok = json(&homog(d, &["atoms", "validate", "--space", "s.json", "--atom", "a.json", "--p", "1", "--center", "0", "--radius", "2"]));
    assert_eq!(ok["valid"], true);
    std::fs::write(d.join("b.json"), "[1.0, 0.0]").unwrap();
    let bad = Command::new(env!("CARGO_BIN_EXE_homog"))
        .args(["atoms", "validate", "--space", "s.json", "--atom", "b.json", "--p", "1", "--center", "0", "--radius", "0.5"])
        .current_dir(d)
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn experiments_are_reproducible_from_toml() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("cfg.toml"),
        "p_grid = [0.9, 1.0]\n[space]\nkind = \"cantor_ultrametric\"\ndepth = 4\n[suite]\nsize = 12\nseed = 5\n",
    )
    .unwrap();
    homog(d, &["experiment", "equivalence", "--config", "cfg.toml", "--out", "a"]);
    homog(d, &["experiment", "equivalence", "--config", "cfg.toml", "--out", "b"]);
    for f in ["ratios.csv", "norms.csv", "equivalence.json"] {
        assert_eq!(std::fs::read(d.join("a").join(f)).unwrap(), std::fs::read(d.join("b").join(f)).unwrap());
    }
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("a/equivalence.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["suite"]["seed"], 5);
    let table = homog(d, &["report", "a"]);
    assert!(String::from_utf8(table.stdout).unwrap().contains("| radial | nontangential |"));
    homog(d, &["experiment", "globallocal", "--config", "cfg.toml", "--out", "gl", "--atoms", "5"]);
    assert!(d.join("gl/globallocal.json").exists());
}
