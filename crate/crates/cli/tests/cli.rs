//! End-to-end checks of the `pronylab` binary: file formats, exit
//! codes, and re-validation of emitted cloud rows.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pronylab")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pronylab-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn pronylab")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn moments_of(path: &Path) -> Vec<f64> {
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["moments"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

#[test]
fn forward_matches_hand_computed_moments() {
    let dir = scratch("forward");
    let sig = dir.join("sig.json");
    let mu = dir.join("mu.json");

    write(&sig, r#"{"amplitudes":[0.5,0.5],"nodes":[-0.1,0.1]}"#);
    let out = run(&[
        "forward",
        "--input",
        sig.to_str().unwrap(),
        "--out",
        mu.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let vals = moments_of(&mu);
    assert!((vals[0] - 1.0).abs() < 1e-15 && vals[1].abs() < 1e-17);
    assert!((vals[2] - 0.01).abs() < 1e-17 && vals[3].abs() < 1e-18);

    write(&sig, r#"{"amplitudes":[1.0],"nodes":[0.0]}"#);
    let out = run(&["forward", "--input", sig.to_str().unwrap(), "--out", mu.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(moments_of(&mu), vec![1.0, 0.0]);

    write(&sig, r#"{"amplitudes":[1.0,2.0],"nodes":[-1.0,1.0]}"#);
    let out = run(&["forward", "--input", sig.to_str().unwrap(), "--out", mu.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(moments_of(&mu), vec![3.0, 1.0, 3.0, 1.0]);
}

#[test]
fn solve_round_trips_and_reports_failures() {
    let dir = scratch("solve");
    let mu = dir.join("mu.json");
    let sig = dir.join("sig.json");

    write(&mu, r#"{"moments":[1.0,0.0,0.01,0.0]}"#);
    let out = run(&[
        "solve",
        "--input",
        mu.to_str().unwrap(),
        "--d",
        "2",
        "--out",
        sig.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sig).unwrap()).unwrap();
    let nodes: Vec<f64> = v["signal"]["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!((nodes[0] + 0.1).abs() < 1e-12 && (nodes[1] - 0.1).abs() < 1e-12);
    assert!(v["diagnostics"]["moment_residual"].as_f64().unwrap() < 1e-10);

    // complex pair: exit code 3 with the kind named
    write(&mu, r#"{"moments":[2.0,0.0,-0.02,0.0]}"#);
    let out = run(&["solve", "--input", mu.to_str().unwrap(), "--d", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ComplexRoots"));

    // malformed input: exit code 2
    write(&mu, "not json");
    let out = run(&["solve", "--input", mu.to_str().unwrap(), "--d", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn constants_output_and_domain_errors() {
    let out = run(&["constants", "--d", "2", "--eta", "1", "--m", "0.5", "--M", "1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert!((v["C2"].as_f64().unwrap() - 8.0).abs() < 1e-12);
    assert!((v["C5"].as_f64().unwrap() - 216.0).abs() < 1e-12);
    let product = v["R"].as_f64().unwrap()
        * 48.0
        * v["C2"].as_f64().unwrap()
        * v["C1"].as_f64().unwrap()
        * 2.0
        * 2.0
        * 9.0;
    assert!((product - 1.0).abs() < 1e-12);

    let out = run(&[
        "constants", "--d", "1", "--eta", "1", "--m", "0.5", "--M", "1", "--only", "K3",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn error_set_cloud_rows_revalidate_on_reread() {
    let dir = scratch("errorset");
    let out = run(&[
        "error-set",
        "--h",
        "0.1",
        "--samples",
        "50",
        "--seed",
        "3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(dir.join("error_set_h0.1.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert_eq!(header, "a_1,a_2,x_1,x_2,mode,mu_0,mu_1,mu_2,mu_3");
    let mut checked = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let a: Vec<f64> = fields[0..2].iter().map(|s| s.parse().unwrap()).collect();
        let x: Vec<f64> = fields[2..4].iter().map(|s| s.parse().unwrap()).collect();
        let mu: Vec<f64> = fields[5..9].iter().map(|s| s.parse().unwrap()).collect();
        // rows store the normalized signal; pull it back to the original
        // frame (kappa = 0, h = 0.1) before checking the residual
        let g = prony_leaves::Signal::new(a, x).unwrap();
        let f = prony_leaves::denormalize(
            &g,
            &prony_leaves::ClusterFrame { kappa: 0.0, h: 0.1 },
        );
        let mu = prony_leaves::MomentVector::new(mu);
        let resid = prony_leaves::moment_residual(&mu, &f);
        assert!(resid <= 1e-8 * (1.0 + mu.inf_norm()), "row residual {resid:.3e}");
        checked += 1;
    }
    assert!(checked > 70, "expected corners + axis + uniform rows, got {checked}");
}

#[test]
fn degenerate_eps_gives_a_point_cloud() {
    let dir = scratch("degenerate");
    let out = run(&[
        "error-set",
        "--h",
        "0.1",
        "--eps",
        "1e-14",
        "--samples",
        "20",
        "--seed",
        "4",
        "--out",
        dir.to_str().unwrap(),
    ]);
    // at the floating-point noise floor the multiplicative containment
    // slack may be exceeded (exit 4); the cloud itself must still be
    // emitted and degenerate to the unperturbed signal
    assert!(matches!(out.status.code(), Some(0) | Some(4)));
    let csv = std::fs::read_to_string(dir.join("error_set_h0.1.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let x1: f64 = fields[2].parse().unwrap();
        let x2: f64 = fields[3].parse().unwrap();
        assert!((x1 + 1.0).abs() < 1e-6 && (x2 - 1.0).abs() < 1e-6);
    }
}

#[test]
fn single_h_worst_case_has_no_fit() {
    let dir = scratch("singleh");
    let out = run(&[
        "worst-case",
        "--h",
        "0.1",
        "--samples",
        "100",
        "--seed",
        "5",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("worst_case_slopes.json")).unwrap(),
    )
    .unwrap();
    assert!(v["slope_rho_x"].is_null());
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn improve_unconstrained_returns_the_point_solution() {
    let dir = scratch("improveinf");
    let out = run(&[
        "improve",
        "--h",
        "0.05",
        "--gamma",
        "inf",
        "--samples",
        "50",
        "--seed",
        "6",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("improved_result.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(v["point_solution"], v["improved"]);
}

#[test]
fn figures_emit_plot_data() {
    let dir = scratch("figures");
    for which in ["1", "3"] {
        let out = run(&["figures", which, "--out", dir.to_str().unwrap(), "--seed", "7"]);
        assert!(out.status.success(), "figure {which}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(dir.join("error_set_h0.1.csv").exists());
    assert!(dir.join("prony_curve_h0.1.csv").exists());
    let fig3 = std::fs::read_to_string(dir.join("figure3.csv")).unwrap();
    assert!(fig3.starts_with("kind,x1,x2,a1,a2"));
    for kind in ["truth", "point_solution", "improved", "hyperbola", "gamma_vertex"] {
        assert!(fig3.contains(kind), "figure3.csv missing {kind} rows");
    }
}
