//! Browser demo bindings: interactive error-set clouds, the Prony
//! curve, and constrained reconstruction in the node plane.
//!
//! Every export takes plain numbers and returns a JSON string, so the
//! page needs no generated TypeScript glue beyond the wasm loader. The
//! functions are thin assemblies over the core crate; they are also
//! unit-tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use prony_leaves::*;

#[derive(Serialize)]
struct DemoPoint {
    x1: f64,
    x2: f64,
    a1: f64,
    a2: f64,
}

impl DemoPoint {
    fn from_signal(s: &Signal) -> Self {
        Self {
            x1: s.nodes()[0],
            x2: s.nodes()[1],
            a1: s.amplitudes()[0],
            a2: s.amplitudes()[1],
        }
    }
}

#[derive(Serialize)]
struct ErrorSetDemo {
    h: f64,
    eps: f64,
    kappa: f64,
    cloud: Vec<DemoPoint>,
    curve: Vec<DemoPoint>,
    rho: f64,
    rho_a: f64,
    rho_x: f64,
    failed: usize,
    outer_ratio: f64,
}

#[derive(Serialize)]
struct ErrorMessage {
    error: String,
}

fn err_json(msg: impl std::fmt::Display) -> String {
    serde_json::to_string(&ErrorMessage {
        error: msg.to_string(),
    })
    .unwrap()
}

/// Sample the normalized error set of the symmetric two-spike cluster
/// `0.5 delta(x - kappa -+ h)` under moment noise `eps = h^p`, together
/// with a section of the Prony curve through the model signal.
#[wasm_bindgen]
pub fn error_set_demo(h: f64, eps_exponent: f64, kappa: f64, n: u32, seed: u32) -> String {
    if !(h > 0.0 && h < 1.0) {
        return err_json("h must lie in (0, 1)");
    }
    let eps = h.powf(eps_exponent);
    let f = denormalize(
        &Signal::new(vec![0.5, 0.5], vec![-1.0, 1.0]).unwrap(),
        &ClusterFrame { kappa, h },
    );
    let inv = InversionConfig::default();
    let frame = ClusterFrame { kappa, h };
    let g = apply_frame(&f, &frame);

    let mut cloud = Vec::new();
    let mut failed = 0;
    let mut rho: f64 = 0.0;
    let mut rho_a: f64 = 0.0;
    let mut rho_x: f64 = 0.0;
    let mut outer_ratio: f64 = 0.0;
    let h_prime = h / (1.0 + kappa.abs());
    let pi = Parallelepiped::new(g.clone(), eps, 1.0 / h_prime);
    for mode in [SampleMode::Corners, SampleMode::AxisExtremes, SampleMode::Uniform] {
        match sample_error_set(&f, eps, n as usize, seed as u64, mode, &inv) {
            Ok(part) => {
                failed += part.failed;
                for p in &part.points {
                    rho = rho.max(f.inf_distance(p));
                    rho_a = rho_a.max(f.amp_distance(p));
                    rho_x = rho_x.max(f.node_distance(p));
                    let gp = apply_frame(p, &frame);
                    outer_ratio = outer_ratio.max(pi.violation_ratio(&gp));
                    cloud.push(DemoPoint::from_signal(&gp));
                }
            }
            Err(e) => return err_json(e),
        }
    }

    let spec = LeafSpec::from_signal(&g, 2);
    let widths = vec![eps * h_prime.powi(-3)];
    let curve = match sample_leaf(&spec, &widths, 400, seed as u64 + 1, &inv) {
        Ok(leaf) => {
            let mut pts: Vec<(f64, Signal)> = leaf
                .provenance
                .iter()
                .zip(leaf.points)
                .map(|(prov, sig)| (prov.mu[3], sig))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            pts.iter().map(|(_, s)| DemoPoint::from_signal(s)).collect()
        }
        Err(e) => return err_json(e),
    };

    serde_json::to_string(&ErrorSetDemo {
        h,
        eps,
        kappa,
        cloud,
        curve,
        rho,
        rho_a,
        rho_x,
        failed,
        outer_ratio,
    })
    .unwrap()
}

#[derive(Serialize)]
struct GammaLine {
    slope: f64,
    intercept: f64,
}

#[derive(Serialize)]
struct ImproveDemo {
    h: f64,
    eps: f64,
    gamma: f64,
    truth: DemoPoint,
    point_solution: DemoPoint,
    improved: DemoPoint,
    chosen_q: usize,
    feasible_diameter: f64,
    point_node_error: f64,
    improved_node_error: f64,
    hyperbola: Vec<DemoPoint>,
    /// Boundaries of the constraint polytope as `x2 = slope x1 + b`.
    gamma_lines: Vec<GammaLine>,
    diagnostics_json: String,
}

/// Constrained reconstruction in the node plane: measurements
/// `(1, 0, h^2, t eps)` of the symmetric pair, amplitude-ratio window
/// `gamma`, and the leaf-localized output next to the point solution.
#[wasm_bindgen]
pub fn improve_demo(h: f64, gamma: f64, noise: f64, seed: u32) -> String {
    if !(h > 0.0 && h < 0.5) {
        return err_json("h must lie in (0, 0.5)");
    }
    if gamma < 1.0 {
        return err_json("gamma must be at least 1");
    }
    let eps = h.powi(3);
    let truth = Signal::new(vec![0.5, 0.5], vec![-h, h]).unwrap();
    let mu = MomentVector::new(vec![1.0, 0.0, h * h, noise.clamp(-1.0, 1.0) * eps]);
    let regularity = RegularityParams::new(1.0, 0.4, 1.0);
    let mut cfg = ImproveConfig::new(eps, regularity, seed as u64);
    cfg.points_per_leaf = 6000;
    let constraint = AmplitudeRatioConstraint::new(gamma);
    let res = match improved_reconstruct(&mu, 2, h, &constraint, &cfg) {
        Ok(r) => r,
        Err(e) => return err_json(e),
    };

    let hyper = hyperbola_d2(&mu);
    let mut hyperbola = Vec::new();
    let steps = 300;
    for i in 0..=steps {
        let x1 = -4.0 * h + (3.75 * h) * i as f64 / steps as f64;
        if let Some(x2) = hyper.x2_of_x1(x1) {
            if x1 < x2 {
                if let Ok((a1, a2)) = amplitudes_on_leaf_d2(x1, x2, &mu) {
                    hyperbola.push(DemoPoint { x1, x2, a1, a2 });
                }
            }
        }
    }

    let slack = eps / (1.0 - eps);
    let gamma_lines = vec![
        GammaLine {
            slope: -gamma,
            intercept: (1.0 + gamma) * slack,
        },
        GammaLine {
            slope: -1.0 / gamma,
            intercept: -(1.0 + 1.0 / gamma) * slack,
        },
    ];

    serde_json::to_string(&ImproveDemo {
        h,
        eps,
        gamma,
        truth: DemoPoint::from_signal(&truth),
        point_solution: DemoPoint::from_signal(&res.point_solution),
        improved: DemoPoint::from_signal(&res.improved),
        chosen_q: res.chosen_q,
        feasible_diameter: res.feasible_diameter,
        point_node_error: truth.node_distance(&res.point_solution),
        improved_node_error: truth.node_distance(&res.improved),
        hyperbola,
        gamma_lines,
        diagnostics_json: serde_json::to_string(&res.diagnostics).unwrap(),
    })
    .unwrap()
}

/// The explicit stability constants for `(d, eta, m, M, kappa)`.
#[wasm_bindgen]
pub fn constants_demo(d: u32, eta: f64, m: f64, m_upper: f64, kappa: f64) -> String {
    if d == 0 || !(eta > 0.0) || !(0.0 < m && m < m_upper) {
        return err_json("need d >= 1, eta > 0 and 0 < m < M");
    }
    let bundle = compute_constants(
        d as usize,
        &RegularityParams::new(eta, m, m_upper),
        kappa,
    );
    serde_json::to_string(&bundle).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_set_demo_produces_cloud_and_curve() {
        let json = error_set_demo(0.1, 3.0, 0.0, 100, 7);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v["error"].is_null(), "{json}");
        assert!(v["cloud"].as_array().unwrap().len() > 100);
        assert!(v["curve"].as_array().unwrap().len() > 100);
        assert!(v["rho"].as_f64().unwrap() > 0.0);
        // equality case at kappa = 0: containment ratio stays at 1
        assert!(v["outer_ratio"].as_f64().unwrap() <= 1.0 + 1e-6);
    }

    #[test]
    fn improve_demo_reports_the_improvement() {
        let json = improve_demo(0.05, 1.2, -1.0, 7);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v["error"].is_null(), "{json}");
        assert!(
            v["improved_node_error"].as_f64().unwrap()
                < v["point_node_error"].as_f64().unwrap()
        );
        assert_eq!(v["chosen_q"], 2);
        assert!(!v["hyperbola"].as_array().unwrap().is_empty());
    }

    #[test]
    fn constants_demo_echoes_the_bundle() {
        let json = constants_demo(2, 1.0, 0.5, 1.0, 0.0);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["C2"], 8.0);
        assert_eq!(v["C5"], 216.0);
    }

    #[test]
    fn bad_inputs_return_error_objects() {
        for json in [
            error_set_demo(-0.1, 3.0, 0.0, 10, 1),
            improve_demo(0.05, 0.5, 0.0, 1),
            constants_demo(0, 1.0, 0.5, 1.0, 0.0),
        ] {
            let v: serde_json::Value = serde_json::from_str(&json).unwrap();
            assert!(v["error"].is_string());
        }
    }
}
