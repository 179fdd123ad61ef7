//! Experiment drivers: error-set containment sweeps, worst-case scaling
//! sweeps, leaf sampling, constrained-reconstruction runs, and the
//! plot-ready figure data.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use prony_leaves::*;

use crate::config::{ExperimentConfig, OutputFormat};

/// Canonical model signal for experiments: equispaced nodes spanning
/// `[-1, 1]` and uniform amplitudes at the middle of the allowed band.
pub fn model_signal(d: usize, p: &RegularityParams) -> Signal {
    let amp = 0.5 * (p.amp_min + p.amp_max);
    if d == 1 {
        return Signal::new(vec![amp], vec![0.0]).unwrap();
    }
    let nodes: Vec<f64> = (0..d)
        .map(|j| -1.0 + 2.0 * j as f64 / (d as f64 - 1.0))
        .collect();
    Signal::new(vec![amp; d], nodes).unwrap()
}

/// The clustered signal for a sweep cell: the model signal pushed to
/// frame `(kappa, h)`.
pub fn cluster_signal(cfg: &ExperimentConfig, h: f64) -> Signal {
    let g = model_signal(cfg.d, &cfg.regularity());
    denormalize(
        &g,
        &ClusterFrame {
            kappa: cfg.kappa,
            h,
        },
    )
}

pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Cloud of normalized (model-space) signals with provenance, shaped for
/// plotting.
fn normalized_cloud(cloud: &SampleCloud, frame: &ClusterFrame) -> SampleCloud {
    SampleCloud {
        points: cloud
            .points
            .iter()
            .map(|p| apply_frame(p, frame))
            .collect(),
        provenance: cloud.provenance.clone(),
        seed: cloud.seed,
        attempted: cloud.attempted,
        failed: cloud.failed,
    }
}

fn merge_error_modes(
    f: &Signal,
    eps: f64,
    n: usize,
    seed: u64,
    cfg: &InversionConfig,
) -> Result<SampleCloud, LeafError> {
    let mut cloud: Option<SampleCloud> = None;
    for mode in [SampleMode::Corners, SampleMode::AxisExtremes, SampleMode::Uniform] {
        let part = sample_error_set(f, eps, n, seed, mode, cfg)?;
        cloud = Some(match cloud {
            None => part,
            Some(c) => {
                let mut merged = c;
                merged.points.extend(part.points);
                merged.provenance.extend(part.provenance);
                merged.attempted += part.attempted;
                merged.failed += part.failed;
                merged
            }
        });
    }
    Ok(cloud.expect("three modes sampled"))
}

#[derive(Debug, Serialize)]
struct ContainmentCell {
    h: f64,
    eps: f64,
    report: SandwichReport,
    concentration: Vec<ConcentrationReport>,
}

#[derive(Debug, Serialize)]
struct ContainmentSummary {
    schema: u32,
    seed: u64,
    cells: Vec<ContainmentCell>,
}

/// `error-set`: per (h, eps) cell, emit the normalized cloud and the
/// Prony-curve section for plotting, and run the sandwich plus
/// leaf-concentration checks. Returns false when any containment fails.
pub fn run_error_set(cfg: &ExperimentConfig) -> Result<bool> {
    let inv = InversionConfig::default();
    let p = cfg.regularity();
    let mut cells = Vec::new();
    let mut all_pass = true;
    for i in 0..cfg.h_list.len() {
        let h = cfg.h_list[i];
        let eps = cfg.eps_for(i);
        let f = cluster_signal(cfg, h);
        let (g, frame) = normalize(&f).expect("cluster signals have d >= 2");
        let seed = cfg.cell_seed(i);

        let cloud = merge_error_modes(&f, eps, cfg.n_samples, seed, &inv)
            .map_err(|e| anyhow::anyhow!("error-set sampling failed: {e}"))?;
        let norm_cloud = normalized_cloud(&cloud, &frame);
        let cloud_name = match cfg.format {
            OutputFormat::Csv => format!("error_set_h{h}.csv"),
            OutputFormat::Json => format!("error_set_h{h}.json"),
        };
        let body = match cfg.format {
            OutputFormat::Csv => norm_cloud.to_csv(),
            OutputFormat::Json => to_pretty_json(&norm_cloud),
        };
        write_output(&cfg.output_dir, &cloud_name, &body)?;

        // section of the Prony curve S_{2d-2}(G) for the overlay
        let q_curve = 2 * cfg.d - 2;
        let h_prime = frame.h / (1.0 + frame.kappa.abs());
        let spec = LeafSpec::from_signal(&g, q_curve);
        let widths: Vec<f64> = (q_curve + 1..2 * cfg.d)
            .map(|k| eps * h_prime.powi(-(k as i32)))
            .collect();
        let leaf = sample_leaf(&spec, &widths, cfg.n_samples.max(500), seed, &inv)
            .map_err(|e| anyhow::anyhow!("leaf sampling failed: {e}"))?;
        let leaf_name = match cfg.format {
            OutputFormat::Csv => format!("prony_curve_h{h}.csv"),
            OutputFormat::Json => format!("prony_curve_h{h}.json"),
        };
        let body = match cfg.format {
            OutputFormat::Csv => leaf.to_csv(),
            OutputFormat::Json => to_pretty_json(&leaf),
        };
        write_output(&cfg.output_dir, &leaf_name, &body)?;

        let report = check_sandwich(&f, eps, &p, cfg.n_samples, seed, 1e-6, &inv)
            .map_err(|e| anyhow::anyhow!("sandwich check failed: {e}"))?;
        let mut concentration = Vec::new();
        for q in [2 * cfg.d - 2, 2 * cfg.d - 1] {
            let rep = leaf_concentration_check(
                &f,
                eps,
                &p,
                q,
                cfg.n_samples,
                (cfg.n_samples * 4).max(2000),
                seed,
                1e-3,
                &inv,
            )
            .map_err(|e| anyhow::anyhow!("concentration check failed: {e}"))?;
            all_pass &= rep.pass;
            concentration.push(rep);
        }
        all_pass &= report.pass();
        all_pass &= report.warnings.iter().all(|w| !w.contains("failed inversion"));
        cells.push(ContainmentCell {
            h,
            eps,
            report,
            concentration,
        });
    }
    let summary = ContainmentSummary {
        schema: 1,
        seed: cfg.seed,
        cells,
    };
    write_output(&cfg.output_dir, "containment_report.json", &to_pretty_json(&summary))?;
    Ok(all_pass)
}

#[derive(Debug, Serialize)]
struct WorstCaseRow {
    h: f64,
    eps: f64,
    rho: f64,
    rho_a: f64,
    rho_x: f64,
    amplification_rho: f64,
    amplification_rho_a: f64,
    amplification_rho_x: f64,
    witness_eps: f64,
    witness_pass: bool,
    failed: usize,
}

#[derive(Debug, Serialize)]
struct WorstCaseSummary {
    schema: u32,
    seed: u64,
    rows: Vec<WorstCaseRow>,
    /// Log-log fits of the amplification factors rho/eps against h.
    slope_rho: Option<SlopeFit>,
    slope_rho_a: Option<SlopeFit>,
    slope_rho_x: Option<SlopeFit>,
}

/// `worst-case`: sweep h, estimate the worst-case errors, check the
/// lower-bound witness in its validity regime, and fit the
/// amplification exponents. Returns false when a witness check fails.
pub fn run_worst_case(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let inv = InversionConfig::default();
    let p = cfg.regularity();
    let g = model_signal(cfg.d, &p);
    let bundle = compute_constants(cfg.d, &p, cfg.kappa);
    let two_d_minus_1 = 2 * cfg.d as i32 - 1;

    let mut rows = Vec::new();
    let mut witness_ok = true;
    for i in 0..cfg.h_list.len() {
        let h = cfg.h_list[i];
        let eps = cfg.eps_for(i);
        let f = cluster_signal(cfg, h);
        let rep = estimate_worst_case(&f, eps, cfg.n_samples, cfg.cell_seed(i), &inv)
            .map_err(|e| anyhow::anyhow!("worst-case estimation failed: {e}"))?;

        // The witness inequality is only claimed for
        // eps <= min(C6, C7) h^{2d-1}: test it exactly at that scale.
        let witness_eps = bundle.c6.min(bundle.c7) * h.powi(two_d_minus_1);
        let witness_eps_prime =
            (1.0 + cfg.kappa.abs()).powi(-two_d_minus_1) * witness_eps;
        let lb = construct_g_lb(&g, witness_eps_prime, h, &inv)
            .map_err(|e| anyhow::anyhow!("witness construction failed: {e}"))?;
        let witness_pass =
            lb.inf_distance(&g) >= bundle.c3 * witness_eps_prime * h.powi(-two_d_minus_1);
        witness_ok &= witness_pass;

        rows.push(WorstCaseRow {
            h,
            eps,
            rho: rep.rho,
            rho_a: rep.rho_a,
            rho_x: rep.rho_x,
            amplification_rho: rep.rho / eps,
            amplification_rho_a: rep.rho_a / eps,
            amplification_rho_x: rep.rho_x / eps,
            witness_eps,
            witness_pass,
            failed: rep.failed,
        });
    }

    let fit_col = |pick: fn(&WorstCaseRow) -> f64| -> Option<SlopeFit> {
        if rows.len() < 3 {
            return None;
        }
        let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let vals: Vec<f64> = rows.iter().map(pick).collect();
        fit_scaling(&hs, &vals).ok()
    };
    let summary = WorstCaseSummary {
        schema: 1,
        seed: cfg.seed,
        slope_rho: fit_col(|r| r.amplification_rho),
        slope_rho_a: fit_col(|r| r.amplification_rho_a),
        slope_rho_x: fit_col(|r| r.amplification_rho_x),
        rows,
    };

    let mut csv = String::from(
        "h,eps,rho,rho_a,rho_x,amplification_rho,amplification_rho_a,amplification_rho_x,witness_eps,witness_pass,failed\n",
    );
    for r in &summary.rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.h,
            r.eps,
            r.rho,
            r.rho_a,
            r.rho_x,
            r.amplification_rho,
            r.amplification_rho_a,
            r.amplification_rho_x,
            r.witness_eps,
            r.witness_pass,
            r.failed
        )
        .unwrap();
    }
    write_output(&cfg.output_dir, "worst_case.csv", &csv)?;
    write_output(&cfg.output_dir, "worst_case_slopes.json", &to_pretty_json(&summary))?;

    let human = summary
        .slope_rho_x
        .as_ref()
        .map(|f| format!("slope(rho_x/eps) = {:.3}", f.exponent))
        .unwrap_or_else(|| "single cell, no fit".into());
    Ok((witness_ok, human))
}

/// `leaves`: sample a leaf section of the model signal into a cloud
/// file.
pub fn run_leaves(cfg: &ExperimentConfig, q: usize) -> Result<()> {
    anyhow::ensure!(q < 2 * cfg.d, "q must lie in [0, 2d-1]");
    let inv = InversionConfig::default();
    let p = cfg.regularity();
    let g = model_signal(cfg.d, &p);
    for i in 0..cfg.h_list.len() {
        let h = cfg.h_list[i];
        let eps = cfg.eps_for(i);
        let h_prime = h / (1.0 + cfg.kappa.abs());
        let spec = LeafSpec::from_signal(&g, q);
        let widths: Vec<f64> = (q + 1..2 * cfg.d)
            .map(|k| eps * h_prime.powi(-(k as i32)))
            .collect();
        let cloud = sample_leaf(&spec, &widths, cfg.n_samples, cfg.cell_seed(i), &inv)
            .map_err(|e| anyhow::anyhow!("leaf sampling failed: {e}"))?;
        let name = match cfg.format {
            OutputFormat::Csv => format!("leaf_q{q}_h{h}.csv"),
            OutputFormat::Json => format!("leaf_q{q}_h{h}.json"),
        };
        let body = match cfg.format {
            OutputFormat::Csv => cloud.to_csv(),
            OutputFormat::Json => to_pretty_json(&cloud),
        };
        write_output(&cfg.output_dir, &name, &body)?;
    }
    Ok(())
}

/// Choice of the a priori amplitude-ratio window for `improve`.
#[derive(Debug, Clone, Copy)]
pub enum GammaRule {
    Fixed(f64),
    Unconstrained,
    /// `gamma = 1 + 2h`: a window that tightens with the cluster scale,
    /// the regime in which leaf localization reaches its full rate.
    Tracking,
}

impl GammaRule {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "inf" | "unconstrained" => Ok(GammaRule::Unconstrained),
            "auto" | "tracking" => Ok(GammaRule::Tracking),
            other => {
                let v: f64 = other
                    .parse()
                    .with_context(|| format!("cannot parse gamma {other:?}"))?;
                anyhow::ensure!(v >= 1.0, "gamma must be at least 1");
                Ok(GammaRule::Fixed(v))
            }
        }
    }

    pub fn at(&self, h: f64) -> f64 {
        match self {
            GammaRule::Fixed(g) => *g,
            GammaRule::Unconstrained => f64::INFINITY,
            GammaRule::Tracking => 1.0 + 2.0 * h,
        }
    }
}

#[derive(Debug, Serialize)]
struct ImproveRow {
    h: f64,
    eps: f64,
    gamma: f64,
    chosen_q: usize,
    point_node_error: f64,
    improved_node_error: f64,
    point_amplification: f64,
    improved_amplification: f64,
}

#[derive(Debug, Serialize)]
struct ImproveSummary {
    schema: u32,
    seed: u64,
    rows: Vec<ImproveRow>,
    slope_point: Option<SlopeFit>,
    slope_improved: Option<SlopeFit>,
}

/// The standard noisy measurement of the symmetric pair used in the
/// improvement experiments: `(1, 0, h^2, -eps)`.
pub fn improve_measurements(h: f64, eps: f64) -> MomentVector {
    MomentVector::new(vec![1.0, 0.0, h * h, -eps])
}

fn improve_once(
    eps: f64,
    gamma: f64,
    h_lower: f64,
    mu: &MomentVector,
    seed: u64,
    p: &RegularityParams,
) -> std::result::Result<ImprovedResult, prony_leaves::improve::ImproveError> {
    let constraint = AmplitudeRatioConstraint::new(gamma);
    let mut icfg = ImproveConfig::new(eps, *p, seed);
    // tight ratio windows cut thin slices out of the leaves; spend
    // samples so the slice is resolved at every sweep scale
    icfg.points_per_leaf = 12000;
    improved_reconstruct(mu, 2, h_lower, &constraint, &icfg)
}

/// `improve`: run the constrained reconstruction over the sweep; the
/// ground truth is the symmetric pair at `+-h`. Emits per-cell results,
/// the figure-style node-plane data for single cells, and slope fits of
/// the node-error amplification across the sweep.
pub fn run_improve(
    cfg: &ExperimentConfig,
    rule: GammaRule,
    h_lower: Option<f64>,
    moments_file: Option<&Path>,
) -> Result<(bool, String)> {
    anyhow::ensure!(cfg.d == 2, "improve implements the two-spike amplitude-ratio instance");
    let p = cfg.regularity();
    let mut rows = Vec::new();
    let mut all_feasible = true;
    for i in 0..cfg.h_list.len() {
        let h = cfg.h_list[i];
        let eps = cfg.eps_for(i);
        let gamma = rule.at(h);
        let truth = Signal::new(vec![0.5, 0.5], vec![-h, h]).unwrap();
        let mu = match moments_file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))?
            }
            None => improve_measurements(h, eps),
        };
        let res = improve_once(eps, gamma, h_lower.unwrap_or(h), &mu, cfg.cell_seed(i), &p)
            .map_err(|e| anyhow::anyhow!("improve failed at h = {h}: {e}"))?;
        let point_err = truth.node_distance(&res.point_solution);
        let improved_err = truth.node_distance(&res.improved);
        if gamma.is_finite() {
            all_feasible &=
                AmplitudeRatioConstraint::new(gamma).is_feasible(&res.improved);
        }
        if cfg.h_list.len() == 1 {
            write_output(
                &cfg.output_dir,
                "improved_result.json",
                &to_pretty_json(&res),
            )?;
            let fig = figure3_data(h, eps, gamma, &mu, &truth, &res)?;
            write_output(&cfg.output_dir, "figure3.csv", &fig)?;
        }
        rows.push(ImproveRow {
            h,
            eps,
            gamma,
            chosen_q: res.chosen_q,
            point_node_error: point_err,
            improved_node_error: improved_err,
            point_amplification: point_err / eps,
            improved_amplification: improved_err / eps,
        });
    }

    let fits = if rows.len() >= 3 {
        let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let pt: Vec<f64> = rows.iter().map(|r| r.point_amplification).collect();
        let im: Vec<f64> = rows.iter().map(|r| r.improved_amplification).collect();
        (fit_scaling(&hs, &pt).ok(), fit_scaling(&hs, &im).ok())
    } else {
        (None, None)
    };
    let summary = ImproveSummary {
        schema: 1,
        seed: cfg.seed,
        slope_point: fits.0,
        slope_improved: fits.1,
        rows,
    };
    let mut csv = String::from(
        "h,eps,gamma,chosen_q,point_node_error,improved_node_error,point_amplification,improved_amplification\n",
    );
    for r in &summary.rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.h,
            r.eps,
            r.gamma,
            r.chosen_q,
            r.point_node_error,
            r.improved_node_error,
            r.point_amplification,
            r.improved_amplification
        )
        .unwrap();
    }
    write_output(&cfg.output_dir, "improve.csv", &csv)?;
    write_output(&cfg.output_dir, "improve_slopes.json", &to_pretty_json(&summary))?;

    let human = match (&summary.slope_point, &summary.slope_improved) {
        (Some(p), Some(i)) => format!(
            "point amplification slope {:.3}, improved {:.3}",
            p.exponent, i.exponent
        ),
        _ => "single cell, no fit".into(),
    };
    Ok((all_feasible, human))
}

/// Node-plane data behind the improvement picture: the hyperbola
/// section, the constraint polytope vertices, and the three signals.
fn figure3_data(
    h: f64,
    eps: f64,
    gamma: f64,
    mu: &MomentVector,
    truth: &Signal,
    res: &ImprovedResult,
) -> Result<String> {
    let hyper = hyperbola_d2(mu);
    let mut csv = String::from("kind,x1,x2,a1,a2\n");
    let mut emit_signal = |kind: &str, s: &Signal| {
        writeln!(
            csv,
            "{kind},{},{},{},{}",
            s.nodes()[0],
            s.nodes()[1],
            s.amplitudes()[0],
            s.amplitudes()[1]
        )
        .unwrap();
    };
    emit_signal("truth", truth);
    emit_signal("point_solution", &res.point_solution);
    emit_signal("improved", &res.improved);

    // hyperbola branch through the cluster window
    let steps = 400;
    for i in 0..=steps {
        let x1 = -4.0 * h + (3.75 * h) * i as f64 / steps as f64;
        if let Some(x2) = hyper.x2_of_x1(x1) {
            if x1 < x2 {
                if let Ok((a1, a2)) = amplitudes_on_leaf_d2(x1, x2, mu) {
                    writeln!(csv, "hyperbola,{x1},{x2},{a1},{a2}").unwrap();
                }
            }
        }
    }

    if gamma.is_finite() {
        let planes = gamma_polytope(gamma, eps, 0.0, 0.0)
            .map_err(|e| anyhow::anyhow!("polytope construction failed: {e}"))?;
        // vertices: pairwise intersections of the two slanted boundaries
        // and the diagonal
        let slack = eps / (1.0 - eps);
        let d1 = (1.0 + gamma) * slack;
        let d2 = (1.0 + 1.0 / gamma) * slack;
        if gamma > 1.0 {
            let x1 = (d1 + d2) / (gamma - 1.0 / gamma);
            let x2 = d1 - gamma * x1;
            writeln!(csv, "gamma_vertex,{x1},{x2},,").unwrap();
        }
        let x1 = d1 / (1.0 + gamma);
        writeln!(csv, "gamma_vertex,{x1},{x1},,").unwrap();
        let x1 = -d2 / (1.0 + 1.0 / gamma);
        writeln!(csv, "gamma_vertex,{x1},{x1},,").unwrap();
        debug_assert!(planes.iter().all(|pl| pl.contains(truth.nodes()[0], truth.nodes()[1])));
    }
    Ok(csv)
}

/// `figures`: the canonical parameter sets behind the three pictures.
pub fn run_figures(which: u8, out: &Path, seed: u64) -> Result<bool> {
    let mut cfg = ExperimentConfig {
        output_dir: out.to_path_buf(),
        seed,
        ..ExperimentConfig::default()
    };
    // the pictured signal is the symmetric pair: amplitudes 1/2 inside
    // the regularity band (eta, m, M) = (1, 0.4, 1)
    cfg.m = 0.4;
    cfg.m_upper = 0.6;
    match which {
        1 | 2 => {
            let h = if which == 1 { 0.1 } else { 0.05 };
            cfg.h_list = vec![h];
            run_error_set(&cfg)
        }
        3 => {
            cfg.h_list = vec![0.05];
            cfg.m_upper = 1.0;
            let (ok, _) = run_improve(&cfg, GammaRule::Fixed(1.2), None, None)?;
            Ok(ok)
        }
        other => anyhow::bail!("unknown figure {other} (expected 1, 2 or 3)"),
    }
}
