//! Reconstruction improvement from a priori information.
//!
//! A point Prony solution carries a worst-case error of order
//! `eps h^{-2d+1}` when the nodes cluster at scale `h`. The leaves
//! `S_q`, by contrast, are reconstructible to order `eps h^{-q}`. When
//! the signal is known to lie in a feasible region `Omega`, intersecting
//! the (thickened) reconstructed leaves with `Omega` and picking the
//! tightest intersection can localize the signal far better than the
//! point solution:
//!
//! 1. invert the noisy moments to the point solution `F'`;
//! 2. sample the leaves `S_q(F')` for every `q`, boxed at scale
//!    `eps / h_lower^k` in the free moments;
//! 3. attach to each leaf its thickening radius
//!    `Delta_q = C4 (1/h_lower)^q eps`;
//! 4. filter by `Omega` and pick the `q*` whose feasible cloud has the
//!    smallest max-metric diameter;
//! 5. keep `F'` if it is feasible, otherwise move to the nearest
//!    sampled feasible point.
//!
//! The concrete `Omega` shipped here is the two-spike amplitude-ratio
//! window `1/gamma <= |a_1|/|a_2| <= gamma`, for which the node
//! projection of `S_2` is an explicit hyperbola and the constraint cuts
//! an explicit polytope out of the node plane.

use serde::Serialize;
use thiserror::Error;

use crate::error::DomainError;
use crate::inverse::{solve_prony, InversionConfig, InversionError};
use crate::jacobian::compute_constants;
use crate::leaf::{sample_leaf, sample_leaf_multiscale, LeafError, LeafSpec};
use crate::signal::{
    apply_frame, compute_moments, denormalize, ClusterFrame, MomentVector, RegularityParams,
    Signal,
};

/// A priori feasibility region in parameter space.
pub trait Feasibility {
    fn is_feasible(&self, f: &Signal) -> bool;
}

/// `1/gamma <= |a_1|/|a_2| <= gamma` for two-spike signals.
/// `gamma = +inf` is the unconstrained sentinel.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AmplitudeRatioConstraint {
    pub gamma: f64,
}

impl AmplitudeRatioConstraint {
    pub fn new(gamma: f64) -> Self {
        assert!(gamma >= 1.0, "gamma must be at least 1");
        Self { gamma }
    }

    pub fn unconstrained() -> Self {
        Self {
            gamma: f64::INFINITY,
        }
    }
}

impl Feasibility for AmplitudeRatioConstraint {
    fn is_feasible(&self, f: &Signal) -> bool {
        assert_eq!(f.d(), 2, "amplitude-ratio constraint is the d = 2 instance");
        if self.gamma.is_infinite() {
            return true;
        }
        let a1 = f.amplitudes()[0].abs();
        let a2 = f.amplitudes()[1].abs();
        if a2 == 0.0 {
            return false;
        }
        let ratio = a1 / a2;
        ratio >= 1.0 / self.gamma && ratio <= self.gamma
    }
}

/// Node-plane projection of the leaf `S_2` for two spikes:
/// `c0 x1 x2 - c1 (x1 + x2) + c2 = 0`. Degenerates to a line when
/// `c0 = 0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Hyperbola2 {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Hyperbola2 {
    pub fn residual(&self, x1: f64, x2: f64) -> f64 {
        self.c0 * x1 * x2 - self.c1 * (x1 + x2) + self.c2
    }

    pub fn is_degenerate(&self) -> bool {
        self.c0 == 0.0
    }

    /// Solve for `x2` given `x1`, when defined.
    pub fn x2_of_x1(&self, x1: f64) -> Option<f64> {
        let denom = self.c0 * x1 - self.c1;
        if denom == 0.0 {
            None
        } else {
            Some((self.c1 * x1 - self.c2) / denom)
        }
    }
}

/// The hyperbola carrying the node pairs of every signal with the same
/// first three moments: coefficients are `(mu_0, mu_1, mu_2)`.
pub fn hyperbola_d2(mu: &MomentVector) -> Hyperbola2 {
    assert!(mu.len() >= 3, "need at least three moments");
    Hyperbola2 {
        c0: mu[0],
        c1: mu[1],
        c2: mu[2],
    }
}

/// Amplitudes of the unique signal on `S_2(mu)` over a given node pair:
/// `a_1 = (mu_0 x_2 - mu_1)/(x_2 - x_1)`,
/// `a_2 = (-mu_0 x_1 + mu_1)/(x_2 - x_1)`.
pub fn amplitudes_on_leaf_d2(
    x1: f64,
    x2: f64,
    mu: &MomentVector,
) -> Result<(f64, f64), DomainError> {
    if x1 >= x2 {
        return Err(DomainError(format!(
            "need x1 < x2, got ({x1}, {x2})"
        )));
    }
    let gap = x2 - x1;
    Ok(((mu[0] * x2 - mu[1]) / gap, (-mu[0] * x1 + mu[1]) / gap))
}

/// Closed half-plane `a x1 + b x2 <= c` (strict when flagged).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HalfPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub strict: bool,
}

impl HalfPlane {
    pub fn contains(&self, x1: f64, x2: f64) -> bool {
        let v = self.a * x1 + self.b * x2;
        if self.strict {
            v < self.c
        } else {
            v <= self.c
        }
    }
}

/// The polytope `Gamma` carved out of the node plane by the
/// amplitude-ratio window under measurement error at most `eps`:
///
/// ```text
/// x1 < x2
/// x2 <= -gamma x1 + (1 + gamma)   eps / (1 - eps)
/// x2 >= -x1 / gamma - (1 + 1/gamma) eps / (1 - eps)
/// ```
pub fn gamma_polytope(
    gamma: f64,
    eps: f64,
    eps0: f64,
    eps1: f64,
) -> Result<Vec<HalfPlane>, DomainError> {
    if gamma < 1.0 {
        return Err(DomainError("gamma must be at least 1".into()));
    }
    if eps >= 1.0 || eps < 0.0 {
        return Err(DomainError(format!("need 0 <= eps < 1, got {eps}")));
    }
    if eps0.abs() > eps || eps1.abs() > eps {
        return Err(DomainError(
            "moment perturbations must be bounded by eps".into(),
        ));
    }
    let slack = eps / (1.0 - eps);
    Ok(vec![
        HalfPlane {
            a: 1.0,
            b: -1.0,
            c: 0.0,
            strict: true,
        },
        HalfPlane {
            a: gamma,
            b: 1.0,
            c: (1.0 + gamma) * slack,
            strict: false,
        },
        HalfPlane {
            a: -1.0 / gamma,
            b: -1.0,
            c: (1.0 + 1.0 / gamma) * slack,
            strict: false,
        },
    ])
}

/// Configuration for [`improved_reconstruct`] beyond the noisy moments.
#[derive(Debug, Clone)]
pub struct ImproveConfig {
    /// Moment error bound that produced the measurements.
    pub eps: f64,
    /// Regularity window assumed for the underlying cluster, used for
    /// the thickening constant `C4`.
    pub regularity: RegularityParams,
    /// Bound on the cluster center used for the constants.
    pub kappa_bound: f64,
    /// Samples drawn per leaf.
    pub points_per_leaf: usize,
    /// A leaf competes on diameter only when its feasible sample is at
    /// least this large; sparser feasible sets are fallback candidates
    /// ranked by count. Guards the argmin against one-point clouds whose
    /// sampled diameter is degenerately zero.
    pub min_feasible: usize,
    /// Scale span (in decades) of the multiscale free-moment draws; the
    /// feasible window can sit orders of magnitude below the box width.
    pub multiscale_decades: f64,
    pub seed: u64,
    pub inversion: InversionConfig,
}

impl ImproveConfig {
    pub fn new(eps: f64, regularity: RegularityParams, seed: u64) -> Self {
        Self {
            eps,
            regularity,
            kappa_bound: 0.0,
            points_per_leaf: 2000,
            min_feasible: 8,
            multiscale_decades: 6.0,
            seed,
            inversion: InversionConfig::default(),
        }
    }
}

/// Per-leaf diagnostics of the feasible-set search.
#[derive(Debug, Clone, Serialize)]
pub struct LeafDiagnostics {
    pub q: usize,
    pub sampled: usize,
    pub feasible: usize,
    /// Max-metric diameter of the feasible cloud, when nonempty.
    pub diameter: Option<f64>,
    /// Thickening radius `Delta_q = C4 (1/h_lower)^q eps`.
    pub thickening: f64,
}

/// Outcome of the constrained reconstruction.
#[derive(Debug, Clone, Serialize)]
pub struct ImprovedResult {
    pub point_solution: Signal,
    pub chosen_q: usize,
    pub feasible_diameter: f64,
    pub improved: Signal,
    pub diagnostics: Vec<LeafDiagnostics>,
}

#[derive(Debug, Error)]
pub enum ImproveError {
    #[error("no sampled leaf point satisfies the constraint (feasible counts per q: {per_q:?})")]
    EmptyFeasibleSet { per_q: Vec<usize> },
    #[error(transparent)]
    Inversion(#[from] InversionError),
    #[error(transparent)]
    Leaf(#[from] LeafError),
}

/// Max-metric diameter of a point set: per coordinate, the spread
/// `max - min`; the overall diameter is the largest spread.
fn cloud_diameter(points: &[&Signal]) -> f64 {
    let dim = 2 * points[0].d();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in points {
        for (k, v) in p.params().into_iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    (0..dim).map(|k| hi[k] - lo[k]).fold(0.0, f64::max)
}

/// Leaf-based reconstruction under a feasibility constraint.
pub fn improved_reconstruct<C: Feasibility>(
    mu_noisy: &MomentVector,
    d: usize,
    h_lower: f64,
    constraint: &C,
    cfg: &ImproveConfig,
) -> Result<ImprovedResult, ImproveError> {
    assert!(h_lower > 0.0, "h_lower must be positive");
    let point_solution = solve_prony(mu_noisy, d, &cfg.inversion)?;
    let bundle = compute_constants(d, &cfg.regularity, cfg.kappa_bound);

    let mut diagnostics = Vec::with_capacity(2 * d);
    let mut clouds: Vec<Vec<Signal>> = Vec::with_capacity(2 * d);
    for q in 0..2 * d {
        let spec = LeafSpec::from_moments(mu_noisy, q, d);
        let widths: Vec<f64> = (q + 1..2 * d)
            .map(|k| cfg.eps * h_lower.powi(-(k as i32)))
            .collect();
        let n = if spec.free_len() == 0 {
            1
        } else {
            cfg.points_per_leaf
        };
        let thickening = bundle.c4 * h_lower.powi(-(q as i32)) * cfg.eps;
        let cloud = match sample_leaf_multiscale(
            &spec,
            &widths,
            n,
            cfg.seed.wrapping_add(q as u64),
            cfg.multiscale_decades,
            &cfg.inversion,
        ) {
            Ok(c) => c,
            Err(LeafError::AllInversionsFailed { attempted }) => {
                diagnostics.push(LeafDiagnostics {
                    q,
                    sampled: attempted,
                    feasible: 0,
                    diameter: None,
                    thickening,
                });
                clouds.push(Vec::new());
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let feasible: Vec<Signal> = cloud
            .points
            .iter()
            .filter(|p| constraint.is_feasible(p))
            .cloned()
            .collect();
        let diameter = if feasible.is_empty() {
            None
        } else {
            Some(cloud_diameter(&feasible.iter().collect::<Vec<_>>()))
        };
        diagnostics.push(LeafDiagnostics {
            q,
            sampled: cloud.len(),
            feasible: feasible.len(),
            diameter,
            thickening,
        });
        clouds.push(feasible);
    }

    // argmin of the sampled diameter over leaves whose feasible sample
    // is large enough to estimate one; strict < keeps the smallest q
    // among ties. Sparse-but-nonempty leaves are the fallback, ranked
    // by feasible count.
    let mut best: Option<(usize, f64)> = None;
    for diag in &diagnostics {
        if diag.feasible >= cfg.min_feasible.max(2) {
            if let Some(diam) = diag.diameter {
                if best.is_none() || diam < best.unwrap().1 {
                    best = Some((diag.q, diam));
                }
            }
        }
    }
    if best.is_none() {
        let mut best_count = 0usize;
        for diag in &diagnostics {
            if diag.feasible > best_count {
                best_count = diag.feasible;
                best = Some((diag.q, diag.diameter.unwrap_or(0.0)));
            }
        }
    }
    let (chosen_q, feasible_diameter) = best.ok_or_else(|| ImproveError::EmptyFeasibleSet {
        per_q: diagnostics.iter().map(|d| d.feasible).collect(),
    })?;
    let feasible = std::mem::take(&mut clouds[chosen_q]);

    let improved = if constraint.is_feasible(&point_solution) {
        point_solution.clone()
    } else {
        feasible
            .iter()
            .min_by(|a, b| {
                point_solution
                    .inf_distance(a)
                    .total_cmp(&point_solution.inf_distance(b))
            })
            .expect("feasible set nonempty")
            .clone()
    };

    Ok(ImprovedResult {
        point_solution,
        chosen_q,
        feasible_diameter,
        improved,
        diagnostics,
    })
}

/// Check the pullback property `S_q(F) = Psi^{-1}(S_q(G))`: sampled
/// points of the model-space leaf, once denormalized, must reproduce
/// the first `q+1` moments of `F`.
pub fn leaf_pullback_check(
    f: &Signal,
    frame: &ClusterFrame,
    q: usize,
    n: usize,
    seed: u64,
    cfg: &InversionConfig,
) -> Result<bool, LeafError> {
    let g = apply_frame(f, frame);
    let spec = LeafSpec::from_signal(&g, q);
    let widths: Vec<f64> = spec
        .free_center
        .iter()
        .map(|c| 0.05 * (1.0 + c.abs()))
        .collect();
    let n = if spec.free_len() == 0 { 1 } else { n };
    let cloud = sample_leaf(&spec, &widths, n, seed, cfg)?;
    let mu_f = compute_moments(f, 2 * f.d());
    let tol = 1e-8 * (1.0 + mu_f.inf_norm());
    Ok(cloud.points.iter().all(|p| {
        let pulled = denormalize(p, frame);
        let m = compute_moments(&pulled, q + 1);
        (0..=q).all(|k| (m[k] - mu_f[k]).abs() <= tol)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(a: &[f64], x: &[f64]) -> Signal {
        Signal::new(a.to_vec(), x.to_vec()).unwrap()
    }

    #[test]
    fn hyperbola_from_symmetric_moments() {
        let h = 0.1;
        let mu = MomentVector::new(vec![1.0, 0.0, h * h, 0.0]);
        let hy = hyperbola_d2(&mu);
        assert!(!hy.is_degenerate());
        // x1 x2 + h^2 = 0: the true node pair satisfies it
        assert!(hy.residual(-h, h).abs() < 1e-18);
        assert!((hy.x2_of_x1(-h).unwrap() - h).abs() < 1e-15);
    }

    #[test]
    fn any_signal_satisfies_its_own_hyperbola() {
        let f = sig(&[0.7, 1.3], &[-0.4, 0.25]);
        let mu = compute_moments(&f, 4);
        let hy = hyperbola_d2(&mu);
        assert!(hy.residual(f.nodes()[0], f.nodes()[1]).abs() < 1e-14);
    }

    #[test]
    fn degenerate_when_total_mass_vanishes() {
        let mu = MomentVector::new(vec![0.0, 1.0, 0.5]);
        assert!(hyperbola_d2(&mu).is_degenerate());
    }

    #[test]
    fn amplitude_parametrization() {
        let h = 0.1;
        let mu = MomentVector::new(vec![1.0, 0.0, h * h]);
        let (a1, a2) = amplitudes_on_leaf_d2(-h, h, &mu).unwrap();
        assert!((a1 - 0.5).abs() < 1e-15 && (a2 - 0.5).abs() < 1e-15);

        let mu2 = MomentVector::new(vec![3.0, 1.0, 3.0]);
        let (a1, a2) = amplitudes_on_leaf_d2(-1.0, 1.0, &mu2).unwrap();
        assert!((a1 - 1.0).abs() < 1e-15 && (a2 - 2.0).abs() < 1e-15);

        assert!(amplitudes_on_leaf_d2(0.3, 0.3, &mu2).is_err());
    }

    #[test]
    fn hyperbola_points_reproduce_leading_moments() {
        let mu = MomentVector::new(vec![1.1, -0.05, 0.012]);
        let hy = hyperbola_d2(&mu);
        for x1 in [-0.3, -0.2, -0.1, -0.05] {
            let x2 = hy.x2_of_x1(x1).unwrap();
            if x1 >= x2 {
                continue;
            }
            let (a1, a2) = amplitudes_on_leaf_d2(x1, x2, &mu).unwrap();
            let f = sig(&[a1, a2], &[x1, x2]);
            let m = compute_moments(&f, 3);
            for k in 0..3 {
                assert!(
                    (m[k] - mu[k]).abs() <= 1e-10 * (1.0 + mu[k].abs()),
                    "moment {k}: {} vs {}",
                    m[k],
                    mu[k]
                );
            }
        }
    }

    #[test]
    fn polytope_shapes() {
        // gamma = 1, eps = 0: both slanted constraints collapse onto x2 = -x1
        let planes = gamma_polytope(1.0, 0.0, 0.0, 0.0).unwrap();
        assert!(planes[1].contains(-0.3, 0.3) && planes[2].contains(-0.3, 0.3));
        assert!(!planes[1].contains(-0.3, 0.31));
        assert!(!planes[2].contains(-0.3, 0.29));

        // Figure-3 polytope contains the true symmetric nodes
        let h = 0.05;
        let planes = gamma_polytope(1.2, h * h * h, 0.0, 0.0).unwrap();
        assert!(planes.iter().all(|p| p.contains(-h, h)));

        assert!(gamma_polytope(1.2, 1.0, 0.0, 0.0).is_err());
        assert!(gamma_polytope(0.9, 0.1, 0.0, 0.0).is_err());
        assert!(gamma_polytope(1.2, 1e-3, 0.5, 0.0).is_err());
    }

    #[test]
    fn unconstrained_improvement_is_the_point_solution() {
        let h = 0.05;
        let mu = MomentVector::new(vec![1.0, 0.0, h * h, -h * h * h]);
        let cfg = ImproveConfig {
            points_per_leaf: 300,
            ..ImproveConfig::new(h * h * h, RegularityParams::new(1.0, 0.4, 1.0), 17)
        };
        let res = improved_reconstruct(
            &mu,
            2,
            h,
            &AmplitudeRatioConstraint::unconstrained(),
            &cfg,
        )
        .unwrap();
        assert_eq!(res.improved, res.point_solution);
    }

    #[test]
    fn figure3_scenario_improves_the_nodes() {
        let h = 0.05;
        let eps = h * h * h;
        let mu = MomentVector::new(vec![1.0, 0.0, h * h, -eps]);
        let truth = sig(&[0.5, 0.5], &[-h, h]);
        let constraint = AmplitudeRatioConstraint::new(1.2);
        let cfg = ImproveConfig::new(eps, RegularityParams::new(1.0, 0.4, 1.0), 23);
        let res = improved_reconstruct(&mu, 2, h, &constraint, &cfg).unwrap();

        assert!(!constraint.is_feasible(&res.point_solution));
        assert!(constraint.is_feasible(&res.improved));
        let err_point = truth.node_distance(&res.point_solution);
        let err_improved = truth.node_distance(&res.improved);
        assert!(
            err_improved < err_point,
            "improved {err_improved} vs point {err_point}"
        );
        // the hyperbola (q = 2) gives the tightest feasible set here
        assert_eq!(res.chosen_q, 2);
    }

    #[test]
    fn improved_point_stays_near_the_sampled_leaf() {
        let h = 0.05;
        let eps = h * h * h;
        let mu = MomentVector::new(vec![1.0, 0.0, h * h, -eps]);
        let constraint = AmplitudeRatioConstraint::new(1.2);
        let cfg = ImproveConfig::new(eps, RegularityParams::new(1.0, 0.4, 1.0), 29);
        let res = improved_reconstruct(&mu, 2, h, &constraint, &cfg).unwrap();
        let diag = &res.diagnostics[res.chosen_q];
        // improved is itself a sampled leaf point, so the thickened-leaf
        // membership holds with the whole radius to spare
        assert!(diag.thickening * (1.0 + 1e-3) > 0.0);
        let m = compute_moments(&res.improved, res.chosen_q + 1);
        for k in 0..=res.chosen_q {
            assert!((m[k] - mu[k]).abs() <= 1e-7 * (1.0 + mu.inf_norm()));
        }
    }

    #[test]
    fn empty_feasible_set_is_reported() {
        let h = 0.05;
        let eps = h * h * h;
        // strongly asymmetric truth: ratio far outside a tight window
        let truth = sig(&[0.2, 1.0], &[-h, h]);
        let mu = compute_moments(&truth, 4);
        let constraint = AmplitudeRatioConstraint::new(1.01);
        let cfg = ImproveConfig {
            points_per_leaf: 100,
            ..ImproveConfig::new(eps, RegularityParams::new(1.0, 0.1, 1.5), 31)
        };
        let err = improved_reconstruct(&mu, 2, h, &constraint, &cfg).unwrap_err();
        match err {
            ImproveError::EmptyFeasibleSet { per_q } => assert_eq!(per_q.len(), 4),
            other => panic!("expected EmptyFeasibleSet, got {other}"),
        }
    }

    #[test]
    fn pullback_property() {
        let f = sig(&[0.5, 0.5], &[0.9, 1.1]);
        let frame = ClusterFrame { kappa: 1.0, h: 0.1 };
        for q in 0..4 {
            assert!(
                leaf_pullback_check(&f, &frame, q, 100, 37, &InversionConfig::default()).unwrap(),
                "pullback failed at q = {q}"
            );
        }
        // identity frame is trivially consistent
        let id = ClusterFrame { kappa: 0.0, h: 1.0 };
        assert!(leaf_pullback_check(&f, &id, 2, 50, 37, &InversionConfig::default()).unwrap());
    }
}
