//! Error sets, moment-coordinate parallelepipeds, Prony leaves, and
//! worst-case reconstruction error estimation.
//!
//! For a signal `F` with moments `mu`, the error set `E_eps(F)` is the
//! preimage of the cube `Q_eps(mu)` under the forward moment map: every
//! signal whose first `2d` moments sit within `eps` of `mu`. In the
//! model space of a cluster `(kappa, h)` this set is (sandwiched
//! between) moment-coordinate parallelepipeds `Pi_{eps,alpha}(G)` with
//! `alpha` between `1/h` and `(1+|kappa|)/h`, and it concentrates along
//! the Prony leaves `S_q` obtained by freezing the first `q+1` moments.
//!
//! Everything here is sampled: clouds of inverted moment vectors with
//! full provenance (which perturbation produced which signal, under
//! which seed), so that worst-case maxima, containment checks and
//! Hausdorff estimates are reproducible and auditable. Moment vectors
//! whose Prony solution has complex or collided nodes have an empty
//! fiber in parameter space; they are counted and excluded rather than
//! repaired.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::error::DegenerateCluster;
use crate::inverse::{solve_prony, InversionConfig};
use crate::rng::make_rng;
use crate::signal::{
    apply_frame, compute_moments, denormalize, normalize, MomentVector, RegularityParams, Signal,
};

#[derive(Debug, Clone, Error)]
pub enum LeafError {
    #[error("all {attempted} sampled moment vectors failed to invert (eps beyond the regular regime?)")]
    AllInversionsFailed { attempted: usize },
    #[error(transparent)]
    DegenerateCluster(#[from] DegenerateCluster),
}

/// How moment perturbations are drawn from the cube `Q_eps(mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// Independent uniform draws in every coordinate.
    Uniform,
    /// One random coordinate pinned to `+-eps`, the rest uniform.
    Faces,
    /// All `2^{2d}` corners of the cube, enumerated.
    Corners,
    /// One coordinate at a time moved by `+-eps` (4d points).
    AxisExtremes,
}

impl SampleMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SampleMode::Uniform => "uniform",
            SampleMode::Faces => "faces",
            SampleMode::Corners => "corners",
            SampleMode::AxisExtremes => "axis_extremes",
        }
    }
}

/// The moment vector that generated a cloud point.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub mu: MomentVector,
    pub mode: SampleMode,
}

/// A finite approximation of an error set or leaf: inverted signals
/// plus, per point, the moment vector that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct SampleCloud {
    pub points: Vec<Signal>,
    pub provenance: Vec<Provenance>,
    pub seed: u64,
    pub attempted: usize,
    pub failed: usize,
}

impl SampleCloud {
    fn new(seed: u64) -> Self {
        Self {
            points: Vec::new(),
            provenance: Vec::new(),
            seed,
            attempted: 0,
            failed: 0,
        }
    }

    fn try_push(&mut self, mu: MomentVector, mode: SampleMode, d: usize, cfg: &InversionConfig) {
        self.attempted += 1;
        match solve_prony(&mu, d, cfg) {
            Ok(sig) => {
                self.points.push(sig);
                self.provenance.push(Provenance { mu, mode });
            }
            Err(_) => self.failed += 1,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn failure_fraction(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.failed as f64 / self.attempted as f64
        }
    }

    fn merged(mut self, other: SampleCloud) -> SampleCloud {
        self.points.extend(other.points);
        self.provenance.extend(other.provenance);
        self.attempted += other.attempted;
        self.failed += other.failed;
        self
    }

    /// CSV with header `a_1..a_d, x_1..x_d, mode, mu_0..mu_{2d-1}`.
    pub fn to_csv(&self) -> String {
        let d = self.points.first().map_or(0, Signal::d);
        let k = self.provenance.first().map_or(0, |p| p.mu.len());
        let mut out = String::new();
        for j in 1..=d {
            out.push_str(&format!("a_{j},"));
        }
        for j in 1..=d {
            out.push_str(&format!("x_{j},"));
        }
        out.push_str("mode");
        for j in 0..k {
            out.push_str(&format!(",mu_{j}"));
        }
        out.push('\n');
        for (sig, prov) in self.points.iter().zip(&self.provenance) {
            for a in sig.amplitudes() {
                out.push_str(&format!("{a},"));
            }
            for x in sig.nodes() {
                out.push_str(&format!("{x},"));
            }
            out.push_str(prov.mode.as_str());
            for v in prov.mu.values() {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// All sign patterns `(+-1, ..., +-1)` of length `n`, in binary order.
fn sign_patterns(n: usize) -> impl Iterator<Item = Vec<f64>> {
    (0..(1usize << n)).map(move |mask| {
        (0..n)
            .map(|k| if mask >> k & 1 == 1 { 1.0 } else { -1.0 })
            .collect()
    })
}

fn perturbed(mu: &MomentVector, delta: &[f64]) -> MomentVector {
    MomentVector::new(
        mu.values()
            .iter()
            .zip(delta)
            .map(|(v, d)| v + d)
            .collect(),
    )
}

/// Sample the error set `E_eps(F)`: draw moment vectors from
/// `Q_eps(PM(F))` according to `mode`, invert each, and keep the
/// successes with provenance. `n` is ignored by the enumerating modes.
pub fn sample_error_set(
    f: &Signal,
    eps: f64,
    n: usize,
    seed: u64,
    mode: SampleMode,
    cfg: &InversionConfig,
) -> Result<SampleCloud, LeafError> {
    assert!(eps > 0.0, "eps must be positive");
    let d = f.d();
    let k = 2 * d;
    let mu = compute_moments(f, k);
    let mut cloud = SampleCloud::new(seed);
    match mode {
        SampleMode::Corners => {
            for signs in sign_patterns(k) {
                let delta: Vec<f64> = signs.iter().map(|s| s * eps).collect();
                cloud.try_push(perturbed(&mu, &delta), mode, d, cfg);
            }
        }
        SampleMode::AxisExtremes => {
            for j in 0..k {
                for s in [-1.0, 1.0] {
                    let mut delta = vec![0.0; k];
                    delta[j] = s * eps;
                    cloud.try_push(perturbed(&mu, &delta), mode, d, cfg);
                }
            }
        }
        SampleMode::Uniform => {
            let mut rng = make_rng(seed, 0);
            for _ in 0..n {
                let delta: Vec<f64> = (0..k).map(|_| rng.gen_range(-eps..=eps)).collect();
                cloud.try_push(perturbed(&mu, &delta), mode, d, cfg);
            }
        }
        SampleMode::Faces => {
            let mut rng = make_rng(seed, 0);
            for _ in 0..n {
                let mut delta: Vec<f64> = (0..k).map(|_| rng.gen_range(-eps..=eps)).collect();
                let pinned = rng.gen_range(0..k);
                delta[pinned] = if rng.gen_bool(0.5) { eps } else { -eps };
                cloud.try_push(perturbed(&mu, &delta), mode, d, cfg);
            }
        }
    }
    if cloud.is_empty() {
        return Err(LeafError::AllInversionsFailed {
            attempted: cloud.attempted,
        });
    }
    Ok(cloud)
}

/// The moment-coordinate parallelepiped `Pi_{eps,alpha}(G)`:
/// `|m_k(G') - m_k(G)| <= eps alpha^k` for `k = 0..2d-1`.
#[derive(Debug, Clone, Serialize)]
pub struct Parallelepiped {
    pub center: Signal,
    pub epsilon: f64,
    pub alpha: f64,
}

impl Parallelepiped {
    pub fn new(center: Signal, epsilon: f64, alpha: f64) -> Self {
        assert!(epsilon > 0.0 && alpha > 0.0);
        Self {
            center,
            epsilon,
            alpha,
        }
    }

    /// Worst violation ratio over the `2d` moment coordinates:
    /// `max_k |m_k(G') - m_k(G)| / (eps alpha^k)`. Membership with a
    /// multiplicative slack `s` is `ratio <= 1 + s`.
    pub fn violation_ratio(&self, gp: &Signal) -> f64 {
        assert_eq!(gp.d(), self.center.d(), "dimension mismatch");
        let k = 2 * self.center.d();
        let mc = compute_moments(&self.center, k);
        let mp = compute_moments(gp, k);
        (0..k)
            .map(|j| (mp[j] - mc[j]).abs() / (self.epsilon * self.alpha.powi(j as i32)))
            .fold(0.0, f64::max)
    }
}

/// Membership in `Pi` up to a multiplicative slack that absorbs solver
/// residuals.
pub fn in_parallelepiped(gp: &Signal, p: &Parallelepiped, slack: f64) -> bool {
    p.violation_ratio(gp) <= 1.0 + slack
}

/// The Prony leaf `S_q(mu)`: all signals whose first `q+1` moments equal
/// `fixed`. The remaining `2d-q-1` moments are free coordinates along
/// the leaf; `free_center` records where the generating signal sits so
/// that boxes `S_{q,eps,alpha}` can be centered on it.
#[derive(Debug, Clone, Serialize)]
pub struct LeafSpec {
    pub d: usize,
    pub q: usize,
    pub fixed: Vec<f64>,
    pub free_center: Vec<f64>,
}

impl LeafSpec {
    pub fn from_moments(mu: &MomentVector, q: usize, d: usize) -> Self {
        assert_eq!(mu.len(), 2 * d);
        assert!(q < 2 * d, "q must lie in [0, 2d-1]");
        Self {
            d,
            q,
            fixed: mu.values()[..=q].to_vec(),
            free_center: mu.values()[q + 1..].to_vec(),
        }
    }

    pub fn from_signal(f: &Signal, q: usize) -> Self {
        Self::from_moments(&compute_moments(f, 2 * f.d()), q, f.d())
    }

    pub fn free_len(&self) -> usize {
        2 * self.d - self.q - 1
    }

    /// Assemble the full moment vector `(fixed, free)`.
    pub fn moments_with(&self, free: &[f64]) -> MomentVector {
        assert_eq!(free.len(), self.free_len());
        let mut v = self.fixed.clone();
        v.extend_from_slice(free);
        MomentVector::new(v)
    }
}

/// A single point of `S_q(mu)` obtained by completing the fixed moments
/// with explicit free coordinates and inverting.
pub fn leaf_point(
    spec: &LeafSpec,
    free: &[f64],
    cfg: &InversionConfig,
) -> Result<Signal, crate::inverse::InversionError> {
    solve_prony(&spec.moments_with(free), spec.d, cfg)
}

/// Sample the leaf section with free moments drawn uniformly from
/// `free_center[k] +- box_half_widths[k]`. With `box_k = eps alpha^k`
/// for `k = q+1..2d-1` this is a finite stand-in for
/// `S_{q,eps,alpha}`.
pub fn sample_leaf(
    spec: &LeafSpec,
    box_half_widths: &[f64],
    n: usize,
    seed: u64,
    cfg: &InversionConfig,
) -> Result<SampleCloud, LeafError> {
    assert_eq!(box_half_widths.len(), spec.free_len());
    assert!(box_half_widths.iter().all(|w| *w >= 0.0));
    let mut cloud = SampleCloud::new(seed);
    let mut rng = make_rng(seed, 1);
    for _ in 0..n {
        let free: Vec<f64> = spec
            .free_center
            .iter()
            .zip(box_half_widths)
            .map(|(&c, &w)| if w == 0.0 { c } else { c + rng.gen_range(-w..=w) })
            .collect();
        cloud.try_push(spec.moments_with(&free), SampleMode::Uniform, spec.d, cfg);
    }
    if cloud.is_empty() {
        return Err(LeafError::AllInversionsFailed {
            attempted: cloud.attempted,
        });
    }
    Ok(cloud)
}

/// Leaf sampling with multiscale coverage: half of the draws are
/// uniform in the box, the other half place each free coordinate at
/// `sign * width * 10^{-decades * u}` with `u` uniform, so that
/// sub-windows many orders of magnitude narrower than the box still
/// receive samples. Used by searches that must resolve a feasible
/// region of unknown scale inside the leaf section; the plain
/// [`sample_leaf`] keeps the uniform law.
pub fn sample_leaf_multiscale(
    spec: &LeafSpec,
    box_half_widths: &[f64],
    n: usize,
    seed: u64,
    decades: f64,
    cfg: &InversionConfig,
) -> Result<SampleCloud, LeafError> {
    assert_eq!(box_half_widths.len(), spec.free_len());
    assert!(decades > 0.0);
    let mut cloud = SampleCloud::new(seed);
    let mut rng = make_rng(seed, 4);
    for i in 0..n {
        let log_scaled = i % 2 == 1;
        let free: Vec<f64> = spec
            .free_center
            .iter()
            .zip(box_half_widths)
            .map(|(&c, &w)| {
                if w == 0.0 {
                    return c;
                }
                if log_scaled {
                    let mag = w * 10f64.powf(-decades * rng.gen_range(0.0..1.0));
                    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    c + sign * mag
                } else {
                    c + rng.gen_range(-w..=w)
                }
            })
            .collect();
        cloud.try_push(spec.moments_with(&free), SampleMode::Uniform, spec.d, cfg);
    }
    if cloud.is_empty() {
        return Err(LeafError::AllInversionsFailed {
            attempted: cloud.attempted,
        });
    }
    Ok(cloud)
}

/// Worst-case reconstruction deviations over a sampled error set.
#[derive(Debug, Clone, Serialize)]
pub struct WorstCaseReport {
    /// `max ||F' - F||` over the sample.
    pub rho: f64,
    /// `max ||a' - a||`.
    pub rho_a: f64,
    /// `max ||x' - x||`.
    pub rho_x: f64,
    pub argmax_rho: Signal,
    pub argmax_rho_a: Signal,
    pub argmax_rho_x: Signal,
    pub sample_size: usize,
    pub failed: usize,
    pub seed: u64,
}

fn worst_case_over(cloud: &SampleCloud, truth: &Signal, seed: u64) -> WorstCaseReport {
    let mut rho = (0.0, 0usize);
    let mut rho_a = (0.0, 0usize);
    let mut rho_x = (0.0, 0usize);
    for (i, p) in cloud.points.iter().enumerate() {
        let da = truth.amp_distance(p);
        let dx = truth.node_distance(p);
        let df = da.max(dx);
        if df > rho.0 {
            rho = (df, i);
        }
        if da > rho_a.0 {
            rho_a = (da, i);
        }
        if dx > rho_x.0 {
            rho_x = (dx, i);
        }
    }
    WorstCaseReport {
        rho: rho.0,
        rho_a: rho_a.0,
        rho_x: rho_x.0,
        argmax_rho: cloud.points[rho.1].clone(),
        argmax_rho_a: cloud.points[rho_a.1].clone(),
        argmax_rho_x: cloud.points[rho_x.1].clone(),
        sample_size: cloud.len(),
        failed: cloud.failed,
        seed,
    }
}

/// Estimate `rho(F, eps)`, `rho_a`, `rho_x` over the union of all cube
/// corners, the axis extremes, and `n` uniform interior samples. The
/// map is smooth at this scale, so the extremes concentrate near
/// corners; the uniform samples guard against nonlinearity.
pub fn estimate_worst_case(
    f: &Signal,
    eps: f64,
    n: usize,
    seed: u64,
    cfg: &InversionConfig,
) -> Result<WorstCaseReport, LeafError> {
    let corners = sample_error_set(f, eps, 0, seed, SampleMode::Corners, cfg);
    let axis = sample_error_set(f, eps, 0, seed, SampleMode::AxisExtremes, cfg);
    let uniform = sample_error_set(f, eps, n, seed, SampleMode::Uniform, cfg);
    let mut cloud = SampleCloud::new(seed);
    let mut attempted_if_all_fail = 0;
    for part in [corners, axis, uniform] {
        match part {
            Ok(c) => cloud = cloud.merged(c),
            Err(LeafError::AllInversionsFailed { attempted }) => {
                attempted_if_all_fail += attempted;
                cloud.attempted += attempted;
                cloud.failed += attempted;
            }
            Err(e) => return Err(e),
        }
    }
    if cloud.is_empty() {
        return Err(LeafError::AllInversionsFailed {
            attempted: attempted_if_all_fail,
        });
    }
    Ok(worst_case_over(&cloud, f, seed))
}

/// Worst case under partial-cluster perturbations: only the moments of
/// the contiguous sub-signal `[lo, hi)` are perturbed within `eps`; the
/// remaining spikes are held fixed and reattached to every inverted
/// sub-signal. Deviations are measured on the full signal.
pub fn partial_cluster_worst_case(
    f: &Signal,
    lo: usize,
    hi: usize,
    eps: f64,
    n: usize,
    seed: u64,
    cfg: &InversionConfig,
) -> Result<WorstCaseReport, LeafError> {
    assert!(hi - lo >= 2, "cluster must contain at least two spikes");
    let sub = f.sub_signal(lo, hi);
    let sub_report = |cloud: &SampleCloud| -> SampleCloud {
        let mut full = SampleCloud::new(seed);
        full.attempted = cloud.attempted;
        full.failed = cloud.failed;
        for (p, prov) in cloud.points.iter().zip(&cloud.provenance) {
            let mut amps = f.amplitudes().to_vec();
            let mut nodes = f.nodes().to_vec();
            amps.splice(lo..hi, p.amplitudes().iter().copied());
            nodes.splice(lo..hi, p.nodes().iter().copied());
            // perturbed cluster nodes must not cross the fixed spikes
            let ordered = nodes.windows(2).all(|w| w[0] < w[1]);
            if !ordered {
                full.failed += 1;
                continue;
            }
            full.points
                .push(Signal::new(amps, nodes).expect("ordered distinct nodes"));
            full.provenance.push(prov.clone());
        }
        full
    };

    let mut cloud = SampleCloud::new(seed);
    for mode in [SampleMode::Corners, SampleMode::AxisExtremes, SampleMode::Uniform] {
        match sample_error_set(&sub, eps, n, seed, mode, cfg) {
            Ok(c) => cloud = cloud.merged(sub_report(&c)),
            Err(LeafError::AllInversionsFailed { attempted }) => {
                cloud.attempted += attempted;
                cloud.failed += attempted;
            }
            Err(e) => return Err(e),
        }
    }
    if cloud.is_empty() {
        return Err(LeafError::AllInversionsFailed {
            attempted: cloud.attempted,
        });
    }
    Ok(worst_case_over(&cloud, f, seed))
}

/// The lower-bound witness: invert `(nu_0, ..., nu_{2d-2},
/// nu_{2d-1} + eps' h^{-2d+1})`, one of the points where the Prony
/// curve `S_{2d-2}(G)` meets the boundary of `Pi_{eps',1/h}(G)`.
pub fn construct_g_lb(
    g: &Signal,
    eps_prime: f64,
    h: f64,
    cfg: &InversionConfig,
) -> Result<Signal, crate::inverse::InversionError> {
    assert!(h > 0.0);
    let d = g.d();
    let nu = compute_moments(g, 2 * d);
    let mut vals = nu.values().to_vec();
    let bump = eps_prime * h.powi(-(2 * d as i32) + 1);
    vals[2 * d - 1] += bump;
    solve_prony(&MomentVector::new(vals), d, cfg)
}

/// Exact moment-metric Hausdorff distance between the leaves `S_q(G)`
/// and `S_q(G')`: freezing the first `q+1` moments pins the fixed
/// coordinates, so the distance collapses to
/// `max_{k <= q} |m_k(G) - m_k(G')|`.
pub fn leaf_hausdorff_moment_exact(g: &Signal, gp: &Signal, q: usize) -> f64 {
    assert_eq!(g.d(), gp.d());
    let mg = compute_moments(g, q + 1);
    let mgp = compute_moments(gp, q + 1);
    mg.inf_distance(&mgp)
}

fn matched_leaf_clouds(
    g: &Signal,
    gp: &Signal,
    q: usize,
    eps: f64,
    h_prime: f64,
    n: usize,
    seed: u64,
    cfg: &InversionConfig,
) -> Result<(Vec<Signal>, Vec<Signal>), LeafError> {
    assert_eq!(g.d(), gp.d());
    assert!(q < 2 * g.d());
    let d = g.d();
    let spec_g = LeafSpec::from_signal(g, q);
    let spec_gp = LeafSpec::from_signal(gp, q);
    // Both leaves are clipped to Pi_{eps,1/h'}(G): free moments range
    // over G-centered windows, drawn once and shared so the two clouds
    // stay in one-to-one correspondence.
    let widths: Vec<f64> = (q + 1..2 * d)
        .map(|k| eps * h_prime.powi(-(k as i32)))
        .collect();
    let mut rng = make_rng(seed, 2);
    let mut cloud_g = Vec::new();
    let mut cloud_gp = Vec::new();
    let mut attempted = 0;
    for _ in 0..n {
        let free: Vec<f64> = spec_g
            .free_center
            .iter()
            .zip(&widths)
            .map(|(&c, &w)| if w == 0.0 { c } else { c + rng.gen_range(-w..=w) })
            .collect();
        attempted += 1;
        let a = solve_prony(&spec_g.moments_with(&free), d, cfg);
        let b = solve_prony(&spec_gp.moments_with(&free), d, cfg);
        if let (Ok(a), Ok(b)) = (a, b) {
            cloud_g.push(a);
            cloud_gp.push(b);
        }
    }
    if cloud_g.is_empty() {
        return Err(LeafError::AllInversionsFailed { attempted });
    }
    Ok((cloud_g, cloud_gp))
}

fn hausdorff_by<FD: Fn(&Signal, &Signal) -> f64>(a: &[Signal], b: &[Signal], dist: FD) -> f64 {
    let directed = |from: &[Signal], to: &[Signal]| {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| dist(p, q))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Sampled symmetric Hausdorff distance (signal max-metric) between the
/// local leaves `S_q(G)` and `S_q(G')`, both clipped to
/// `Pi_{eps,1/h'}(G)`. A lower bound of the true distance, converging
/// with `n`.
pub fn estimate_leaf_hausdorff(
    g: &Signal,
    gp: &Signal,
    q: usize,
    eps: f64,
    h_prime: f64,
    n: usize,
    seed: u64,
    cfg: &InversionConfig,
) -> Result<f64, LeafError> {
    let (a, b) = matched_leaf_clouds(g, gp, q, eps, h_prime, n, seed, cfg)?;
    Ok(hausdorff_by(&a, &b, Signal::inf_distance))
}

/// Same sampled Hausdorff in the moment metric, for checking against
/// [`leaf_hausdorff_moment_exact`].
pub fn estimate_leaf_hausdorff_moment_metric(
    g: &Signal,
    gp: &Signal,
    q: usize,
    eps: f64,
    h_prime: f64,
    n: usize,
    seed: u64,
    cfg: &InversionConfig,
) -> Result<f64, LeafError> {
    let (a, b) = matched_leaf_clouds(g, gp, q, eps, h_prime, n, seed, cfg)?;
    let k = 2 * g.d();
    let dist = |p: &Signal, q: &Signal| -> f64 {
        compute_moments(p, k).inf_distance(&compute_moments(q, k))
    };
    Ok(hausdorff_by(&a, &b, dist))
}

/// Outcome of the two-sided containment check between the normalized
/// error set and its bounding parallelepipeds.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub kappa: f64,
    pub h: f64,
    pub h_prime: f64,
    pub eps: f64,
    pub eps_prime: f64,
    /// Normalized error-set samples against `Pi_{eps,1/h'}(G)`.
    pub outer_pass: bool,
    pub outer_worst_ratio: f64,
    pub outer_samples: usize,
    /// Samples of `Pi_{eps',1/h}(G)` mapped back against `Q_eps(mu)`.
    pub inner_pass: bool,
    pub inner_worst_ratio: f64,
    pub inner_samples: usize,
    pub failed_inversions: usize,
    pub warnings: Vec<String>,
}

impl SandwichReport {
    pub fn pass(&self) -> bool {
        self.outer_pass && self.inner_pass
    }
}

/// Check the error-set sandwich
/// `Pi_{eps',1/h}(G) subset Ebar_eps(F) subset Pi_{eps,1/h'}(G)`,
/// which collapses to the equality `Ebar_eps(F) = Pi_{eps,1/h}(G)` when
/// the cluster is centered (`kappa = 0`).
///
/// The outer direction inverts perturbed moments of `F`, normalizes
/// with `F`'s frame and tests membership in the outer parallelepiped.
/// The inner direction draws moment vectors from the inner
/// parallelepiped in model space, pulls the inverted signals back and
/// tests that their moments stay `eps`-close to the moments of `F`.
pub fn check_sandwich(
    f: &Signal,
    eps: f64,
    p: &RegularityParams,
    n: usize,
    seed: u64,
    slack: f64,
    cfg: &InversionConfig,
) -> Result<SandwichReport, LeafError> {
    let (g, frame) = normalize(f)?;
    let d = f.d();
    let k = 2 * d;
    let kappa = frame.kappa;
    let h = frame.h;
    let h_prime = h / (1.0 + kappa.abs());
    let eps_prime = (1.0 + kappa.abs()).powi(-(k as i32) + 1) * eps;
    let mut warnings = Vec::new();

    let bundle = crate::jacobian::compute_constants(d, p, kappa);
    let regime = bundle.r_big * h_prime.powi(k as i32 - 1);
    if eps > regime {
        warnings.push(format!(
            "eps = {eps:.3e} exceeds R h'^(2d-1) = {regime:.3e}; containment theorems are asymptotic here"
        ));
    }
    let reg = crate::signal::check_regular(&g, p);
    if !reg.ok {
        warnings.push(format!(
            "model signal violates regularity: {}",
            reg.violations.join("; ")
        ));
    }

    // Outer: normalized error-set samples inside Pi_{eps,1/h'}(G).
    let mut cloud = SampleCloud::new(seed);
    for mode in [SampleMode::Corners, SampleMode::AxisExtremes, SampleMode::Uniform] {
        match sample_error_set(f, eps, n, seed, mode, cfg) {
            Ok(c) => cloud = cloud.merged(c),
            Err(LeafError::AllInversionsFailed { attempted }) => {
                cloud.attempted += attempted;
                cloud.failed += attempted;
            }
            Err(e) => return Err(e),
        }
    }
    if cloud.is_empty() {
        return Err(LeafError::AllInversionsFailed {
            attempted: cloud.attempted,
        });
    }
    let outer_pi = Parallelepiped::new(g.clone(), eps, 1.0 / h_prime);
    let mut outer_worst: f64 = 0.0;
    for point in &cloud.points {
        let gp = apply_frame(point, &frame);
        outer_worst = outer_worst.max(outer_pi.violation_ratio(&gp));
    }

    // Inner: model-space parallelepiped samples pull back into Q_eps(mu).
    let nu = compute_moments(&g, k);
    let mu = compute_moments(f, k);
    let widths: Vec<f64> = (0..k)
        .map(|j| eps_prime * h.powi(-(j as i32)))
        .collect();
    let mut inner_worst: f64 = 0.0;
    let mut inner_samples = 0usize;
    let mut inner_failed = 0usize;
    let mut try_inner = |vals: Vec<f64>| {
        let nu_p = MomentVector::new(vals);
        match solve_prony(&nu_p, d, cfg) {
            Ok(gp) => {
                let fp = denormalize(&gp, &frame);
                let ratio = compute_moments(&fp, k).inf_distance(&mu) / eps;
                inner_worst = inner_worst.max(ratio);
                inner_samples += 1;
            }
            Err(_) => inner_failed += 1,
        }
    };
    for signs in sign_patterns(k) {
        let vals: Vec<f64> = (0..k).map(|j| nu[j] + signs[j] * widths[j]).collect();
        try_inner(vals);
    }
    let mut rng = make_rng(seed, 3);
    for _ in 0..n {
        let vals: Vec<f64> = (0..k)
            .map(|j| nu[j] + rng.gen_range(-widths[j]..=widths[j]))
            .collect();
        try_inner(vals);
    }
    if inner_samples == 0 {
        return Err(LeafError::AllInversionsFailed {
            attempted: (1 << k) + n,
        });
    }

    let failed_inversions = cloud.failed + inner_failed;
    let attempted = cloud.attempted + inner_samples + inner_failed;
    let fraction = failed_inversions as f64 / attempted as f64;
    if fraction > 0.01 {
        warnings.push(format!(
            "failed inversion fraction {:.2}% exceeds 1% (eps too large relative to R h'^(2d-1)?)",
            100.0 * fraction
        ));
    }

    Ok(SandwichReport {
        kappa,
        h,
        h_prime,
        eps,
        eps_prime,
        outer_pass: outer_worst <= 1.0 + slack,
        outer_worst_ratio: outer_worst,
        outer_samples: cloud.len(),
        inner_pass: inner_worst <= 1.0 + slack,
        inner_worst_ratio: inner_worst,
        inner_samples,
        failed_inversions,
        warnings,
    })
}

/// How tightly the normalized error set hugs the Prony leaf `S_q`.
#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub q: usize,
    pub max_distance: f64,
    pub bound: f64,
    pub pass: bool,
    pub error_samples: usize,
    pub leaf_samples: usize,
}

/// Check that every normalized error-set sample lies within
/// `C4 (1/h')^q eps (1 + tol)` of the sampled leaf section
/// `S_{q,eps,1/h'}(G)`.
pub fn leaf_concentration_check(
    f: &Signal,
    eps: f64,
    p: &RegularityParams,
    q: usize,
    n_error: usize,
    n_leaf: usize,
    seed: u64,
    tol: f64,
    cfg: &InversionConfig,
) -> Result<ConcentrationReport, LeafError> {
    let (g, frame) = normalize(f)?;
    let d = f.d();
    let h_prime = frame.h / (1.0 + frame.kappa.abs());
    let bundle = crate::jacobian::compute_constants(d, p, frame.kappa);

    let mut error_cloud = SampleCloud::new(seed);
    for mode in [SampleMode::Corners, SampleMode::AxisExtremes, SampleMode::Uniform] {
        match sample_error_set(f, eps, n_error, seed, mode, cfg) {
            Ok(c) => error_cloud = error_cloud.merged(c),
            Err(LeafError::AllInversionsFailed { attempted }) => {
                error_cloud.attempted += attempted;
                error_cloud.failed += attempted;
            }
            Err(e) => return Err(e),
        }
    }
    if error_cloud.is_empty() {
        return Err(LeafError::AllInversionsFailed {
            attempted: error_cloud.attempted,
        });
    }

    let spec = LeafSpec::from_signal(&g, q);
    let widths: Vec<f64> = (q + 1..2 * d)
        .map(|k| eps * h_prime.powi(-(k as i32)))
        .collect();
    let leaf = sample_leaf(&spec, &widths, n_leaf, seed.wrapping_add(1), cfg)?;

    let mut max_distance: f64 = 0.0;
    for point in &error_cloud.points {
        let gp = apply_frame(point, &frame);
        let nearest = leaf
            .points
            .iter()
            .map(|lp| gp.inf_distance(lp))
            .fold(f64::INFINITY, f64::min);
        max_distance = max_distance.max(nearest);
    }
    let bound = bundle.c4 * h_prime.powi(-(q as i32)) * eps * (1.0 + tol);
    Ok(ConcentrationReport {
        q,
        max_distance,
        bound,
        pass: max_distance <= bound,
        error_samples: error_cloud.len(),
        leaf_samples: leaf.len(),
    })
}
