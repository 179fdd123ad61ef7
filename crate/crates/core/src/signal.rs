//! Spike-train signals, their power moments, and the coordinate
//! transformations between a clustered signal and its model-space
//! normalization.
//!
//! A signal is a linear combination of point masses
//!
//! ```text
//! F(x) = sum_{j=1}^d a_j delta(x - x_j),    x_1 < x_2 < ... < x_d,
//! ```
//!
//! and its moments are `m_k(F) = sum_j a_j x_j^k`. The pair of vectors
//! `(a, x)` is the parameter-space point; the vector `(m_0, ..., m_{K-1})`
//! is the moment-space point. Shifting the line by `kappa` and rescaling
//! by `alpha` act on moment space through the triangular operators
//! implemented by [`shift_moments`] and [`scale_moments`], and the
//! normalization `Psi_{kappa,h}` maps a cluster of half-width `h`
//! centered at `kappa` onto the reference interval `[-1, 1]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{DegenerateCluster, DomainError};
use crate::matrix::DenseMatrix;

/// Construction of a [`Signal`] can fail on malformed input.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SignalError {
    #[error("amplitudes ({amps}) and nodes ({nodes}) must have equal positive length")]
    ShapeMismatch { amps: usize, nodes: usize },
    #[error("signal entries must be finite")]
    NonFinite,
    #[error("nodes must be pairwise distinct (found duplicate at {0})")]
    DuplicateNode(f64),
}

/// A spike train `sum_j a_j delta(x - x_j)` with strictly increasing nodes.
///
/// Constructors sort the nodes and co-permute the amplitudes, so equal
/// parameter multisets compare equal and produce identical moments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Signal {
    amplitudes: Vec<f64>,
    nodes: Vec<f64>,
}

impl Signal {
    pub fn new(amplitudes: Vec<f64>, nodes: Vec<f64>) -> Result<Self, SignalError> {
        if amplitudes.is_empty() || amplitudes.len() != nodes.len() {
            return Err(SignalError::ShapeMismatch {
                amps: amplitudes.len(),
                nodes: nodes.len(),
            });
        }
        if amplitudes
            .iter()
            .chain(nodes.iter())
            .any(|v| !v.is_finite())
        {
            return Err(SignalError::NonFinite);
        }
        let mut pairs: Vec<(f64, f64)> = nodes.into_iter().zip(amplitudes).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(SignalError::DuplicateNode(w[0].0));
            }
        }
        Ok(Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            amplitudes: pairs.iter().map(|p| p.1).collect(),
        })
    }

    /// Number of spikes.
    pub fn d(&self) -> usize {
        self.nodes.len()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Parameter vector `(a_1, ..., a_d, x_1, ..., x_d)`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.amplitudes.clone();
        p.extend_from_slice(&self.nodes);
        p
    }

    /// `||F - F'|| = max(||a - a'||_inf, ||x - x'||_inf)`.
    pub fn inf_distance(&self, other: &Signal) -> f64 {
        self.amp_distance(other).max(self.node_distance(other))
    }

    pub fn amp_distance(&self, other: &Signal) -> f64 {
        assert_eq!(self.d(), other.d());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn node_distance(&self, other: &Signal) -> f64 {
        assert_eq!(self.d(), other.d());
        self.nodes
            .iter()
            .zip(&other.nodes)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Sub-signal over a contiguous index range (used for partial clusters).
    pub fn sub_signal(&self, lo: usize, hi: usize) -> Signal {
        assert!(lo < hi && hi <= self.d());
        Signal {
            amplitudes: self.amplitudes[lo..hi].to_vec(),
            nodes: self.nodes[lo..hi].to_vec(),
        }
    }
}

impl<'de> Deserialize<'de> for Signal {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            amplitudes: Vec<f64>,
            nodes: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Signal::new(raw.amplitudes, raw.nodes).map_err(serde::de::Error::custom)
    }
}

/// Ordered real moments `(m_0, ..., m_{K-1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    #[serde(rename = "moments")]
    values: Vec<f64>,
}

impl MomentVector {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "moment vector must be nonempty");
        assert!(values.iter().all(|v| v.is_finite()), "moments must be finite");
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn inf_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// `||mu' - mu|| = max_k |mu'_k - mu_k|`.
    pub fn inf_distance(&self, other: &MomentVector) -> f64 {
        assert_eq!(self.len(), other.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for MomentVector {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.values[k]
    }
}

/// Center and half-width `(kappa, h)` of the node interval `I_F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterFrame {
    pub kappa: f64,
    pub h: f64,
}

/// Regularity window: node gaps at least `eta` (in model space) and
/// amplitude magnitudes inside `[amp_min, amp_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityParams {
    pub eta: f64,
    pub amp_min: f64,
    pub amp_max: f64,
}

impl RegularityParams {
    pub fn new(eta: f64, amp_min: f64, amp_max: f64) -> Self {
        assert!(eta > 0.0, "eta must be positive");
        assert!(
            0.0 < amp_min && amp_min < amp_max,
            "need 0 < amp_min < amp_max"
        );
        Self {
            eta,
            amp_min,
            amp_max,
        }
    }
}

/// Outcome of a regularity check, listing every violated condition.
#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub ok: bool,
    pub violations: Vec<String>,
}

const MAX_MOMENTS: usize = 64;

// Pascal triangle in exact integer arithmetic; binom(63, 31) < 2^62 so
// every entry used here is exactly representable.
fn binomial_row(k: usize) -> Vec<f64> {
    assert!(k < MAX_MOMENTS, "moment order {k} exceeds supported maximum");
    let mut row = vec![1u128];
    for _ in 0..k {
        let mut next = vec![1u128; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row.into_iter().map(|v| v as f64).collect()
}

/// Forward Prony mapping: `values[k] = sum_j a_j x_j^k`, `k = 0..count-1`,
/// with `0^0 = 1` so that `m_0` is always the total mass.
pub fn compute_moments(f: &Signal, count: usize) -> MomentVector {
    assert!(count >= 1, "moment count must be positive");
    let mut values = vec![0.0; count];
    for (&a, &x) in f.amplitudes().iter().zip(f.nodes()) {
        let mut power = 1.0;
        for v in values.iter_mut() {
            *v += a * power;
            power *= x;
        }
    }
    MomentVector::new(values)
}

/// Moment-space shift operator `SH*_kappa`:
/// `nu_k = sum_{l=0}^k binom(k,l) (-kappa)^{k-l} mu_l`.
///
/// Satisfies `PM(SH_kappa(F)) = SH*_kappa(PM(F))` where `SH_kappa` moves
/// every node of `F` by `-kappa`, and `SH*_{-kappa}` inverts it.
pub fn shift_moments(mu: &MomentVector, kappa: f64) -> MomentVector {
    let n = mu.len();
    let mut out = vec![0.0; n];
    for k in 0..n {
        let binom = binomial_row(k);
        let mut acc = 0.0;
        for l in 0..=k {
            acc += binom[l] * (-kappa).powi((k - l) as i32) * mu[l];
        }
        out[k] = acc;
    }
    MomentVector::new(out)
}

/// Matrix of `SH*_kappa` in the monomial basis (lower triangular).
///
/// Row `k` has absolute row sum exactly `(1 + |kappa|)^k`.
pub fn shift_operator_matrix(kappa: f64, size: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(size, size);
    for k in 0..size {
        let binom = binomial_row(k);
        for l in 0..=k {
            m.set(k, l, binom[l] * (-kappa).powi((k - l) as i32));
        }
    }
    m
}

/// Moment-space scaling operator `SC*_alpha : nu_k = alpha^k mu_k`.
pub fn scale_moments(mu: &MomentVector, alpha: f64) -> Result<MomentVector, DomainError> {
    if alpha == 0.0 {
        return Err(DomainError(
            "scale_moments: alpha = 0 is not invertible".into(),
        ));
    }
    Ok(MomentVector::new(
        mu.values()
            .iter()
            .enumerate()
            .map(|(k, &v)| alpha.powi(k as i32) * v)
            .collect(),
    ))
}

/// `kappa(F) = (x_1 + x_d)/2`, `h(F) = (x_d - x_1)/2`.
pub fn cluster_frame(f: &Signal) -> Result<ClusterFrame, DegenerateCluster> {
    if f.d() < 2 {
        return Err(DegenerateCluster);
    }
    let x1 = f.nodes()[0];
    let xd = f.nodes()[f.d() - 1];
    Ok(ClusterFrame {
        kappa: 0.5 * (x1 + xd),
        h: 0.5 * (xd - x1),
    })
}

/// `Psi_{kappa,h}`: recenter the node interval at 0 and rescale it to
/// `[-1, 1]`. Returns the model signal `G` together with the frame.
pub fn normalize(f: &Signal) -> Result<(Signal, ClusterFrame), DegenerateCluster> {
    let frame = cluster_frame(f)?;
    if frame.h == 0.0 {
        return Err(DegenerateCluster);
    }
    Ok((apply_frame(f, &frame), frame))
}

/// Apply `Psi_{kappa,h}` for an explicitly supplied frame.
pub fn apply_frame(f: &Signal, frame: &ClusterFrame) -> Signal {
    assert!(frame.h > 0.0, "frame half-width must be positive");
    let nodes = f
        .nodes()
        .iter()
        .map(|x| (x - frame.kappa) / frame.h)
        .collect();
    Signal::new(f.amplitudes().to_vec(), nodes).expect("affine node map preserves validity")
}

/// Inverse of `Psi_{kappa,h}`: `x_j = h * xbar_j + kappa`.
pub fn denormalize(g: &Signal, frame: &ClusterFrame) -> Signal {
    assert!(frame.h > 0.0, "frame half-width must be positive");
    let nodes = g
        .nodes()
        .iter()
        .map(|x| frame.h * x + frame.kappa)
        .collect();
    Signal::new(g.amplitudes().to_vec(), nodes).expect("affine node map preserves validity")
}

/// Check `(eta, m, M)`-regularity of a model signal: all nodes in
/// `[-1, 1]`, consecutive gaps >= eta, amplitudes with
/// `m <= |a_j| <= M`.
pub fn check_regular(g: &Signal, p: &RegularityParams) -> RegularityReport {
    let mut violations = Vec::new();
    for (j, &x) in g.nodes().iter().enumerate() {
        if !(-1.0..=1.0).contains(&x) {
            violations.push(format!("node {} = {x} outside [-1, 1]", j + 1));
        }
    }
    for (j, w) in g.nodes().windows(2).enumerate() {
        let gap = w[1] - w[0];
        if gap < p.eta {
            violations.push(format!(
                "gap {} between nodes {} and {} below eta = {}",
                gap,
                j + 1,
                j + 2,
                p.eta
            ));
        }
    }
    for (j, &a) in g.amplitudes().iter().enumerate() {
        if a.abs() < p.amp_min {
            violations.push(format!("|a_{}| = {} below m = {}", j + 1, a.abs(), p.amp_min));
        }
        if a.abs() > p.amp_max {
            violations.push(format!("|a_{}| = {} above M = {}", j + 1, a.abs(), p.amp_max));
        }
    }
    RegularityReport {
        ok: violations.is_empty(),
        violations,
    }
}

/// Check that `F` forms an `(h, kappa, eta, m, M)`-regular cluster, i.e.
/// that its normalization is `(eta, m, M)`-regular.
pub fn check_regular_cluster(
    f: &Signal,
    p: &RegularityParams,
) -> Result<(RegularityReport, ClusterFrame), DegenerateCluster> {
    let (g, frame) = normalize(f)?;
    Ok((check_regular(&g, p), frame))
}
