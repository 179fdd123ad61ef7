//! Jacobian of the forward moment map, its confluent-Vandermonde
//! factorization, Gautschi-type norm bounds, and the explicit constants
//! ledger used by the stability estimates.
//!
//! With parameters ordered `(a_1..a_d, x_1..x_d)` the Jacobian at a
//! signal `G` factors as
//!
//! ```text
//! J(G) = U_{2d} * blockdiag(I_d, diag(a)),
//! ```
//!
//! where `U_{2d}` is the confluent Vandermonde matrix over the nodes.
//! Inverse norms of `U_{2d}` and of the plain Vandermonde are bounded by
//! the classical Gautschi formulas, which in turn feed the quantitative
//! inverse-function constants `C1..C8, r, R, K3, K4` below. All norms
//! are max-absolute-row-sum.

use serde::Serialize;

use crate::error::DomainError;
use crate::matrix::DenseMatrix;
use crate::signal::{compute_moments, RegularityParams, Signal};

/// Jacobian of the moment map at `G`, a `2d x 2d` matrix with rows
/// indexed by the moment order `k = 0..2d-1`:
/// column `j < d` holds `x_j^k`, column `d + j` holds `k a_j x_j^{k-1}`.
pub fn jacobian(g: &Signal) -> DenseMatrix {
    let d = g.d();
    let n = 2 * d;
    let mut jac = DenseMatrix::zeros(n, n);
    for (j, (&a, &x)) in g.amplitudes().iter().zip(g.nodes()).enumerate() {
        let mut power = 1.0; // x^k
        let mut prev = 0.0; // x^{k-1}, unused at k = 0
        for k in 0..n {
            jac.set(k, j, power);
            jac.set(k, d + j, k as f64 * a * prev);
            prev = power;
            power *= x;
        }
    }
    jac
}

/// Confluent Vandermonde factor `U_{2d}`: columns `1..d` are `(x_j^k)_k`,
/// columns `d+1..2d` are `(k x_j^{k-1})_k`.
pub fn confluent_vandermonde(nodes: &[f64]) -> DenseMatrix {
    let d = nodes.len();
    assert!(d >= 1);
    let n = 2 * d;
    let mut u = DenseMatrix::zeros(n, n);
    for (j, &x) in nodes.iter().enumerate() {
        let mut power = 1.0;
        let mut prev = 0.0;
        for k in 0..n {
            u.set(k, j, power);
            u.set(k, d + j, k as f64 * prev);
            prev = power;
            power *= x;
        }
    }
    u
}

/// Max absolute row sum norm (free-function form of
/// [`DenseMatrix::inf_norm`]).
pub fn inf_norm(a: &DenseMatrix) -> f64 {
    a.inf_norm()
}

fn require_distinct(nodes: &[f64]) -> Result<(), DomainError> {
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            if nodes[i] == nodes[j] {
                return Err(DomainError(format!(
                    "coincident nodes at value {}",
                    nodes[i]
                )));
            }
        }
    }
    Ok(())
}

/// Gautschi's bound on the plain inverse Vandermonde:
/// `||V_d^{-1}|| <= max_l prod_{j != l} (1 + |x_j|) / |x_l - x_j|`.
pub fn gautschi_vandermonde_bound(nodes: &[f64]) -> Result<f64, DomainError> {
    require_distinct(nodes)?;
    let mut best: f64 = 0.0;
    for (l, &xl) in nodes.iter().enumerate() {
        let mut prod = 1.0;
        for (j, &xj) in nodes.iter().enumerate() {
            if j != l {
                prod *= (1.0 + xj.abs()) / (xl - xj).abs();
            }
        }
        best = best.max(prod);
    }
    Ok(best)
}

/// Gautschi's bound on the inverse confluent Vandermonde:
/// `||U_{2d}^{-1}|| <= max_l b_l (prod_{j != l} (1+|x_j|)/|x_l-x_j|)^2`
/// with `b_l = max[1+|x_l|, 1 + 2(1+|x_l|) sum_{j != l} 1/|x_l-x_j|]`.
///
/// At `d = 1` the empty product is 1 and the empty sum 0, so the bound
/// reduces to `1 + |x_1|`.
pub fn gautschi_confluent_bound(nodes: &[f64]) -> Result<f64, DomainError> {
    require_distinct(nodes)?;
    let mut best: f64 = 0.0;
    for (l, &xl) in nodes.iter().enumerate() {
        let mut prod = 1.0;
        let mut inv_gap_sum = 0.0;
        for (j, &xj) in nodes.iter().enumerate() {
            if j != l {
                prod *= (1.0 + xj.abs()) / (xl - xj).abs();
                inv_gap_sum += 1.0 / (xl - xj).abs();
            }
        }
        let b = (1.0 + xl.abs()).max(1.0 + 2.0 * (1.0 + xl.abs()) * inv_gap_sum);
        best = best.max(b * prod * prod);
    }
    Ok(best)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// Uniform bounds over every eta-separated node set in `[-1, 1]`:
/// returns `(vandermonde_bound, confluent_bound)` with
///
/// ```text
/// vandermonde = eta^{-d+1} 2^{d-1} / (floor(d/2)!)^2
/// confluent   = (1 + 4 eta^{-1} (ln d + 1)) * vandermonde^2
/// ```
pub fn regular_bounds(eta: f64, d: usize) -> (f64, f64) {
    assert!(eta > 0.0 && d >= 1);
    let half_fact = factorial(d / 2);
    let vandermonde =
        eta.powi(-(d as i32) + 1) * 2f64.powi(d as i32 - 1) / (half_fact * half_fact);
    let confluent =
        (1.0 + 4.0 / eta * ((d as f64).ln() + 1.0)) * vandermonde * vandermonde;
    (vandermonde, confluent)
}

/// Every explicit constant of the quantitative inverse function theorem
/// and the worst-case bounds, for given `(d, eta, m, M, kappa)`.
///
/// `k3` requires `d >= 2` (its denominator carries `d(d-1)`) and is
/// absent for a single spike.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsBundle {
    pub d: usize,
    pub eta: f64,
    pub m: f64,
    #[serde(rename = "M")]
    pub m_upper: f64,
    pub kappa: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "C3")]
    pub c3: f64,
    #[serde(rename = "C4")]
    pub c4: f64,
    #[serde(rename = "C5")]
    pub c5: f64,
    #[serde(rename = "C6")]
    pub c6: f64,
    #[serde(rename = "C7")]
    pub c7: f64,
    #[serde(rename = "C8")]
    pub c8: f64,
    pub r: f64,
    #[serde(rename = "R")]
    pub r_big: f64,
    #[serde(rename = "K3")]
    pub k3: Option<f64>,
    #[serde(rename = "K4")]
    pub k4: f64,
}

impl ConstantsBundle {
    /// `K3`, failing for `d = 1` where it is undefined.
    pub fn k3(&self) -> Result<f64, DomainError> {
        self.k3
            .ok_or_else(|| DomainError("K3 is undefined for d = 1".into()))
    }
}

/// Evaluate the constants ledger.
///
/// ```text
/// C1 = max[1, 1/m] (1 + 4/eta (ln d + 1)) (eta^{-d+1} 2^{d-1} / (floor(d/2)!)^2)^2
/// C2 = d + M (2d-1) d            C5 = 6 (M+1) (2d-1)^2 d
/// r  = 1 / (4 C5 C1)             R  = r / (2 C2)
/// C3 = 2 C1 / (1 + 2 C1 C2)      C4 = 2 C1
/// C8 = eta^{-d+1} 2^{d-1} / (floor(d/2)!)^2
/// C6 = min[(1+|k|)^{2d-1} / (2 C8 C5 C4), R]
/// C7 = min[(1+|k|)^{2d-1} / (2 max[1,1/m] C8 C5 C4), R]
/// K3 = C3 (1+|k|)^{-2d+1} / (2 C8 d (d-1) M)
/// K4 = C3 (1+|k|)^{-2d+1} / (2 max[1,1/m] C8 d)
/// ```
pub fn compute_constants(d: usize, p: &RegularityParams, kappa: f64) -> ConstantsBundle {
    assert!(d >= 1);
    let (vand, confl) = regular_bounds(p.eta, d);
    let m_inv = (1.0 / p.amp_min).max(1.0);
    let c1 = m_inv * confl;
    let df = d as f64;
    let two_d_minus_1 = 2.0 * df - 1.0;
    let c2 = df + p.amp_max * two_d_minus_1 * df;
    let c5 = 6.0 * (p.amp_max + 1.0) * two_d_minus_1 * two_d_minus_1 * df;
    let r = 1.0 / (4.0 * c5 * c1);
    let r_big = r / (2.0 * c2);
    let c3 = 2.0 * c1 / (1.0 + 2.0 * c1 * c2);
    let c4 = 2.0 * c1;
    let c8 = vand;
    let shift_pow = (1.0 + kappa.abs()).powi(2 * d as i32 - 1);
    let c6 = (shift_pow / (2.0 * c8 * c5 * c4)).min(r_big);
    let c7 = (shift_pow / (2.0 * m_inv * c8 * c5 * c4)).min(r_big);
    let k3 = if d >= 2 {
        Some(c3 / shift_pow / (2.0 * c8 * df * (df - 1.0) * p.amp_max))
    } else {
        None
    };
    let k4 = c3 / shift_pow / (2.0 * m_inv * c8 * df);
    ConstantsBundle {
        d,
        eta: p.eta,
        m: p.amp_min,
        m_upper: p.amp_max,
        kappa,
        c1,
        c2,
        c3,
        c4,
        c5,
        c6,
        c7,
        c8,
        r,
        r_big,
        k3,
        k4,
    }
}

/// Check the quadratic remainder estimate of the linearized moment map:
/// `||(PM(G') - PM(G)) - J(G) (G' - G)|| <= C5 ||G' - G||^2`,
/// valid for `||G' - G|| <= 1/(2d-1)`.
pub fn remainder_bound_check(
    g: &Signal,
    g_prime: &Signal,
    bundle: &ConstantsBundle,
) -> Result<bool, DomainError> {
    assert_eq!(g.d(), g_prime.d(), "signals must share d");
    let d = g.d();
    let step = g.inf_distance(g_prime);
    if step > 1.0 / (2.0 * d as f64 - 1.0) {
        return Err(DomainError(format!(
            "remainder bound needs ||G'-G|| <= 1/(2d-1); got {step}"
        )));
    }
    let n = 2 * d;
    let jac = jacobian(g);
    let delta: Vec<f64> = g_prime
        .params()
        .iter()
        .zip(g.params())
        .map(|(a, b)| a - b)
        .collect();
    let linear = jac.matvec(&delta);
    let lhs = compute_moments(g_prime, n);
    let rhs = compute_moments(g, n);
    let remainder = (0..n)
        .map(|k| (lhs[k] - rhs[k] - linear[k]).abs())
        .fold(0.0, f64::max);
    Ok(remainder <= bundle.c5 * step * step)
}
