//! Inverse Prony mapping: recover a signal from its first `2d` moments.
//!
//! The classical elimination is used, with every stage checked:
//!
//! 1. solve the `d x d` Hankel system
//!    `sum_l c_l mu_{k+l} = -mu_{k+d}` for the Prony polynomial
//!    coefficients;
//! 2. take the roots of the monic Prony polynomial as eigenvalues of its
//!    companion matrix (shifted QR iteration for d >= 3, closed forms
//!    below that);
//! 3. polish each root with a few Newton steps on the polynomial;
//! 4. recover the amplitudes from the `d x d` Vandermonde system on the
//!    first `d` moments.
//!
//! Noise can push a nearly collided node pair slightly off the real
//! axis; roots whose imaginary part stays inside the configured
//! tolerance are projected back to the real line, anything larger is a
//! reported failure rather than an invented answer.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::matrix::DenseMatrix;
use crate::signal::{compute_moments, MomentVector, Signal};

/// Knobs for the inversion; the defaults suit moment vectors at desk
/// scale (d <= 6, nodes within a few units of the origin).
#[derive(Debug, Clone, Copy)]
pub struct InversionConfig {
    /// Max accepted |Im z| for a root, scaled by `max(1, |Re z|)`.
    pub real_root_imag_tol: f64,
    /// Minimum gap between recovered nodes.
    pub collision_tol: f64,
    /// Newton polish iterations applied to each companion eigenvalue.
    pub refine_steps: usize,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            real_root_imag_tol: 1e-8,
            collision_tol: 1e-12,
            refine_steps: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InversionErrorKind {
    /// Hankel system for the Prony polynomial is rank-deficient.
    SingularHankel,
    /// A root's imaginary part exceeds the acceptance tolerance.
    ComplexRoots,
    /// Two recovered nodes are closer than the collision tolerance.
    NodeCollision,
    /// Vandermonde solve for the amplitudes failed or left a residual.
    AmplitudeSolveFailed,
}

#[derive(Debug, Clone, Error)]
#[error("prony inversion failed ({kind:?}): {detail}")]
pub struct InversionError {
    pub kind: InversionErrorKind,
    pub detail: String,
}

/// Residuals and conditioning observed during a successful inversion.
#[derive(Debug, Clone, Serialize)]
pub struct InversionDiagnostics {
    pub hankel_condition: f64,
    pub hankel_residual: f64,
    pub moment_residual: f64,
}

/// `max_k |m_k(F) - mu_k|` over the length of `mu`.
pub fn moment_residual(mu: &MomentVector, f: &Signal) -> f64 {
    compute_moments(f, mu.len()).inf_distance(mu)
}

/// Invert the Prony system for `d` spikes from exactly `2d` moments.
pub fn solve_prony(
    mu: &MomentVector,
    d: usize,
    cfg: &InversionConfig,
) -> Result<Signal, InversionError> {
    solve_prony_detailed(mu, d, cfg).map(|(f, _)| f)
}

/// As [`solve_prony`], also returning the stage-by-stage diagnostics.
pub fn solve_prony_detailed(
    mu: &MomentVector,
    d: usize,
    cfg: &InversionConfig,
) -> Result<(Signal, InversionDiagnostics), InversionError> {
    assert!(d >= 1, "need at least one spike");
    assert_eq!(mu.len(), 2 * d, "inversion consumes exactly 2d moments");

    // Stage 1: Prony polynomial coefficients from the Hankel system.
    let mut hankel = DenseMatrix::zeros(d, d);
    for k in 0..d {
        for l in 0..d {
            hankel.set(k, l, mu[k + l]);
        }
    }
    let rhs: Vec<f64> = (0..d).map(|k| -mu[k + d]).collect();
    let coeffs = hankel.solve(&rhs).map_err(|e| InversionError {
        kind: InversionErrorKind::SingularHankel,
        detail: format!(
            "hankel system rank-deficient ({e}); condition estimate {:.3e}",
            hankel.condition_inf()
        ),
    })?;
    let hankel_residual = hankel
        .matvec(&coeffs)
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    // Stage 2 + 3: roots of x^d + c_{d-1} x^{d-1} + ... + c_0, polished.
    let mut roots = polynomial_roots(&coeffs);
    for z in roots.iter_mut() {
        newton_polish(z, &coeffs, cfg.refine_steps);
    }

    // Stage 4: accept only finite, (tolerably) real, well separated
    // roots.
    let mut nodes = Vec::with_capacity(d);
    for z in &roots {
        if !z.re.is_finite() || !z.im.is_finite() || z.im.abs() > cfg.real_root_imag_tol * z.re.abs().max(1.0)
        {
            return Err(InversionError {
                kind: InversionErrorKind::ComplexRoots,
                detail: format!("root {z} beyond imaginary tolerance; all roots {roots:?}"),
            });
        }
        nodes.push(z.re);
    }
    nodes.sort_by(f64::total_cmp);
    for w in nodes.windows(2) {
        if (w[1] - w[0]).abs() < cfg.collision_tol {
            return Err(InversionError {
                kind: InversionErrorKind::NodeCollision,
                detail: format!("nodes {} and {} collide", w[0], w[1]),
            });
        }
    }

    let mut vander = DenseMatrix::zeros(d, d);
    for j in 0..d {
        let mut p = 1.0;
        for k in 0..d {
            vander.set(k, j, p);
            p *= nodes[j];
        }
    }
    let first: Vec<f64> = (0..d).map(|k| mu[k]).collect();
    let amps = vander.solve(&first).map_err(|e| InversionError {
        kind: InversionErrorKind::AmplitudeSolveFailed,
        detail: format!("vandermonde solve failed: {e}"),
    })?;

    let f = Signal::new(amps, nodes).map_err(|e| InversionError {
        kind: InversionErrorKind::AmplitudeSolveFailed,
        detail: format!("assembled signal invalid: {e}"),
    })?;

    let residual = moment_residual(mu, &f);
    let allowed = 1e-8 * (1.0 + mu.inf_norm());
    if residual > allowed {
        return Err(InversionError {
            kind: InversionErrorKind::AmplitudeSolveFailed,
            detail: format!("moment residual {residual:.3e} exceeds {allowed:.3e}"),
        });
    }

    Ok((
        f,
        InversionDiagnostics {
            hankel_condition: hankel.condition_inf(),
            hankel_residual,
            moment_residual: residual,
        },
    ))
}

/// Horner evaluation of the monic polynomial and its derivative.
fn eval_monic(z: Complex64, coeffs: &[f64]) -> (Complex64, Complex64) {
    let d = coeffs.len();
    let mut p = Complex64::new(1.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for k in (0..d).rev() {
        dp = dp * z + p;
        p = p * z + coeffs[k];
    }
    (p, dp)
}

fn newton_polish(z: &mut Complex64, coeffs: &[f64], steps: usize) {
    for _ in 0..steps {
        let (p, dp) = eval_monic(*z, coeffs);
        if dp.norm() < 1e-300 {
            return;
        }
        *z -= p / dp;
    }
}

/// Roots of `x^d + c_{d-1} x^{d-1} + ... + c_0`.
fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    match coeffs.len() {
        0 => Vec::new(),
        1 => vec![Complex64::new(-coeffs[0], 0.0)],
        2 => quadratic_roots(coeffs[1], coeffs[0]),
        _ => companion_eigenvalues(coeffs),
    }
}

/// Roots of `x^2 + b x + c` avoiding cancellation in the real branch.
fn quadratic_roots(b: f64, c: f64) -> Vec<Complex64> {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let q = -0.5 * (b + s.copysign(if b == 0.0 { 1.0 } else { b }));
        if q == 0.0 {
            // b = c = 0: double root at the origin
            return vec![Complex64::new(0.0, 0.0), Complex64::new(-b, 0.0)];
        }
        vec![Complex64::new(q, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        vec![Complex64::new(-0.5 * b, im), Complex64::new(-0.5 * b, -im)]
    }
}

/// Eigenvalues of the Frobenius companion matrix by complex shifted QR
/// with Givens rotations. The companion matrix is already upper
/// Hessenberg, so no reduction step is needed; sizes here are tiny.
fn companion_eigenvalues(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len();
    let mut h = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 1..n {
        h[i * n + (i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        h[i * n + (n - 1)] = Complex64::new(-coeffs[i], 0.0);
    }

    let mut eigen = Vec::with_capacity(n);
    let mut active = n;
    let max_iter = 200 * n;
    let mut iter = 0;

    while active > 1 && iter < max_iter {
        iter += 1;
        let sub = h[(active - 1) * n + (active - 2)].norm();
        let diag =
            h[(active - 1) * n + (active - 1)].norm() + h[(active - 2) * n + (active - 2)].norm();
        if sub <= 1e-14 * diag.max(1e-300) {
            eigen.push(h[(active - 1) * n + (active - 1)]);
            active -= 1;
            continue;
        }

        let shift = wilkinson_shift(
            h[(active - 2) * n + (active - 2)],
            h[(active - 2) * n + (active - 1)],
            h[(active - 1) * n + (active - 2)],
            h[(active - 1) * n + (active - 1)],
        );
        for i in 0..active {
            h[i * n + i] -= shift;
        }

        // QR sweep on the active Hessenberg block with rotations
        // G_i = [[c, s], [-conj(s), c]] chosen to zero each subdiagonal.
        let mut cs = vec![0.0; active - 1];
        let mut sn = vec![Complex64::new(0.0, 0.0); active - 1];
        for i in 0..active - 1 {
            let (c, s) = givens(h[i * n + i], h[(i + 1) * n + i]);
            cs[i] = c;
            sn[i] = s;
            for j in i..active {
                let t1 = h[i * n + j];
                let t2 = h[(i + 1) * n + j];
                h[i * n + j] = c * t1 + s * t2;
                h[(i + 1) * n + j] = c * t2 - s.conj() * t1;
            }
        }
        // RQ: multiply G_i^H back on the right.
        for i in 0..active - 1 {
            let (c, s) = (cs[i], sn[i]);
            let limit = (i + 2).min(active);
            for j in 0..limit {
                let t1 = h[j * n + i];
                let t2 = h[j * n + (i + 1)];
                h[j * n + i] = c * t1 + s.conj() * t2;
                h[j * n + (i + 1)] = c * t2 - s * t1;
            }
        }
        for i in 0..active {
            h[i * n + i] += shift;
        }
    }

    for i in (0..active).rev() {
        eigen.push(h[i * n + i]);
    }
    eigen
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - 4.0 * det).sqrt();
    let e1 = 0.5 * (tr + disc);
    let e2 = 0.5 * (tr - disc);
    if (e1 - d).norm() < (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

/// Rotation zeroing `b` below `a`: returns `(c, s)` with c real.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let na = a.norm();
    let nb = b.norm();
    if nb < 1e-300 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if na < 1e-300 {
        return (0.0, Complex64::from_polar(1.0, b.arg()));
    }
    let r = (na * na + nb * nb).sqrt();
    let c = na / r;
    let phase = Complex64::from_polar(1.0, a.arg());
    let s = phase * b.conj() / r;
    (c, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(a: &[f64], x: &[f64], count: usize) -> MomentVector {
        compute_moments(&Signal::new(a.to_vec(), x.to_vec()).unwrap(), count)
    }

    #[test]
    fn symmetric_pair_from_its_moments() {
        let mu = MomentVector::new(vec![1.0, 0.0, 0.01, 0.0]);
        let f = solve_prony(&mu, 2, &InversionConfig::default()).unwrap();
        assert!((f.nodes()[0] + 0.1).abs() < 1e-12);
        assert!((f.nodes()[1] - 0.1).abs() < 1e-12);
        assert!((f.amplitudes()[0] - 0.5).abs() < 1e-12);
        assert!((f.amplitudes()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_spike() {
        let mu = MomentVector::new(vec![1.0, 0.0]);
        let f = solve_prony(&mu, 1, &InversionConfig::default()).unwrap();
        assert_eq!(f.nodes(), &[0.0]);
        assert_eq!(f.amplitudes(), &[1.0]);
    }

    #[test]
    fn asymmetric_pair() {
        let mu = MomentVector::new(vec![3.0, 1.0, 3.0, 1.0]);
        let f = solve_prony(&mu, 2, &InversionConfig::default()).unwrap();
        assert!((f.nodes()[0] + 1.0).abs() < 1e-12 && (f.nodes()[1] - 1.0).abs() < 1e-12);
        assert!((f.amplitudes()[0] - 1.0).abs() < 1e-12);
        assert!((f.amplitudes()[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn residual_of_exact_and_reported_diagnostics() {
        let mu = moments(&[0.5, 0.5], &[-0.1, 0.1], 4);
        let (f, diag) = solve_prony_detailed(&mu, 2, &InversionConfig::default()).unwrap();
        assert!(moment_residual(&mu, &f) < 1e-14);
        assert!(diag.moment_residual < 1e-14);
        assert!(diag.hankel_residual < 1e-14);
        assert!(diag.hankel_condition.is_finite());

        // perturbing a single coordinate by eps moves the residual to eps
        let mut vals = mu.values().to_vec();
        vals[2] += 1e-3;
        assert!((moment_residual(&MomentVector::new(vals), &f) - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn three_and_four_spikes_use_the_companion_path() {
        let mu3 = moments(&[1.0, -0.7, 0.5], &[-0.8, 0.0, 0.9], 6);
        let f3 = solve_prony(&mu3, 3, &InversionConfig::default()).unwrap();
        assert!(f3.node_distance(&Signal::new(vec![1.0, -0.7, 0.5], vec![-0.8, 0.0, 0.9]).unwrap()) < 1e-10);

        let truth = Signal::new(vec![0.6, 1.2, -0.9, 0.8], vec![-0.9, -0.3, 0.35, 0.95]).unwrap();
        let mu4 = compute_moments(&truth, 8);
        let f4 = solve_prony(&mu4, 4, &InversionConfig::default()).unwrap();
        assert!(f4.inf_distance(&truth) < 1e-9);
    }

    #[test]
    fn singular_hankel_detected() {
        // one real spike offered as a two-spike problem: Hankel is rank 1
        let mu = moments(&[1.0], &[0.5], 4);
        let err = solve_prony(&mu, 2, &InversionConfig::default()).unwrap_err();
        assert_eq!(err.kind, InversionErrorKind::SingularHankel);
        assert!(err.detail.contains("condition"));
    }

    #[test]
    fn complex_roots_detected() {
        // m = (2, 0, -0.02, 0): x^2 = -0.01, conjugate pair at +-0.1i
        let mu = MomentVector::new(vec![2.0, 0.0, -0.02, 0.0]);
        let err = solve_prony(&mu, 2, &InversionConfig::default()).unwrap_err();
        assert_eq!(err.kind, InversionErrorKind::ComplexRoots);
    }

    #[test]
    fn near_real_roots_are_projected() {
        let mu = moments(&[0.5, 0.5], &[-0.1, 0.1], 4);
        let mut vals = mu.values().to_vec();
        // a perturbation that pushes the pair very slightly complex
        vals[2] -= 1e-19;
        let f = solve_prony(&MomentVector::new(vals), 2, &InversionConfig::default()).unwrap();
        assert_eq!(f.d(), 2);
    }

    #[test]
    fn ordering_is_always_increasing() {
        let mu = moments(&[2.0, -1.0, 0.4], &[0.7, -0.2, -0.9], 6);
        let f = solve_prony(&mu, 3, &InversionConfig::default()).unwrap();
        assert!(f.nodes().windows(2).all(|w| w[0] < w[1]));
    }
}

