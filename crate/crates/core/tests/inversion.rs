//! Round-trip invariants of the Prony inversion over randomized regular
//! signals, in model space and in clustered frames.

use prony_leaves::*;
use rand::Rng;

/// Random `(eta, m, M)`-regular model signal: nodes in `[-1, 1]` with
/// gaps at least `eta`, amplitude magnitudes in `[m, M]`, random signs.
fn random_regular(
    d: usize,
    p: &RegularityParams,
    rng: &mut impl Rng,
    signed: bool,
) -> Signal {
    let nodes = loop {
        let mut xs: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        xs.sort_by(f64::total_cmp);
        if xs.windows(2).all(|w| w[1] - w[0] >= p.eta) {
            break xs;
        }
    };
    let amps = (0..d)
        .map(|_| {
            let mag = rng.gen_range(p.amp_min..p.amp_max);
            if signed && rng.gen_bool(0.5) {
                -mag
            } else {
                mag
            }
        })
        .collect();
    Signal::new(amps, nodes).unwrap()
}

#[test]
fn round_trip_on_regular_model_signals() {
    let p = RegularityParams::new(0.5, 0.5, 2.0);
    let cfg = InversionConfig::default();
    let mut rng = rng::make_rng(101, 0);
    for d in 1..=4 {
        for trial in 0..200 {
            let f = random_regular(d, &p, &mut rng, true);
            let mu = compute_moments(&f, 2 * d);
            let rec = solve_prony(&mu, d, &cfg)
                .unwrap_or_else(|e| panic!("d = {d}, trial {trial}: {e}"));
            let err = rec.inf_distance(&f);
            assert!(err <= 1e-7, "d = {d}, trial {trial}: error {err:.3e}");
        }
    }
}

#[test]
fn round_trip_on_clustered_signals() {
    let p = RegularityParams::new(0.5, 0.5, 2.0);
    let cfg = InversionConfig::default();
    let mut rng = rng::make_rng(103, 0);
    for &h in &[0.05, 0.1, 0.2] {
        for &kappa in &[0.0, 1.0] {
            for d in 2..=3 {
                // conditioning degrades like h^{-(2d-1)}: keep d <= 3 at
                // the tightest cluster scale
                for trial in 0..50 {
                    let g = random_regular(d, &p, &mut rng, true);
                    let f = denormalize(&g, &ClusterFrame { kappa, h });
                    let mu = compute_moments(&f, 2 * d);
                    let rec = solve_prony(&mu, d, &cfg).unwrap_or_else(|e| {
                        panic!("h = {h}, kappa = {kappa}, d = {d}, trial {trial}: {e}")
                    });
                    let err = rec.inf_distance(&f);
                    assert!(
                        err <= 1e-6,
                        "h = {h}, kappa = {kappa}, d = {d}: error {err:.3e}"
                    );
                }
            }
        }
    }
}

#[test]
fn diagnostics_meet_the_residual_contract() {
    let p = RegularityParams::new(0.5, 0.5, 2.0);
    let cfg = InversionConfig::default();
    let mut rng = rng::make_rng(107, 0);
    for _ in 0..50 {
        let f = random_regular(3, &p, &mut rng, true);
        let mu = compute_moments(&f, 6);
        let (_, diag) = solve_prony_detailed(&mu, 3, &cfg).unwrap();
        let allowed = 1e-8 * (1.0 + mu.inf_norm());
        assert!(diag.moment_residual <= allowed);
        assert!(diag.hankel_residual.is_finite());
    }
}
