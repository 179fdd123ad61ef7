//! Sampled dominance and bi-Lipschitz checks for the norm bounds and
//! stability constants.

use prony_leaves::*;
use rand::Rng;

fn random_separated_nodes(d: usize, eta: f64, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let mut xs: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        xs.sort_by(f64::total_cmp);
        if xs.windows(2).all(|w| w[1] - w[0] >= eta) {
            return xs;
        }
    }
}

fn random_regular(d: usize, p: &RegularityParams, rng: &mut impl Rng) -> Signal {
    let nodes = random_separated_nodes(d, p.eta, rng);
    let amps = (0..d)
        .map(|_| {
            let mag = rng.gen_range(p.amp_min..p.amp_max);
            if rng.gen_bool(0.5) {
                -mag
            } else {
                mag
            }
        })
        .collect();
    Signal::new(amps, nodes).unwrap()
}

fn vandermonde(nodes: &[f64]) -> DenseMatrix {
    let d = nodes.len();
    let mut v = DenseMatrix::zeros(d, d);
    for (j, &x) in nodes.iter().enumerate() {
        let mut p = 1.0;
        for k in 0..d {
            v.set(k, j, p);
            p *= x;
        }
    }
    v
}

#[test]
fn gautschi_bounds_dominate_exact_inverse_norms() {
    let eta = 0.4;
    let mut rng = rng::make_rng(211, 0);
    for d in 2..=4 {
        let (reg_vand, reg_confl) = regular_bounds(eta, d);
        for _ in 0..100 {
            let nodes = random_separated_nodes(d, eta, &mut rng);

            let exact_v = vandermonde(&nodes).inverse().unwrap().inf_norm();
            let bound_v = gautschi_vandermonde_bound(&nodes).unwrap();
            assert!(
                bound_v >= exact_v * (1.0 - 1e-12),
                "d = {d}: vandermonde bound {bound_v} < exact {exact_v}"
            );

            let exact_u = confluent_vandermonde(&nodes).inverse().unwrap().inf_norm();
            let bound_u = gautschi_confluent_bound(&nodes).unwrap();
            assert!(
                bound_u >= exact_u * (1.0 - 1e-12),
                "d = {d}: confluent bound {bound_u} < exact {exact_u}"
            );

            // the uniform eta-separated bounds dominate the per-instance ones
            assert!(reg_vand >= bound_v * (1.0 - 1e-12));
            assert!(reg_confl >= bound_u * (1.0 - 1e-12));
        }
    }
}

#[test]
fn jacobian_norms_within_the_constants() {
    let p = RegularityParams::new(0.5, 0.5, 2.0);
    let mut rng = rng::make_rng(223, 0);
    for d in 2..=4 {
        let bundle = compute_constants(d, &p, 0.0);
        for _ in 0..50 {
            let g = random_regular(d, &p, &mut rng);
            let j = jacobian(&g);
            assert!(j.inf_norm() <= bundle.c2 * (1.0 + 1e-12));
            let j_inv = j.inverse().unwrap();
            assert!(j_inv.inf_norm() <= bundle.c1 * (1.0 + 1e-12));
        }
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    let p = RegularityParams::new(0.5, 0.5, 2.0);
    let mut rng = rng::make_rng(227, 0);
    let step = 1e-6;
    for d in 2..=3 {
        for _ in 0..50 {
            let g = random_regular(d, &p, &mut rng);
            let j = jacobian(&g);
            let n = 2 * d;
            for col in 0..n {
                let mut plus = g.params();
                let mut minus = g.params();
                plus[col] += step;
                minus[col] -= step;
                let sig = |v: &[f64]| {
                    Signal::new(v[..d].to_vec(), v[d..].to_vec()).unwrap()
                };
                let mp = compute_moments(&sig(&plus), n);
                let mm = compute_moments(&sig(&minus), n);
                for row in 0..n {
                    let fd = (mp[row] - mm[row]) / (2.0 * step);
                    let analytic = j.get(row, col);
                    let scale = analytic.abs().max(1.0);
                    assert!(
                        (fd - analytic).abs() <= 1e-5 * scale,
                        "d = {d}, entry ({row},{col}): fd {fd} vs {analytic}"
                    );
                }
            }
        }
    }
}

#[test]
fn inverse_map_is_bilipschitz_on_the_stability_cube() {
    let p = RegularityParams::new(0.5, 0.5, 2.0);
    let cfg = InversionConfig::default();
    let mut rng = rng::make_rng(229, 0);
    for d in 2..=3 {
        let bundle = compute_constants(d, &p, 0.0);
        for _ in 0..20 {
            let g = random_regular(d, &p, &mut rng);
            let nu = compute_moments(&g, 2 * d);
            let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
                let vals: Vec<f64> = nu
                    .values()
                    .iter()
                    .map(|v| v + rng.gen_range(-bundle.r_big..=bundle.r_big))
                    .collect();
                MomentVector::new(vals)
            };
            for _ in 0..10 {
                let nu1 = draw(&mut rng);
                let nu2 = draw(&mut rng);
                let g1 = solve_prony(&nu1, d, &cfg).unwrap();
                let g2 = solve_prony(&nu2, d, &cfg).unwrap();
                let dist_m = nu1.inf_distance(&nu2);
                let dist_p = g1.inf_distance(&g2);
                assert!(
                    bundle.c3 * dist_m <= dist_p * (1.0 + 1e-9) + 1e-13,
                    "lower bi-Lipschitz violated: {} vs {}",
                    bundle.c3 * dist_m,
                    dist_p
                );
                assert!(
                    dist_p <= bundle.c4 * dist_m * (1.0 + 1e-9) + 1e-13,
                    "upper bi-Lipschitz violated: {} vs {}",
                    dist_p,
                    bundle.c4 * dist_m
                );
            }
        }
    }
}

#[test]
fn remainder_bound_over_random_pairs() {
    let mut rng = rng::make_rng(233, 0);
    for d in 2..=3 {
        let p = RegularityParams::new(0.5, 0.5, 2.0);
        let bundle = compute_constants(d, &p, 0.0);
        for _ in 0..1000 {
            let g = random_regular(d, &p, &mut rng);
            let scale = rng.gen_range(1e-5..5e-3);
            let params: Vec<f64> = g
                .params()
                .iter()
                .map(|v| v + rng.gen_range(-scale..scale))
                .collect();
            let gp = Signal::new(params[..d].to_vec(), params[d..].to_vec()).unwrap();
            assert!(remainder_bound_check(&g, &gp, &bundle).unwrap());
        }
    }
}
