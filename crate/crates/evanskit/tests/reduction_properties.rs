use std::sync::Arc;

use evanskit::evalsys::assemble;
use evanskit::linalg::{c64, CMat};
use evanskit::model::{characteristic_decomposition, Gnl2x2, Model};
use evanskit::profile::solve_profile;
use evanskit::reduction::{
    block_diagonalize, build_block_basis, graph_drift, normalize_basis, regime_partition, tracking_reduce, TrackingProblem,
};
use proptest::prelude::*;

fn gnl() -> Model {
    Model::viscous(Gnl2x2::default())
}

fn entry() -> impl Strategy<Value = (f64, f64)> {
    (-1.0..1.0f64, -1.0..1.0f64)
}

// diagonal blocks separated by at least `eta`; off-diagonal coupling of norm at most 1.5·delta
fn tracking_problem(k1: usize, k2: usize, eta: f64, delta: f64, diag: Vec<(f64, f64)>, off: Vec<(f64, f64)>) -> TrackingProblem {
    let n = k1 + k2;
    let mut base = CMat::zeros(n, n);
    for i in 0..n {
        let (a, b) = diag[i];
        base[(i, i)] = if i < k1 { c64(eta + 0.5 * a.abs(), b) } else { c64(-0.5 * a.abs(), b) };
    }
    let mut it = off.into_iter().map(|(a, b)| c64(a, b));
    let mut c12 = CMat::from_fn(k1, k2, |_, _| it.next().unwrap());
    let mut c21 = CMat::from_fn(k2, k1, |_, _| it.next().unwrap());
    c12 *= c64(delta / c12.norm().max(1e-12), 0.0);
    c21 *= c64(delta / c21.norm().max(1e-12), 0.0);
    let x: Vec<f64> = (0..161).map(|i| -8.0 + 0.1 * i as f64).collect();
    let full = x
        .iter()
        .map(|&x| {
            let w = 0.5 * (1.0 + (x / 2.0).tanh());
            let mut f = base.clone();
            f.view_mut((0, k1), (k1, k2)).copy_from(&(&c12 * c64(0.5 + w, 0.0)));
            f.view_mut((k1, 0), (k2, k1)).copy_from(&(&c21 * c64(1.5 - w, 0.0)));
            f
        })
        .collect();
    TrackingProblem { x, full, k1 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constant_slope_matches_the_eigenvector(ratio in 0.001..0.09f64, gap in 0.5..3.0f64) {
        let delta = ratio * gap;
        let f = CMat::from_row_slice(2, 2, &[c64(gap / 2.0, 0.0), c64(delta, 0.0), c64(delta, 0.0), c64(-gap / 2.0, 0.0)]);
        let r = tracking_reduce(&TrackingProblem::constant(f, 1, 5.0, 51)).unwrap();
        let want = (((gap / 2.0).powi(2) + delta * delta).sqrt() - gap / 2.0) / delta;
        for phi in &r.phi2 {
            prop_assert!((phi[(0, 0)] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn tracked_graphs_obey_the_bound_and_are_invariant(
        k1 in 1usize..=2,
        k2 in 1usize..=2,
        eta in 0.5..2.0f64,
        ratio in 0.005..0.06f64,
        diag in proptest::collection::vec(entry(), 4),
        off in proptest::collection::vec(entry(), 8),
        z in proptest::collection::vec(entry(), 2),
    ) {
        let p = tracking_problem(k1, k2, eta, eta * ratio, diag, off);
        let r = tracking_reduce(&p).unwrap();
        prop_assert!(r.certificate <= 4.0, "certificate {}", r.certificate);
        prop_assert!(r.sup_phi <= 4.0 * r.coupling / r.gap + 1e-14);
        let z1 = CMat::from_fn(k1, 1, |i, _| c64(z[i].0, z[i].1) + 1.0);
        let i = p.x.len() / 2;
        prop_assert!(graph_drift(&p, &r, i, &z1).unwrap() < 1e-4);
    }

    #[test]
    fn regime_segments_tile_the_range(eps in 0.01..0.25f64, c in 4.0..8.0f64) {
        let (r_min, r_max) = (1e-3 * eps * eps, 40.0);
        let segs = regime_partition(eps, c, 1.0, 1.0, r_min, r_max).unwrap();
        prop_assert!((segs[0].lo - r_min).abs() <= 1e-12 * r_min);
        prop_assert!((segs.last().unwrap().hi - r_max).abs() <= 1e-12 * r_max);
        for w in segs.windows(2) {
            prop_assert!((w[0].hi - w[1].lo).abs() <= 1e-12 * w[1].lo);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn gnl2x2_profile_is_a_lax_shock(eps in 0.05..0.3f64) {
        let model = gnl();
        let p = solve_profile(&model, eps, None).unwrap();
        let (fm, fp) = (model.flux(&p.u_minus), model.flux(&p.u_plus));
        prop_assert!((fm - fp).norm() < 1e-12);
        let dm = characteristic_decomposition(&model.jacobian(&p.u_minus).unwrap()).unwrap();
        let dp = characteristic_decomposition(&model.jacobian(&p.u_plus).unwrap()).unwrap();
        prop_assert!(dm.a[dm.p] > 0.0 && dp.a[dp.p] < 0.0);
        prop_assert!((&p.u[0] - &p.u_minus).norm() < 1e-6 * eps);
        prop_assert!((p.u.last().unwrap() - &p.u_plus).norm() < 1e-6 * eps);
        prop_assert!(p.residual < 1e-8);
    }

    #[test]
    fn gnl2x2_reduction_identities(eps in 0.05..0.2f64, re in 0.0..2.0f64, im in -2.0..2.0f64) {
        let es = assemble(Arc::new(solve_profile(&gnl(), eps, None).unwrap()), &gnl()).unwrap();
        let lambda = c64(re, im) * (eps * eps) + c64(1e-3 * eps * eps, 0.0);
        let basis = normalize_basis(&build_block_basis(&es, lambda).unwrap());
        prop_assert!(basis.biorthogonality_defect() < 1e-9);
        prop_assert!(basis.unit_derivative_defect() < 1e-9);
        let red = block_diagonalize(&es, &basis).unwrap();
        prop_assert!(red.conjugacy_residual < 1e-9);
    }
}
