use std::f64::consts::TAU;

use evanskit::evalsys::{EigenvalueSystem, Side};
use evanskit::evans::{evans_along, winding_number, winding_number_gauged, Contour, EvansSampler, WindingOptions};
use evanskit::linalg::{c64, CMat, C64};
use proptest::prelude::*;

// w'' = (λ − 2 sech² x) w has the single eigenvalue λ = 1 with eigenfunction sech x.
fn well(half_length: f64) -> EigenvalueSystem {
    let m = |lambda: C64, q: f64| CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), lambda - q, c64(0.0, 0.0)]);
    EigenvalueSystem::custom(
        2,
        half_length,
        (8.0, 0.5),
        move |x, lambda| m(lambda, 2.0 / x.cosh().powi(2)),
        move |_: Side, lambda| m(lambda, 0.0),
    )
}

fn opts() -> WindingOptions {
    WindingOptions { tol: 1e-10, ..Default::default() }
}

fn values(es: &EigenvalueSystem, points: &[C64]) -> Vec<C64> {
    evans_along(&EvansSampler::new(es, 1e-11), points, Some(1)).unwrap().iter().map(|s| s.value()).collect()
}

#[test]
fn eigenvalue_is_counted_once() {
    let es = well(12.0);
    assert_eq!(winding_number(&es, &Contour::circle(c64(1.0, 0.0), 0.5, 64), &opts()).unwrap().winding, 1);
    assert_eq!(winding_number(&es, &Contour::circle(c64(3.0, 0.0), 0.5, 64), &opts()).unwrap().winding, 0);
    assert_eq!(winding_number(&es, &Contour::half_annulus(0.05, 6.0, 128), &opts()).unwrap().winding, 1);
}

#[test]
fn mean_value_property_holds() {
    let es = well(12.0);
    let center = c64(2.0, 0.3);
    let n = 48;
    let mut pts = vec![center];
    pts.extend((0..=n).map(|k| center + C64::from_polar(0.6, TAU * k as f64 / n as f64)));
    let d = values(&es, &pts);
    let mean: C64 = d[1..=n].iter().sum::<C64>() / n as f64;
    let spread = d[1..=n].iter().map(|z| (z - d[0]).norm()).fold(0.0, f64::max);
    assert!(spread > 1e-2 * d[0].norm(), "D is nearly constant here: {spread}");
    assert!((mean - d[0]).norm() < 1e-7 * d[0].norm(), "{mean} vs {}", d[0]);
}

#[test]
fn doubling_the_contour_keeps_the_winding() {
    let es = well(12.0);
    let c = Contour::half_annulus(0.05, 6.0, 96);
    let a = winding_number(&es, &c, &opts()).unwrap();
    let b = winding_number(&es, &c.doubled(), &opts()).unwrap();
    assert_eq!(a.winding, b.winding);
    assert!((a.total_phase - b.total_phase).abs() < 1e-6);
}

#[test]
fn truncation_changes_only_a_constant_factor() {
    let pts: Vec<C64> = (0..=16).map(|k| c64(1.5, 0.0) + C64::from_polar(1.0, TAU * k as f64 / 16.0)).collect();
    let a = values(&well(10.0), &pts);
    let b = values(&well(14.0), &pts);
    for (x, y) in a.iter().zip(&b) {
        let r = (x / a[0]) / (y / b[0]);
        assert!((r - 1.0).norm() < 1e-6, "{r}");
    }
}

#[test]
fn parallel_and_sequential_sweeps_agree() {
    let es = well(12.0);
    let c = Contour::half_annulus(0.05, 6.0, 64);
    let seq = winding_number(&es, &c, &WindingOptions { jobs: Some(1), ..opts() }).unwrap();
    let par = winding_number(&es, &c, &WindingOptions { jobs: None, ..opts() }).unwrap();
    assert_eq!(seq.samples, par.samples);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn nonvanishing_gauge_keeps_the_winding(c0 in -1.0..1.0f64, c1 in -1.0..1.0f64, c2 in -0.3..0.3f64, c3 in -0.3..0.3f64) {
        let es = well(12.0);
        let gauge = move |z: C64| (c64(c0, c1) + c64(c2, 0.0) * z + c64(0.0, c3) * z * z).exp();
        let c = Contour::circle(c64(1.0, 0.0), 0.5, 64);
        let w = winding_number_gauged(&es, &c, &opts(), &gauge).unwrap();
        prop_assert_eq!(w.winding, 1);
    }

    #[test]
    fn winding_counts_the_enclosed_eigenvalue(re in 0.2..4.0f64, im in -1.0..1.0f64, r in 0.2..0.7f64) {
        let es = well(12.0);
        let inside = (c64(re, im) - 1.0).norm() < r;
        prop_assume!(((c64(re, im) - 1.0).norm() - r).abs() > 0.05);
        let w = winding_number(&es, &Contour::circle(c64(re, im), r, 48), &opts()).unwrap();
        prop_assert_eq!(w.winding, inside as i64);
    }
}
