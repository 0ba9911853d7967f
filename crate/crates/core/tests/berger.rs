use std::f64::consts::PI;
use std::sync::Arc;

use liegeo_core::dynamics::{cheeger_geodesic_exact, closed_biinvariant_time, integrate_euler_arnold};
use liegeo_core::jacobi::{closed_geodesic_conjugacy, find_conjugate_times, solution_operator};
use liegeo_core::locus::*;
use liegeo_core::metric::MetricOperator;
use liegeo_core::StructuredBasis;
use nalgebra::DVector;
use proptest::prelude::*;

fn berger(delta: f64) -> MetricOperator {
    let b = Arc::new(StructuredBasis::su(2, true).unwrap().with_split(&[0]).unwrap());
    MetricOperator::cheeger(b, delta).unwrap()
}

fn numeric_det(delta: f64, p: f64, q: f64, times: &[f64]) -> Vec<f64> {
    let m = berger(delta);
    let u0 = DVector::from_vec(vec![p, q, 0.0]);
    let end = *times.last().unwrap();
    let tr = integrate_euler_arnold(&m, &u0, end, 1e-3).unwrap();
    solution_operator(&tr, times).unwrap().iter().map(|s| s.det).collect()
}

#[test]
fn operator_det_matches_closed_form() {
    let times: Vec<f64> = (0..=120).map(|k| k as f64 * 0.05).collect();
    for delta in [-0.5, 0.0, 1.0] {
        let num = numeric_det(delta, 1.0, 1.0, &times);
        let worst = times
            .iter()
            .zip(&num)
            .map(|(&t, d)| (d - berger_operator_det(t, delta, 1.0, 1.0)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-7, "delta {delta}: {worst:e}");
    }
}

#[test]
fn first_time_matches_jacobi_detector() {
    for delta in [-0.5, 0.0, 1.0] {
        let expect = berger_first_conjugate_time(delta, 1.0, 1.0).unwrap().t;
        let (r, _) = berger_r_s(delta, 1.0, 1.0);
        if delta >= 0.0 {
            assert!((expect - PI / r).abs() < 1e-15);
        } else {
            assert!(expect > 0.5 * PI / r && expect < PI / r);
        }
        let m = berger(delta);
        let u0 = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        let horizon = expect + 0.5;
        let tr = integrate_euler_arnold(&m, &u0, horizon, 1e-3).unwrap();
        let got = find_conjugate_times(&tr, horizon).unwrap().first().unwrap();
        assert!((got - expect).abs() < 1e-6, "delta {delta}: {got} vs {expect}");
    }
}

#[test]
fn exact_cheeger_geodesics_match_rk4() {
    let cases = [
        (
            Arc::new(StructuredBasis::su(2, true).unwrap().with_split(&[0]).unwrap()),
            0.7,
            vec![0.8, 0.5, -0.3],
        ),
        (
            Arc::new(StructuredBasis::su(3, true).unwrap()),
            -2.0 / 3.0,
            vec![0.4, -0.2, 0.3, 0.5, -0.6, 0.1, 0.2, -0.35],
        ),
    ];
    for (b, delta, u) in cases {
        let m = MetricOperator::cheeger(b, delta).unwrap();
        let u0 = DVector::from_vec(u);
        let tr = integrate_euler_arnold(&m, &u0, 5.0, 1e-4).unwrap();
        let (g, v) = cheeger_geodesic_exact(&m, &u0, 5.0).unwrap();
        let last = tr.len() - 1;
        assert!(tr.frames[last].distance(&g) < 1e-8);
        assert!((&tr.velocities[last] - v).amax() < 1e-8);
        let (dk, dl) = tr.conservation_drift();
        assert!(dk < 1e-9 && dl < 1e-9);
    }
}

#[test]
fn closed_geodesic_field_vanishes() {
    let m = berger(0.7);
    let u0 = DVector::from_vec(vec![0.6, 0.8, 0.0]);
    let tau = closed_biinvariant_time(&m, &u0, 20.0).unwrap().expect("closed");
    let tr = integrate_euler_arnold(&m, &u0, tau, tau / (tau / 1e-3).ceil()).unwrap();
    let verdict = closed_geodesic_conjugacy(&tr, tau).unwrap();
    assert!(verdict.isometric);
    assert!(verdict.field_norm_at_tau < 1e-8, "{:e}", verdict.field_norm_at_tau);
    assert!(verdict.conjugate);
    let first = find_conjugate_times(&tr, tau).unwrap().first().unwrap();
    assert!(first <= tau + 1e-9);
}

#[test]
fn locus_slices_nest() {
    let deltas = [-0.001, -0.25, -0.5, -0.75, -0.95];
    let slices: Vec<_> = deltas
        .iter()
        .map(|&d| generate_locus_slice(d, 720, LocusConvention::Momentum).unwrap())
        .collect();
    assert!(nesting_violations(&slices).is_empty());
    // the bi-invariant unit convention puts δ = −0.95 outside near the 𝔥 axis
    let bi: Vec<_> = deltas
        .iter()
        .map(|&d| generate_locus_slice(d, 720, LocusConvention::BiInvariantUnit).unwrap())
        .collect();
    assert!(!nesting_violations(&bi).is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reported_times_are_zeros(delta in -0.99f64..3.0, p in 0.05f64..2.0, q in 0.05f64..2.0) {
        let c = berger_first_conjugate_time(delta, p, q).unwrap();
        prop_assert!(c.t > 0.0);
        let (r, s) = berger_r_s(delta, p, q);
        let scale = (1.0 + delta) * s + delta.abs() * q * q * r * c.t;
        prop_assert!(berger_det(c.t, delta, p, q).abs() < 1e-10 * scale.max(1.0));
    }

    #[test]
    fn revolution_symmetry(delta in -0.99f64..3.0, theta in 0.0f64..6.28) {
        for conv in [LocusConvention::BiInvariantUnit, LocusConvention::MetricUnit, LocusConvention::Momentum] {
            prop_assert!(revolution_symmetry_residual(delta, conv, &[theta]).unwrap() < 1e-12);
        }
    }

    #[test]
    fn momentum_slices_monotone_in_delta(d1 in -0.99f64..0.0, d2 in -0.99f64..0.0, theta in 0.01f64..3.13) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let conv = LocusConvention::Momentum;
        let (p1, q1) = conv.norms(lo, theta);
        let (p2, q2) = conv.norms(hi, theta);
        let t1 = berger_first_conjugate_time(lo, p1, q1).unwrap().t;
        let t2 = berger_first_conjugate_time(hi, p2, q2).unwrap().t;
        prop_assert!(t1 <= t2 + 1e-12);
    }
}
