use std::sync::Arc;

use liegeo_core::criteria::*;
use liegeo_core::curvature::misiolek_scan;
use liegeo_core::dynamics::integrate_euler_arnold;
use liegeo_core::jacobi::find_conjugate_times;
use liegeo_core::metric::MetricOperator;
use liegeo_core::StructuredBasis;
use proptest::prelude::*;

fn metrics() -> Vec<MetricOperator> {
    let so3 = Arc::new(StructuredBasis::so(3).unwrap());
    let so4 = Arc::new(StructuredBasis::so(4).unwrap());
    vec![
        MetricOperator::rigid_body(so3.clone(), &[1.0, 2.0, 3.0]).unwrap(),
        MetricOperator::diagonal(so3, &[4.0, 1.0, 1.5]).unwrap(),
        MetricOperator::rigid_body(so4.clone(), &[1.0, 2.0, 3.5, 5.0]).unwrap(),
        MetricOperator::diagonal(so4, &[6.0, 1.0, 1.3, 0.8, 2.2, 1.7]).unwrap(),
    ]
}

#[test]
fn three_detectors_agree_on_steady_directions() {
    for m in metrics() {
        let b = m.basis().clone();
        for i in 0..m.dim() {
            let u0 = b.unit(i);
            let (_, blocks) = commuting_block_scan(&m, &u0).unwrap();
            let t_blocks = blocks.first().expect("block zero");
            let c = steady_operators(&m, &u0).unwrap();
            let det = steady_determinant_scan(&c, t_blocks + 1.0, 2000).unwrap();
            let t_det = det.first().expect("determinant zero");
            let horizon = t_blocks + 0.5;
            let tr = integrate_euler_arnold(&m, &u0, horizon, 1e-3).unwrap();
            let t_jac = find_conjugate_times(&tr, horizon).unwrap().first().expect("jacobi zero");
            eprintln!("{:?} {i}: blocks {t_blocks:.9} det {t_det:.9} jacobi {t_jac:.9}", m.variant());
            assert!((t_blocks - t_det).abs() < 1e-5);
            assert!((t_blocks - t_jac).abs() < 1e-4);
        }
    }
}

#[test]
fn misiolek_misses_the_short_axis() {
    let b = Arc::new(StructuredBasis::so(3).unwrap());
    let m = MetricOperator::rigid_body(b.clone(), &[1.0, 2.0, 3.0]).unwrap();
    let u0 = b.unit(0);
    let scan = misiolek_scan(&m, &u0, 200, 1).unwrap();
    assert!(scan.minimum >= -1e-12);
    let (_, rep) = commuting_block_scan(&m, &u0).unwrap();
    assert!(rep.first().is_some());
}

#[test]
fn sylvester_formula_on_short_axis() {
    let b = Arc::new(StructuredBasis::so(3).unwrap());
    let m = MetricOperator::rigid_body(b.clone(), &[1.0, 2.0, 3.0]).unwrap();
    let c = steady_operators(&m, &b.unit(0)).unwrap();
    // R = λ⁻¹ L⁻¹ Λ in the complement frame
    let e = &c.complement * &c.subspace;
    let lam = e.transpose() * m.metric_gram() * m.lambda_matrix() * &e;
    let expect = c.l.clone().try_inverse().unwrap() * lam / 1.5;
    assert!((c.r.as_ref().unwrap() - expect).amax() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sylvester_residual_small(lam in prop::collection::vec(0.3f64..5.0, 6), axis in 0usize..6) {
        let b = Arc::new(StructuredBasis::so(4).unwrap());
        let m = MetricOperator::diagonal(b.clone(), &lam).unwrap();
        let c = steady_operators(&m, &b.unit(axis)).unwrap();
        prop_assert!(c.complement_residual < 1e-10);
        if c.status == SteadyStatus::Applicable {
            prop_assert!(c.sylvester_residual.unwrap() < 1e-9);
        }
    }

    #[test]
    fn l2_commutes_for_every_axis(n in 3usize..6, lam in prop::collection::vec(0.3f64..5.0, 10), axis in 0usize..10) {
        let b = Arc::new(StructuredBasis::so(n).unwrap());
        let k = n * (n - 1) / 2;
        let m = MetricOperator::diagonal(b.clone(), &lam[..k]).unwrap();
        prop_assert!(rigid_body_l2_check(&m, &b.unit(axis % k)).unwrap());
    }
}
