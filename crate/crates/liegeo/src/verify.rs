//! Oracle and invariant suites behind `liegeo verify`.

use std::sync::Arc;

use liegeo_core::criteria;
use liegeo_core::curvature;
use liegeo_core::dynamics::{cheeger_geodesic_exact, integrate_euler_arnold};
use liegeo_core::jacobi::{find_conjugate_times, integrate_jacobi, solution_operator};
use liegeo_core::locus;
use liegeo_core::metric::MetricOperator;
use liegeo_core::{AlgebraElement, StructuredBasis};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn check(suite: &'static str, name: impl Into<String>, measured: f64, tolerance: f64) -> Check {
    Check {
        suite,
        name: name.into(),
        measured,
        tolerance,
        pass: measured.is_finite() && measured <= tolerance,
    }
}

/// Passes when `measured` exceeds `floor`.
fn check_above(suite: &'static str, name: impl Into<String>, measured: f64, floor: f64) -> Check {
    Check {
        suite,
        name: name.into(),
        measured,
        tolerance: floor,
        pass: measured.is_finite() && measured > floor,
    }
}

type Suite = fn(u64) -> Vec<Check>;

pub const SUITES: [(&str, Suite); 10] = [
    ("jacobi-identity", jacobi_identity),
    ("ad-invariance", ad_invariance),
    ("ad-star-duality", ad_star_duality),
    ("omega-linearity", omega_linearity),
    ("rk4-order", rk4_order),
    ("rk4-vs-exact", rk4_vs_exact),
    ("frame-orthogonality", frame_orthogonality),
    ("ricci-closed-form", ricci_closed_form),
    ("berger-determinant", berger_determinant),
    ("criterion-agreement", criterion_agreement),
];

fn algebras() -> Vec<(String, StructuredBasis)> {
    let mut out = Vec::new();
    for n in 3..=5 {
        out.push((format!("so({n})"), StructuredBasis::so(n).expect("so(n)")));
    }
    for n in 2..=3 {
        out.push((format!("su({n})"), StructuredBasis::su(n, true).expect("su(n)")));
    }
    out
}

fn random_vec(rng: &mut ChaCha8Rng, d: usize) -> AlgebraElement {
    DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0))
}

fn jacobi_identity(_: u64) -> Vec<Check> {
    algebras()
        .into_iter()
        .map(|(name, b)| check("jacobi-identity", name, b.jacobi_residual(), 1e-12))
        .collect()
}

fn ad_invariance(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (name, b) in algebras() {
        out.push(check("ad-invariance", format!("{name} form"), b.ad_invariance_residual(), 1e-12));
        out.push(check("ad-invariance", format!("{name} antisymmetry"), b.antisymmetry_residual(), 1e-12));
        let (x, y) = (random_vec(&mut rng, b.dim()), random_vec(&mut rng, b.dim()));
        let diff = (b.bracket(&x, &y).unwrap() - b.bracket_by_matrices(&x, &y).unwrap()).amax();
        out.push(check("ad-invariance", format!("{name} bracket vs commutator"), diff, 1e-12));
    }
    out
}

fn metrics() -> Vec<(String, MetricOperator)> {
    let so3 = Arc::new(StructuredBasis::so(3).unwrap());
    let so4 = Arc::new(StructuredBasis::so(4).unwrap());
    let su3 = Arc::new(StructuredBasis::su(3, true).unwrap());
    let berger = Arc::new(StructuredBasis::su(2, true).unwrap().with_split(&[0]).unwrap());
    vec![
        ("so(3) rigid 1,2,3".into(), MetricOperator::rigid_body(so3.clone(), &[1.0, 2.0, 3.0]).unwrap()),
        ("so(3) diagonal".into(), MetricOperator::diagonal(so3, &[4.0, 1.0, 1.5]).unwrap()),
        ("so(4) rigid".into(), MetricOperator::rigid_body(so4, &[1.0, 2.0, 3.5, 5.0]).unwrap()),
        ("su(3) zeitlin".into(), MetricOperator::cheeger(su3, -2.0 / 3.0).unwrap()),
        ("berger 0.7".into(), MetricOperator::cheeger(berger, 0.7).unwrap()),
    ]
}

fn ad_star_duality(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut out = Vec::new();
    for (name, m) in metrics() {
        let b = m.basis().clone();
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let (u, v, w) = (
                random_vec(&mut rng, m.dim()),
                random_vec(&mut rng, m.dim()),
                random_vec(&mut rng, m.dim()),
            );
            let lhs = m.metric_inner(&m.ad_star(&u, &v).unwrap(), &w).unwrap();
            let rhs = m.metric_inner(&v, &b.bracket(&u, &w).unwrap()).unwrap();
            worst = worst.max((lhs - rhs).abs());
        }
        out.push(check("ad-star-duality", name, worst, 1e-12));
    }
    out
}

fn omega_linearity(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut out = Vec::new();
    for (name, m) in metrics().into_iter().take(3) {
        let d = m.dim();
        let u0 = random_vec(&mut rng, d);
        let tr = integrate_euler_arnold(&m, &u0, 2.0, 1e-3).unwrap();
        let omega = &solution_operator(&tr, &[2.0]).unwrap()[0].omega;
        let (z1, z2) = (random_vec(&mut rng, d), random_vec(&mut rng, d));
        let (a, c) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let zero = DVector::zeros(d);
        let y = |z: &AlgebraElement| integrate_jacobi(&tr, &zero, z).unwrap().y.last().unwrap().clone();
        let combo = y(&(&z1 * a + &z2 * c));
        let lin = (&combo - (y(&z1) * a + y(&z2) * c)).amax();
        let op = (&combo - omega * (&z1 * a + &z2 * c)).amax();
        out.push(check("omega-linearity", format!("{name} superposition"), lin, 1e-12));
        out.push(check("omega-linearity", format!("{name} matches Omega"), op, 1e-12));
    }
    out
}

fn exact_error(m: &MetricOperator, u0: &AlgebraElement, t: f64, dt: f64) -> (f64, f64, (f64, f64)) {
    let tr = integrate_euler_arnold(m, u0, t, dt).unwrap();
    let (g, v) = cheeger_geodesic_exact(m, u0, t).unwrap();
    let last = tr.len() - 1;
    (tr.frames[last].distance(&g), (&tr.velocities[last] - v).amax(), tr.conservation_drift())
}

fn rk4_order(_: u64) -> Vec<Check> {
    let (_, m) = metrics().pop().unwrap();
    let u0 = DVector::from_vec(vec![0.8, 0.5, -0.3]);
    let (e1, _, _) = exact_error(&m, &u0, 2.0, 0.04);
    let (e2, _, _) = exact_error(&m, &u0, 2.0, 0.02);
    let order = (e1 / e2).log2();
    vec![check_above("rk4-order", "observed order at dt 0.04/0.02", order, 3.7)]
}

fn rk4_vs_exact(_: u64) -> Vec<Check> {
    let su2 = Arc::new(StructuredBasis::su(2, true).unwrap().with_split(&[0]).unwrap());
    let su3 = Arc::new(StructuredBasis::su(3, true).unwrap());
    let cases = [
        ("su(2) delta 0.7", MetricOperator::cheeger(su2, 0.7).unwrap(), vec![0.8, 0.5, -0.3]),
        (
            "su(3) delta -2/3",
            MetricOperator::cheeger(su3, -2.0 / 3.0).unwrap(),
            vec![0.4, -0.2, 0.3, 0.5, -0.6, 0.1, 0.2, -0.35],
        ),
    ];
    let mut out = Vec::new();
    for (name, m, u) in cases {
        let (eg, eu, (dk, dl)) = exact_error(&m, &DVector::from_vec(u), 5.0, 1e-4);
        out.push(check("rk4-vs-exact", format!("{name} frame"), eg, 1e-8));
        out.push(check("rk4-vs-exact", format!("{name} velocity"), eu, 1e-8));
        out.push(check("rk4-vs-exact", format!("{name} drift"), dk.max(dl), 1e-9));
    }
    out
}

fn frame_orthogonality(_: u64) -> Vec<Check> {
    let so3 = Arc::new(StructuredBasis::so(3).unwrap());
    let berger = Arc::new(StructuredBasis::su(2, true).unwrap().with_split(&[0]).unwrap());
    let cases = [
        ("so(3) rigid", MetricOperator::rigid_body(so3, &[1.0, 2.0, 3.0]).unwrap(), vec![0.3, 1.0, 0.2]),
        ("berger 0.7", MetricOperator::cheeger(berger, 0.7).unwrap(), vec![0.8, 0.5, -0.3]),
    ];
    cases
        .into_iter()
        .map(|(name, m, u)| {
            let tr = integrate_euler_arnold(&m, &DVector::from_vec(u), 4.0, 1e-3).unwrap();
            let rep = criteria::nonsteady_quadratic_criterion(&tr, 4.0).unwrap();
            check("frame-orthogonality", name, rep.orthogonality, 1e-8)
        })
        .collect()
}

fn ricci_closed_form(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
    let mut out = Vec::new();
    for n in 3..=5 {
        let b = Arc::new(StructuredBasis::so(n).unwrap());
        let mut worst: f64 = 0.0;
        let mut off: f64 = 0.0;
        let mut min_diag = f64::INFINITY;
        for _ in 0..10 {
            let mu: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..5.0)).collect();
            let m = MetricOperator::rigid_body(b.clone(), &mu).unwrap();
            let ric = curvature::ricci_matrix(&m);
            let closed = curvature::ricci_rigid_body_closed_form(&mu).unwrap();
            for (a, c) in ric.diagonal().iter().zip(&closed) {
                worst = worst.max((a - c).abs());
                min_diag = min_diag.min(*a);
            }
            off = off.max(ric.diagonality_residual);
        }
        out.push(check("ricci-closed-form", format!("so({n}) diagonal"), worst, 1e-10));
        out.push(check("ricci-closed-form", format!("so({n}) off-diagonal"), off, 1e-10));
        out.push(check_above("ricci-closed-form", format!("so({n}) smallest diagonal"), min_diag, 0.0));
    }
    out
}

fn berger_determinant(_: u64) -> Vec<Check> {
    let b = Arc::new(StructuredBasis::su(2, true).unwrap().with_split(&[0]).unwrap());
    let times: Vec<f64> = (0..=60).map(|k| k as f64 * 0.1).collect();
    let mut out = Vec::new();
    for delta in [-0.5, 0.0, 1.0] {
        let m = MetricOperator::cheeger(b.clone(), delta).unwrap();
        let tr = integrate_euler_arnold(&m, &DVector::from_vec(vec![1.0, 1.0, 0.0]), 6.0, 1e-3).unwrap();
        let worst = solution_operator(&tr, &times)
            .unwrap()
            .iter()
            .map(|s| (s.det - locus::berger_operator_det(s.t, delta, 1.0, 1.0)).abs())
            .fold(0.0, f64::max);
        out.push(check("berger-determinant", format!("delta {delta} pointwise"), worst, 1e-7));
        let t_star = locus::berger_first_conjugate_time(delta, 1.0, 1.0).unwrap().t;
        let t_num = find_conjugate_times(&tr, 6.0).unwrap().first().unwrap_or(f64::INFINITY);
        out.push(check("berger-determinant", format!("delta {delta} first time"), (t_star - t_num).abs(), 1e-6));
        out.push(check(
            "berger-determinant",
            format!("delta {delta} det(t*)"),
            locus::berger_det(t_star, delta, 1.0, 1.0).abs(),
            1e-10,
        ));
    }
    out
}

fn criterion_agreement(_: u64) -> Vec<Check> {
    let (_, m) = metrics().remove(0);
    let b = m.basis().clone();
    let mut out = Vec::new();
    for i in 0..m.dim() {
        let u0 = b.unit(i);
        let label = &b.labels()[i];
        let Ok((_, blocks)) = criteria::commuting_block_scan(&m, &u0) else {
            out.push(check("criterion-agreement", format!("{label} blocks"), f64::NAN, 0.0));
            continue;
        };
        let t_blocks = blocks.first().unwrap_or(f64::NAN);
        let c = criteria::steady_operators(&m, &u0).unwrap();
        let t_det = criteria::steady_determinant_scan(&c, t_blocks + 1.0, 2000)
            .ok()
            .and_then(|r| r.first())
            .unwrap_or(f64::NAN);
        let horizon = t_blocks + 0.5;
        let tr = integrate_euler_arnold(&m, &u0, horizon, 1e-3).unwrap();
        let t_jac = find_conjugate_times(&tr, horizon)
            .unwrap()
            .first()
            .unwrap_or(f64::NAN);
        out.push(check("criterion-agreement", format!("{label} blocks vs det"), (t_blocks - t_det).abs(), 1e-4));
        out.push(check("criterion-agreement", format!("{label} blocks vs jacobi"), (t_blocks - t_jac).abs(), 1e-4));
    }
    out
}

/// Every suite, run in parallel, results in suite order.
pub fn run_all(seed: u64) -> Vec<Check> {
    SUITES
        .par_iter()
        .map(|(_, f)| f(seed))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}
