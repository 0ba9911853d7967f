use alloc::vec::Vec;

#[allow(unused_imports)]
use nalgebra::ComplexField;
use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraElement, Family};
use crate::error::{inapplicable, Error, Result};
use crate::jacobi::{ConjugateEvent, ConjugateReport, Detection, Tolerances};
use crate::linalg;
use crate::metric::MetricOperator;

/// Weights for the joint diagonalisation of L², Λ and LᵀΛL; irrational so
/// that distinct joint eigenvalues do not collide.
pub const KAPPA: (f64, f64) = (0.7548776662, 0.5698402910);

/// (c, s) with e^{tF_j} = c I + s F_j, by the sign of d = det F_j.
pub fn generalized_trig(d: f64, t: f64) -> (f64, f64) {
    if d.abs() < 1e-14 {
        (1.0, t)
    } else if d < 0.0 {
        let r = (-d).sqrt();
        (libm::cosh(r * t), libm::sinh(r * t) / r)
    } else {
        let r = d.sqrt();
        (libm::cos(r * t), libm::sin(r * t) / r)
    }
}

/// One invariant plane: L w₁ = ε w₂, L w₂ = −ε w₁, Λ w₁ = α w₁, Λ w₂ = β w₂.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub d: f64,
    pub w1: AlgebraElement,
    pub w2: AlgebraElement,
}

impl Block {
    fn value(&self, tau: f64, a: f64) -> f64 {
        let (c, s) = generalized_trig(self.d, tau);
        let e = self.epsilon;
        libm::sin(e * tau) * c - (e * (a - self.lambda) / a) * s * libm::cos(e * tau)
    }

    fn scale(&self, tau: f64, a: f64) -> f64 {
        let (c, s) = generalized_trig(self.d, tau);
        let e = self.epsilon;
        c.abs() + (e * (a - self.lambda) / a).abs() * s.abs()
    }

    pub fn f(&self, tau: f64) -> f64 {
        self.value(tau, self.alpha)
    }

    pub fn g(&self, tau: f64) -> f64 {
        self.value(tau, self.beta)
    }

    /// r with d = ±r² (0 when d vanishes).
    pub fn r(&self) -> f64 {
        self.d.abs().sqrt()
    }

    /// Search window in τ that must contain a zero of f or g.
    pub fn horizon(&self) -> f64 {
        let tp = 2.0 * core::f64::consts::PI;
        let mut w = tp / self.epsilon;
        let r = self.r();
        if self.d > 1e-14 {
            w = w.max(tp / r);
            let gap = (self.epsilon - r).abs();
            if gap > 1e-12 {
                w = w.max(tp / gap);
            }
        }
        3.0 * w
    }

    fn step(&self) -> f64 {
        let tp = 2.0 * core::f64::consts::PI;
        let mut p = tp / self.epsilon;
        if self.d > 1e-14 {
            p = p.min(tp / self.r());
        }
        p / 200.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutingBlockData {
    pub lambda: f64,
    pub blocks: Vec<Block>,
    pub kernel_dim: usize,
    pub eigen_residual: f64,
    pub commutator_residual: f64,
    pub pairing_residual: f64,
    /// All d_j ≤ 0, the Eulerian stability flag.
    pub stable: bool,
}

fn cholesky_factor(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    g.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::InvalidMetric("bi-invariant form is not positive definite".into()))
}

/// Zeros of one scalar block function on (0, h]: sign changes by bisection
/// and tangential zeros by minimising its square.
fn scalar_zeros<F: Fn(f64) -> f64, S: Fn(f64) -> f64>(f: F, scale: S, h: f64, step: f64) -> Vec<f64> {
    let n = ((h / step).ceil() as usize).clamp(3, 1_000_000);
    let dt = h / n as f64;
    let mut out = Vec::new();
    let mut prev: [(f64, f64); 2] = [(0.0, 0.0); 2];
    for i in 1..=n {
        let t = i as f64 * dt;
        let v = f(t);
        let (tp, vp) = prev[1];
        if i > 1 && vp != 0.0 && v != 0.0 && (vp > 0.0) != (v > 0.0) {
            out.push(linalg::bisect(&f, tp, t, 1e-13));
        } else if v == 0.0 {
            out.push(t);
        }
        if i > 2 {
            let (ta, va) = prev[0];
            if vp.abs() < va.abs() && vp.abs() <= v.abs() && (va > 0.0) == (v > 0.0) && (vp > 0.0) == (v > 0.0) {
                let (tm, f2) = linalg::brent_min(|x| f(x) * f(x), ta, t, 1e-13);
                if f2.sqrt() < 1e-8 * scale(tm).max(1.0) && !out.iter().any(|&z| (z - tm).abs() < dt) {
                    out.push(tm);
                }
            }
        }
        prev = [prev[1], (t, v)];
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    out
}

/// Splits u₀'s steady geodesic into 2×2 blocks when L² commutes with Λ and
/// reports the zeros of every f_j, g_j at geodesic time 2τ.
pub fn commuting_block_scan(m: &MetricOperator, u0: &AlgebraElement) -> Result<(CommutingBlockData, ConjugateReport)> {
    let b = m.basis();
    b.check(u0)?;
    let (lambda, eres) = m.eigen_residual(u0);
    if !(eres < 1e-10) {
        return Err(inapplicable("steady-blocks", "u0 is not an eigenvector of the inertia operator", eres));
    }
    let d = m.dim();
    let c = cholesky_factor(b.biinv_gram())?;
    let ct = c.transpose();
    let ct_inv = ct
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidMetric("singular bi-invariant form".into()))?;
    let l = &ct * b.ad_unchecked(u0) * &ct_inv;
    let lam = &ct * m.lambda_matrix() * &ct_inv;
    let l2 = &l * &l;
    let comm = (&l2 * &lam - &lam * &l2).amax();
    let scale = (l.amax().powi(2) * lam.amax()).max(1.0);
    if comm > 1e-9 * scale {
        return Err(inapplicable("steady-blocks", "L^2 does not commute with the inertia operator", comm));
    }
    let mm = &l2 + &lam * KAPPA.0 + l.transpose() * &lam * &l * KAPPA.1;
    let mm = (&mm + mm.transpose()) * 0.5;
    let eig = mm.symmetric_eigen();
    let lnorm = l.amax().max(f64::MIN_POSITIVE);

    let mut chosen: Vec<DVector<f64>> = Vec::new();
    let mut blocks = Vec::new();
    let mut pairing: f64 = 0.0;
    for k in 0..d {
        let mut w = eig.eigenvectors.column(k).into_owned();
        if (&l * &w).norm() < 1e-9 * lnorm {
            continue;
        }
        for v in &chosen {
            let p = v.dot(&w);
            w -= v * p;
        }
        let n = w.norm();
        if n < 0.5 {
            continue;
        }
        w /= n;
        let lw = &l * &w;
        let eps = lw.norm();
        let w2 = lw / eps;
        let alpha = w.dot(&(&lam * &w));
        let beta = w2.dot(&(&lam * &w2));
        let res = (&lam * &w - &w * alpha)
            .norm()
            .max((&lam * &w2 - &w2 * beta).norm())
            .max((&l * &w2 + &w * eps).norm())
            .max(chosen.iter().map(|v| v.dot(&w2).abs()).fold(0.0, f64::max));
        pairing = pairing.max(res);
        if res > 1e-8 * scale {
            return Err(inapplicable("steady-blocks", "no joint eigenbasis of L^2 and the inertia operator", res));
        }
        blocks.push(Block {
            epsilon: eps,
            alpha,
            beta,
            lambda,
            d: eps * eps * (beta - lambda) * (alpha - lambda) / (alpha * beta),
            w1: &ct_inv * &w,
            w2: &ct_inv * &w2,
        });
        chosen.push(w);
        chosen.push(w2);
    }
    let data = CommutingBlockData {
        lambda,
        kernel_dim: d - 2 * blocks.len(),
        stable: blocks.iter().all(|bl| bl.d <= 1e-14),
        blocks,
        eigen_residual: eres,
        commutator_residual: comm,
        pairing_residual: pairing,
    };

    let mut events: Vec<ConjugateEvent> = Vec::new();
    let mut horizon: f64 = 0.0;
    let mut min_step = f64::INFINITY;
    for bl in &data.blocks {
        let h = bl.horizon();
        let step = bl.step();
        horizon = horizon.max(h);
        min_step = min_step.min(step);
        let fz = scalar_zeros(|t| bl.f(t), |t| bl.scale(t, bl.alpha), h, step);
        let gz = scalar_zeros(|t| bl.g(t), |t| bl.scale(t, bl.beta), h, step);
        let mut taus: Vec<(f64, usize)> = fz.iter().map(|&t| (t, 1)).collect();
        for tg in gz {
            if let Some(e) = taus.iter_mut().find(|(t, _)| (t - tg).abs() < 1e-7) {
                e.1 = 2;
            } else {
                taus.push((tg, 1));
            }
        }
        for (tau, mult) in taus {
            let value = bl.f(tau).abs().min(bl.g(tau).abs());
            match events.iter_mut().find(|e| (e.parameter.unwrap_or(0.0) - tau).abs() < 1e-7) {
                Some(e) => e.multiplicity += mult,
                None => events.push(ConjugateEvent {
                    t: 2.0 * tau,
                    multiplicity: mult,
                    detection: Detection::Criterion,
                    value,
                    parameter: Some(tau),
                }),
            }
        }
    }
    events.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap_or(core::cmp::Ordering::Equal));
    let report = ConjugateReport {
        conjugate_times: events,
        tolerances: Tolerances {
            time: 2e-13,
            sigma_rel: 1e-8,
            step: if min_step.is_finite() { 2.0 * min_step } else { 0.0 },
        },
        horizon: 2.0 * horizon,
    };
    Ok((data, report))
}

/// [L², Λ] = 0 for a coordinate direction of a diagonal so(n) metric.
pub fn rigid_body_l2_check(m: &MetricOperator, u0: &AlgebraElement) -> Result<bool> {
    let b = m.basis();
    b.check(u0)?;
    if !matches!(b.family(), Family::So(_)) || m.diagonal_eigenvalues().is_none() {
        return Err(Error::Unsupported("needs a diagonal metric on so(n)".into()));
    }
    if u0.iter().filter(|&&x| x != 0.0).count() != 1 {
        return Err(Error::InvalidArgument("u0 must be a basis direction".into()));
    }
    let l = b.ad_unchecked(u0);
    let l2 = &l * &l;
    let lam = m.lambda_matrix();
    let comm = (&l2 * lam - lam * &l2).amax();
    Ok(comm < 1e-12 * (l.amax().powi(2) * lam.amax()).max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::StructuredBasis;
    use alloc::sync::Arc;
    use core::f64::consts::PI;

    #[test]
    fn short_axis_block_constants() {
        let b = Arc::new(StructuredBasis::so(3).unwrap());
        let m = MetricOperator::rigid_body(b.clone(), &[1.0, 2.0, 3.0]).unwrap();
        let (data, rep) = commuting_block_scan(&m, &b.unit(0)).unwrap();
        assert_eq!(data.blocks.len(), 1);
        let bl = &data.blocks[0];
        assert!((bl.epsilon - 1.0).abs() < 1e-12);
        assert!((bl.lambda - 1.5).abs() < 1e-12);
        let (lo, hi) = if bl.alpha < bl.beta { (bl.alpha, bl.beta) } else { (bl.beta, bl.alpha) };
        assert!((lo - 2.0).abs() < 1e-12 && (hi - 2.5).abs() < 1e-12);
        assert!((bl.d - 0.1).abs() < 1e-12);
        assert!(!rep.conjugate_times.is_empty());
    }

    #[test]
    fn equal_eigenvalues_zero_at_pi_over_eps() {
        let b = Arc::new(StructuredBasis::so(3).unwrap());
        let m = MetricOperator::bi_invariant(b.clone());
        let (_, rep) = commuting_block_scan(&m, &b.unit(1)).unwrap();
        let first = &rep.conjugate_times[0];
        assert!((first.parameter.unwrap() - PI).abs() < 1e-10);
        assert_eq!(first.multiplicity, 2);
    }

    #[test]
    fn l2_check_on_so5() {
        let b = Arc::new(StructuredBasis::so(5).unwrap());
        let lam: Vec<f64> = (0..10).map(|i| 1.0 + 0.37 * i as f64).collect();
        let m = MetricOperator::diagonal(b.clone(), &lam).unwrap();
        let u0 = b.unit(b.index_of("e24").unwrap());
        assert!(rigid_body_l2_check(&m, &u0).unwrap());
    }

    #[test]
    fn l_squared_rotates_back() {
        let b = StructuredBasis::so(3).unwrap();
        let l = b.ad_matrix(&b.unit(0)).unwrap();
        let e13 = b.unit(1);
        assert!((&l * &l * &e13 + &e13).amax() < 1e-15);
    }

    #[test]
    fn trig_pairs() {
        assert_eq!(generalized_trig(0.0, 2.0), (1.0, 2.0));
        let (c, s) = generalized_trig(4.0, 0.3);
        assert!((c - libm::cos(0.6)).abs() < 1e-15 && (s - libm::sin(0.6) / 2.0).abs() < 1e-15);
        let (c, s) = generalized_trig(-4.0, 0.3);
        assert!((c - libm::cosh(0.6)).abs() < 1e-15 && (s - libm::sinh(0.6) / 2.0).abs() < 1e-15);
    }
}
