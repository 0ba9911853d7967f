use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use nalgebra::ComplexField;

use crate::algebra::{AlgebraElement, StructuredBasis};
use crate::curvature::cartan_condition_check;
use crate::dynamics::GeodesicTrajectory;
use crate::error::{inapplicable, precondition, Error, Result};
use crate::metric::MetricOperator;

use super::{index_form_value, simpson};

/// The frame v₁ = u'/g(u',u'), v₂ = kΛu − ℓu, v₃ = u and the derived
/// quantities at one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSample {
    pub t: f64,
    pub v1: AlgebraElement,
    pub v2: AlgebraElement,
    pub v3: AlgebraElement,
    pub w: AlgebraElement,
    pub x: AlgebraElement,
    /// 1/g(v₁,v₁) = g(u',u').
    pub psi: f64,
    pub phi: f64,
    /// k⟨Λw,Λu⟩/g(v₂,v₂), the coefficient tying y₂' to y₁.
    pub xi: f64,
    /// Largest normalised g-inner product between distinct frame vectors.
    pub orthogonality: f64,
}

fn frame_at(m: &MetricOperator, t: f64, u: &AlgebraElement) -> Result<FrameSample> {
    let b = m.basis();
    let lu = m.lam(u);
    let k = b.form(u, &lu);
    let ell = b.form(&lu, &lu);
    let du = m.ads(u, u);
    let ddu = m.ads(&du, u) + m.ads(u, &du);
    let n = m.inner(&du, &du);
    let dn = 2.0 * m.inner(&ddu, &du);
    let v1 = &du / n;
    let dv1 = &ddu / n - &du * (dn / (n * n));
    let v2 = &lu * k - u * ell;
    let g22 = m.norm_sq(&v2);
    if !(g22 > 1e-12) {
        return Err(precondition("v2 degenerates: Λu is parallel to u", g22));
    }
    let w = dv1 + b.br(u, &v1);
    let x = m.lam(&w) + b.br(&v1, &lu);
    let lw = m.lam(&w);
    let alpha = k * b.form(&lw, &lu);
    let phi = alpha * alpha / g22 - b.form(&w, &x);
    let cos = |a: &AlgebraElement, c: &AlgebraElement| m.inner(a, c).abs() / (m.norm_sq(a) * m.norm_sq(c)).sqrt();
    let orthogonality = cos(&v1, &v2).max(cos(&v1, u)).max(cos(&v2, u));
    Ok(FrameSample {
        t,
        v1,
        v2,
        v3: u.clone(),
        w,
        x,
        psi: n,
        phi,
        xi: alpha / g22,
        orthogonality,
    })
}

/// Frame samples on the trajectory grid; v₁' comes from u'' = ad⋆_{u'}u + ad⋆_u u'.
pub fn nonsteady_frame(traj: &GeodesicTrajectory) -> Result<Vec<FrameSample>> {
    frame_upto(traj, traj.len() - 1)
}

fn frame_upto(traj: &GeodesicTrajectory, last: usize) -> Result<Vec<FrameSample>> {
    let acc = (0..=last).map(|i| traj.accelerations[i].norm()).fold(f64::INFINITY, f64::min);
    if !(acc > 1e-8) {
        return Err(precondition("trajectory is steady", acc));
    }
    (0..=last)
        .map(|i| frame_at(&traj.metric, traj.times[i], &traj.velocities[i]))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonsteadyVerdict {
    SatisfiedOnHorizon,
    NotSatisfied,
    Degenerate,
}

impl NonsteadyVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            NonsteadyVerdict::SatisfiedOnHorizon => "satisfied-on-horizon",
            NonsteadyVerdict::NotSatisfied => "not-satisfied",
            NonsteadyVerdict::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonsteadyReport {
    pub samples: Vec<FrameSample>,
    pub horizon: f64,
    pub psi_min: f64,
    pub psi_max: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub orthogonality: f64,
    pub verdict: NonsteadyVerdict,
}

/// ψ and φ on [0, horizon]; the verdict only speaks for the sampled window.
pub fn nonsteady_quadratic_criterion(traj: &GeodesicTrajectory, horizon: f64) -> Result<NonsteadyReport> {
    let last = traj.times.iter().rposition(|&t| t <= horizon * (1.0 + 1e-12)).unwrap_or(0);
    let samples = match frame_upto(traj, last) {
        Ok(s) => s,
        Err(Error::Precondition { reason, .. }) if reason.starts_with("v2") => {
            return Ok(NonsteadyReport {
                samples: Vec::new(),
                horizon,
                psi_min: f64::NAN,
                psi_max: f64::NAN,
                phi_min: f64::NAN,
                phi_max: f64::NAN,
                orthogonality: f64::NAN,
                verdict: NonsteadyVerdict::Degenerate,
            })
        }
        Err(e) => return Err(e),
    };
    let fold = |f: fn(&FrameSample) -> f64| {
        samples
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (psi_min, psi_max) = fold(|s| s.psi);
    let (phi_min, phi_max) = fold(|s| s.phi);
    let (_, orthogonality) = fold(|s| s.orthogonality);
    let verdict = if psi_min > 1e-12 && phi_min > 1e-12 {
        NonsteadyVerdict::SatisfiedOnHorizon
    } else {
        NonsteadyVerdict::NotSatisfied
    };
    Ok(NonsteadyReport {
        samples,
        horizon,
        psi_min,
        psi_max,
        phi_min,
        phi_max,
        orthogonality,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonsteadyTestField {
    pub tau: f64,
    pub k1: f64,
    pub k2: f64,
    /// ∫ f'²/ψ − φf² dt.
    pub reduced_value: f64,
    /// The index form evaluated directly on y = f v₁ + y₂ v₂.
    pub direct_value: f64,
    pub y: Vec<AlgebraElement>,
}

fn cumulative_trapezoid(v: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..v.len() {
        acc += 0.5 * h * (v[i - 1] + v[i]);
        out.push(acc);
    }
    out
}

/// f = k₁ sin(πt/τ) + k₂ sin(2πt/τ) with ∫ξf = 0, y₁ = f and y₂' = −ξf.
pub fn nonsteady_test_field(traj: &GeodesicTrajectory, tau: f64) -> Result<NonsteadyTestField> {
    let n = traj.index_of_time(tau).ok_or(Error::OutOfRange {
        t: tau,
        start: 0.0,
        end: traj.end_time(),
    })?;
    if n < 4 {
        return Err(Error::InvalidArgument("tau spans too few grid steps".into()));
    }
    let frame = frame_upto(traj, n)?;
    let h = traj.times[1] - traj.times[0];
    let s1: Vec<f64> = traj.times[..=n].iter().map(|&t| libm::sin(PI * t / tau)).collect();
    let s2: Vec<f64> = traj.times[..=n].iter().map(|&t| libm::sin(2.0 * PI * t / tau)).collect();
    let xi: Vec<f64> = frame.iter().map(|s| s.xi).collect();
    let a1 = *cumulative_trapezoid(&xi.iter().zip(&s1).map(|(a, b)| a * b).collect::<Vec<_>>(), h)
        .last()
        .unwrap_or(&0.0);
    let a2 = *cumulative_trapezoid(&xi.iter().zip(&s2).map(|(a, b)| a * b).collect::<Vec<_>>(), h)
        .last()
        .unwrap_or(&0.0);
    let norm = libm::hypot(a1, a2);
    let (k1, k2) = if norm > 1e-14 { (a2 / norm, -a1 / norm) } else { (1.0, 0.0) };
    let f: Vec<f64> = s1.iter().zip(&s2).map(|(x, y)| k1 * x + k2 * y).collect();
    let df: Vec<f64> = traj.times[..=n]
        .iter()
        .map(|&t| PI / tau * (k1 * libm::cos(PI * t / tau) + 2.0 * k2 * libm::cos(2.0 * PI * t / tau)))
        .collect();
    let reduced: Vec<f64> = (0..=n)
        .map(|i| df[i] * df[i] / frame[i].psi - frame[i].phi * f[i] * f[i])
        .collect();
    let reduced_value = simpson(&reduced, h);
    let y2 = cumulative_trapezoid(&xi.iter().zip(&f).map(|(a, b)| -a * b).collect::<Vec<_>>(), h);
    let mut y: Vec<AlgebraElement> = (0..=n)
        .map(|i| &frame[i].v1 * f[i] + &frame[i].v2 * y2[i])
        .collect();
    // sin(π) is not exactly zero in floating point
    y[n].fill(0.0);
    y[0].fill(0.0);
    let direct_value = index_form_value(traj, &y, tau)?;
    Ok(NonsteadyTestField {
        tau,
        k1,
        k2,
        reduced_value,
        direct_value,
        y,
    })
}

/// δ|p₀|²|q₀|²|[q₀,[p₀,q₀]]|² < (1+δ)|[p₀,q₀]|⁴((1+δ)|p₀|² + |q₀|²).
pub fn cheeger_nonsteady_condition(
    basis: &StructuredBasis,
    delta: f64,
    p0: &AlgebraElement,
    q0: &AlgebraElement,
) -> Result<bool> {
    basis.check(p0)?;
    basis.check(q0)?;
    let r = basis.br(p0, q0);
    let r2 = basis.biinv_norm_sq(&r);
    let scale = basis.biinv_norm_sq(p0) * basis.biinv_norm_sq(q0);
    if !(r2 > 1e-24 * scale.max(f64::MIN_POSITIVE)) {
        return Err(inapplicable("cheeger", "[p0, q0] = 0, the geodesic is steady", r2));
    }
    let (p2, q2) = (basis.biinv_norm_sq(p0), basis.biinv_norm_sq(q0));
    let qr2 = basis.biinv_norm_sq(&basis.br(q0, &r));
    Ok(delta * p2 * q2 * qr2 < (1.0 + delta) * r2 * r2 * ((1.0 + delta) * p2 + q2))
}

/// Constants of the index form along y = Ad_η(f p₀ + g q₀ + h r₀).
#[derive(Debug, Clone, PartialEq)]
pub struct CheegerIndexData {
    pub delta: f64,
    pub p0: AlgebraElement,
    pub q0: AlgebraElement,
    pub r0: AlgebraElement,
    pub p_sq: f64,
    pub q_sq: f64,
    pub r_sq: f64,
    pub qr_sq: f64,
    pub beta: f64,
    pub condition: bool,
}

impl CheegerIndexData {
    /// 2π²|r₀|²/τ − βτ/2.
    pub fn value(&self, tau: f64) -> f64 {
        2.0 * PI * PI * self.r_sq / tau - 0.5 * self.beta * tau
    }

    /// The τ where the index value changes sign, when β > 0.
    pub fn tau_index(&self) -> Option<f64> {
        (self.beta > 0.0).then(|| 2.0 * PI * self.r_sq.sqrt() / self.beta.sqrt())
    }
}

fn cheeger_parts(m: &MetricOperator, u0: &AlgebraElement) -> Result<(f64, AlgebraElement, AlgebraElement)> {
    let delta = m
        .cheeger_delta()
        .ok_or_else(|| Error::Unsupported("needs a Cheeger metric".into()))?;
    let b = m.basis();
    b.check(u0)?;
    if !cartan_condition_check(b) {
        return Err(Error::Unsupported("needs [h_perp, h_perp] inside h".into()));
    }
    Ok((delta, b.p(u0), b.q(u0)))
}

pub fn cheeger_index_data(m: &MetricOperator, u0: &AlgebraElement) -> Result<CheegerIndexData> {
    let (delta, p0, q0) = cheeger_parts(m, u0)?;
    let b = m.basis();
    let condition = cheeger_nonsteady_condition(b, delta, &p0, &q0)?;
    let r0 = b.br(&p0, &q0);
    let (p_sq, q_sq, r_sq) = (b.biinv_norm_sq(&p0), b.biinv_norm_sq(&q0), b.biinv_norm_sq(&r0));
    let qr_sq = b.biinv_norm_sq(&b.br(&q0, &r0));
    let d1 = 1.0 + delta;
    let beta = d1 * r_sq * r_sq / p_sq + d1 * d1 * r_sq * r_sq / q_sq - delta * qr_sq;
    Ok(CheegerIndexData {
        delta,
        p0,
        q0,
        r0,
        p_sq,
        q_sq,
        r_sq,
        qr_sq,
        beta,
        condition,
    })
}

/// Samples of the test field at the given times, h = sin(2πt/τ).
pub fn cheeger_index_field(m: &MetricOperator, u0: &AlgebraElement, times: &[f64], tau: f64) -> Result<Vec<AlgebraElement>> {
    let data = cheeger_index_data(m, u0)?;
    let b = m.basis();
    let w = 2.0 * PI / tau;
    times
        .iter()
        .map(|&t| {
            let hh = libm::sin(w * t);
            let big_h = (1.0 - libm::cos(w * t)) / w;
            let f = -data.r_sq / data.p_sq * big_h;
            let g = (1.0 + data.delta) * data.r_sq / data.q_sq * big_h;
            let inner = &data.p0 * f + &data.q0 * g + &data.r0 * hh;
            let eta = b.group_exp(&data.p0, data.delta * t)?;
            Ok(b.ad_group_matrix(&eta) * inner)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::integrate_euler_arnold;
    use alloc::sync::Arc;
    use alloc::vec;
    use nalgebra::DVector;

    #[test]
    fn berger_frame_is_constant() {
        let b = Arc::new(StructuredBasis::su(2, true).unwrap().with_split(&[0]).unwrap());
        let m = MetricOperator::cheeger(b.clone(), 0.7).unwrap();
        let u0 = DVector::from_vec(vec![0.8, 0.5, -0.3]);
        let tr = integrate_euler_arnold(&m, &u0, 3.0, 1e-2).unwrap();
        let rep = nonsteady_quadratic_criterion(&tr, 3.0).unwrap();
        assert!(rep.psi_max - rep.psi_min < 1e-8);
        assert!(rep.phi_max - rep.phi_min < 1e-8);
        assert!(rep.orthogonality < 1e-8);
    }

    #[test]
    fn steady_trajectory_rejected() {
        let b = Arc::new(StructuredBasis::so(3).unwrap());
        let m = MetricOperator::rigid_body(b.clone(), &[1.0, 2.0, 3.0]).unwrap();
        let tr = integrate_euler_arnold(&m, &b.unit(2), 1.0, 1e-2).unwrap();
        assert!(nonsteady_frame(&tr).is_err());
    }

    #[test]
    fn negative_delta_always_satisfies() {
        let b = StructuredBasis::su(3, true).unwrap();
        let p = b.unit(0) * 0.7 + b.unit(2) * 0.2;
        let q = b.unit(4) - b.unit(6) * 0.3;
        for delta in [-0.9, -0.5, -0.1, 0.0] {
            assert!(cheeger_nonsteady_condition(&b, delta, &p, &q).unwrap());
        }
        assert!(cheeger_nonsteady_condition(&b, 0.3, &p, &(&p * 0.0)).is_err());
    }
}
