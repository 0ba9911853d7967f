//! Geodesics: RK4 on the coupled Euler–Arnold and flow equations, plus the
//! closed-form Berger–Cheeger solution.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use nalgebra::ComplexField;
use nalgebra::DMatrix;

use crate::algebra::{AlgebraElement, GroupElement};
use crate::error::{Error, Result};
use crate::linalg;
use crate::metric::MetricOperator;

#[derive(Debug, Clone)]
pub struct GeodesicTrajectory {
    pub metric: MetricOperator,
    pub times: Vec<f64>,
    pub velocities: Vec<AlgebraElement>,
    /// u' = ad⋆_u u at each sample, the Hermite slopes.
    pub accelerations: Vec<AlgebraElement>,
    pub frames: Vec<GroupElement>,
    /// (k, ℓ) = (⟨u,Λu⟩, ⟨Λu,Λu⟩) per sample.
    pub conserved: Vec<(f64, f64)>,
    pub dt: f64,
}

pub fn default_dt(horizon: f64) -> f64 {
    (1e-3f64).min(horizon / 2000.0)
}

impl GeodesicTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("trajectory has samples")
    }

    pub fn initial_velocity(&self) -> &AlgebraElement {
        &self.velocities[0]
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let end = self.end_time();
        if !(t >= -1e-12 && t <= end * (1.0 + 1e-12) + 1e-12) {
            return Err(Error::OutOfRange { t, start: 0.0, end });
        }
        Ok(())
    }

    /// Grid index of `t` when it is a sample time.
    pub fn index_of_time(&self, t: f64) -> Option<usize> {
        let k = libm::round(t / self.dt);
        if k < 0.0 || k as usize >= self.len() {
            return None;
        }
        let k = k as usize;
        ((self.times[k] - t).abs() <= 1e-9 * self.dt).then_some(k)
    }

    /// Cubic Hermite interpolation of u(t) with slopes ad⋆_u u.
    pub fn velocity_at(&self, t: f64) -> Result<AlgebraElement> {
        self.check_time(t)?;
        let last = self.len() - 1;
        let pos = (t / self.dt).clamp(0.0, last as f64);
        let i = (libm::floor(pos) as usize).min(last.saturating_sub(1));
        if last == 0 {
            return Ok(self.velocities[0].clone());
        }
        let h = self.times[i + 1] - self.times[i];
        let s = ((t - self.times[i]) / h).clamp(0.0, 1.0);
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Ok(&self.velocities[i] * h00
            + &self.accelerations[i] * (h10 * h)
            + &self.velocities[i + 1] * h01
            + &self.accelerations[i + 1] * (h11 * h))
    }

    /// Largest relative drift of k and ℓ from their initial values.
    pub fn conservation_drift(&self) -> (f64, f64) {
        let (k0, l0) = self.conserved[0];
        let mut dk: f64 = 0.0;
        let mut dl: f64 = 0.0;
        for &(k, l) in &self.conserved {
            dk = dk.max((k - k0).abs() / k0.abs().max(f64::MIN_POSITIVE));
            dl = dl.max((l - l0).abs() / l0.abs().max(f64::MIN_POSITIVE));
        }
        (dk, dl)
    }

    pub fn max_frame_defect(&self) -> f64 {
        self.frames
            .iter()
            .map(|g| g.orthogonality_defect())
            .fold(0.0, f64::max)
    }

    /// max over samples of ‖Ad⋆_{γ⁻¹} u − u₀‖.
    pub fn momentum_residual(&self) -> f64 {
        let u0 = &self.velocities[0];
        self.frames
            .iter()
            .zip(&self.velocities)
            .map(|(g, u)| (self.metric.ad_star_group_matrix(&g.inverse()) * u - u0).amax())
            .fold(0.0, f64::max)
    }

    /// max ‖u'‖ over the grid.
    pub fn max_acceleration(&self) -> f64 {
        self.accelerations.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn min_acceleration(&self) -> f64 {
        self.accelerations
            .iter()
            .map(|a| a.norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Classical RK4 for γ' = γu, u' = ad⋆_u u, with a polar retraction of the
/// frame after every step. The step is shrunk so the grid ends exactly at T.
pub fn integrate_euler_arnold(
    m: &MetricOperator,
    u0: &AlgebraElement,
    horizon: f64,
    dt: f64,
) -> Result<GeodesicTrajectory> {
    let basis = m.basis();
    basis.check(u0)?;
    if !(horizon > 0.0) || !(dt > 0.0) || dt > horizon * (1.0 + 1e-12) || !horizon.is_finite() {
        return Err(Error::InvalidArgument("need 0 < dt <= T".into()));
    }
    let steps = libm::ceil(horizon / dt - 1e-9).max(1.0) as usize;
    let h = horizon / steps as f64;
    let accel = |u: &AlgebraElement| m.ads(u, u);
    let conserved = |u: &AlgebraElement| {
        let lu = m.lam(u);
        (basis.form(u, &lu), basis.form(&lu, &lu))
    };

    let mut u = u0.clone();
    let mut g = basis.identity().matrix;
    let mut traj = GeodesicTrajectory {
        metric: m.clone(),
        times: Vec::with_capacity(steps + 1),
        velocities: Vec::with_capacity(steps + 1),
        accelerations: Vec::with_capacity(steps + 1),
        frames: Vec::with_capacity(steps + 1),
        conserved: Vec::with_capacity(steps + 1),
        dt: h,
    };
    let field = basis.field();
    let mut a = accel(&u);
    traj.times.push(0.0);
    traj.velocities.push(u.clone());
    traj.accelerations.push(a.clone());
    traj.frames.push(GroupElement { matrix: g.clone(), field });
    traj.conserved.push(conserved(&u));

    for step in 1..=steps {
        let k1u = a.clone();
        let k1g = &g * basis.matrix_of_unchecked(&u);
        let u2 = &u + &k1u * (0.5 * h);
        let g2 = &g + &k1g * (0.5 * h);
        let k2u = accel(&u2);
        let k2g = &g2 * basis.matrix_of_unchecked(&u2);
        let u3 = &u + &k2u * (0.5 * h);
        let g3 = &g + &k2g * (0.5 * h);
        let k3u = accel(&u3);
        let k3g = &g3 * basis.matrix_of_unchecked(&u3);
        let u4 = &u + &k3u * h;
        let g4 = &g + &k3g * h;
        let k4u = accel(&u4);
        let k4g = &g4 * basis.matrix_of_unchecked(&u4);
        let un = &u + (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (h / 6.0);
        let gn: DMatrix<f64> = &g + (k1g + k2g * 2.0 + k3g * 2.0 + k4g) * (h / 6.0);
        if un.iter().chain(gn.iter()).any(|x| !x.is_finite()) {
            return Err(Error::IntegrationDiverged {
                last_valid: traj.end_time(),
            });
        }
        u = un;
        g = linalg::polar(&gn);
        a = accel(&u);
        traj.times.push(if step == steps { horizon } else { step as f64 * h });
        traj.velocities.push(u.clone());
        traj.accelerations.push(a.clone());
        traj.frames.push(GroupElement { matrix: g.clone(), field });
        traj.conserved.push(conserved(&u));
    }
    Ok(traj)
}

/// γ(t) = e^{tΛu₀} e^{−δtp₀} and u(t) = Ad_{exp(δtp₀)} u₀ for a Cheeger metric.
pub fn cheeger_geodesic_exact(
    m: &MetricOperator,
    u0: &AlgebraElement,
    t: f64,
) -> Result<(GroupElement, AlgebraElement)> {
    let delta = m
        .cheeger_delta()
        .ok_or_else(|| Error::Unsupported("exact geodesics need a Cheeger metric".into()))?;
    let basis = m.basis();
    basis.check(u0)?;
    let p0 = basis.p(u0);
    let gamma = basis
        .group_exp(&m.lam(u0), t)?
        .mul(&basis.group_exp(&p0, -delta * t)?);
    let eta = basis.group_exp(&p0, delta * t)?;
    let u = basis.ad_group_matrix(&eta) * u0;
    Ok((gamma, u))
}

/// First τ in (0, horizon] with exp(τΛu₀) = id, found by scanning the
/// Frobenius distance to the identity and refining its minima.
pub fn closed_biinvariant_time(m: &MetricOperator, u0: &AlgebraElement, horizon: f64) -> Result<Option<f64>> {
    if m.cheeger_delta().is_none() {
        return Err(Error::Unsupported("closed-geodesic scan needs a Cheeger metric".into()));
    }
    let basis = m.basis();
    basis.check(u0)?;
    let x = m.lam(u0);
    let omega = basis.matrix_of_unchecked(&x).norm();
    if omega == 0.0 || !(horizon > 0.0) {
        return Ok(None);
    }
    // the Frobenius norm bounds the largest rotation frequency
    let step = 2.0 * PI / omega / 64.0;
    let n = libm::ceil(horizon / step) as usize;
    let step = horizon / n as f64;
    let dist_sq = |t: f64| -> f64 {
        let d = basis.group_exp(&x, t).map(|g| g.distance_to_identity()).unwrap_or(f64::INFINITY);
        d * d
    };
    let mut prev2 = f64::INFINITY;
    let mut prev = dist_sq(step);
    for i in 2..=n + 1 {
        let t = i as f64 * step;
        let cur = if i <= n { dist_sq(t) } else { f64::INFINITY };
        if prev <= prev2 && prev <= cur {
            let lo = (i as f64 - 2.0) * step;
            let hi = t.min(horizon);
            let (tau, v) = linalg::brent_min(&dist_sq, lo, hi, 1e-13);
            if v.sqrt() < 1e-8 && tau > 0.5 * step {
                return Ok(Some(tau));
            }
        }
        prev2 = prev;
        prev = cur;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::StructuredBasis;
    use alloc::sync::Arc;
    use nalgebra::DVector;

    #[test]
    fn steady_axis_is_one_parameter_subgroup() {
        let b = Arc::new(StructuredBasis::so(3).unwrap());
        let m = MetricOperator::rigid_body(b.clone(), &[1.0, 2.0, 3.0]).unwrap();
        let u0 = b.unit(0);
        let tr = integrate_euler_arnold(&m, &u0, 3.0, 1e-2).unwrap();
        for (t, (u, g)) in tr.times.iter().zip(tr.velocities.iter().zip(&tr.frames)) {
            assert!((u - &u0).amax() < 1e-15);
            assert!(g.distance(&b.group_exp(&u0, *t).unwrap()) < 1e-9);
        }
    }

    #[test]
    fn grid_ends_exactly_at_horizon() {
        let b = Arc::new(StructuredBasis::so(3).unwrap());
        let m = MetricOperator::bi_invariant(b.clone());
        let tr = integrate_euler_arnold(&m, &b.unit(1), 1.0, 0.3).unwrap();
        assert_eq!(tr.end_time(), 1.0);
        assert_eq!(tr.len(), 5);
        assert!(integrate_euler_arnold(&m, &b.unit(1), 1.0, 2.0).is_err());
    }

    #[test]
    fn hermite_reproduces_samples() {
        let b = Arc::new(StructuredBasis::so(3).unwrap());
        let m = MetricOperator::rigid_body(b, &[1.0, 2.0, 3.0]).unwrap();
        let u0 = DVector::from_vec(alloc::vec![1.0, 0.0, 1.0]);
        let tr = integrate_euler_arnold(&m, &u0, 1.0, 0.01).unwrap();
        let i = 37;
        assert!((tr.velocity_at(tr.times[i]).unwrap() - &tr.velocities[i]).amax() < 1e-14);
        assert!(tr.velocity_at(1.5).is_err());
    }

    #[test]
    fn exact_cheeger_pure_h_direction() {
        let b = Arc::new(StructuredBasis::su(2, true).unwrap());
        let m = MetricOperator::cheeger(b.clone(), 0.4).unwrap();
        let p0 = b.unit(0);
        let (g, u) = cheeger_geodesic_exact(&m, &p0, 1.3).unwrap();
        assert!(g.distance(&b.group_exp(&p0, 1.3).unwrap()) < 1e-13);
        assert!((u - &p0).amax() < 1e-14);
    }

    #[test]
    fn exact_requires_cheeger() {
        let b = Arc::new(StructuredBasis::so(3).unwrap());
        let m = MetricOperator::bi_invariant(b.clone());
        assert!(matches!(
            cheeger_geodesic_exact(&m, &b.unit(0), 1.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn su2_period_is_two_pi() {
        let b = Arc::new(StructuredBasis::su(2, true).unwrap());
        let m = MetricOperator::cheeger(b.clone(), 0.5).unwrap();
        // Λu₀ = 0.6 b₀ + 0.8 b₁ is a unit vector
        let u0 = DVector::from_vec(alloc::vec![0.4, 0.8, 0.0]);
        let tau = closed_biinvariant_time(&m, &u0, 10.0).unwrap().unwrap();
        assert!((tau - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn incommensurate_frequencies_never_close() {
        let b = Arc::new(StructuredBasis::su(3, true).unwrap());
        let m = MetricOperator::cheeger(b.clone(), 0.0).unwrap();
        // diagonal eigenvalues i(a, b, −a−b) with a/b irrational
        let mut u0 = DVector::zeros(8);
        u0[6] = 1.0;
        u0[7] = 2f64.sqrt();
        assert_eq!(closed_biinvariant_time(&m, &u0, 30.0).unwrap(), None);
    }
}
