//! Jacobi fields in the Lie algebra: y' + ad_u y = z, z' = ad⋆_u z + ad⋆_z u.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::algebra::{AlgebraElement, GroupElement};
use crate::dynamics::GeodesicTrajectory;
use crate::error::{inapplicable, Error, Result};
use crate::metric::MetricOperator;
use crate::scan::{self, MatrixPath};
pub use crate::scan::ScanSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detection {
    DetSignChange,
    SigmaMinDip,
    ClosedGeodesic,
    Criterion,
}

impl Detection {
    pub fn as_str(&self) -> &'static str {
        match self {
            Detection::DetSignChange => "det-sign-change",
            Detection::SigmaMinDip => "sigma-min-dip",
            Detection::ClosedGeodesic => "closed-geodesic",
            Detection::Criterion => "criterion",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateEvent {
    /// Geodesic time of the conjugate point.
    pub t: f64,
    pub multiplicity: usize,
    pub detection: Detection,
    /// σ_min/σ_max (or the criterion value) at the reported time.
    pub value: f64,
    /// Criterion parameter behind the time, e.g. τ with t = 2τ.
    pub parameter: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub time: f64,
    pub sigma_rel: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateReport {
    pub conjugate_times: Vec<ConjugateEvent>,
    pub tolerances: Tolerances,
    pub horizon: f64,
}

impl ConjugateReport {
    pub fn first(&self) -> Option<f64> {
        self.conjugate_times.first().map(|e| e.t)
    }

    pub fn times(&self) -> Vec<f64> {
        self.conjugate_times.iter().map(|e| e.t).collect()
    }
}

#[derive(Debug, Clone)]
pub struct JacobiSolution<'a> {
    pub trajectory: &'a GeodesicTrajectory,
    pub times: Vec<f64>,
    pub y: Vec<AlgebraElement>,
    pub z: Vec<AlgebraElement>,
}

impl JacobiSolution<'_> {
    /// max over interior samples of ‖y' + ad_u y − z‖ with centered differences.
    pub fn discrete_residual(&self) -> f64 {
        let b = self.trajectory.metric.basis();
        let mut worst: f64 = 0.0;
        for i in 1..self.times.len().saturating_sub(1) {
            let h = self.times[i + 1] - self.times[i - 1];
            let dy = (&self.y[i + 1] - &self.y[i - 1]) / h;
            let u = &self.trajectory.velocities[i];
            worst = worst.max((dy + b.br(u, &self.y[i]) - &self.z[i]).norm());
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct SolutionOperatorSample {
    pub t: f64,
    pub omega: DMatrix<f64>,
    pub det: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

/// Generator of the linear system at velocity u: (−ad_u, A(u)) with
/// A(u)z = ad⋆_u z + ad⋆_z u.
fn coefficients(m: &MetricOperator, u: &AlgebraElement) -> (DMatrix<f64>, DMatrix<f64>) {
    let ad = m.basis().ad_unchecked(u);
    let a = m.ad_star_matrix(u) + m.ad_star_swapped_matrix(u);
    (-ad, a)
}

/// One RK4 step of Y' = −ad_u Y + Z, Z' = A(u) Z for matrices of columns.
fn rk4_step(
    traj: &GeodesicTrajectory,
    t: f64,
    h: f64,
    y: &DMatrix<f64>,
    z: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let m = &traj.metric;
    let (n0, a0) = coefficients(m, &traj.velocity_at(t)?);
    let (nh, ah) = coefficients(m, &traj.velocity_at(t + 0.5 * h)?);
    let (n1, a1) = coefficients(m, &traj.velocity_at(t + h)?);
    let k1y = &n0 * y + z;
    let k1z = &a0 * z;
    let y2 = y + &k1y * (0.5 * h);
    let z2 = z + &k1z * (0.5 * h);
    let k2y = &nh * &y2 + &z2;
    let k2z = &ah * &z2;
    let y3 = y + &k2y * (0.5 * h);
    let z3 = z + &k2z * (0.5 * h);
    let k3y = &nh * &y3 + &z3;
    let k3z = &ah * &z3;
    let y4 = y + &k3y * h;
    let z4 = z + &k3z * h;
    let k4y = &n1 * &y4 + &z4;
    let k4z = &a1 * &z4;
    Ok((
        y + (k1y + k2y * 2.0 + k3y * 2.0 + k4y) * (h / 6.0),
        z + (k1z + k2z * 2.0 + k3z * 2.0 + k4z) * (h / 6.0),
    ))
}

/// RK4 on the trajectory grid with Hermite-interpolated u at midpoints.
pub fn integrate_jacobi<'a>(
    traj: &'a GeodesicTrajectory,
    y0: &AlgebraElement,
    z0: &AlgebraElement,
) -> Result<JacobiSolution<'a>> {
    let b = traj.metric.basis();
    b.check(y0)?;
    b.check(z0)?;
    let mut y = DMatrix::from_column_slice(y0.len(), 1, y0.as_slice());
    let mut z = DMatrix::from_column_slice(z0.len(), 1, z0.as_slice());
    let mut sol = JacobiSolution {
        trajectory: traj,
        times: traj.times.clone(),
        y: Vec::with_capacity(traj.len()),
        z: Vec::with_capacity(traj.len()),
    };
    sol.y.push(y0.clone());
    sol.z.push(z0.clone());
    for i in 1..traj.len() {
        let (t0, t1) = (traj.times[i - 1], traj.times[i]);
        (y, z) = rk4_step(traj, t0, t1 - t0, &y, &z)?;
        sol.y.push(y.column(0).into_owned());
        sol.z.push(z.column(0).into_owned());
    }
    Ok(sol)
}

/// Ω(t): z₀ ↦ y(t) with y(0) = 0, all columns integrated together.
struct OmegaPath<'a> {
    traj: &'a GeodesicTrajectory,
    last: usize,
    next: usize,
    /// Grid states (index, Y, Z) for the most recent samples.
    states: Vec<(usize, DMatrix<f64>, DMatrix<f64>)>,
    error: Option<Error>,
}

impl<'a> OmegaPath<'a> {
    fn new(traj: &'a GeodesicTrajectory, horizon: f64) -> Self {
        let d = traj.metric.dim();
        let last = traj
            .times
            .iter()
            .rposition(|&t| t <= horizon * (1.0 + 1e-12))
            .unwrap_or(0);
        OmegaPath {
            traj,
            last,
            next: 1,
            states: alloc::vec![(0, DMatrix::zeros(d, d), DMatrix::identity(d, d))],
            error: None,
        }
    }

    fn step_from(&self, k: usize, t: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let (i, y, z) = &self.states[k];
        let t0 = self.traj.times[*i];
        if t <= t0 {
            return Ok((y.clone(), z.clone()));
        }
        rk4_step(self.traj, t0, t - t0, y, z)
    }
}

impl MatrixPath for OmegaPath<'_> {
    fn advance(&mut self) -> Option<(f64, DMatrix<f64>)> {
        if self.next > self.last || self.error.is_some() {
            return None;
        }
        let t = self.traj.times[self.next];
        let k = self.states.len() - 1;
        match self.step_from(k, t) {
            Ok((y, z)) => {
                self.states.push((self.next, y.clone(), z));
                if self.states.len() > 3 {
                    self.states.remove(0);
                }
                self.next += 1;
                Some((t, y))
            }
            Err(e) => {
                self.error = Some(e);
                None
            }
        }
    }

    fn at(&mut self, t: f64) -> DMatrix<f64> {
        let k = self
            .states
            .iter()
            .rposition(|(i, _, _)| self.traj.times[*i] <= t)
            .unwrap_or(0);
        match self.step_from(k, t) {
            Ok((y, _)) => y,
            Err(e) => {
                self.error = Some(e);
                DMatrix::from_element(self.traj.metric.dim(), self.traj.metric.dim(), f64::NAN)
            }
        }
    }
}

/// Ω at the requested (increasing) times within the trajectory.
pub fn solution_operator(traj: &GeodesicTrajectory, t_grid: &[f64]) -> Result<Vec<SolutionOperatorSample>> {
    let end = traj.end_time();
    let mut path = OmegaPath::new(traj, end);
    let mut out = Vec::with_capacity(t_grid.len());
    let mut current = 0.0;
    for &t in t_grid {
        if !(t >= 0.0 && t <= end * (1.0 + 1e-12)) || t < current {
            return Err(Error::OutOfRange { t, start: current, end });
        }
        while path.next <= path.last && traj.times[path.next] <= t {
            path.advance();
        }
        if let Some(e) = path.error.take() {
            return Err(e);
        }
        let omega = path.at(t);
        let sv = crate::linalg::singular_values(&omega);
        out.push(SolutionOperatorSample {
            t,
            det: omega.clone().lu().determinant(),
            sigma_min: sv[sv.len() - 1],
            sigma_max: sv[0],
            omega,
        });
        current = t;
    }
    Ok(out)
}

/// Conjugate times on (0, horizon]: determinant sign changes refined by
/// bisection, plus σ_min/σ_max dips for even-order zeros.
pub fn find_conjugate_times(traj: &GeodesicTrajectory, horizon: f64) -> Result<ConjugateReport> {
    find_conjugate_times_with(traj, horizon, ScanSettings::default())
}

pub fn find_conjugate_times_with(
    traj: &GeodesicTrajectory,
    horizon: f64,
    settings: ScanSettings,
) -> Result<ConjugateReport> {
    let end = traj.end_time();
    if horizon > end * (1.0 + 1e-12) {
        return Err(Error::OutOfRange {
            t: horizon,
            start: 0.0,
            end,
        });
    }
    let mut path = OmegaPath::new(traj, horizon);
    let events = scan::scan_path(&mut path, settings);
    if let Some(e) = path.error {
        return Err(e);
    }
    Ok(ConjugateReport {
        conjugate_times: events,
        tolerances: Tolerances {
            time: settings.time_tol,
            sigma_rel: settings.sigma_rel,
            step: traj.dt,
        },
        horizon,
    })
}

/// ‖Ad⋆_g Ad_g − I‖ < 1e-9: right translation by g is an isometry.
pub fn right_translation_isometry_check(m: &MetricOperator, g: &GroupElement) -> bool {
    isometry_residual(m, g) < 1e-9
}

pub fn isometry_residual(m: &MetricOperator, g: &GroupElement) -> f64 {
    let d = m.dim();
    let prod = m.ad_star_group_matrix(g) * m.basis().ad_group_matrix(g);
    (prod - DMatrix::<f64>::identity(d, d)).amax()
}

/// The field y(t) = Ad⋆_{γ(t)} u₀ − Ad_{γ(t)⁻¹} u₀ at every sample.
pub fn closed_geodesic_field(traj: &GeodesicTrajectory) -> Vec<AlgebraElement> {
    let m = &traj.metric;
    let b = m.basis();
    let u0 = traj.initial_velocity();
    traj.frames
        .iter()
        .map(|g| m.ad_star_group_matrix(g) * u0 - b.ad_group_matrix(&g.inverse()) * u0)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedGeodesicVerdict {
    pub tau: f64,
    pub isometry_residual: f64,
    pub isometric: bool,
    /// ‖y(τ)‖ for the explicit field.
    pub field_norm_at_tau: f64,
    /// A conjugate point lies at or before τ.
    pub conjugate: bool,
}

impl ClosedGeodesicVerdict {
    pub fn report(&self) -> ConjugateReport {
        let conjugate_times = if self.conjugate {
            alloc::vec![ConjugateEvent {
                t: self.tau,
                multiplicity: 1,
                detection: Detection::ClosedGeodesic,
                value: self.field_norm_at_tau,
                parameter: None,
            }]
        } else {
            Vec::new()
        };
        ConjugateReport {
            conjugate_times,
            tolerances: Tolerances {
                time: 0.0,
                sigma_rel: 1e-9,
                step: 0.0,
            },
            horizon: self.tau,
        }
    }
}

/// If right translation by γ(τ) is an isometry and the geodesic is nonsteady,
/// γ(τ) is conjugate to γ(0) or an earlier conjugate point exists.
pub fn closed_geodesic_conjugacy(traj: &GeodesicTrajectory, tau: f64) -> Result<ClosedGeodesicVerdict> {
    let accel = traj.max_acceleration();
    if accel < 1e-8 {
        return Err(inapplicable("closed", "steady trajectory", accel));
    }
    let k = traj.index_of_time(tau).ok_or(Error::OutOfRange {
        t: tau,
        start: 0.0,
        end: traj.end_time(),
    })?;
    let m = &traj.metric;
    let g = &traj.frames[k];
    let res = isometry_residual(m, g);
    let b = m.basis();
    let u0 = traj.initial_velocity();
    let y = m.ad_star_group_matrix(g) * u0 - b.ad_group_matrix(&g.inverse()) * u0;
    let field_norm = y.norm();
    let isometric = res < 1e-9;
    Ok(ClosedGeodesicVerdict {
        tau,
        isometry_residual: res,
        isometric,
        field_norm_at_tau: field_norm,
        conjugate: isometric && field_norm < 1e-8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::StructuredBasis;
    use crate::dynamics::integrate_euler_arnold;
    use alloc::sync::Arc;
    use core::f64::consts::PI;
    use nalgebra::DVector;

    #[test]
    fn zero_data_gives_zero_field() {
        let b = Arc::new(StructuredBasis::so(3).unwrap());
        let m = MetricOperator::rigid_body(b.clone(), &[1.0, 2.0, 3.0]).unwrap();
        let tr = integrate_euler_arnold(&m, &b.unit(0), 2.0, 1e-2).unwrap();
        let z = DVector::zeros(3);
        let sol = integrate_jacobi(&tr, &z, &z).unwrap();
        assert!(sol.y.iter().all(|y| y.amax() == 0.0));
    }

    #[test]
    fn omega_starts_like_t_identity() {
        let b = Arc::new(StructuredBasis::so(3).unwrap());
        let m = MetricOperator::rigid_body(b.clone(), &[1.0, 2.0, 3.0]).unwrap();
        let u0 = DVector::from_vec(alloc::vec![0.3, 1.0, 0.2]);
        let tr = integrate_euler_arnold(&m, &u0, 1.0, 1e-3).unwrap();
        let s = solution_operator(&tr, &[0.0, 1e-3]).unwrap();
        assert_eq!(s[0].omega.amax(), 0.0);
        let id = DMatrix::<f64>::identity(3, 3);
        assert!((&s[1].omega / 1e-3 - id).amax() < 5e-3);
    }

    #[test]
    fn bi_invariant_su2_first_conjugate_time_is_pi() {
        let b = Arc::new(StructuredBasis::su(2, true).unwrap());
        let m = MetricOperator::bi_invariant(b.clone());
        let u0 = DVector::from_vec(alloc::vec![0.6, 0.0, 0.8]);
        let tr = integrate_euler_arnold(&m, &u0, 4.0, 1e-3).unwrap();
        let rep = find_conjugate_times(&tr, 4.0).unwrap();
        let first = &rep.conjugate_times[0];
        assert!((first.t - PI).abs() < 1e-6);
        assert_eq!(first.multiplicity, 2);
        assert_eq!(first.detection, Detection::SigmaMinDip);
    }

    #[test]
    fn abelian_surrogate_has_no_conjugate_points() {
        let b = Arc::new(StructuredBasis::torus(2).unwrap());
        let m = MetricOperator::diagonal(b.clone(), &[1.0, 3.0]).unwrap();
        let u0 = DVector::from_vec(alloc::vec![1.0, 0.5]);
        let tr = integrate_euler_arnold(&m, &u0, 20.0, 1e-2).unwrap();
        assert!(find_conjugate_times(&tr, 20.0).unwrap().conjugate_times.is_empty());
        let s = solution_operator(&tr, &[2.0, 7.0]).unwrap();
        assert!((s[0].det - 4.0).abs() < 1e-10 && (s[1].det - 49.0).abs() < 1e-9);
    }

    #[test]
    fn horizon_beyond_trajectory_rejected() {
        let b = Arc::new(StructuredBasis::so(3).unwrap());
        let m = MetricOperator::bi_invariant(b.clone());
        let tr = integrate_euler_arnold(&m, &b.unit(0), 1.0, 1e-2).unwrap();
        assert!(find_conjugate_times(&tr, 2.0).is_err());
    }

    #[test]
    fn steady_trajectory_not_eligible_for_closed_theorem() {
        let b = Arc::new(StructuredBasis::so(3).unwrap());
        let m = MetricOperator::bi_invariant(b.clone());
        let tr = integrate_euler_arnold(&m, &b.unit(0), 1.0, 1e-2).unwrap();
        assert!(matches!(
            closed_geodesic_conjugacy(&tr, 1.0),
            Err(Error::Inapplicable { .. })
        ));
    }
}
