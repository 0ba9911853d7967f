//! Conjugate-point criteria for steady and nonsteady geodesics.

use alloc::string::String;
use alloc::vec::Vec;

use crate::algebra::AlgebraElement;
use crate::dynamics::GeodesicTrajectory;
use crate::error::{Error, Result};
use crate::jacobi::ConjugateReport;

mod blocks;
mod nonsteady;
mod steady;

pub use blocks::{
    commuting_block_scan, generalized_trig, rigid_body_l2_check, Block, CommutingBlockData, KAPPA,
};
pub use nonsteady::{
    cheeger_index_data, cheeger_index_field, cheeger_nonsteady_condition, nonsteady_frame,
    nonsteady_quadratic_criterion, nonsteady_test_field, CheegerIndexData, FrameSample,
    NonsteadyReport, NonsteadyTestField, NonsteadyVerdict,
};
pub use steady::{steady_determinant, steady_determinant_scan, steady_operators, SteadyCriterion, SteadyStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriterionStatus {
    Applicable,
    Detected,
    NotDetected,
    Inapplicable,
}

impl CriterionStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CriterionStatus::Applicable => "applicable",
            CriterionStatus::Detected => "detected",
            CriterionStatus::NotDetected => "not-detected",
            CriterionStatus::Inapplicable => "inapplicable",
        }
    }
}

/// Uniform summary of one criterion run.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub criterion: &'static str,
    pub status: CriterionStatus,
    pub conjugate: Option<ConjugateReport>,
    pub diagnostics: Vec<(String, f64)>,
}

/// Composite Simpson on a uniform grid, 3/8 rule on the last three
/// intervals when the interval count is odd.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len().saturating_sub(1);
    match n {
        0 => 0.0,
        1 => 0.5 * h * (values[0] + values[1]),
        2 => h / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        3 => 3.0 * h / 8.0 * (values[0] + 3.0 * values[1] + 3.0 * values[2] + values[3]),
        _ => {
            let even = if n % 2 == 0 { n } else { n - 3 };
            let mut s = values[0] + values[even];
            for (i, v) in values.iter().enumerate().take(even).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            let mut total = s * h / 3.0;
            if even < n {
                let v = &values[even..];
                total += 3.0 * h / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3]);
            }
            total
        }
    }
}

/// Centered differences inside, second-order one-sided at both ends.
pub(crate) fn differentiate(y: &[AlgebraElement], h: f64) -> Vec<AlgebraElement> {
    let n = y.len();
    (0..n)
        .map(|i| {
            if n < 3 {
                (&y[n - 1] - &y[0]) / (h * (n - 1).max(1) as f64)
            } else if i == 0 {
                (&y[0] * -3.0 + &y[1] * 4.0 - &y[2]) / (2.0 * h)
            } else if i == n - 1 {
                (&y[n - 1] * 3.0 - &y[n - 2] * 4.0 + &y[n - 3]) / (2.0 * h)
            } else {
                (&y[i + 1] - &y[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// I(y,y) = ∫ ⟨Λz + ad_y Λu, z⟩ dt with z = y' + ad_u y, for samples of y on
/// the trajectory grid from t = 0 to t = τ.
pub fn index_form_value(traj: &GeodesicTrajectory, y: &[AlgebraElement], tau: f64) -> Result<f64> {
    let m = &traj.metric;
    let b = m.basis();
    let n = traj.index_of_time(tau).ok_or(Error::OutOfRange {
        t: tau,
        start: 0.0,
        end: traj.end_time(),
    })?;
    if y.len() != n + 1 || n < 2 {
        return Err(Error::InvalidArgument("need one field sample per grid time up to tau".into()));
    }
    for v in y {
        b.check(v)?;
    }
    let scale = y.iter().map(|v| v.amax()).fold(1.0, f64::max);
    let end = y[0].amax().max(y[n].amax());
    if end > 1e-10 * scale {
        return Err(Error::Endpoint(end));
    }
    let h = traj.times[1] - traj.times[0];
    let dy = differentiate(y, h);
    let vals: Vec<f64> = (0..=n)
        .map(|i| {
            let u = &traj.velocities[i];
            let z = &dy[i] + b.br(u, &y[i]);
            b.form(&(m.lam(&z) + b.br(&y[i], &m.lam(u))), &z)
        })
        .collect();
    Ok(simpson(&vals, h))
}
