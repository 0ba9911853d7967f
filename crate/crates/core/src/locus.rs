//! Berger sphere: closed-form determinant of the Jacobi solution operator,
//! first conjugate times and slices of the tangent conjugate locus.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::linalg;

/// R = √((1+δ)²|p₀|² + |q₀|²) and S = (1+δ)|p₀|² + |q₀|².
pub fn berger_r_s(delta: f64, p_norm: f64, q_norm: f64) -> (f64, f64) {
    let d1 = 1.0 + delta;
    let (p2, q2) = (p_norm * p_norm, q_norm * q_norm);
    (libm::sqrt(d1 * d1 * p2 + q2), d1 * p2 + q2)
}

/// sin(Rt)(−δ|q₀|²Rt cos(Rt) + (1+δ)S sin(Rt)).
pub fn berger_det(t: f64, delta: f64, p_norm: f64, q_norm: f64) -> f64 {
    let (r, s) = berger_r_s(delta, p_norm, q_norm);
    let x = r * t;
    libm::sin(x) * berger_second_factor(x, delta, q_norm, s)
}

fn berger_second_factor(x: f64, delta: f64, q_norm: f64, s: f64) -> f64 {
    -delta * q_norm * q_norm * x * libm::cos(x) + (1.0 + delta) * s * libm::sin(x)
}

/// Determinant of the full solution operator Ω(t) on su(2), which carries
/// the extra factor t/R⁴ from the u₀ direction.
pub fn berger_operator_det(t: f64, delta: f64, p_norm: f64, q_norm: f64) -> f64 {
    let (r, _) = berger_r_s(delta, p_norm, q_norm);
    t * berger_det(t, delta, p_norm, q_norm) / (r * r * r * r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BergerConjugate {
    pub t: f64,
    /// Pure-𝔥 direction: the geodesic is steady and only the sin factor vanishes.
    pub steady: bool,
}

/// First positive zero of `berger_det`.
pub fn berger_first_conjugate_time(delta: f64, p_norm: f64, q_norm: f64) -> Result<BergerConjugate> {
    if !(delta > -1.0) || !delta.is_finite() {
        return Err(Error::InvalidMetric("Berger metric needs delta > -1".into()));
    }
    let (p_norm, q_norm) = (p_norm.abs(), q_norm.abs());
    if p_norm == 0.0 && q_norm == 0.0 {
        return Err(Error::InvalidArgument("zero direction".into()));
    }
    if q_norm == 0.0 {
        return Ok(BergerConjugate {
            t: PI / ((1.0 + delta) * p_norm),
            steady: true,
        });
    }
    let (r, s) = berger_r_s(delta, p_norm, q_norm);
    if delta >= 0.0 {
        return Ok(BergerConjugate { t: PI / r, steady: false });
    }
    let x = linalg::bisect(|x| berger_second_factor(x, delta, q_norm, s), FRAC_PI_2, PI, 1e-13);
    Ok(BergerConjugate { t: x / r, steady: false })
}

/// How a direction angle θ is turned into (|p₀|, |q₀|).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LocusConvention {
    /// |p₀| = cos θ, |q₀| = sin θ.
    BiInvariantUnit,
    /// (1+δ)|p₀|² + |q₀|² = 1.
    MetricUnit,
    /// Λu₀ is bi-invariant unit: |p₀| = cos θ/(1+δ), |q₀| = sin θ.
    #[default]
    Momentum,
}

impl LocusConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            LocusConvention::BiInvariantUnit => "biinvariant-unit",
            LocusConvention::MetricUnit => "metric-unit",
            LocusConvention::Momentum => "momentum",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "biinvariant-unit" | "biinvariant" => Some(LocusConvention::BiInvariantUnit),
            "metric-unit" | "metric" => Some(LocusConvention::MetricUnit),
            "momentum" => Some(LocusConvention::Momentum),
            _ => None,
        }
    }

    pub fn norms(&self, delta: f64, theta: f64) -> (f64, f64) {
        let (c, s) = (libm::cos(theta).abs(), libm::sin(theta).abs());
        match self {
            LocusConvention::BiInvariantUnit => (c, s),
            LocusConvention::MetricUnit => (c / libm::sqrt(1.0 + delta), s),
            LocusConvention::Momentum => (c / (1.0 + delta), s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocusSample {
    pub theta: f64,
    pub t_star: f64,
    pub x: f64,
    pub y: f64,
    pub steady: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocusSlice {
    pub delta: f64,
    pub convention: LocusConvention,
    pub samples: Vec<LocusSample>,
}

impl LocusSlice {
    pub fn t_star(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t_star).collect()
    }

    /// Largest |x| and |y| over the slice.
    pub fn extents(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((0.0, 0.0), |(a, b), s| (a.max(s.x.abs()), b.max(s.y.abs())))
    }
}

/// θ_k = 2πk/n; point t*(θ)(cos θ, sin θ).
pub fn generate_locus_slice(delta: f64, n_angles: usize, convention: LocusConvention) -> Result<LocusSlice> {
    if n_angles < 8 {
        return Err(Error::InvalidArgument("need at least 8 angles".into()));
    }
    let samples = (0..n_angles)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / n_angles as f64;
            let (p, q) = convention.norms(delta, theta);
            let c = berger_first_conjugate_time(delta, p, q)?;
            Ok(LocusSample {
                theta,
                t_star: c.t,
                x: c.t * libm::cos(theta),
                y: c.t * libm::sin(theta),
                steady: c.steady,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LocusSlice {
        delta,
        convention,
        samples,
    })
}

/// Angles (in sample index) where a slice with smaller δ is not inside the
/// one with larger δ; directions along 𝔥 (sin θ = 0) are skipped.
pub fn nesting_violations(slices: &[LocusSlice]) -> Vec<(usize, f64, f64)> {
    let mut order: Vec<&LocusSlice> = slices.iter().collect();
    order.sort_by(|a, b| b.delta.partial_cmp(&a.delta).unwrap_or(core::cmp::Ordering::Equal));
    let mut out = Vec::new();
    for pair in order.windows(2) {
        let (outer, inner) = (pair[0], pair[1]);
        for (k, (a, b)) in outer.samples.iter().zip(&inner.samples).enumerate() {
            if libm::sin(a.theta).abs() < 1e-12 {
                continue;
            }
            if b.t_star > a.t_star {
                out.push((k, outer.delta, inner.delta));
            }
        }
    }
    out
}

/// max over θ of |t*(θ) − t*(π−θ)| and |t*(θ) − t*(−θ)|.
pub fn revolution_symmetry_residual(delta: f64, convention: LocusConvention, thetas: &[f64]) -> Result<f64> {
    let at = |th: f64| -> Result<f64> {
        let (p, q) = convention.norms(delta, th);
        Ok(berger_first_conjugate_time(delta, p, q)?.t)
    };
    let mut worst: f64 = 0.0;
    for &th in thetas {
        let t0 = at(th)?;
        worst = worst.max((t0 - at(PI - th)?).abs()).max((t0 - at(-th)?).abs());
    }
    Ok(worst)
}
