use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::algebra::AlgebraElement;
use crate::error::{inapplicable, precondition, Result};
use crate::jacobi::{ConjugateReport, Tolerances};
use crate::linalg;
use crate::metric::MetricOperator;
use crate::scan::{self, MatrixPath, ScanSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteadyStatus {
    Applicable,
    /// RF + LR = I has no solution (spectra of −L and F meet).
    InapplicableSpectral,
    /// The joint kernel of L and F does not split off the complement.
    InapplicableSingular,
}

impl SteadyStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SteadyStatus::Applicable => "applicable",
            SteadyStatus::InapplicableSpectral => "inapplicable-spectral",
            SteadyStatus::InapplicableSingular => "inapplicable-singular",
        }
    }
}

/// L = ad_{u₀} and F = ad⋆_{u₀} + ad⋆_· u₀ on a g-orthonormal basis of the
/// working subspace of u₀^⊥.
#[derive(Debug, Clone)]
pub struct SteadyCriterion {
    pub l: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub r: Option<DMatrix<f64>>,
    pub status: SteadyStatus,
    /// Columns: g-orthonormal basis of u₀^⊥ in algebra coordinates.
    pub complement: DMatrix<f64>,
    /// Columns: the working subspace inside the complement basis.
    pub subspace: DMatrix<f64>,
    /// Directions of u₀^⊥ killed by both L and F.
    pub kernel_dim: usize,
    /// Largest g-component along u₀ of L or F applied to the complement basis.
    pub complement_residual: f64,
    /// ‖RF + LR − I‖ when R exists.
    pub sylvester_residual: Option<f64>,
    pub sylvester_sigma_ratio: f64,
}

fn orth_columns(a: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    let k = a.nrows();
    if a.ncols() == 0 {
        return DMatrix::zeros(k, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.amax();
    let cols: Vec<_> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > rel * smax && smax > 0.0)
        .map(|(i, _)| u.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(k, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

/// Builds L, F on u₀^⊥, deflates their joint kernel and solves RF + LR = I.
pub fn steady_operators(m: &MetricOperator, u0: &AlgebraElement) -> Result<SteadyCriterion> {
    let b = m.basis();
    b.check(u0)?;
    let res = m.steady_residual(u0);
    if res >= 1e-10 * m.norm_sq(u0).max(1.0) {
        return Err(precondition("u0 is not steady", res));
    }
    let d = m.dim();
    let mut seed: Vec<AlgebraElement> = Vec::with_capacity(d + 1);
    seed.push(u0.clone());
    seed.extend((0..d).map(|i| b.unit(i)));
    let ortho = m.gram_schmidt(&seed);
    let e = DMatrix::from_columns(&ortho[1..]);
    let k = e.ncols();
    let gm = m.metric_gram();
    let lfull = b.ad_unchecked(u0);
    let ffull = m.ad_star_matrix(u0) + m.ad_star_swapped_matrix(u0);
    let proj = e.transpose() * gm;
    let l = &proj * &lfull * &e;
    let f = &proj * &ffull * &e;
    let unit0 = &ortho[0];
    let along = (unit0.transpose() * gm * &lfull * &e)
        .amax()
        .max((unit0.transpose() * gm * &ffull * &e).amax());

    // invariant closure of the ranges of L and F
    let mut w = orth_columns(&hcat(&l, &f), 1e-10);
    loop {
        let grown = orth_columns(&hcat(&hcat(&w, &(&l * &w)), &(&f * &w)), 1e-10);
        if grown.ncols() == w.ncols() {
            break;
        }
        w = grown;
    }
    let mut stacked = DMatrix::zeros(2 * k, k);
    stacked.view_mut((0, 0), (k, k)).copy_from(&l);
    stacked.view_mut((k, 0), (k, k)).copy_from(&f);
    let kernel = linalg::null_space(&stacked, 1e-10);
    let splits = w.ncols() + kernel.ncols() == k && orth_columns(&hcat(&w, &kernel), 1e-8).ncols() == k;

    let base = SteadyCriterion {
        l: l.clone(),
        f: f.clone(),
        r: None,
        status: SteadyStatus::InapplicableSpectral,
        complement: e.clone(),
        subspace: w.clone(),
        kernel_dim: kernel.ncols(),
        complement_residual: along,
        sylvester_residual: None,
        sylvester_sigma_ratio: 0.0,
    };
    if w.ncols() == 0 {
        return Ok(base);
    }
    if !splits {
        return Ok(SteadyCriterion {
            subspace: DMatrix::identity(k, k),
            status: SteadyStatus::InapplicableSingular,
            ..base
        });
    }
    let lw = w.transpose() * &l * &w;
    let fw = w.transpose() * &f * &w;
    let n = w.ncols();
    let id = DMatrix::<f64>::identity(n, n);
    let sys = linalg::kron(&id, &lw) + linalg::kron(&fw.transpose(), &id);
    let sv = linalg::singular_values(&sys);
    let ratio = sv[sv.len() - 1] / sv[0].max(f64::MIN_POSITIVE);
    let mut out = SteadyCriterion {
        l: lw,
        f: fw,
        sylvester_sigma_ratio: ratio,
        ..base
    };
    if ratio < 1e-10 {
        return Ok(out);
    }
    let rhs = DMatrix::from_column_slice(n * n, 1, id.as_slice());
    let Some(sol) = sys.lu().solve(&rhs) else {
        return Ok(out);
    };
    let r = DMatrix::from_column_slice(n, n, sol.as_slice());
    let resid = (&r * &out.f + &out.l * &r - id).amax();
    out.r = Some(r);
    out.sylvester_residual = Some(resid);
    out.status = SteadyStatus::Applicable;
    Ok(out)
}

/// e^{τL}Re^{τF} − e^{−τL}Re^{−τF}.
pub fn steady_determinant(c: &SteadyCriterion, tau: f64) -> Result<DMatrix<f64>> {
    let r = c
        .r
        .as_ref()
        .ok_or_else(|| inapplicable("steady-det", c.status.as_str(), c.sylvester_sigma_ratio))?;
    Ok(d_matrix(&c.l, &c.f, r, tau))
}

fn d_matrix(l: &DMatrix<f64>, f: &DMatrix<f64>, r: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let ep = linalg::expm(&(l * tau)) * r * linalg::expm(&(f * tau));
    let em = linalg::expm(&(l * -tau)) * r * linalg::expm(&(f * -tau));
    ep - em
}

struct DetPath<'a> {
    l: &'a DMatrix<f64>,
    f: &'a DMatrix<f64>,
    r: &'a DMatrix<f64>,
    step: f64,
    i: usize,
    n: usize,
}

impl MatrixPath for DetPath<'_> {
    fn advance(&mut self) -> Option<(f64, DMatrix<f64>)> {
        if self.i >= self.n {
            return None;
        }
        self.i += 1;
        let tau = self.i as f64 * self.step;
        Some((tau, d_matrix(self.l, self.f, self.r, tau)))
    }

    fn at(&mut self, t: f64) -> DMatrix<f64> {
        d_matrix(self.l, self.f, self.r, t)
    }
}

/// Scans τ ∈ (0, horizon/2] for singular D(τ); each zero at τ is a
/// conjugate point at geodesic time 2τ (τ kept as the event parameter).
pub fn steady_determinant_scan(c: &SteadyCriterion, horizon: f64, samples: usize) -> Result<ConjugateReport> {
    let r = c
        .r
        .as_ref()
        .ok_or_else(|| inapplicable("steady-det", c.status.as_str(), c.sylvester_sigma_ratio))?;
    let n = samples.max(2);
    let step = 0.5 * horizon / n as f64;
    let settings = ScanSettings::default();
    let mut path = DetPath {
        l: &c.l,
        f: &c.f,
        r,
        step,
        i: 0,
        n,
    };
    let mut events = scan::scan_path(&mut path, settings);
    for e in &mut events {
        e.parameter = Some(e.t);
        e.t *= 2.0;
    }
    Ok(ConjugateReport {
        conjugate_times: events,
        tolerances: Tolerances {
            time: 2.0 * settings.time_tol,
            sigma_rel: settings.sigma_rel,
            step: 2.0 * step,
        },
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::StructuredBasis;
    use alloc::sync::Arc;
    use core::f64::consts::PI;

    #[test]
    fn abelian_has_no_sylvester_solution() {
        let b = Arc::new(StructuredBasis::torus(3).unwrap());
        let m = MetricOperator::diagonal(b.clone(), &[1.0, 2.0, 3.0]).unwrap();
        let c = steady_operators(&m, &b.unit(0)).unwrap();
        assert_eq!(c.status, SteadyStatus::InapplicableSpectral);
        assert!(steady_determinant_scan(&c, 10.0, 100).is_err());
    }

    #[test]
    fn rigid_body_short_axis() {
        let b = Arc::new(StructuredBasis::so(3).unwrap());
        let m = MetricOperator::rigid_body(b.clone(), &[1.0, 2.0, 3.0]).unwrap();
        let c = steady_operators(&m, &b.unit(0)).unwrap();
        assert_eq!(c.status, SteadyStatus::Applicable);
        assert!(c.sylvester_residual.unwrap() < 1e-12);
        assert!(c.complement_residual < 1e-12);
        assert_eq!(c.kernel_dim, 0);
    }

    #[test]
    fn bi_invariant_so3_zero_at_tau_pi() {
        let b = Arc::new(StructuredBasis::so(3).unwrap());
        let m = MetricOperator::bi_invariant(b.clone());
        let c = steady_operators(&m, &b.unit(0)).unwrap();
        let rep = steady_determinant_scan(&c, 8.0, 400).unwrap();
        let first = &rep.conjugate_times[0];
        assert!((first.parameter.unwrap() - PI).abs() < 1e-7);
        assert!((first.t - 2.0 * PI).abs() < 2e-7);
    }

    #[test]
    fn nonsteady_rejected() {
        let b = Arc::new(StructuredBasis::so(3).unwrap());
        let m = MetricOperator::rigid_body(b.clone(), &[1.0, 2.0, 3.0]).unwrap();
        let u = b.unit(0) + b.unit(1);
        assert!(steady_operators(&m, &u).is_err());
    }
}
