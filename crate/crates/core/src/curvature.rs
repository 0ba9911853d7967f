//! Sectional and Ricci curvature of left-invariant metrics.

use alloc::vec::Vec;

#[allow(unused_imports)]
use nalgebra::ComplexField;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{AlgebraElement, Family, StructuredBasis};
use crate::error::{inapplicable, Error, Result};
use crate::metric::MetricOperator;

/// g(R(u,v)v,u) = ¼‖ad⋆_u v + ad⋆_v u + ad_u v‖² − g(ad⋆_u v + ad_u v, ad_u v) − g(ad⋆_u u, ad⋆_v v).
pub fn sectional_numerator(m: &MetricOperator, u: &AlgebraElement, v: &AlgebraElement) -> f64 {
    let b = m.basis();
    let aduv = b.br(u, v);
    let s = m.ads(u, v) + &aduv;
    let full = &s + m.ads(v, u);
    0.25 * m.norm_sq(&full) - m.inner(&s, &aduv) - m.inner(&m.ads(u, u), &m.ads(v, v))
}

/// Arnold's four-term expression for the same quantity.
pub fn sectional_numerator_arnold(m: &MetricOperator, u: &AlgebraElement, v: &AlgebraElement) -> f64 {
    let b = m.basis();
    let aduv = b.br(u, v);
    let a = m.ads(u, v);
    let c = m.ads(v, u);
    0.25 * m.norm_sq(&(&a + &c)) - m.inner(&m.ads(u, u), &m.ads(v, v)) - 0.75 * m.norm_sq(&aduv)
        + 0.5 * m.inner(&aduv, &(c - a))
}

/// Ric(u,u) = Σₖ g(R(fₖ,u)u,fₖ) over a g-orthonormal basis.
pub fn ricci_numeric(m: &MetricOperator, u: &AlgebraElement) -> Result<f64> {
    m.basis().check(u)?;
    let frame = m.g_orthonormal_basis();
    Ok(ricci_with_frame(m, &frame, u))
}

fn ricci_with_frame(m: &MetricOperator, frame: &DMatrix<f64>, u: &AlgebraElement) -> f64 {
    frame
        .column_iter()
        .map(|f| sectional_numerator(m, &f.into_owned(), u))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RicciResult {
    /// Ric(bᵢ, bⱼ) on the structured basis.
    pub matrix: DMatrix<f64>,
    pub diagonality_residual: f64,
}

impl RicciResult {
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.matrix.nrows()).map(|i| self.matrix[(i, i)]).collect()
    }

    pub fn symmetry_residual(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }
}

/// Polarised Ricci form on the basis elements.
pub fn ricci_matrix(m: &MetricOperator) -> RicciResult {
    let d = m.dim();
    let b = m.basis();
    let frame = m.g_orthonormal_basis();
    let diag: Vec<f64> = (0..d).map(|i| ricci_with_frame(m, &frame, &b.unit(i))).collect();
    let mut r = DMatrix::from_diagonal(&DVector::from_vec(diag.clone()));
    let mut off: f64 = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            let s = ricci_with_frame(m, &frame, &(b.unit(i) + b.unit(j)));
            let x = 0.5 * (s - diag[i] - diag[j]);
            r[(i, j)] = x;
            r[(j, i)] = x;
            off = off.max(x.abs());
        }
    }
    RicciResult {
        matrix: r,
        diagonality_residual: off,
    }
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Closed-form Ricci diagonal for a metric diagonal in the e_ij basis of so(n),
/// λ listed in the order e12, e13, …, e1n, e23, ….
pub fn ricci_rigid_closed_form(n: usize, lambda: &[f64]) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    if lambda.len() != n * (n - 1) / 2 {
        return Err(Error::BasisMismatch {
            expected: n * (n - 1) / 2,
            found: lambda.len(),
        });
    }
    if lambda.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidMetric("eigenvalues must be positive".into()));
    }
    let lam = |i, j| lambda[pair_index(n, i, j)];
    let mut out = Vec::with_capacity(lambda.len());
    for i in 0..n {
        for j in (i + 1)..n {
            let lij = lam(i, j);
            let mut s = 0.0;
            for k in (0..n).filter(|&k| k != i && k != j) {
                let (lik, ljk) = (lam(i, k), lam(j, k));
                s += (lij - lik + ljk) * (lij + lik - ljk) / (2.0 * lik * ljk);
            }
            out.push(s);
        }
    }
    Ok(out)
}

/// Rigid-body form: Σ_k 2μᵢμⱼ/((μᵢ+μₖ)(μⱼ+μₖ)).
pub fn ricci_rigid_body_closed_form(mu: &[f64]) -> Result<Vec<f64>> {
    let n = mu.len();
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    if mu.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidMetric("moments must be positive".into()));
    }
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let s: f64 = (0..n)
                .filter(|&k| k != i && k != j)
                .map(|k| 2.0 * mu[i] * mu[j] / ((mu[i] + mu[k]) * (mu[j] + mu[k])))
                .sum();
            out.push(s);
        }
    }
    Ok(out)
}

/// [𝔥^⊥, 𝔥^⊥] ⊆ 𝔥 together with [𝔥, 𝔥^⊥] ⊆ 𝔥^⊥.
pub fn cartan_condition_check(basis: &StructuredBasis) -> bool {
    basis.subalgebra_dim() > 0 && basis.split_residual() < 1e-12 && basis.cartan_residual() < 1e-12
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheegerBranch {
    Subalgebra,
    Complement,
    /// u ∈ 𝔥^⊥ without the Cartan condition.
    ComplementGeneral,
}

/// Closed-form g(R(u,v)v,u) for Λ = I + δP with u purely in 𝔥 or in 𝔥^⊥.
pub fn cheeger_sectional(m: &MetricOperator, u: &AlgebraElement, v: &AlgebraElement) -> Result<(f64, CheegerBranch)> {
    let delta = m
        .cheeger_delta()
        .ok_or_else(|| Error::Unsupported("closed form needs a Cheeger metric".into()))?;
    let b = m.basis();
    b.check(u)?;
    b.check(v)?;
    let (pu, qu) = (b.p(u), b.q(u));
    let scale = b.biinv_norm_sq(u).sqrt().max(f64::MIN_POSITIVE);
    let (pv, qv) = (b.p(v), b.q(v));
    let n2 = |x: &AlgebraElement| b.biinv_norm_sq(x);
    let d1 = 1.0 + delta;
    if b.biinv_norm_sq(&qu).sqrt() <= 1e-12 * scale {
        let val = 0.25 * d1 * n2(&b.br(u, &pv)) + 0.25 * d1 * d1 * n2(&b.br(u, &qv));
        return Ok((val, CheegerBranch::Subalgebra));
    }
    if b.biinv_norm_sq(&pu).sqrt() > 1e-12 * scale {
        return Err(Error::Unsupported(
            "closed form needs u in the subalgebra or its complement".into(),
        ));
    }
    if cartan_condition_check(b) {
        let val = 0.25 * d1 * d1 * n2(&b.br(u, &pv)) + 0.25 * (1.0 - 3.0 * delta) * n2(&b.br(u, &qv));
        Ok((val, CheegerBranch::Complement))
    } else {
        let val = 0.25 * (1.0 - 3.0 * delta) * n2(&b.p(&b.br(u, &qv))) + 0.25 * n2(&b.q(&b.br(u, &m.lam(v))));
        Ok((val, CheegerBranch::ComplementGeneral))
    }
}

/// Ricci constants on 𝔥 and 𝔥^⊥ (against the bi-invariant norm).
pub fn block_einstein_constants(beta_g: f64, beta_h: f64, delta: f64) -> (f64, f64) {
    let c1 = ((1.0 + delta).powi(2) * beta_g - delta * (2.0 + delta) * beta_h) / 4.0;
    let c2 = (1.0 - delta) * beta_g / 4.0;
    (c1, c2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaConstants {
    pub beta_g: f64,
    pub beta_h: f64,
    /// Spread of −Tr(ad_v ad_v)/|v|² over basis vectors.
    pub residual: f64,
}

/// β_G and β_H from Tr(ad_v ad_v) = −β|v|², 𝔥 restricted to its own block.
pub fn beta_constants(basis: &StructuredBasis) -> Result<BetaConstants> {
    let (d, h) = (basis.dim(), basis.subalgebra_dim());
    if h == 0 {
        return Err(Error::InvalidArgument("basis has no subalgebra split".into()));
    }
    let killing = |v: &AlgebraElement, k: usize| {
        let a = basis.ad_unchecked(v);
        let a = a.view((0, 0), (k, k));
        -(a * a).trace() / basis.biinv_norm_sq(v)
    };
    let g: Vec<f64> = (0..d).map(|i| killing(&basis.unit(i), d)).collect();
    let hv: Vec<f64> = (0..h).map(|i| killing(&basis.unit(i), h)).collect();
    let spread = |xs: &[f64]| {
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    Ok(BetaConstants {
        beta_g: g[0],
        beta_h: hv[0],
        residual: spread(&g).max(spread(&hv)),
    })
}

/// Tabulated constants for SU(n) ⊃ SO(n): β_G = 4n, β_H = 2(n² − n − 4).
pub fn beta_constants_su_so(n: usize) -> (f64, f64) {
    let n = n as f64;
    (4.0 * n, 2.0 * (n * n - n - 4.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockEinsteinReport {
    pub c1: f64,
    pub c2: f64,
    /// max |Ric − (C1 |P·|² + C2 |Q·|²)| entrywise.
    pub residual: f64,
}

/// Compares the numeric Ricci matrix with C1 |Pv|² + C2 |Qv|².
pub fn block_einstein_residual(m: &MetricOperator, ric: &RicciResult, c1: f64, c2: f64) -> f64 {
    let b = m.basis();
    let d = m.dim();
    let pm = DMatrix::from_columns(&(0..d).map(|i| b.p(&b.unit(i))).collect::<Vec<_>>());
    let qm = DMatrix::from_columns(&(0..d).map(|i| b.q(&b.unit(i))).collect::<Vec<_>>());
    let g = b.biinv_gram();
    let model = (pm.transpose() * g * &pm) * c1 + (qm.transpose() * g * &qm) * c2;
    (&ric.matrix - model).amax()
}

/// Least-squares block constants read off the diagonal, plus the residual.
pub fn block_einstein_fit(m: &MetricOperator) -> BlockEinsteinReport {
    let b = m.basis();
    let ric = ricci_matrix(m);
    let (d, h) = (m.dim(), b.subalgebra_dim());
    let g = b.biinv_gram();
    let avg = |r: core::ops::Range<usize>| {
        let k = r.len().max(1) as f64;
        r.map(|i| ric.matrix[(i, i)] / g[(i, i)]).sum::<f64>() / k
    };
    let (c1, c2) = (avg(0..h), avg(h..d));
    let residual = block_einstein_residual(m, &ric, c1, c2);
    BlockEinsteinReport { c1, c2, residual }
}

fn steady_guard(m: &MetricOperator, u0: &AlgebraElement) -> Result<()> {
    m.basis().check(u0)?;
    let r = m.steady_residual(u0);
    if r >= 1e-10 * m.norm_sq(u0).max(1.0) {
        return Err(inapplicable("misiolek", "initial velocity is not steady", r));
    }
    Ok(())
}

/// g(ad_v u₀ + ad⋆_v u₀, ad_v u₀); negative values force conjugate points.
pub fn misiolek_value(m: &MetricOperator, u0: &AlgebraElement, v: &AlgebraElement) -> Result<f64> {
    steady_guard(m, u0)?;
    m.basis().check(v)?;
    Ok(misiolek_raw(m, u0, v))
}

fn misiolek_raw(m: &MetricOperator, u0: &AlgebraElement, v: &AlgebraElement) -> f64 {
    let x = m.basis().br(v, u0);
    m.inner(&(&x + m.ads(v, u0)), &x)
}

/// ⟨(Λ − λI)Lv, Lv⟩ with L = ad_{u₀}, for u₀ an eigenvector of Λ.
pub fn misiolek_quadratic_form(m: &MetricOperator, u0: &AlgebraElement, v: &AlgebraElement) -> Result<f64> {
    m.basis().check(v)?;
    let (lambda, res) = m.eigen_residual(u0);
    if res > 1e-10 {
        return Err(inapplicable("misiolek", "u0 is not an eigenvector of the inertia operator", res));
    }
    let b = m.basis();
    let lv = b.br(u0, v);
    Ok(b.form(&(m.lam(&lv) - &lv * lambda), &lv))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MisiolekScan {
    pub minimum: f64,
    pub argmin: AlgebraElement,
    pub samples: usize,
    /// A negative value was found; absence never certifies anything.
    pub detected: bool,
}

/// Minimum over the basis vectors and `random` g-unit vectors from a seeded stream.
pub fn misiolek_scan(m: &MetricOperator, u0: &AlgebraElement, random: usize, seed: u64) -> Result<MisiolekScan> {
    steady_guard(m, u0)?;
    let d = m.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<AlgebraElement> = (0..d).map(|i| m.basis().unit(i)).collect();
    while candidates.len() < d + random {
        let v = AlgebraElement::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
        let n = m.norm_sq(&v).sqrt();
        if n > 1e-3 {
            candidates.push(v / n);
        }
    }
    let mut best = (f64::INFINITY, candidates[0].clone());
    for v in &candidates {
        let val = misiolek_raw(m, u0, v) / m.norm_sq(v);
        if val < best.0 {
            best = (val, v.clone());
        }
    }
    Ok(MisiolekScan {
        minimum: best.0,
        argmin: best.1,
        samples: candidates.len(),
        detected: best.0 < 0.0,
    })
}

/// Diagonal so(n) metrics only: the Λ eigenvalues in basis order.
pub fn diagonal_lambda(m: &MetricOperator) -> Option<Vec<f64>> {
    match m.basis().family() {
        Family::So(_) => m.diagonal_eigenvalues().map(|d| d.iter().cloned().collect()),
        _ => None,
    }
}
