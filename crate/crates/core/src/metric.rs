//! Left-invariant metrics g(u, v) = ⟨u, Λv⟩ and the induced ad⋆, Ad⋆.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use nalgebra::ComplexField;
use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraElement, Family, GroupElement, StructuredBasis};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum MetricVariant {
    /// Moments of inertia μ on so(n); λᵢⱼ = (μᵢ+μⱼ)/2.
    RigidBody(Vec<f64>),
    /// One positive eigenvalue per basis element.
    DiagonalQuadratic(Vec<f64>),
    /// Λ = I + δP over a split basis.
    Cheeger(f64),
    /// Coordinate matrix of Λ, self-adjoint for the bi-invariant form.
    GenericQuadratic(DMatrix<f64>),
}

#[derive(Debug, Clone)]
pub struct MetricOperator {
    basis: Arc<StructuredBasis>,
    variant: MetricVariant,
    lambda: DMatrix<f64>,
    lambda_inv: DMatrix<f64>,
    gram: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    diagonal: Option<DVector<f64>>,
}

impl MetricOperator {
    pub fn new(basis: Arc<StructuredBasis>, variant: MetricVariant) -> Result<Self> {
        let dim = basis.dim();
        let g = basis.biinv_gram().clone();
        let (lambda, lambda_inv, diagonal) = match &variant {
            MetricVariant::RigidBody(mu) => {
                let n = match basis.family() {
                    Family::So(n) => n,
                    _ => return Err(Error::InvalidMetric("rigid-body metric needs so(n)".into())),
                };
                if mu.len() != n {
                    return Err(Error::InvalidMetric(format!("need {n} moments, got {}", mu.len())));
                }
                if mu.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
                    return Err(Error::InvalidMetric("moments must be positive".into()));
                }
                let mut lam = Vec::with_capacity(dim);
                for i in 0..n {
                    for j in (i + 1)..n {
                        lam.push(0.5 * (mu[i] + mu[j]));
                    }
                }
                diag_parts(&DVector::from_vec(lam))
            }
            MetricVariant::DiagonalQuadratic(lam) => {
                if lam.len() != dim {
                    return Err(Error::InvalidMetric(format!("need {dim} eigenvalues, got {}", lam.len())));
                }
                if lam.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
                    return Err(Error::InvalidMetric("eigenvalues must be positive".into()));
                }
                diag_parts(&DVector::from_column_slice(lam))
            }
            MetricVariant::Cheeger(delta) => {
                let m = basis.subalgebra_dim();
                if m == 0 {
                    return Err(Error::InvalidMetric("Cheeger metric needs a subalgebra split".into()));
                }
                if !(*delta > -1.0) || !delta.is_finite() {
                    return Err(Error::InvalidMetric(format!("δ = {delta} must exceed −1")));
                }
                let lam = DVector::from_fn(dim, |k, _| if k < m { 1.0 + delta } else { 1.0 });
                let inv = DVector::from_fn(dim, |k, _| if k < m { 1.0 - delta / (1.0 + delta) } else { 1.0 });
                (
                    DMatrix::from_diagonal(&lam),
                    DMatrix::from_diagonal(&inv),
                    Some(lam),
                )
            }
            MetricVariant::GenericQuadratic(l) => {
                if l.shape() != (dim, dim) || l.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidMetric("Λ must be a finite dim×dim matrix".into()));
                }
                let gl = &g * l;
                let asym = (&gl - gl.transpose()).amax();
                if asym > 1e-10 * gl.amax().max(1.0) {
                    return Err(Error::InvalidMetric(format!("Λ is not self-adjoint (residual {asym:e})")));
                }
                let sym = (&gl + gl.transpose()) * 0.5;
                if sym.clone().cholesky().is_none() {
                    return Err(Error::InvalidMetric("Λ is not positive definite".into()));
                }
                let ginv = g.clone().try_inverse().expect("Gram is nonsingular");
                let lam = &ginv * sym;
                let inv = lam
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidMetric("Λ is singular".into()))?;
                (lam, inv, None)
            }
        };
        let gram = &g * &lambda;
        let gram = (&gram + gram.transpose()) * 0.5;
        let gram_inv = &lambda_inv * g.try_inverse().expect("Gram is nonsingular");
        Ok(MetricOperator {
            basis,
            variant,
            lambda,
            lambda_inv,
            gram,
            gram_inv,
            diagonal,
        })
    }

    pub fn bi_invariant(basis: Arc<StructuredBasis>) -> Self {
        let dim = basis.dim();
        Self::new(basis, MetricVariant::DiagonalQuadratic(alloc::vec![1.0; dim]))
            .expect("identity is a valid metric")
    }

    pub fn rigid_body(basis: Arc<StructuredBasis>, mu: &[f64]) -> Result<Self> {
        Self::new(basis, MetricVariant::RigidBody(mu.to_vec()))
    }

    pub fn diagonal(basis: Arc<StructuredBasis>, lambda: &[f64]) -> Result<Self> {
        Self::new(basis, MetricVariant::DiagonalQuadratic(lambda.to_vec()))
    }

    pub fn cheeger(basis: Arc<StructuredBasis>, delta: f64) -> Result<Self> {
        Self::new(basis, MetricVariant::Cheeger(delta))
    }

    pub fn generic(basis: Arc<StructuredBasis>, lambda: DMatrix<f64>) -> Result<Self> {
        Self::new(basis, MetricVariant::GenericQuadratic(lambda))
    }

    pub fn basis(&self) -> &Arc<StructuredBasis> {
        &self.basis
    }

    pub fn variant(&self) -> &MetricVariant {
        &self.variant
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn cheeger_delta(&self) -> Option<f64> {
        match self.variant {
            MetricVariant::Cheeger(d) => Some(d),
            _ => None,
        }
    }

    /// Dense coordinate matrix of Λ.
    pub fn lambda_matrix(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn lambda_inv_matrix(&self) -> &DMatrix<f64> {
        &self.lambda_inv
    }

    /// Gram matrix of g in the basis, G·Λ.
    pub fn metric_gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Eigenvalues of Λ per basis element, when Λ is diagonal in coordinates.
    pub fn diagonal_eigenvalues(&self) -> Option<&DVector<f64>> {
        self.diagonal.as_ref()
    }

    pub(crate) fn lam(&self, x: &AlgebraElement) -> AlgebraElement {
        &self.lambda * x
    }

    pub(crate) fn lam_inv(&self, x: &AlgebraElement) -> AlgebraElement {
        &self.lambda_inv * x
    }

    pub(crate) fn inner(&self, x: &AlgebraElement, y: &AlgebraElement) -> f64 {
        (&self.gram * y).dot(x)
    }

    pub(crate) fn norm_sq(&self, x: &AlgebraElement) -> f64 {
        self.inner(x, x)
    }

    pub fn apply_lambda(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        self.basis.check(x)?;
        Ok(self.lam(x))
    }

    pub fn apply_lambda_inv(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        self.basis.check(x)?;
        Ok(self.lam_inv(x))
    }

    pub fn metric_inner(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<f64> {
        self.basis.check(x)?;
        self.basis.check(y)?;
        Ok(self.inner(x, y))
    }

    pub(crate) fn ads(&self, u: &AlgebraElement, v: &AlgebraElement) -> AlgebraElement {
        -self.lam_inv(&self.basis.br(u, &self.lam(v)))
    }

    /// ad⋆_u v = −Λ⁻¹(ad_u Λv).
    pub fn ad_star(&self, u: &AlgebraElement, v: &AlgebraElement) -> Result<AlgebraElement> {
        self.basis.check(u)?;
        self.basis.check(v)?;
        Ok(self.ads(u, v))
    }

    /// Matrix of v ↦ ad⋆_u v.
    pub fn ad_star_matrix(&self, u: &AlgebraElement) -> DMatrix<f64> {
        -(&self.lambda_inv * self.basis.ad_unchecked(u) * &self.lambda)
    }

    /// Matrix of v ↦ ad⋆_v u = Λ⁻¹ ad_{Λu} v.
    pub fn ad_star_swapped_matrix(&self, u: &AlgebraElement) -> DMatrix<f64> {
        &self.lambda_inv * self.basis.ad_unchecked(&self.lam(u))
    }

    /// Matrix of Ad⋆_g, the g-adjoint of Ad_g.
    pub fn ad_star_group_matrix(&self, g: &GroupElement) -> DMatrix<f64> {
        let ad = self.basis.ad_group_matrix(g);
        &self.gram_inv * ad.transpose() * &self.gram
    }

    /// ‖ad⋆_u u‖; zero exactly for steady directions.
    pub fn steady_residual(&self, u: &AlgebraElement) -> f64 {
        self.ads(u, u).norm()
    }

    /// Columns form a g-orthonormal basis: explicit rescaling when Λ and the
    /// Gram matrix are diagonal, Gram–Schmidt otherwise.
    pub fn g_orthonormal_basis(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let g = self.basis.biinv_gram();
        let gram_diag = (0..dim).all(|i| (0..dim).all(|j| i == j || g[(i, j)] == 0.0));
        if let (Some(lam), true) = (&self.diagonal, gram_diag) {
            return DMatrix::from_fn(dim, dim, |i, j| {
                if i == j {
                    1.0 / (lam[i] * g[(i, i)]).sqrt()
                } else {
                    0.0
                }
            });
        }
        let cols: Vec<AlgebraElement> = (0..dim).map(|k| self.basis.unit(k)).collect();
        DMatrix::from_columns(&self.gram_schmidt(&cols))
    }

    /// Modified Gram–Schmidt in the metric, run twice; near-dependent inputs
    /// (relative norm below 1e-10) are dropped.
    pub fn gram_schmidt(&self, vectors: &[AlgebraElement]) -> Vec<AlgebraElement> {
        let mut out: Vec<AlgebraElement> = Vec::new();
        for v in vectors {
            let scale = self.norm_sq(v).sqrt();
            let mut w = v.clone();
            for _ in 0..2 {
                for f in &out {
                    let c = self.inner(f, &w);
                    w -= f * c;
                }
            }
            let nw = self.norm_sq(&w).sqrt();
            if nw > 1e-10 * scale.max(f64::MIN_POSITIVE) {
                out.push(w / nw);
            }
        }
        out
    }

    /// Rayleigh quotient λ = ⟨u,Λu⟩/⟨u,u⟩ and the eigen-residual ‖Λu − λu‖/‖u‖.
    pub fn eigen_residual(&self, u: &AlgebraElement) -> (f64, f64) {
        let b = &self.basis;
        let lu = self.lam(u);
        let lambda = b.form(u, &lu) / b.form(u, u);
        (lambda, (lu - u * lambda).norm() / u.norm())
    }
}

fn diag_parts(lam: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>, Option<DVector<f64>>) {
    let inv = lam.map(|l| 1.0 / l);
    (
        DMatrix::from_diagonal(lam),
        DMatrix::from_diagonal(&inv),
        Some(lam.clone()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn so3() -> Arc<StructuredBasis> {
        Arc::new(StructuredBasis::so(3).unwrap())
    }

    #[test]
    fn rigid_body_eigenvalues() {
        let m = MetricOperator::rigid_body(so3(), &[1.0, 2.0, 3.0]).unwrap();
        let e12 = m.basis().unit(0);
        assert!((m.apply_lambda(&e12).unwrap() - &e12 * 1.5).amax() < 1e-15);
    }

    #[test]
    fn ad_star_table_entry() {
        let m = MetricOperator::rigid_body(so3(), &[1.0, 2.0, 3.0]).unwrap();
        let b = m.basis();
        let (e12, e13, e23) = (b.unit(0), b.unit(1), b.unit(2));
        let got = m.ad_star(&e13, &e12).unwrap();
        assert!((got - &e23 * 0.6).amax() < 1e-15);
        assert!(m.ad_star(&e12, &e12).unwrap().amax() < 1e-15);
    }

    #[test]
    fn cheeger_lambda_and_inverse() {
        let b = Arc::new(StructuredBasis::su(3, true).unwrap());
        let m = MetricOperator::cheeger(b.clone(), 0.7).unwrap();
        let id = DMatrix::<f64>::identity(8, 8);
        assert!((m.lambda_matrix() * m.lambda_inv_matrix() - id).amax() < 1e-15);
        let p = b.unit(1);
        let q = b.unit(5);
        let lu = m.apply_lambda(&(&p + &q)).unwrap();
        assert!((lu - (&p * 1.7 + &q)).amax() < 1e-15);
        assert!(MetricOperator::cheeger(b, -1.0).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        let b = so3();
        assert!(MetricOperator::rigid_body(b.clone(), &[1.0, 0.0, 2.0]).is_err());
        assert!(MetricOperator::rigid_body(b.clone(), &[1.0, 2.0]).is_err());
        assert!(MetricOperator::diagonal(b.clone(), &[1.0, 2.0]).is_err());
        assert!(MetricOperator::cheeger(b.clone(), 0.5).is_err());
        let nonsym = DMatrix::from_row_slice(3, 3, &[2.0, 0.1, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 2.0]);
        assert!(MetricOperator::generic(b.clone(), nonsym).is_err());
        let indefinite = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![1.0, -1.0, 1.0]));
        assert!(MetricOperator::generic(b, indefinite).is_err());
    }

    #[test]
    fn generic_is_symmetrized() {
        let l = DMatrix::from_row_slice(3, 3, &[2.0, 0.3 + 1e-12, 0.0, 0.3, 1.5, 0.1, 0.0, 0.1, 1.0]);
        let m = MetricOperator::generic(so3(), l).unwrap();
        let lam = m.lambda_matrix();
        assert_eq!(lam[(0, 1)], lam[(1, 0)]);
    }

    #[test]
    fn orthonormal_basis_is_orthonormal() {
        let l = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.5, 0.1, 0.0, 0.1, 1.0]);
        let m = MetricOperator::generic(so3(), l).unwrap();
        let f = m.g_orthonormal_basis();
        let gram = f.transpose() * m.metric_gram() * &f;
        assert!((gram - DMatrix::<f64>::identity(3, 3)).amax() < 1e-13);
    }
}
