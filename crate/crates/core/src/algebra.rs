//! Matrix Lie algebras with a cached structure-constant contraction.
//!
//! Complex matrices (su(n)) are held through the real embedding
//! `a + ib ↦ [[a, -b], [b, a]]`, so every basis matrix, commutator and group
//! element is a real matrix. Coordinates are always real.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

// std float methods shadow this trait when std is linked
#[allow(unused_imports)]
use nalgebra::ComplexField;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg;

/// Coordinates relative to a [`StructuredBasis`].
pub type AlgebraElement = DVector<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    So(usize),
    Su(usize),
    /// Abelian surrogate spanned by commuting 2×2 rotation blocks.
    Torus(usize),
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpMethod {
    Spectral,
    PadeFallback,
}

#[derive(Debug, Clone)]
pub struct StructuredBasis {
    family: Family,
    n: usize,
    field: Field,
    mats: Vec<DMatrix<f64>>,
    labels: Vec<String>,
    structure: Vec<f64>,
    ad_basis: Vec<DMatrix<f64>>,
    gram: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    sub_dim: usize,
}

/// -½ Re Tr(uv) on the stored (possibly embedded) matrices.
fn trace_form(field: Field, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let tr = x.component_mul(&y.transpose()).sum();
    match field {
        Field::Real => -0.5 * tr,
        Field::Complex => -0.25 * tr,
    }
}

fn embed(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<f64> {
    let n = re.nrows();
    let mut e = DMatrix::zeros(2 * n, 2 * n);
    e.view_mut((0, 0), (n, n)).copy_from(re);
    e.view_mut((n, n), (n, n)).copy_from(re);
    e.view_mut((n, 0), (n, n)).copy_from(im);
    e.view_mut((0, n), (n, n)).copy_from(&(-im));
    e
}

fn so_generator(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = -1.0;
    m[(j, i)] = 1.0;
    m
}

impl StructuredBasis {
    /// Builds a basis from matrices closed under the commutator. The first
    /// `sub_dim` elements span the subalgebra 𝔥, the rest its complement.
    pub fn from_matrices(
        family: Family,
        n: usize,
        field: Field,
        mats: Vec<DMatrix<f64>>,
        labels: Vec<String>,
        sub_dim: usize,
    ) -> Result<Self> {
        let dim = mats.len();
        if dim == 0 || labels.len() != dim || sub_dim > dim {
            return Err(Error::InvalidArgument("empty or inconsistent basis".into()));
        }
        let size = match field {
            Field::Real => n,
            Field::Complex => 2 * n,
        };
        if mats.iter().any(|m| m.shape() != (size, size)) {
            return Err(Error::InvalidArgument("basis matrix of wrong shape".into()));
        }
        let gram = DMatrix::from_fn(dim, dim, |i, j| trace_form(field, &mats[i], &mats[j]));
        let gram = (&gram + gram.transpose()) * 0.5;
        if gram.clone().cholesky().is_none() {
            return Err(Error::InvalidArgument(
                "bi-invariant form is not positive definite on this basis".into(),
            ));
        }
        let gram_inv = gram.clone().try_inverse().expect("positive definite");
        let mut basis = StructuredBasis {
            family,
            n,
            field,
            mats,
            labels,
            structure: Vec::new(),
            ad_basis: Vec::new(),
            gram,
            gram_inv,
            sub_dim,
        };
        let mut structure = alloc::vec![0.0; dim * dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let c = &basis.mats[i] * &basis.mats[j] - &basis.mats[j] * &basis.mats[i];
                let coords = basis.coords_of_matrix(&c);
                let back = basis.matrix_of_unchecked(&coords);
                let resid = (&back - &c).amax();
                if resid > 1e-10 * c.amax().max(1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "span not closed under brackets ({}, {}): residual {resid:e}",
                        basis.labels[i], basis.labels[j]
                    )));
                }
                for k in 0..dim {
                    structure[(i * dim + j) * dim + k] = coords[k];
                }
            }
        }
        basis.ad_basis = (0..dim)
            .map(|i| DMatrix::from_fn(dim, dim, |k, j| structure[(i * dim + j) * dim + k]))
            .collect();
        basis.structure = structure;
        if sub_dim > 0 {
            let orth = basis.gram.view((0, sub_dim), (sub_dim, dim - sub_dim)).amax();
            let split = basis.split_residual();
            if orth > 1e-12 || split > 1e-10 {
                return Err(Error::InvalidArgument(format!(
                    "first {sub_dim} elements do not give a reductive split (orthogonality {orth:e}, brackets {split:e})"
                )));
            }
        }
        Ok(basis)
    }

    /// so(n) with eᵢⱼ = −Eᵢⱼ + Eⱼᵢ in lexicographic order, orthonormal for ½Tr(uvᵀ).
    pub fn so(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        let mut mats = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                mats.push(so_generator(n, i, j));
                labels.push(format!("e{}{}", i + 1, j + 1));
            }
        }
        Self::from_matrices(Family::So(n), n, Field::Real, mats, labels, 0)
    }

    /// su(n), orthonormal for −½Tr(uv): the real antisymmetric eᵢⱼ first,
    /// then i(Eᵢⱼ+Eⱼᵢ), then scaled diagonal generators. With
    /// `embed_so_subalgebra` the first n(n−1)/2 elements form the split 𝔥 = so(n).
    pub fn su(n: usize, embed_so_subalgebra: bool) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        let zero = DMatrix::zeros(n, n);
        let mut mats = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                mats.push(embed(&so_generator(n, i, j), &zero));
                labels.push(format!("e{}{}", i + 1, j + 1));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let mut s = DMatrix::zeros(n, n);
                s[(i, j)] = 1.0;
                s[(j, i)] = 1.0;
                mats.push(embed(&zero, &s));
                labels.push(format!("s{}{}", i + 1, j + 1));
            }
        }
        for k in 1..n {
            let scale = (2.0 / (k * (k + 1)) as f64).sqrt();
            let mut d = DMatrix::zeros(n, n);
            for m in 0..k {
                d[(m, m)] = scale;
            }
            d[(k, k)] = -(k as f64) * scale;
            mats.push(embed(&zero, &d));
            labels.push(format!("d{k}"));
        }
        let sub = if embed_so_subalgebra { n * (n - 1) / 2 } else { 0 };
        Self::from_matrices(Family::Su(n), n, Field::Complex, mats, labels, sub)
    }

    /// Abelian algebra of `k` commuting rotation blocks e₁₂, e₃₄, … in so(2k).
    pub fn torus(k: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidDimension(k));
        }
        let n = 2 * k;
        let mats = (0..k).map(|b| so_generator(n, 2 * b, 2 * b + 1)).collect();
        let labels = (0..k).map(|b| format!("e{}{}", 2 * b + 1, 2 * b + 2)).collect();
        Self::from_matrices(Family::Torus(k), n, Field::Real, mats, labels, 0)
    }

    /// Reorders so the listed basis elements come first and declares them 𝔥.
    pub fn with_split(&self, h: &[usize]) -> Result<Self> {
        let dim = self.dim();
        if h.iter().any(|&i| i >= dim) {
            return Err(Error::InvalidArgument("subalgebra index out of range".into()));
        }
        let mut order: Vec<usize> = h.to_vec();
        order.extend((0..dim).filter(|i| !h.contains(i)));
        let mats = order.iter().map(|&i| self.mats[i].clone()).collect();
        let labels = order.iter().map(|&i| self.labels[i].clone()).collect();
        Self::from_matrices(self.family, self.n, self.field, mats, labels, h.len())
    }

    pub fn dim(&self) -> usize {
        self.mats.len()
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Size n of the n×n matrices (before the real embedding).
    pub fn matrix_size(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn basis_matrices(&self) -> &[DMatrix<f64>] {
        &self.mats
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// c[i][j][k] with [bᵢ, bⱼ] = Σₖ c[i][j][k] bₖ.
    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        let d = self.dim();
        self.structure[(i * d + j) * d + k]
    }

    pub fn biinv_gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn subalgebra_dim(&self) -> usize {
        self.sub_dim
    }

    pub fn unit(&self, k: usize) -> AlgebraElement {
        let mut e = DVector::zeros(self.dim());
        e[k] = 1.0;
        e
    }

    pub fn check(&self, x: &AlgebraElement) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::BasisMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn matrix_of_unchecked(&self, x: &AlgebraElement) -> DMatrix<f64> {
        let s = self.mats[0].nrows();
        let mut m = DMatrix::zeros(s, s);
        for (k, b) in self.mats.iter().enumerate() {
            if x[k] != 0.0 {
                m += b * x[k];
            }
        }
        m
    }

    /// Stored matrix Σ xₖbₖ (real embedding for complex algebras).
    pub fn matrix_of(&self, x: &AlgebraElement) -> Result<DMatrix<f64>> {
        self.check(x)?;
        Ok(self.matrix_of_unchecked(x))
    }

    /// Coordinates of a matrix in the span, by the bi-invariant form.
    pub fn coords_of_matrix(&self, m: &DMatrix<f64>) -> AlgebraElement {
        let rhs = DVector::from_iterator(
            self.dim(),
            self.mats.iter().map(|b| trace_form(self.field, m, b)),
        );
        &self.gram_inv * rhs
    }

    pub(crate) fn br(&self, x: &AlgebraElement, y: &AlgebraElement) -> AlgebraElement {
        self.ad_unchecked(x) * y
    }

    pub fn bracket(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.br(x, y))
    }

    /// Dense commutator of the reconstructed matrices, used as an oracle.
    pub fn bracket_by_matrices(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
        let a = self.matrix_of(x)?;
        let b = self.matrix_of(y)?;
        Ok(self.coords_of_matrix(&(&a * &b - &b * &a)))
    }

    pub(crate) fn form(&self, x: &AlgebraElement, y: &AlgebraElement) -> f64 {
        (&self.gram * y).dot(x)
    }

    pub fn biinv_form(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.form(x, y))
    }

    pub fn biinv_norm_sq(&self, x: &AlgebraElement) -> f64 {
        self.form(x, x)
    }

    fn require_split(&self) -> Result<()> {
        if self.sub_dim == 0 {
            return Err(Error::Unsupported("projection needs a subalgebra split".into()));
        }
        Ok(())
    }

    pub(crate) fn p(&self, x: &AlgebraElement) -> AlgebraElement {
        let mut out = x.clone();
        out.rows_mut(self.sub_dim, self.dim() - self.sub_dim).fill(0.0);
        out
    }

    pub(crate) fn q(&self, x: &AlgebraElement) -> AlgebraElement {
        let mut out = x.clone();
        out.rows_mut(0, self.sub_dim).fill(0.0);
        out
    }

    /// Orthogonal projection P onto 𝔥.
    pub fn project_h(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        self.require_split()?;
        self.check(x)?;
        Ok(self.p(x))
    }

    /// Orthogonal projection Q = I − P onto 𝔥^⊥.
    pub fn project_h_perp(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        self.require_split()?;
        self.check(x)?;
        Ok(self.q(x))
    }

    pub(crate) fn ad_unchecked(&self, x: &AlgebraElement) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for (i, a) in self.ad_basis.iter().enumerate() {
            if x[i] != 0.0 {
                m += a * x[i];
            }
        }
        m
    }

    /// Matrix of ad_x, whose j-th column is [x, bⱼ].
    pub fn ad_matrix(&self, x: &AlgebraElement) -> Result<DMatrix<f64>> {
        self.check(x)?;
        Ok(self.ad_unchecked(x))
    }

    pub fn identity(&self) -> GroupElement {
        let s = self.mats[0].nrows();
        GroupElement {
            matrix: DMatrix::identity(s, s),
            field: self.field,
        }
    }

    pub fn group_exp(&self, x: &AlgebraElement, t: f64) -> Result<GroupElement> {
        Ok(self.group_exp_with_method(x, t)?.0)
    }

    /// exp(t·x), spectral for skew inputs and Padé otherwise; the method
    /// used is returned alongside.
    pub fn group_exp_with_method(&self, x: &AlgebraElement, t: f64) -> Result<(GroupElement, ExpMethod)> {
        let s = self.matrix_of(x)? * t;
        let (matrix, method) = if linalg::is_skew(&s, 1e-13) {
            (linalg::expm_skew(&s), ExpMethod::Spectral)
        } else {
            (linalg::expm(&s), ExpMethod::PadeFallback)
        };
        Ok((
            GroupElement {
                matrix,
                field: self.field,
            },
            method,
        ))
    }

    /// Matrix of Ad_g, whose j-th column holds the coordinates of g bⱼ g⁻¹.
    pub fn ad_group_matrix(&self, g: &GroupElement) -> DMatrix<f64> {
        let ginv = g.inverse();
        let cols: Vec<AlgebraElement> = self
            .mats
            .iter()
            .map(|b| self.coords_of_matrix(&(&g.matrix * b * &ginv.matrix)))
            .collect();
        DMatrix::from_columns(&cols)
    }

    /// Largest |c-contraction| violating the Jacobi identity over basis triples.
    pub fn jacobi_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let bi = self.unit(i);
                    let bj = self.unit(j);
                    let bk = self.unit(k);
                    let t1 = self.br(&bi, &self.br(&bj, &bk));
                    let t2 = self.br(&bj, &self.br(&bk, &bi));
                    let t3 = self.br(&bk, &self.br(&bi, &bj));
                    worst = worst.max((t1 + t2 + t3).amax());
                }
            }
        }
        worst
    }

    /// max |⟨[bᵢ,bⱼ],bₖ⟩ + ⟨bⱼ,[bᵢ,bₖ]⟩| over basis triples.
    pub fn ad_invariance_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            let a = &self.ad_basis[i];
            let m = &self.gram * a;
            worst = worst.max((&m + m.transpose()).amax());
        }
        worst
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let r = self.structure_constant(i, j, k) + self.structure_constant(j, i, k);
                    worst = worst.max(r.abs());
                }
            }
        }
        worst
    }

    /// max of ‖Q[h₁,h₂]‖ and ‖P[h,q]‖ on basis elements (0 without a split).
    pub fn split_residual(&self) -> f64 {
        let (d, m) = (self.dim(), self.sub_dim);
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..d {
                let c = self.br(&self.unit(i), &self.unit(j));
                let off = if j < m { self.q(&c) } else { self.p(&c) };
                worst = worst.max(off.amax());
            }
        }
        worst
    }

    /// max ‖Q[q₁,q₂]‖ over complement basis pairs; zero means [𝔥^⊥,𝔥^⊥] ⊆ 𝔥.
    pub fn cartan_residual(&self) -> f64 {
        let (d, m) = (self.dim(), self.sub_dim);
        let mut worst: f64 = 0.0;
        for i in m..d {
            for j in m..d {
                let c = self.br(&self.unit(i), &self.unit(j));
                worst = worst.max(self.q(&c).amax());
            }
        }
        worst
    }
}

/// A group element stored as a real matrix (the real embedding for SU(n)).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub matrix: DMatrix<f64>,
    pub field: Field,
}

impl GroupElement {
    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement {
            matrix: &self.matrix * &other.matrix,
            field: self.field,
        }
    }

    pub fn inverse(&self) -> GroupElement {
        let matrix = if self.orthogonality_defect() < 1e-12 {
            self.matrix.transpose()
        } else {
            self.matrix
                .clone()
                .try_inverse()
                .expect("group elements are invertible")
        };
        GroupElement {
            matrix,
            field: self.field,
        }
    }

    /// ‖gᵀg − I‖ in the max norm.
    pub fn orthogonality_defect(&self) -> f64 {
        let s = self.matrix.nrows();
        (self.matrix.transpose() * &self.matrix - DMatrix::<f64>::identity(s, s)).amax()
    }

    fn half(&self) -> usize {
        match self.field {
            Field::Real => self.matrix.nrows(),
            Field::Complex => self.matrix.nrows() / 2,
        }
    }

    pub fn re(&self) -> DMatrix<f64> {
        let n = self.half();
        self.matrix.view((0, 0), (n, n)).into_owned()
    }

    pub fn im(&self) -> DMatrix<f64> {
        let n = self.half();
        match self.field {
            Field::Real => DMatrix::zeros(n, n),
            Field::Complex => self.matrix.view((n, 0), (n, n)).into_owned(),
        }
    }

    /// Determinant of the underlying real or complex n×n matrix.
    pub fn det(&self) -> Complex<f64> {
        let (re, im) = (self.re(), self.im());
        let n = re.nrows();
        let m = DMatrix::from_fn(n, n, |i, j| Complex::new(re[(i, j)], im[(i, j)]));
        m.determinant()
    }

    pub fn distance(&self, other: &GroupElement) -> f64 {
        (&self.matrix - &other.matrix).amax()
    }

    /// Frobenius distance to the identity, in the n×n (unembedded) sense.
    pub fn distance_to_identity(&self) -> f64 {
        let s = self.matrix.nrows();
        let f = (&self.matrix - DMatrix::<f64>::identity(s, s)).norm();
        match self.field {
            Field::Real => f,
            Field::Complex => f / SQRT_2,
        }
    }
}
