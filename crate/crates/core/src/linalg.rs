//! Dense helpers on top of nalgebra: exponentials, polar retraction,
//! null spaces and one-dimensional root/minimum refinement.

// std float methods shadow this trait when std is linked
#[allow(unused_imports)]
use nalgebra::ComplexField;
use nalgebra::{DMatrix, DVector};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with the degree-13 Padé
/// approximant. Works for any square matrix.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut s = 0i32;
    if norm1 > THETA13 {
        s = (norm1 / THETA13).log2().ceil() as i32;
    }
    let a = a * (2f64).powi(-s);
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = &a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular after scaling");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Exponential of a real skew-symmetric matrix through the spectral
/// decomposition of its square: exp(S) = cos(Θ) + S·sinc(Θ) with S² = −Θ².
pub fn expm_skew(s: &DMatrix<f64>) -> DMatrix<f64> {
    let sq = s * s;
    let sq = (&sq + sq.transpose()) * 0.5;
    let eig = sq.symmetric_eigen();
    let n = s.nrows();
    let mut c = DVector::zeros(n);
    let mut sn = DVector::zeros(n);
    for (k, &x) in eig.eigenvalues.iter().enumerate() {
        let th = x.abs().sqrt();
        if x <= 0.0 {
            c[k] = th.cos();
            sn[k] = if th < 1e-8 { 1.0 - th * th / 6.0 } else { th.sin() / th };
        } else {
            c[k] = th.cosh();
            sn[k] = if th < 1e-8 { 1.0 + th * th / 6.0 } else { th.sinh() / th };
        }
    }
    let v = &eig.eigenvectors;
    let vt = v.transpose();
    let cos_part = v * DMatrix::from_diagonal(&c) * &vt;
    let sin_part = s * (v * DMatrix::from_diagonal(&sn) * &vt);
    cos_part + sin_part
}

pub fn is_skew(a: &DMatrix<f64>, tol: f64) -> bool {
    let scale = a.amax().max(1.0);
    (a + a.transpose()).amax() <= tol * scale
}

/// Orthogonal polar factor U·Vᵀ of a square matrix.
pub fn polar(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested Vᵀ");
    u * vt
}

/// Singular values in decreasing order.
pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    let mut sv: alloc::vec::Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(core::cmp::Ordering::Equal));
    DVector::from_vec(sv)
}

/// Orthonormal basis (columns) of the right null space of `a`, using a
/// relative singular-value threshold.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (m, n) = a.shape();
    let sq = if m < n {
        let mut padded = DMatrix::zeros(n, n);
        padded.view_mut((0, 0), (m, n)).copy_from(a);
        padded
    } else {
        a.clone()
    };
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("requested Vᵀ");
    let smax = svd.singular_values.amax();
    let cols: alloc::vec::Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= rel_tol * smax.max(f64::MIN_POSITIVE))
        .map(|(k, _)| vt.row(k).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Column-major Kronecker product.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij != 0.0 {
                out.view_mut((i * br, j * bc), (br, bc))
                    .copy_from(&(b * aij));
            }
        }
    }
    out
}

/// Bisection for a sign change of `f` on [a, b].
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Brent minimisation on [a, b]: parabolic steps through three points with
/// a golden-section safeguard. Returns (argmin, min).
pub fn brent_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const CGOLD: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x = a + CGOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..200 {
        let xm = 0.5 * (a + b);
        let tol1 = tol + 1e-14 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d >= 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor_exp(a: &DMatrix<f64>) -> DMatrix<f64> {
        // small-norm oracle
        let n = a.nrows();
        let mut term = DMatrix::identity(n, n);
        let mut sum = term.clone();
        for k in 1..40 {
            term = &term * a / k as f64;
            sum += &term;
        }
        sum
    }

    #[test]
    fn pade_matches_taylor_on_small_matrix() {
        let a = DMatrix::from_row_slice(3, 3, &[0.1, -0.4, 0.2, 0.3, 0.0, 0.5, -0.2, 0.1, -0.3]);
        assert!((expm(&a) - taylor_exp(&a)).amax() < 1e-14);
    }

    #[test]
    fn pade_handles_scaling() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]) * 20.0;
        let e = expm(&a);
        assert!((e[(0, 0)] - 20f64.cos()).abs() < 1e-12);
        assert!((e[(0, 1)] - 20f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn skew_spectral_agrees_with_pade() {
        let mut s = DMatrix::zeros(4, 4);
        let vals = [0.7, -1.3, 2.1, 0.4, -0.9, 1.6];
        let mut k = 0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                s[(i, j)] = vals[k];
                s[(j, i)] = -vals[k];
                k += 1;
            }
        }
        assert!((expm_skew(&s) - expm(&s)).amax() < 1e-12);
    }

    #[test]
    fn polar_of_orthogonal_is_itself() {
        let q = expm_skew(&DMatrix::from_row_slice(2, 2, &[0.0, 0.3, -0.3, 0.0]));
        assert!((polar(&q) - &q).amax() < 1e-14);
    }

    #[test]
    fn null_space_of_rank_one() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let k = null_space(&a, 1e-12);
        assert_eq!(k.ncols(), 2);
        assert!((&a * &k).amax() < 1e-14);
    }

    #[test]
    fn brent_finds_parabola_vertex() {
        let (x, fx) = brent_min(|t| (t - 0.3) * (t - 0.3) + 1.0, 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bisect_finds_cos_root() {
        let r = bisect(|t| t.cos(), 1.0, 2.0, 1e-12);
        assert!((r - core::f64::consts::FRAC_PI_2).abs() < 1e-11);
    }
}
