//! Dense complex linear algebra helpers used across the crate.
//!
//! Everything is built on [`nalgebra`]'s dynamically sized matrices over
//! [`num_complex::Complex64`].  Conventions: inner products are linear in
//! the second argument, matrices are stored column-major (nalgebra's
//! layout), and "operator norm" means the largest singular value.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Dense complex matrix.
pub type CMat = DMatrix<Complex64>;
/// Dense complex vector.
pub type CVec = DVector<Complex64>;

/// Shorthand complex constructor.
pub fn cplx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Identity matrix of size `n`.
pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Conjugate transpose.
pub fn dag(m: &CMat) -> CMat {
    m.adjoint()
}

/// Kronecker product, row index of the left factor varying slowest.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Frobenius norm.
pub fn frob(m: &CMat) -> f64 {
    m.norm()
}

/// Largest entry magnitude; zero for empty matrices.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Operator (spectral) norm; zero for empty matrices.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Hermitian part `(m + m*)/2`.
pub fn herm_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// True when `m` is Hermitian within `tol` (entrywise).
pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && max_abs(&(m - m.adjoint())) <= tol
}

/// Eigenvalues (ascending) and eigenvectors of the Hermitian part of `m`.
///
/// Cyclic Jacobi rotations; converges with machine-precision residuals on
/// degenerate eigenvalue clusters, where one-shot tridiagonal solvers can
/// stall partway.
pub fn herm_eigs(m: &CMat) -> (DVector<f64>, CMat) {
    let mut a = herm_part(m);
    let n = a.nrows();
    let mut v = eye(n);
    if n > 1 {
        let scale = max_abs(&a).max(f64::MIN_POSITIVE);
        let stop = scale * 1.0e-15;
        for _ in 0..60 {
            let mut off = 0.0_f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off.max(a[(p, q)].norm());
                }
            }
            if off <= stop {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let b = apq.norm();
                    if b <= stop * 1.0e-2 {
                        continue;
                    }
                    let u = apq / b;
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let theta = (aqq - app) / (2.0 * b);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (1.0 + theta * theta).sqrt())
                    } else {
                        -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // Unitary (p, q)-plane rotation diag(1, conj(u)) * real
                    // rotation; columns first, then rows with the adjoint.
                    let su = s * u.conj();
                    for k in 0..n {
                        let xp = a[(k, p)];
                        let xq = a[(k, q)];
                        a[(k, p)] = xp * c - xq * su;
                        a[(k, q)] = xp * s + xq * c * u.conj();
                    }
                    let su2 = s * u;
                    for k in 0..n {
                        let yp = a[(p, k)];
                        let yq = a[(q, k)];
                        a[(p, k)] = yp * c - yq * su2;
                        a[(q, k)] = yp * s + yq * c * u;
                    }
                    for k in 0..n {
                        let vp = v[(k, p)];
                        let vq = v[(k, q)];
                        v[(k, p)] = vp * c - vq * su;
                        v[(k, q)] = vp * s + vq * c * u.conj();
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)].re));
    let vecs = if n == 0 {
        CMat::zeros(0, 0)
    } else {
        CMat::from_columns(
            &order
                .iter()
                .map(|&i| v.column(i).into_owned())
                .collect::<Vec<_>>(),
        )
    };
    (vals, vecs)
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eig(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    herm_eigs(m).0[0]
}

/// `m` raised to the real power `p` through its Hermitian eigensystem,
/// clamping eigenvalues below `floor` (use for inverse powers of positive
/// semidefinite matrices).
pub fn psd_power(m: &CMat, p: f64, floor: f64) -> CMat {
    let (vals, vecs) = herm_eigs(m);
    let d = CMat::from_diagonal(&CVec::from_iterator(
        vals.len(),
        vals.iter().map(|&l| cplx(l.max(floor).powf(p), 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

/// Least-squares solution `x` of `a x = b` via SVD.
pub fn lstsq(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.nrows() != b.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "lstsq: {} rows vs {} rows",
            a.nrows(),
            b.nrows()
        )));
    }
    a.clone()
        .svd(true, true)
        .solve(b, 1.0e-13)
        .map_err(|e| Error::DegenerateChoice(format!("lstsq failed: {e}")))
}

/// Column-major vectorization.
pub fn vec_mat(m: &CMat) -> CVec {
    CVec::from_iterator(m.nrows() * m.ncols(), m.iter().copied())
}

/// Inverse of [`vec_mat`].
pub fn unvec(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_iterator(rows, cols, v.iter().copied())
}

/// Orthonormal reduction of a positive semidefinite Gram matrix.
///
/// Returns `(w, p)` with `w* g w = I` on the retained rank-`r` part and
/// `p = w* g`, so coordinates of a vector `x` in the reduced orthonormal
/// basis are `p x` and representatives are recovered as `w y`.
/// Eigenvalues at or below `tol` are discarded.
pub fn gram_reduce(g: &CMat, tol: f64) -> (CMat, CMat) {
    let (vals, vecs) = herm_eigs(g);
    let kept: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > tol).collect();
    let n = g.nrows();
    let r = kept.len();
    let mut w = CMat::zeros(n, r);
    for (j, &i) in kept.iter().enumerate() {
        let s = vals[i].sqrt();
        w.set_column(j, &vecs.column(i).map(|z| z / s));
    }
    let p = w.adjoint() * g;
    (w, p)
}

/// Matrix with independent standard complex Gaussian entries
/// (real and imaginary parts each N(0, 1/2)).
pub fn gauss_cmat<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let scale = 0.5_f64.sqrt();
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        cplx(re * scale, im * scale)
    })
}

/// Rescales `m` to unit operator norm.
pub fn unit_op_norm(m: &CMat) -> Result<CMat> {
    let n = op_norm(m);
    if n < 1.0e-12 {
        return Err(Error::DegenerateChoice("vanishing operator norm".into()));
    }
    Ok(m.scale(1.0 / n))
}

/// Random full-rank density matrix: `(g g* + floor) / trace`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize, floor: f64) -> CMat {
    let g = gauss_cmat(rng, n, n);
    let mut rho = &g * g.adjoint() + eye(n).scale(floor);
    let tr: Complex64 = rho.diagonal().iter().sum();
    rho.unscale_mut(tr.re);
    rho
}

/// Trace of a square matrix.
pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Block-diagonal sum of two square matrices.
pub fn blkdiag(a: &CMat, b: &CMat) -> CMat {
    let (na, nb) = (a.nrows(), b.nrows());
    let mut m = CMat::zeros(na + nb, na + nb);
    m.view_mut((0, 0), (na, na)).copy_from(a);
    m.view_mut((na, na), (nb, nb)).copy_from(b);
    m
}
