//! Dense symmetric linear algebra on top of `nalgebra`.

use alloc::format;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
#[allow(unused_imports)] // inherent float methods shadow it whenever std is linked
use num_traits::Float;

use crate::{Error, Result};

pub fn is_symmetric(a: &DMatrix<f64>, tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let scale = a.amax().max(1.0);
    (0..a.nrows()).all(|i| (0..i).all(|j| (a[(i, j)] - a[(j, i)]).abs() <= tol * scale))
}

/// Factor `F` with `F Fᵀ = A` for a symmetric positive semidefinite `A`.
///
/// Plain Cholesky is tried first; singular PSD matrices fall back to a
/// diagonally pivoted outer-product Cholesky that stops once the remaining
/// Schur complement is numerically zero. Rows of `F` keep the original
/// ordering, so `F` can be used directly as a sampling transform.
pub fn psd_factor(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::InvalidCovariance(format!("covariance must be square, got {}x{}", a.nrows(), a.ncols())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidCovariance("non-finite entry".into()));
    }
    if !is_symmetric(a, 1e-10) {
        return Err(Error::InvalidCovariance("matrix is not symmetric".into()));
    }
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.unpack());
    }
    pivoted_cholesky(a)
}

fn pivoted_cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = a.nrows();
    let mut s = a.clone();
    let mut f = DMatrix::<f64>::zeros(d, d);
    let mut perm: alloc::vec::Vec<usize> = (0..d).collect();
    let scale = (0..d).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);

    for k in 0..d {
        let (p_idx, piv) =
            (k..d).map(|i| (i, s[(perm[i], perm[i])])).fold((k, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        perm.swap(k, p_idx);
        if piv <= tol {
            // Remaining Schur complement must vanish for a PSD input.
            for i in k..d {
                for j in k..d {
                    let v = s[(perm[i], perm[j])];
                    if (i == j && v < -tol) || v.abs() > 1e-6 * scale.max(1.0) {
                        return Err(Error::InvalidCovariance("matrix is not positive semidefinite".into()));
                    }
                }
            }
            break;
        }
        let root = piv.sqrt();
        let pk = perm[k];
        f[(pk, k)] = root;
        for i in (k + 1)..d {
            let pi = perm[i];
            f[(pi, k)] = s[(pi, pk)] / root;
        }
        for i in (k + 1)..d {
            let pi = perm[i];
            for j in (k + 1)..=i {
                let pj = perm[j];
                let v = s[(pi, pj)] - f[(pi, k)] * f[(pj, k)];
                s[(pi, pj)] = v;
                s[(pj, pi)] = v;
            }
        }
    }
    Ok(f)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone()).eigenvalues.min()
}

/// PSD test: eigenvalues no smaller than `-tol * max(1, |A|_max)`.
pub fn is_psd(a: &DMatrix<f64>, tol: f64) -> bool {
    if !is_symmetric(a, 1e-10) {
        return false;
    }
    if a.nrows() > 400 {
        return psd_factor(a).is_ok();
    }
    min_eigenvalue(a) >= -tol * a.amax().max(1.0)
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    a.clone().cholesky().map(|c| c.inverse())
}

/// Symmetric inverse square root `A^{-1/2}` via eigendecomposition.
///
/// Eigenvalues at or below `rel_floor * λ_max` are treated as zero; the error
/// carries the coordinate with the largest loading on the null direction.
pub fn sym_inv_sqrt(a: &DMatrix<f64>, rel_floor: f64) -> core::result::Result<DMatrix<f64>, usize> {
    let eig = SymmetricEigen::new(a.clone());
    let lmax = eig.eigenvalues.max();
    let p = a.nrows();
    for k in 0..p {
        let l = eig.eigenvalues[k];
        if !(l > rel_floor * lmax.max(0.0)) || lmax <= 0.0 {
            let v = eig.eigenvectors.column(k);
            let dim = (0..p).max_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs())).unwrap_or(0);
            return Err(dim);
        }
    }
    let inv_roots = DVector::from_iterator(p, eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()));
    let q = &eig.eigenvectors;
    let out = q * DMatrix::from_diagonal(&inv_roots) * q.transpose();
    Ok((&out + out.transpose()) * 0.5)
}
