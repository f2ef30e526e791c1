use alloc::vec::Vec;

use super::matrix::{c64, ComplexMatrix, ZERO};
use crate::{Error, Result};

/// Default cap on the dimension handed to the dense eigensolver.
pub const ORACLE_DIM_CAP: usize = 512;

const MAX_SWEEPS: usize = 60;

/// Eigen-decomposition `H·Q = Q·diag(λ)` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns are the matching orthonormal eigenvectors.
    pub eigenvectors: ComplexMatrix,
}

/// Relative Hermiticity tolerance accepted on input.
pub(crate) fn check_hermitian(h: &ComplexMatrix) -> Result<()> {
    if !h.is_square() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "{}x{} matrix is not square",
            h.rows(),
            h.cols()
        )));
    }
    let defect = h.hermitian_defect();
    if defect > 1e-10 * h.frobenius_norm() {
        return Err(Error::NotHermitian { defect });
    }
    Ok(())
}

pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<HermitianEigen> {
    hermitian_eigen_capped(h, ORACLE_DIM_CAP)
}

/// Cyclic Jacobi eigensolver for complex Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot entry with a diagonal
/// unitary, then applies a real Givens rotation; the product is accumulated
/// into the eigenvector matrix.
pub fn hermitian_eigen_capped(h: &ComplexMatrix, cap: usize) -> Result<HermitianEigen> {
    check_hermitian(h)?;
    let n = h.rows();
    if n > cap {
        return Err(Error::DimensionTooLarge { dim: n, cap });
    }
    let mut a = h.hermitian_part();
    let mut q = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();

    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)].norm_sqr())
                .sum();
            if libm::sqrt(off) <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for r in p + 1..n {
                    rotate(&mut a, &mut q, p, r, scale);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| q[(i, order[j])]);
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

fn rotate(a: &mut ComplexMatrix, q: &mut ComplexMatrix, p: usize, r: usize, scale: f64) {
    let apr = a[(p, r)];
    let mag = apr.norm();
    if mag <= 1e-300 || mag <= 1e-18 * scale {
        a[(p, r)] = ZERO;
        a[(r, p)] = ZERO;
        return;
    }
    let phase = apr / mag;
    let (app, arr) = (a[(p, p)].re, a[(r, r)].re);
    let theta = (arr - app) / (2.0 * mag);
    let t = if theta >= 0.0 {
        1.0 / (theta + libm::sqrt(1.0 + theta * theta))
    } else {
        -1.0 / (-theta + libm::sqrt(1.0 + theta * theta))
    };
    let c = 1.0 / libm::sqrt(1.0 + t * t);
    let s = t * c;
    // W = diag(1, conj(phase)) · [[c, s], [-s, c]] acting on coordinates (p, r).
    let w_pp = c64::new(c, 0.0);
    let w_pr = c64::new(s, 0.0);
    let w_rp = phase.conj() * (-s);
    let w_rr = phase.conj() * c;
    let n = a.rows();
    for k in 0..n {
        let (akp, akr) = (a[(k, p)], a[(k, r)]);
        a[(k, p)] = akp * w_pp + akr * w_rp;
        a[(k, r)] = akp * w_pr + akr * w_rr;
    }
    for k in 0..n {
        let (apk, ark) = (a[(p, k)], a[(r, k)]);
        a[(p, k)] = w_pp.conj() * apk + w_rp.conj() * ark;
        a[(r, k)] = w_pr.conj() * apk + w_rr.conj() * ark;
    }
    a[(p, r)] = ZERO;
    a[(r, p)] = ZERO;
    a[(p, p)] = c64::new(a[(p, p)].re, 0.0);
    a[(r, r)] = c64::new(a[(r, r)].re, 0.0);
    for k in 0..n {
        let (qkp, qkr) = (q[(k, p)], q[(k, r)]);
        q[(k, p)] = qkp * w_pp + qkr * w_rp;
        q[(k, r)] = qkp * w_pr + qkr * w_rr;
    }
}

/// Operator 2-norm as the square root of the largest eigenvalue of `A*A`.
pub fn operator_norm(a: &ComplexMatrix) -> f64 {
    let gram = a.adjoint().matmul(a);
    let eig = hermitian_eigen_capped(&gram, usize::MAX).expect("Gram matrix is Hermitian");
    libm::sqrt(eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0))
}

/// Largest and smallest singular values.
pub fn singular_value_range(a: &ComplexMatrix) -> (f64, f64) {
    let gram = a.adjoint().matmul(a);
    let eig = hermitian_eigen_capped(&gram, usize::MAX).expect("Gram matrix is Hermitian");
    let lo = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let hi = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    (libm::sqrt(hi), libm::sqrt(lo))
}
