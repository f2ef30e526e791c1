use super::lu::inverse;
use super::matrix::{c64, gemm_adjoint_left_into, ComplexMatrix, ONE, ZERO};
use crate::Result;

/// `‖U*·U − 1‖_F`.
pub fn unitary_defect(u: &ComplexMatrix) -> f64 {
    assert!(u.is_square(), "unitary defect needs a square matrix");
    let mut gram = ComplexMatrix::zeros(u.cols(), u.cols());
    gemm_adjoint_left_into(&mut gram, u, u);
    defect_of_gram(&gram)
}

pub(crate) fn defect_of_gram(gram: &ComplexMatrix) -> f64 {
    let n = gram.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { ONE } else { ZERO };
            acc += (gram[(i, j)] - target).norm_sqr();
        }
    }
    libm::sqrt(acc)
}

/// Projects a nearly unitary matrix onto the unitary group by the Newton
/// iteration `X ← (X + X^{-*})/2`, stopping once the defect is below `tol`.
pub fn polar_projection(u: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let mut x = u.clone();
    for _ in 0..60 {
        if unitary_defect(&x) < tol {
            break;
        }
        let inv_adj = inverse(&x)?.adjoint();
        x = (&x + &inv_adj).scale_real(0.5);
    }
    Ok(x)
}

/// Orthonormalizes the columns of a full-column-rank matrix (thin QR,
/// modified Gram–Schmidt with one reorthogonalization pass). Returns `Q`.
pub fn orthonormalize_columns(a: &ComplexMatrix) -> Option<ComplexMatrix> {
    let (rows, cols) = (a.rows(), a.cols());
    let mut q = a.clone();
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    for j in 0..cols {
        for _pass in 0..2 {
            for p in 0..j {
                let mut dot = ZERO;
                for i in 0..rows {
                    dot += q[(i, p)].conj() * q[(i, j)];
                }
                for i in 0..rows {
                    let qp = q[(i, p)];
                    q[(i, j)] -= dot * qp;
                }
            }
        }
        let norm = libm::sqrt((0..rows).map(|i| q[(i, j)].norm_sqr()).sum::<f64>());
        if norm <= 1e-14 * scale {
            return None;
        }
        let inv = c64::new(1.0 / norm, 0.0);
        for i in 0..rows {
            q[(i, j)] *= inv;
        }
    }
    Some(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testing::{random_matrix, random_unitary};

    #[test]
    fn identity_and_diagonal_phases() {
        assert_eq!(unitary_defect(&ComplexMatrix::identity(4)), 0.0);
        let u = ComplexMatrix::diag(&[c64::from_polar(1.0, 0.3), c64::from_polar(1.0, -2.1)]);
        assert!(unitary_defect(&u) < 1e-15);
    }

    #[test]
    fn scaled_identity_defect() {
        let d = unitary_defect(&ComplexMatrix::identity(2).scale_real(2.0));
        assert!((d - 3.0 * core::f64::consts::SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn polar_projection_restores_unitarity() {
        let mut seed = 3;
        let u = random_unitary(4, &mut seed);
        let noisy = &u + &random_matrix(4, 4, &mut seed).scale_real(1e-6);
        let p = polar_projection(&noisy, 1e-13).unwrap();
        assert!(unitary_defect(&p) < 1e-13);
        assert!((&p - &u).frobenius_norm() < 1e-5);
    }

    #[test]
    fn orthonormal_columns() {
        let mut seed = 8;
        let a = random_matrix(6, 3, &mut seed);
        let q = orthonormalize_columns(&a).unwrap();
        let gram = &q.adjoint() * &q;
        assert!(defect_of_gram(&gram) < 1e-14);
        let rank_deficient = ComplexMatrix::from_fn(4, 2, |i, _| c64::new(i as f64, 0.0));
        assert!(orthonormalize_columns(&rank_deficient).is_none());
    }
}
