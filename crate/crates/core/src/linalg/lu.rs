use alloc::format;
use alloc::vec::Vec;

use super::matrix::{c64, ComplexMatrix, ONE, ZERO};
use crate::{Error, Result};

/// Pivots smaller than this abort the elimination.
pub const PIVOT_FLOOR: f64 = 1e-300;

/// LU factorization with partial pivoting, `P·A = L·U` packed in place.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: ComplexMatrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &ComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "LU of a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let mut lu = a.clone();
        let mut perm = Vec::new();
        factor_in_place(&mut lu, &mut perm)?;
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    /// Solves `A·X = B`.
    pub fn solve(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.dim();
        if b.rows() != n {
            return Err(Error::ShapeMismatch(format!(
                "right-hand side has {} rows, expected {n}",
                b.rows()
            )));
        }
        let mut x = ComplexMatrix::zeros(n, b.cols());
        solve_packed(&self.lu, &self.perm, b, &mut x);
        Ok(x)
    }

    pub fn inverse(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut x = ComplexMatrix::zeros(n, n);
        solve_packed(&self.lu, &self.perm, &ComplexMatrix::identity(n), &mut x);
        x
    }

    pub fn determinant(&self) -> c64 {
        let n = self.dim();
        let mut det = ONE;
        for i in 0..n {
            det *= self.lu[(i, i)];
        }
        let mut swaps = 0;
        let mut seen: Vec<bool> = alloc::vec![false; n];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                k = self.perm[k];
                len += 1;
            }
            swaps += len - 1;
        }
        if swaps % 2 == 1 {
            -det
        } else {
            det
        }
    }
}

/// Factors `a` in place. `perm[i]` is the original row now sitting at row `i`.
pub fn factor_in_place(a: &mut ComplexMatrix, perm: &mut Vec<usize>) -> Result<()> {
    let n = a.rows();
    perm.clear();
    perm.extend(0..n);
    let data = a.as_mut_slice();
    for k in 0..n {
        let (mut p, mut best) = (k, data[k * n + k].norm());
        for i in k + 1..n {
            let v = data[i * n + k].norm();
            if v > best {
                p = i;
                best = v;
            }
        }
        if !(best >= PIVOT_FLOOR) {
            return Err(Error::SingularMatrix { pivot: best });
        }
        if p != k {
            for j in 0..n {
                data.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let inv = ONE / data[k * n + k];
        for i in k + 1..n {
            let f = data[i * n + k] * inv;
            data[i * n + k] = f;
            if f == ZERO {
                continue;
            }
            for j in k + 1..n {
                let u = data[k * n + j];
                data[i * n + j] -= f * u;
            }
        }
    }
    Ok(())
}

/// Forward/back substitution against a packed factorization.
pub fn solve_packed(lu: &ComplexMatrix, perm: &[usize], b: &ComplexMatrix, x: &mut ComplexMatrix) {
    let n = lu.rows();
    let m = b.cols();
    let l = lu.as_slice();
    let xs = x.as_mut_slice();
    for i in 0..n {
        let src = perm[i];
        for j in 0..m {
            xs[i * m + j] = b[(src, j)];
        }
    }
    for i in 0..n {
        for p in 0..i {
            let f = l[i * n + p];
            if f == ZERO {
                continue;
            }
            for j in 0..m {
                let v = xs[p * m + j];
                xs[i * m + j] -= f * v;
            }
        }
    }
    for i in (0..n).rev() {
        for p in i + 1..n {
            let f = l[i * n + p];
            if f == ZERO {
                continue;
            }
            for j in 0..m {
                let v = xs[p * m + j];
                xs[i * m + j] -= f * v;
            }
        }
        let inv = ONE / l[i * n + i];
        for j in 0..m {
            xs[i * m + j] *= inv;
        }
    }
}

/// Solves `A·X = B` by Gaussian elimination with partial pivoting.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    Lu::factor(a)?.solve(b)
}

pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(Lu::factor(a)?.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testing::random_matrix;

    #[test]
    fn identity_returns_rhs() {
        let b = ComplexMatrix::from_fn(3, 2, |i, j| c64::new(i as f64 - 1.0, j as f64 + 0.5));
        let x = solve(&ComplexMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn diagonal_inverse() {
        let a = ComplexMatrix::real_diag(&[2.0, 4.0]);
        let x = solve(&a, &ComplexMatrix::identity(2)).unwrap();
        assert_eq!(x, ComplexMatrix::real_diag(&[0.5, 0.25]));
    }

    #[test]
    fn round_trip_8x8() {
        let mut seed = 11;
        for _ in 0..20 {
            let a = random_matrix(8, 8, &mut seed).shift_diagonal(c64::new(4.0, 0.0));
            let x0 = random_matrix(8, 3, &mut seed);
            let x = solve(&a, &(&a * &x0)).unwrap();
            assert!((&x - &x0).frobenius_norm() <= 1e-9 * x0.frobenius_norm());
            let resid = (&(&a * &x) - &(&a * &x0)).frobenius_norm();
            assert!(resid <= 1e-10 * 8.0 * (&a * &x0).frobenius_norm());
        }
    }

    #[test]
    fn singular_is_reported() {
        let a = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            solve(&a, &ComplexMatrix::identity(2)),
            Err(Error::SingularMatrix { .. })
        ));
        assert!(matches!(
            solve(&ComplexMatrix::zeros(2, 2), &ComplexMatrix::identity(2)),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn determinant_with_pivoting() {
        let a = ComplexMatrix::from_real(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 3.0]);
        let det = Lu::factor(&a).unwrap().determinant();
        assert!((det - c64::new(-3.0, 0.0)).norm() < 1e-15);
    }
}
