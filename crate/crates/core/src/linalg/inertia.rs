use super::eigen::check_hermitian;
use super::lu::PIVOT_FLOOR;
use super::matrix::{c64, ComplexMatrix, ZERO};
use crate::{Error, Result};

/// Sylvester inertia: eigenvalue sign counts of a Hermitian matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

impl Inertia {
    pub fn dim(&self) -> usize {
        self.negative + self.zero + self.positive
    }

    /// Eigenvalues `≤ 0`, the count used for `χ(H ≤ E)`.
    pub fn nonpositive(&self) -> usize {
        self.negative + self.zero
    }

    fn record(&mut self, value: f64, zero_tol: f64) {
        if value < -zero_tol {
            self.negative += 1;
        } else if value > zero_tol {
            self.positive += 1;
        } else {
            self.zero += 1;
        }
    }
}

/// Default zero tolerance `1e-10·‖H‖_F`.
pub fn default_zero_tol(h: &ComplexMatrix) -> f64 {
    1e-10 * h.frobenius_norm()
}

/// Bunch–Kaufman growth constant `(1 + √17)/8`.
const ALPHA: f64 = 0.640_388_203_202_208_4;

/// Inertia from a symmetric-pivoting LDL* factorization with 1×1 and 2×2
/// pivots (Bunch–Kaufman partial pivoting). No eigensolve is involved.
pub fn hermitian_inertia(h: &ComplexMatrix, zero_tol: f64) -> Result<Inertia> {
    check_hermitian(h)?;
    let mut a = h.hermitian_part();
    ldl_inertia_in_place(&mut a, zero_tol)
}

/// Same as [`hermitian_inertia`] but destroys `a`, which must already be
/// exactly Hermitian.
pub(crate) fn ldl_inertia_in_place(a: &mut ComplexMatrix, zero_tol: f64) -> Result<Inertia> {
    let n = a.rows();
    let mut inertia = Inertia::default();
    let mut k = 0;
    while k < n {
        let akk = a[(k, k)].re.abs();
        let (mut r, mut lambda) = (k, 0.0);
        for i in k + 1..n {
            let v = a[(i, k)].norm();
            if v > lambda {
                lambda = v;
                r = i;
            }
        }
        if lambda == 0.0 {
            // Column already eliminated: a 1×1 pivot with nothing to update.
            inertia.record(a[(k, k)].re, zero_tol);
            k += 1;
            continue;
        }
        let two_by_two = if akk >= ALPHA * lambda {
            false
        } else {
            let mut sigma: f64 = 0.0;
            for j in k..n {
                if j != r {
                    sigma = sigma.max(a[(r, j)].norm());
                }
            }
            if akk * sigma >= ALPHA * lambda * lambda {
                false
            } else if a[(r, r)].re.abs() >= ALPHA * sigma {
                symmetric_swap(a, k, r);
                false
            } else {
                symmetric_swap(a, k + 1, r);
                true
            }
        };

        if !two_by_two {
            let d = a[(k, k)].re;
            inertia.record(d, zero_tol);
            if d.abs() < PIVOT_FLOOR {
                return Err(Error::SingularMatrix { pivot: d.abs() });
            }
            let inv = 1.0 / d;
            for i in k + 1..n {
                let lik = a[(i, k)] * inv;
                if lik == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let ajk = a[(j, k)];
                    a[(i, j)] -= lik * ajk.conj();
                }
            }
            for i in k + 1..n {
                a[(i, k)] = ZERO;
                a[(k, i)] = ZERO;
            }
            k += 1;
        } else {
            let p = a[(k, k)].re;
            let q = a[(k + 1, k + 1)].re;
            let c = a[(k + 1, k)];
            let det = p * q - c.norm_sqr();
            if det.abs() < PIVOT_FLOOR {
                return Err(Error::SingularMatrix { pivot: det.abs() });
            }
            let mean = 0.5 * (p + q);
            let rad = libm::hypot(0.5 * (p - q), c.norm());
            inertia.record(mean - rad, zero_tol);
            inertia.record(mean + rad, zero_tol);
            // D⁻¹ for D = [[p, conj(c)], [c, q]].
            let inv_det = 1.0 / det;
            let d00 = c64::new(q * inv_det, 0.0);
            let d11 = c64::new(p * inv_det, 0.0);
            let d01 = -c.conj() * inv_det;
            let d10 = -c * inv_det;
            for i in k + 2..n {
                let (x0, x1) = (a[(i, k)], a[(i, k + 1)]);
                // Row i of L = [x0, x1]·D⁻¹.
                let l0 = x0 * d00 + x1 * d10;
                let l1 = x0 * d01 + x1 * d11;
                for j in k + 2..n {
                    let (y0, y1) = (a[(j, k)], a[(j, k + 1)]);
                    a[(i, j)] -= l0 * y0.conj() + l1 * y1.conj();
                }
            }
            for i in k + 2..n {
                for col in [k, k + 1] {
                    a[(i, col)] = ZERO;
                    a[(col, i)] = ZERO;
                }
            }
            k += 2;
        }
        // Keep the trailing block exactly Hermitian.
        for i in k..n {
            a[(i, i)] = c64::new(a[(i, i)].re, 0.0);
        }
    }
    Ok(inertia)
}

fn symmetric_swap(a: &mut ComplexMatrix, i: usize, j: usize) {
    if i == j {
        return;
    }
    let n = a.rows();
    let data = a.as_mut_slice();
    for c in 0..n {
        data.swap(i * n + c, j * n + c);
    }
    for r in 0..n {
        data.swap(r * n + i, r * n + j);
    }
}
