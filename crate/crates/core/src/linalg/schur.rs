use alloc::vec::Vec;

use super::matrix::{c64, ComplexMatrix, ZERO};
use crate::{Error, Result};

const MAX_ITERATIONS_PER_EIGENVALUE: usize = 60;

/// Eigenvalues of a general complex square matrix (Hessenberg reduction
/// followed by shifted QR iterations). Order is unspecified.
pub fn eigenvalues(a: &ComplexMatrix) -> Result<Vec<c64>> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(
            "eigenvalues need a square matrix".into(),
        ));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = a.rows();
    if n == 1 {
        return Ok(alloc::vec![a[(0, 0)]]);
    }
    let mut h = a.clone();
    hessenberg_in_place(&mut h);
    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    let mut out = alloc::vec![ZERO; n];
    let mut hi = n - 1;
    let mut iter = 0;
    loop {
        if hi == 0 {
            out[0] = h[(0, 0)];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let diag = h[(l, l)].norm() + h[(l - 1, l - 1)].norm();
            if sub <= f64::EPSILON * if diag > 0.0 { diag } else { scale } {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            out[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > MAX_ITERATIONS_PER_EIGENVALUE {
            return Err(Error::SingularMatrix {
                pivot: h[(hi, hi - 1)].norm(),
            });
        }
        let shift = if iter % 11 == 10 {
            // Exceptional shift to break cycles.
            h[(hi, hi)] + c64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(&h, hi)
        };
        qr_sweep(&mut h, l, hi, shift);
    }
    Ok(out)
}

fn wilkinson_shift(h: &ComplexMatrix, hi: usize) -> c64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let (m1, m2) = (mean + disc, mean - disc);
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// Unitary similarity to upper Hessenberg form by Householder reflections.
fn hessenberg_in_place(h: &mut ComplexMatrix) {
    let n = h.rows();
    let mut v = alloc::vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let norm = libm::sqrt((k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>());
        if norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            c64::new(1.0, 0.0)
        };
        let alpha = -phase * norm;
        for i in k + 1..n {
            v[i] = h[(i, k)];
        }
        v[k + 1] -= alpha;
        let vnorm = libm::sqrt((k + 1..n).map(|i| v[i].norm_sqr()).sum::<f64>());
        if vnorm == 0.0 {
            continue;
        }
        for x in &mut v[k + 1..n] {
            *x /= vnorm;
        }
        // H ← (1 − 2vv*)·H
        for j in 0..n {
            let mut dot = ZERO;
            for i in k + 1..n {
                dot += v[i].conj() * h[(i, j)];
            }
            for i in k + 1..n {
                h[(i, j)] -= v[i] * dot * 2.0;
            }
        }
        // H ← H·(1 − 2vv*)
        for i in 0..n {
            let mut dot = ZERO;
            for j in k + 1..n {
                dot += h[(i, j)] * v[j];
            }
            for j in k + 1..n {
                h[(i, j)] -= dot * v[j].conj() * 2.0;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
}

/// One explicitly shifted QR step on the active block `lo..=hi`.
fn qr_sweep(h: &mut ComplexMatrix, lo: usize, hi: usize, shift: c64) {
    for k in lo..=hi {
        h[(k, k)] -= shift;
    }
    let mut rotations = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let x = h[(k, k)];
        let y = h[(k + 1, k)];
        let r = libm::hypot(x.norm(), y.norm());
        let (c, s) = if r == 0.0 {
            (1.0, ZERO)
        } else if x.norm() == 0.0 {
            (0.0, y.conj() / y.norm())
        } else {
            (x.norm() / r, (x / x.norm()) * y.conj() / r)
        };
        for j in k..=hi {
            let (p, q) = (h[(k, j)], h[(k + 1, j)]);
            h[(k, j)] = p * c + s * q;
            h[(k + 1, j)] = -s.conj() * p + q * c;
        }
        rotations.push((c, s));
    }
    for (offset, &(c, s)) in rotations.iter().enumerate() {
        let k = lo + offset;
        for i in lo..=(k + 2).min(hi) {
            let (p, q) = (h[(i, k)], h[(i, k + 1)]);
            h[(i, k)] = p * c + q * s.conj();
            h[(i, k + 1)] = -p * s + q * c;
        }
    }
    for k in lo..=hi {
        h[(k, k)] += shift;
    }
}
