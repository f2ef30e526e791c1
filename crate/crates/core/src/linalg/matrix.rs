use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::{Error, Result};

#[allow(non_camel_case_types)]
pub type c64 = Complex64;

pub(crate) const ZERO: c64 = c64::new(0.0, 0.0);
pub(crate) const ONE: c64 = c64::new(1.0, 0.0);
pub(crate) const I: c64 = c64::new(0.0, 1.0);

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<c64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_scaled_identity(n, ONE)
    }

    pub fn from_scaled_identity(n: usize, z: c64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = z;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting bad shapes and
    /// non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<c64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Real matrix from row-major entries. Panics on a shape mismatch.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count does not match shape");
        let data = data.iter().map(|&x| c64::new(x, 0.0)).collect();
        Self::from_row_major(rows, cols, data).expect("finite real entries")
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> c64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn diag(entries: &[c64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { entries[i] } else { ZERO })
    }

    pub fn real_diag(entries: &[f64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                c64::new(entries[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[c64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [c64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        out
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn scale(&self, z: c64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * z).collect(),
        }
    }

    pub fn scale_real(&self, x: f64) -> Self {
        self.scale(c64::new(x, 0.0))
    }

    /// `self + z·1`; square matrices only.
    pub fn shift_diagonal(&self, z: c64) -> Self {
        assert!(self.is_square());
        let mut out = self.clone();
        for i in 0..self.rows {
            out.data[i * self.cols + i] += z;
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum::<f64>())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> c64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self.data[i * self.cols + i]).sum()
    }

    /// `‖A − A*‖_F`.
    pub fn hermitian_defect(&self) -> f64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.data[i * n + j] - self.data[j * n + i].conj()).norm_sqr();
            }
        }
        libm::sqrt(acc)
    }

    /// `(A + A*)/2`.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        let n = self.rows;
        Self::from_fn(n, n, |i, j| {
            (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5
        })
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        Self::from_fn(rows, cols, |i, j| self.data[(r0 + i) * self.cols + c0 + j])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &ComplexMatrix) {
        assert!(r0 + b.rows <= self.rows && c0 + b.cols <= self.cols);
        for i in 0..b.rows {
            let dst = (r0 + i) * self.cols + c0;
            self.data[dst..dst + b.cols].copy_from_slice(&b.data[i * b.cols..(i + 1) * b.cols]);
        }
    }

    /// Stacks `[top; bottom]`.
    pub fn vstack(top: &ComplexMatrix, bottom: &ComplexMatrix) -> Self {
        assert_eq!(top.cols, bottom.cols);
        let mut data = Vec::with_capacity((top.rows + bottom.rows) * top.cols);
        data.extend_from_slice(&top.data);
        data.extend_from_slice(&bottom.data);
        Self {
            rows: top.rows + bottom.rows,
            cols: top.cols,
            data,
        }
    }

    /// Assembles `[[a, b], [c, d]]` from four equally sized square blocks.
    pub fn from_blocks(
        a: &ComplexMatrix,
        b: &ComplexMatrix,
        c: &ComplexMatrix,
        d: &ComplexMatrix,
    ) -> Self {
        let m = a.rows;
        for blk in [a, b, c, d] {
            assert!(blk.rows == m && blk.cols == m, "blocks must be m x m");
        }
        let mut out = Self::zeros(2 * m, 2 * m);
        out.set_block(0, 0, a);
        out.set_block(0, m, b);
        out.set_block(m, 0, c);
        out.set_block(m, m, d);
        out
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Self {
        let mut out = Self::zeros(self.rows, rhs.cols);
        gemm_into(&mut out, self, rhs);
        out
    }

    pub fn copy_from(&mut self, other: &ComplexMatrix) {
        assert!(self.rows == other.rows && self.cols == other.cols);
        self.data.copy_from_slice(&other.data);
    }
}

/// `out = a·b`, reusing the storage of `out`.
pub fn gemm_into(out: &mut ComplexMatrix, a: &ComplexMatrix, b: &ComplexMatrix) {
    assert_eq!(a.cols, b.rows, "inner dimensions differ");
    assert!(out.rows == a.rows && out.cols == b.cols, "output shape");
    let (n, k, m) = (a.rows, a.cols, b.cols);
    out.data.fill(ZERO);
    for i in 0..n {
        let row = &mut out.data[i * m..(i + 1) * m];
        for p in 0..k {
            let aip = a.data[i * k + p];
            if aip == ZERO {
                continue;
            }
            let brow = &b.data[p * m..(p + 1) * m];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += aip * bv;
            }
        }
    }
}

/// `out = a*·b`.
pub fn gemm_adjoint_left_into(out: &mut ComplexMatrix, a: &ComplexMatrix, b: &ComplexMatrix) {
    assert_eq!(a.rows, b.rows, "inner dimensions differ");
    assert!(out.rows == a.cols && out.cols == b.cols, "output shape");
    let (k, n, m) = (a.rows, a.cols, b.cols);
    out.data.fill(ZERO);
    for p in 0..k {
        let brow = &b.data[p * m..(p + 1) * m];
        for i in 0..n {
            let api = a.data[p * n + i].conj();
            if api == ZERO {
                continue;
            }
            let row = &mut out.data[i * m..(i + 1) * m];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += api * bv;
            }
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = c64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &c64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut c64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Add<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}
