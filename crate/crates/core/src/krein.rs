//! Krein forms, the Cayley transform, Lagrangian frames and the Möbius action.
//!
//! With `J = diag(1, −1)`, `I = [[0, −1], [1, 0]]` and
//! `C = (1/√2)[[1, −i], [1, i]]` (all in `m×m` blocks) one has `iI = C*JC`,
//! so conjugation by `C` carries `I`-unitaries to `J`-unitaries. A
//! `J`-unitary `G = [[A, B], [C, D]]` acts on unitary matrices by
//! `G·U = (AU + B)(CU + D)⁻¹`.

use alloc::format;

use crate::linalg::{
    c64, inverse, operator_norm, orthonormalize_columns, unitary_defect, ComplexMatrix, I, ONE,
};
use crate::{Error, Result};

/// Smallest admissible singular value of the Möbius denominator `CU + D`.
pub const DENOMINATOR_FLOOR: f64 = 1e-10;
/// Unitarity tolerance accepted by [`frame_from_unitary`].
pub const FRAME_UNITARY_TOL: f64 = 1e-8;

/// The forms `J`, `I` and the Cayley matrix `C` for fiber dimension `m`.
#[derive(Debug, Clone)]
pub struct KreinConstants {
    m: usize,
    j: ComplexMatrix,
    i_form: ComplexMatrix,
    cayley: ComplexMatrix,
}

impl KreinConstants {
    pub fn new(m: usize) -> Self {
        let one = ComplexMatrix::identity(m);
        let zero = ComplexMatrix::zeros(m, m);
        let minus = one.scale_real(-1.0);
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let j = ComplexMatrix::from_blocks(&one, &zero, &zero, &minus);
        let i_form = ComplexMatrix::from_blocks(&zero, &minus, &one, &zero);
        let cayley = ComplexMatrix::from_blocks(
            &one.scale_real(s),
            &one.scale(c64::new(0.0, -s)),
            &one.scale_real(s),
            &one.scale(c64::new(0.0, s)),
        );
        Self {
            m,
            j,
            i_form,
            cayley,
        }
    }

    pub fn fiber(&self) -> usize {
        self.m
    }

    pub fn j(&self) -> &ComplexMatrix {
        &self.j
    }

    pub fn i_form(&self) -> &ComplexMatrix {
        &self.i_form
    }

    pub fn cayley(&self) -> &ComplexMatrix {
        &self.cayley
    }
}

/// Outcome of a form-preservation check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormCheck {
    /// `‖M*·K·M − K‖_F`.
    pub defect: f64,
    pub within: bool,
}

fn form_defect(m: &ComplexMatrix, form: impl Fn(usize) -> ComplexMatrix, tol: f64) -> FormCheck {
    assert!(
        m.is_square() && m.rows() % 2 == 0,
        "form checks need a square matrix of even size"
    );
    let k = form(m.rows() / 2);
    let defect = (&(&m.adjoint() * &(&k * m)) - &k).frobenius_norm();
    FormCheck {
        defect,
        within: defect <= tol,
    }
}

/// Checks `M*·I·M = I`.
pub fn is_i_unitary(m: &ComplexMatrix, tol: f64) -> FormCheck {
    form_defect(m, |n| KreinConstants::new(n).i_form, tol)
}

/// Checks `M*·J·M = J`.
pub fn is_j_unitary(m: &ComplexMatrix, tol: f64) -> FormCheck {
    form_defect(m, |n| KreinConstants::new(n).j, tol)
}

/// `C·M·C*`, evaluated blockwise.
pub fn cayley_conjugate(m: &ComplexMatrix) -> ComplexMatrix {
    assert!(
        m.is_square() && m.rows() % 2 == 0,
        "Cayley conjugation needs a 2m×2m matrix"
    );
    let n = m.rows() / 2;
    let a = m.block(0, 0, n, n);
    let b = m.block(0, n, n, n);
    let c = m.block(n, 0, n, n);
    let d = m.block(n, n, n, n);
    let half = 0.5;
    let ic = c.scale(I);
    let ib = b.scale(I);
    let a_blk = (&(&(&a - &ic) + &ib) + &d).scale_real(half);
    let b_blk = (&(&(&a - &ic) - &ib) - &d).scale_real(half);
    let c_blk = (&(&(&a + &ic) + &ib) - &d).scale_real(half);
    let d_blk = (&(&(&a + &ic) - &ib) + &d).scale_real(half);
    ComplexMatrix::from_blocks(&a_blk, &b_blk, &c_blk, &d_blk)
}

/// Right division `X·Y⁻¹` with the near-singularity guard used by the
/// Möbius action. The guard uses `1/‖Y⁻¹‖_F`, a lower bound for the
/// smallest singular value of `Y`, scaled by `denominator_scale`.
pub(crate) fn guarded_right_divide(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    denominator_scale: f64,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let inv = inverse(y).map_err(|_| Error::NearSingularDenominator { bound: 0.0 })?;
    let bound = 1.0 / (denominator_scale * inv.frobenius_norm());
    if !(bound >= DENOMINATOR_FLOOR) {
        return Err(Error::NearSingularDenominator { bound });
    }
    Ok((x * &inv, inv))
}

/// The Möbius action `(AU + B)(CU + D)⁻¹` of a `2m×2m` matrix on `U`.
pub fn moebius(g: &ComplexMatrix, u: &ComplexMatrix) -> Result<ComplexMatrix> {
    let m = u.rows();
    if !u.is_square() || g.rows() != 2 * m || g.cols() != 2 * m {
        return Err(Error::ShapeMismatch(format!(
            "Möbius action of a {}x{} matrix on a {}x{} matrix",
            g.rows(),
            g.cols(),
            u.rows(),
            u.cols()
        )));
    }
    let num = &(&g.block(0, 0, m, m) * u) + &g.block(0, m, m, m);
    let den = &(&g.block(m, 0, m, m) * u) + &g.block(m, m, m, m);
    guarded_right_divide(&num, &den, 1.0).map(|(out, _)| out)
}

/// An orthonormal `2m×m` frame spanning a Lagrangian subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianFrame {
    phi: ComplexMatrix,
}

impl LagrangianFrame {
    /// Wraps `phi` without normalizing it.
    pub fn new(phi: ComplexMatrix) -> Result<Self> {
        if phi.rows() != 2 * phi.cols() {
            return Err(Error::ShapeMismatch(format!(
                "a frame must be 2m x m, got {}x{}",
                phi.rows(),
                phi.cols()
            )));
        }
        Ok(Self { phi })
    }

    /// The reference frame `(1; 0)`.
    pub fn reference(m: usize) -> Self {
        Self {
            phi: ComplexMatrix::vstack(&ComplexMatrix::identity(m), &ComplexMatrix::zeros(m, m)),
        }
    }

    pub fn fiber(&self) -> usize {
        self.phi.cols()
    }

    pub fn phi(&self) -> &ComplexMatrix {
        &self.phi
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.phi
    }

    pub fn top(&self) -> ComplexMatrix {
        let m = self.fiber();
        self.phi.block(0, 0, m, m)
    }

    pub fn bottom(&self) -> ComplexMatrix {
        let m = self.fiber();
        self.phi.block(m, 0, m, m)
    }

    /// Right multiplication `Φ·W`, which leaves the spanned subspace unchanged.
    pub fn right_mul(&self, w: &ComplexMatrix) -> Self {
        Self { phi: &self.phi * w }
    }

    /// `‖Φ*Φ − 1‖_F`.
    pub fn normalization_defect(&self) -> f64 {
        let gram = &self.phi.adjoint() * &self.phi;
        crate::linalg::defect_of_gram(&gram)
    }

    /// `‖Φ*·I·Φ‖_F`.
    pub fn i_lagrangian_defect(&self) -> f64 {
        let k = KreinConstants::new(self.fiber());
        (&self.phi.adjoint() * &(k.i_form() * &self.phi)).frobenius_norm()
    }

    /// `‖Φ*·J·Φ‖_F`.
    pub fn j_lagrangian_defect(&self) -> f64 {
        let k = KreinConstants::new(self.fiber());
        (&self.phi.adjoint() * &(k.j() * &self.phi)).frobenius_norm()
    }
}

/// Stereographic projection `(a − ib)(a + ib)⁻¹` of a frame `Φ = (a; b)`.
///
/// Invariant under `Φ ↦ Φ·R` for any invertible `R`.
pub fn stereographic_i(frame: &LagrangianFrame) -> Result<ComplexMatrix> {
    let a = frame.top();
    let ib = frame.bottom().scale(I);
    let minus = &a - &ib;
    let plus = &a + &ib;
    let inv = inverse(&plus).map_err(|_| Error::SingularProjection)?;
    if inv.frobenius_norm() * plus.frobenius_norm() > 1e14 {
        return Err(Error::SingularProjection);
    }
    Ok(&minus * &inv)
}

/// Inverse projection: the frame `½(U + 1; i(U − 1))`, column-orthonormalized.
pub fn frame_from_unitary(u: &ComplexMatrix) -> Result<LagrangianFrame> {
    if !u.is_square() {
        return Err(Error::ShapeMismatch(
            "frame_from_unitary needs a square matrix".into(),
        ));
    }
    let defect = unitary_defect(u);
    if !(defect <= FRAME_UNITARY_TOL) {
        return Err(Error::NotUnitary { defect });
    }
    let top = u.shift_diagonal(ONE).scale_real(0.5);
    let bottom = u.shift_diagonal(-ONE).scale(c64::new(0.0, 0.5));
    let raw = ComplexMatrix::vstack(&top, &bottom);
    let phi = orthonormalize_columns(&raw).ok_or(Error::NotUnitary { defect })?;
    Ok(LagrangianFrame { phi })
}

/// Measured `‖D⁻¹C‖` for the Cayley conjugate of a transfer matrix, next to
/// the a-priori bound on its square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionBound {
    pub measured: f64,
    /// `1 − 4Λ⁻²(|E| + Λ + 2)⁻²`, a bound on `measured²`.
    pub bound: f64,
}

impl ContractionBound {
    pub fn holds(&self) -> bool {
        self.measured * self.measured <= self.bound + 1e-10
    }
}

/// `‖D⁻¹C‖` for the lower blocks of `C·M·C*`.
pub fn contraction(m: &ComplexMatrix) -> Result<f64> {
    let g = cayley_conjugate(m);
    let n = m.rows() / 2;
    let dinv = inverse(&g.block(n, n, n, n))?;
    Ok(operator_norm(&(&dinv * &g.block(n, 0, n, n))))
}

pub fn dc_contraction_bound(
    m: &ComplexMatrix,
    lambda: f64,
    energy: f64,
) -> Result<ContractionBound> {
    let measured = contraction(m)?;
    let s = lambda * (energy.abs() + lambda + 2.0);
    Ok(ContractionBound {
        measured,
        bound: 1.0 - 4.0 / (s * s),
    })
}
