//! Finite-volume strip models and block Jacobi matrices.
//!
//! The Anderson model on the strip `{1..N} × {−L..L}^d` has identity hopping
//! between consecutive slices and slice Hamiltonians
//! `V_n = Δ_cube + diag(v_{n,·})`, where `Δ_cube` is the adjacency matrix of
//! the cube with Dirichlet truncation and `v_{n,µ}` are i.i.d. uniform on
//! `[−W/2, W/2]`.

use alloc::format;
use alloc::vec::Vec;

use crate::linalg::{
    c64, hermitian_eigen, singular_value_range, ComplexMatrix, ORACLE_DIM_CAP, ZERO,
};
use crate::rng::KeyedStream;
use crate::{Error, Result};

/// Off-diagonal block distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoppingKind {
    /// `T_n = 1`.
    Identity,
    /// `T_n = 1 + 0.2·R`, `R` with i.i.d. uniform `[−1, 1]` entries,
    /// resampled until the smallest singular value is at least `0.5`.
    RandomInvertible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Dirichlet,
}

/// Smallest singular value accepted for a random hopping block.
pub const HOPPING_SINGULAR_FLOOR: f64 = 0.5;
const HOPPING_PERTURBATION: f64 = 0.2;
const MAX_HOPPING_DRAWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Transverse dimension `d`.
    pub transverse_dim: usize,
    /// Transverse radius `L`; the fiber is `{−L..L}^d`.
    pub transverse_radius: usize,
    /// Strip length `N`.
    pub length: usize,
    /// Disorder width `W`.
    pub disorder_width: f64,
    pub hopping: HoppingKind,
    pub seed: u64,
    pub boundary: Boundary,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            transverse_dim: 1,
            transverse_radius: 4,
            length: 16,
            disorder_width: 1.0,
            hopping: HoppingKind::Identity,
            seed: 1,
            boundary: Boundary::Dirichlet,
        }
    }
}

impl ModelParams {
    /// Fiber dimension `m = (2L+1)^d`.
    pub fn fiber_dim(&self) -> usize {
        (2 * self.transverse_radius + 1).pow(self.transverse_dim as u32)
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::InvalidParams(
                "strip length N must be at least 1".into(),
            ));
        }
        if !(self.disorder_width >= 0.0) || !self.disorder_width.is_finite() {
            return Err(Error::InvalidParams(format!(
                "disorder width must be finite and non-negative, got {}",
                self.disorder_width
            )));
        }
        let side = 2 * self.transverse_radius + 1;
        let fits = (0..self.transverse_dim).try_fold(1usize, |acc, _| acc.checked_mul(side));
        if fits.map_or(true, |m| m > 1 << 20) {
            return Err(Error::InvalidParams("fiber dimension is too large".into()));
        }
        Ok(())
    }

    /// Upper bound on `Λ` known before sampling.
    pub fn lambda_a_priori(&self) -> f64 {
        let potential = 2.0 * self.transverse_dim as f64 + 0.5 * self.disorder_width;
        let hopping = match self.hopping {
            HoppingKind::Identity => 1.0,
            HoppingKind::RandomInvertible => (1.0 + HOPPING_PERTURBATION * self.fiber_dim() as f64)
                .max(1.0 / HOPPING_SINGULAR_FLOOR),
        };
        potential.max(hopping)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// One disorder realization `v_{n,µ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderField {
    length: usize,
    fiber: usize,
    values: Vec<f64>,
}

impl DisorderField {
    /// `v_{n,µ}` for site `n ∈ 1..=N` and fiber index `µ ∈ 0..m`.
    pub fn value(&self, site: usize, mu: usize) -> f64 {
        assert!((1..=self.length).contains(&site) && mu < self.fiber);
        self.values[(site - 1) * self.fiber + mu]
    }

    pub fn site(&self, site: usize) -> &[f64] {
        assert!((1..=self.length).contains(&site));
        &self.values[(site - 1) * self.fiber..site * self.fiber]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn sample_disorder(params: &ModelParams) -> DisorderField {
    let m = params.fiber_dim();
    let w = params.disorder_width;
    let mut values = Vec::with_capacity(params.length * m);
    for site in 1..=params.length {
        let mut stream = KeyedStream::disorder(params.seed, site);
        for _ in 0..m {
            let v = if w == 0.0 {
                0.0
            } else {
                stream.uniform(-0.5 * w, 0.5 * w)
            };
            values.push(v);
        }
    }
    DisorderField {
        length: params.length,
        fiber: m,
        values,
    }
}

/// Adjacency matrix of `{−L..L}^d` with hopping 1 and Dirichlet truncation.
/// Sites are ordered lexicographically with the first axis fastest.
pub fn cube_adjacency(dim: usize, radius: usize) -> ComplexMatrix {
    let side = 2 * radius + 1;
    let m = side.pow(dim as u32);
    let mut a = ComplexMatrix::zeros(m, m);
    let mut stride = 1;
    for _axis in 0..dim {
        for idx in 0..m {
            let coord = (idx / stride) % side;
            if coord + 1 < side {
                let j = idx + stride;
                a[(idx, j)] = c64::new(1.0, 0.0);
                a[(j, idx)] = c64::new(1.0, 0.0);
            }
        }
        stride *= side;
    }
    a
}

/// `V_n`: cube adjacency plus the on-site disorder of slice `n`.
pub fn build_potential_block(
    params: &ModelParams,
    field: &DisorderField,
    site: usize,
) -> Result<ComplexMatrix> {
    if !(1..=params.length).contains(&site) || site > field.length {
        return Err(Error::IndexOutOfRange {
            index: site,
            len: params.length,
        });
    }
    let mut v = cube_adjacency(params.transverse_dim, params.transverse_radius);
    for (mu, &x) in field.site(site).iter().enumerate() {
        v[(mu, mu)] = c64::new(x, 0.0);
    }
    Ok(v)
}

/// `T_n`; always the identity for `n = 1`.
pub fn build_hopping_block(params: &ModelParams, site: usize) -> Result<ComplexMatrix> {
    let m = params.fiber_dim();
    if site <= 1 || params.hopping == HoppingKind::Identity {
        return Ok(ComplexMatrix::identity(m));
    }
    let mut stream = KeyedStream::hopping(params.seed, site);
    for _ in 0..MAX_HOPPING_DRAWS {
        let t = ComplexMatrix::from_fn(m, m, |i, j| {
            let r = HOPPING_PERTURBATION * stream.uniform(-1.0, 1.0);
            c64::new(if i == j { 1.0 + r } else { r }, 0.0)
        });
        if singular_value_range(&t).1 >= HOPPING_SINGULAR_FLOOR {
            return Ok(t);
        }
    }
    Err(Error::InvalidParams(format!(
        "no hopping block with singular values >= {HOPPING_SINGULAR_FLOOR} after {MAX_HOPPING_DRAWS} draws (m = {m})"
    )))
}

/// Smallest singular value accepted for any off-diagonal block.
pub const MIN_HOPPING_SINGULAR: f64 = 1e-8;

/// The finite block Jacobi matrix `H_{N,L}`.
///
/// Blocks are stored 0-based: `potentials[k]` is `V_{k+1}` and `hoppings[k]`
/// is `T_{k+1}`, with `hoppings[0] = 1`.
#[derive(Debug, Clone)]
pub struct BlockJacobi {
    fiber: usize,
    potentials: Vec<ComplexMatrix>,
    hoppings: Vec<ComplexMatrix>,
    lambda: f64,
}

impl BlockJacobi {
    pub fn new(potentials: Vec<ComplexMatrix>, hoppings: Vec<ComplexMatrix>) -> Result<Self> {
        let n = potentials.len();
        if n == 0 || hoppings.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{n} potential blocks and {} hopping blocks",
                hoppings.len()
            )));
        }
        let m = potentials[0].rows();
        if potentials
            .iter()
            .chain(&hoppings)
            .any(|b| b.rows() != m || b.cols() != m)
        {
            return Err(Error::ShapeMismatch(format!("all blocks must be {m}x{m}")));
        }
        if hoppings[0] != ComplexMatrix::identity(m) {
            return Err(Error::InvalidParams("T_1 must be the identity".into()));
        }
        let mut lambda: f64 = 1.0;
        for v in &potentials {
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
            let defect = v.hermitian_defect();
            if defect > 1e-12 * v.frobenius_norm().max(1.0) {
                return Err(Error::NotHermitian { defect });
            }
            let eig = hermitian_eigen(&v.hermitian_part())?;
            let norm = eig.eigenvalues[0].abs().max(eig.eigenvalues[m - 1].abs());
            lambda = lambda.max(norm);
        }
        for t in &hoppings[1..] {
            if !t.is_finite() {
                return Err(Error::NonFinite);
            }
            let (hi, lo) = singular_value_range(t);
            if lo < MIN_HOPPING_SINGULAR {
                return Err(Error::SingularMatrix { pivot: lo });
            }
            lambda = lambda.max(hi).max(1.0 / lo);
        }
        let potentials = potentials.into_iter().map(|v| v.hermitian_part()).collect();
        Ok(Self {
            fiber: m,
            potentials,
            hoppings,
            lambda,
        })
    }

    /// Scalar chain: `potentials = (V_1..V_N)`, `hoppings = (T_2..T_N)`.
    pub fn scalar(potentials: &[f64], hoppings: &[f64]) -> Result<Self> {
        if potentials.is_empty() || hoppings.len() + 1 != potentials.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} potentials need {} hoppings, got {}",
                potentials.len(),
                potentials.len().saturating_sub(1),
                hoppings.len()
            )));
        }
        let v = potentials
            .iter()
            .map(|&x| ComplexMatrix::from_real(1, 1, &[x]))
            .collect();
        let t = core::iter::once(1.0)
            .chain(hoppings.iter().copied())
            .map(|x| ComplexMatrix::from_real(1, 1, &[x]))
            .collect();
        Self::new(v, t)
    }

    /// Fiber dimension `m`.
    pub fn fiber(&self) -> usize {
        self.fiber
    }

    /// Strip length `N`.
    pub fn len(&self) -> usize {
        self.potentials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potentials.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.fiber * self.len()
    }

    /// `V_n`, 1-based.
    pub fn potential(&self, site: usize) -> &ComplexMatrix {
        &self.potentials[site - 1]
    }

    /// `T_n`, 1-based.
    pub fn hopping(&self, site: usize) -> &ComplexMatrix {
        &self.hoppings[site - 1]
    }

    pub fn potentials(&self) -> &[ComplexMatrix] {
        &self.potentials
    }

    pub fn hoppings(&self) -> &[ComplexMatrix] {
        &self.hoppings
    }

    /// `Λ = max_n {‖V_n‖, ‖T_n‖, ‖T_n⁻¹‖}` in operator norm.
    pub fn lambda_bound(&self) -> f64 {
        self.lambda
    }
}

/// Samples the disorder and assembles `H_{N,L}` for `params`.
pub fn build_finite_jacobi(params: &ModelParams) -> Result<BlockJacobi> {
    params.validate()?;
    let field = sample_disorder(params);
    let mut v = Vec::with_capacity(params.length);
    let mut t = Vec::with_capacity(params.length);
    for site in 1..=params.length {
        v.push(build_potential_block(params, &field, site)?);
        t.push(build_hopping_block(params, site)?);
    }
    let j = BlockJacobi::new(v, t)?;
    if params.hopping == HoppingKind::Identity {
        let bound = 2.0 * params.transverse_dim as f64 + 0.5 * params.disorder_width + 1.0;
        if j.lambda_bound() > bound + 1e-12 {
            return Err(Error::InvalidParams(format!(
                "Lambda_L = {} exceeds the finite-volume bound {bound}",
                j.lambda_bound()
            )));
        }
    }
    Ok(j)
}

pub fn assemble_dense(j: &BlockJacobi) -> Result<ComplexMatrix> {
    assemble_dense_capped(j, ORACLE_DIM_CAP)
}

/// Dense `(N·m)×(N·m)` matrix with `V_n` on the diagonal, `T_{n+1}` above and
/// `T_{n+1}*` below it.
pub fn assemble_dense_capped(j: &BlockJacobi, cap: usize) -> Result<ComplexMatrix> {
    let dim = j.dim();
    if dim > cap {
        return Err(Error::DimensionTooLarge { dim, cap });
    }
    let m = j.fiber();
    let mut h = ComplexMatrix::zeros(dim, dim);
    for k in 0..j.len() {
        h.set_block(k * m, k * m, &j.potentials[k]);
        if k + 1 < j.len() {
            let t = &j.hoppings[k + 1];
            h.set_block(k * m, (k + 1) * m, t);
            h.set_block((k + 1) * m, k * m, &t.adjoint());
        }
    }
    Ok(h)
}

/// Finite-volume trace per unit volume, `Tr(A)/m`.
pub fn normalized_trace(a: &ComplexMatrix) -> c64 {
    if a.rows() == 0 {
        return ZERO;
    }
    a.trace() / a.rows() as f64
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use crate::linalg::testing::{random_hermitian, random_matrix};
    use crate::linalg::ONE;

    /// Chain with random Hermitian `V_n` (entries up to 2) and, if `general`,
    /// hopping blocks `1 + 0.3·R`.
    pub fn random_chain(m: usize, n: usize, seed: &mut u64, general: bool) -> BlockJacobi {
        scaled_chain(m, n, seed, 2.0, general)
    }

    pub fn scaled_chain(
        m: usize,
        n: usize,
        seed: &mut u64,
        v_scale: f64,
        general: bool,
    ) -> BlockJacobi {
        let v = (0..n)
            .map(|_| random_hermitian(m, seed).scale_real(v_scale))
            .collect();
        let t = (0..n)
            .map(|k| {
                if k == 0 || !general {
                    ComplexMatrix::identity(m)
                } else {
                    random_matrix(m, m, seed)
                        .scale_real(0.3)
                        .shift_diagonal(ONE)
                }
            })
            .collect();
        BlockJacobi::new(v, t).unwrap()
    }
}
