//! Eigenvalue counting for block Jacobi matrices.
//!
//! By Sylvester's law of inertia, the number of eigenvalues of `H ≤ E` is the
//! number of nonpositive eigenvalues summed over the Schur complements
//! `D₁ = V₁ − E`, `D_k = V_k − E − T_k*·D_{k−1}⁻¹·T_k`.

use alloc::vec::Vec;

use crate::exec::Executor;
use crate::linalg::{c64, ldl_inertia_in_place, Lu};
use crate::model::{build_finite_jacobi, BlockJacobi, ModelParams};
use crate::rng::realization_seed;
use crate::stats::{EnsembleStat, RunningStats};
use crate::{Error, Result};

/// A Schur complement is treated as singular below this relative pivot size.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-11;
const MAX_SHIFTS: usize = 64;

/// Energy shift used when an intermediate Schur complement is singular.
pub fn perturbation_step(energy: f64) -> f64 {
    1e-9 * (1.0 + energy.abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SturmCount {
    /// Eigenvalues `≤ E`.
    pub count: usize,
    /// Energy at which the recursion actually ran.
    pub energy_used: f64,
}

impl SturmCount {
    pub fn perturbed(&self, energy: f64) -> bool {
        self.energy_used != energy
    }
}

/// Counts eigenvalues `≤ E`; `None` if some `D_k` with `k < N` is singular.
fn try_count(j: &BlockJacobi, energy: f64) -> Option<usize> {
    let shift = c64::new(-energy, 0.0);
    let n = j.len();
    let mut d = j.potential(1).shift_diagonal(shift);
    let mut count = 0;
    for k in 1..=n {
        let mut work = d.hermitian_part();
        let tol = SINGULAR_PIVOT_RTOL * work.frobenius_norm();
        let inertia = ldl_inertia_in_place(&mut work, tol);
        if k == n {
            return inertia.ok().map(|i| count + i.nonpositive());
        }
        match inertia {
            Ok(i) if i.zero == 0 => count += i.nonpositive(),
            _ => return None,
        }
        let t = j.hopping(k + 1);
        let x = Lu::factor(&d).ok()?.solve(t).ok()?;
        d = &j.potential(k + 1).shift_diagonal(shift) - &(&t.adjoint() * &x);
        if !d.is_finite() {
            return None;
        }
    }
    unreachable!("the loop returns at k = N")
}

/// Number of eigenvalues of `H` at or below `E`.
pub fn sturm_count(j: &BlockJacobi, energy: f64) -> SturmCount {
    let eps = perturbation_step(energy);
    let mut e = energy;
    for k in 0..MAX_SHIFTS {
        if let Some(count) = try_count(j, e) {
            return SturmCount {
                count,
                energy_used: e,
            };
        }
        e = energy + (k + 1) as f64 * eps;
    }
    // Not reachable for finite blocks: singular shifts are isolated points.
    panic!("no regular energy found near {energy}")
}

/// One sample of the normalized counting function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdosPoint {
    pub energy: f64,
    pub count: usize,
    /// `count/(N·m)`.
    pub idos: f64,
    pub perturbed: bool,
}

pub fn idos(j: &BlockJacobi, energy: f64) -> IdosPoint {
    let c = sturm_count(j, energy);
    IdosPoint {
        energy,
        count: c.count,
        idos: c.count as f64 / j.dim() as f64,
        perturbed: c.perturbed(energy),
    }
}

pub fn idos_grid(j: &BlockJacobi, grid: &[f64]) -> Vec<IdosPoint> {
    grid.iter().map(|&e| idos(j, e)).collect()
}

/// Seed of realization `r` of an ensemble generated from `params.seed`.
pub fn realization_params(params: &ModelParams, r: usize) -> ModelParams {
    params.with_seed(realization_seed(params.seed, r as u64))
}

/// Monte Carlo mean and standard error of `N_{N,L}(E)` over disorder.
pub fn idos_expectation(
    params: &ModelParams,
    energy: f64,
    realizations: usize,
    exec: &impl Executor,
) -> Result<EnsembleStat> {
    if realizations < 2 {
        return Err(Error::InvalidParams(
            "at least two realizations are needed".into(),
        ));
    }
    let values = exec.map(realizations, |r| {
        build_finite_jacobi(&realization_params(params, r)).map(|j| idos(&j, energy).idos)
    });
    let mut stats = RunningStats::default();
    for v in values {
        stats.push(v?);
    }
    Ok(stats.summary())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::linalg::hermitian_eigen;
    use crate::model::assemble_dense;
    use crate::model::testing::random_chain;

    #[test]
    fn single_block_convention() {
        let j = BlockJacobi::scalar(&[3.0], &[]).unwrap();
        assert_eq!(sturm_count(&j, 2.0).count, 0);
        assert_eq!(sturm_count(&j, 3.0).count, 1);
        assert_eq!(sturm_count(&j, 4.0).count, 1);
        assert!(!sturm_count(&j, 3.0).perturbed(3.0));
    }

    #[test]
    fn two_site_chain() {
        let j = BlockJacobi::scalar(&[0.0, 0.0], &[1.0]).unwrap();
        let c = sturm_count(&j, 0.0);
        assert_eq!(c.count, 1);
        assert!(c.perturbed(0.0));
        assert_eq!(sturm_count(&j, 1.0).count, 2);
        assert_eq!(sturm_count(&j, -1.0).count, 1);
        assert_eq!(sturm_count(&j, -1.0 - 1e-12).count, 0);
    }

    #[test]
    fn matches_dense_eigensolve() {
        let mut seed = 31;
        for k in 0..40 {
            let m = 1 + k % 4;
            let n = 1 + (k * 7) % (60 / m).min(15);
            let j = random_chain(m, n, &mut seed, k % 2 == 0);
            let eig = hermitian_eigen(&assemble_dense(&j).unwrap()).unwrap();
            for t in 0..9 {
                let e = -6.0 + 1.5 * t as f64 + 0.013 * k as f64;
                if eig.eigenvalues.iter().any(|l| (l - e).abs() < 1e-7) {
                    continue;
                }
                let want = eig.eigenvalues.iter().filter(|&&l| l <= e).count();
                assert_eq!(sturm_count(&j, e).count, want);
            }
        }
    }

    #[test]
    fn idos_limits_and_monotonicity() {
        let mut seed = 8;
        let j = random_chain(3, 5, &mut seed, true);
        let lam = j.lambda_bound();
        assert_eq!(idos(&j, -10.0 * lam).idos, 0.0);
        assert_eq!(idos(&j, 10.0 * lam).idos, 1.0);
        let grid: Vec<f64> = (0..200)
            .map(|k| -4.0 * lam + 0.04 * lam * k as f64)
            .collect();
        let pts = idos_grid(&j, &grid);
        assert!(pts.windows(2).all(|w| w[0].idos <= w[1].idos));
        assert!(pts.iter().all(|p| (0.0..=1.0).contains(&p.idos)));
    }

    #[test]
    fn clean_ensemble_has_no_spread() {
        let p = ModelParams {
            transverse_dim: 1,
            transverse_radius: 1,
            length: 4,
            disorder_width: 0.0,
            ..ModelParams::default()
        };
        let s = idos_expectation(&p, 0.3, 5, &Sequential).unwrap();
        assert_eq!(s.stderr, 0.0);
        assert!(idos_expectation(&p, 0.3, 1, &Sequential).is_err());
    }
}
