//! Dense complex matrix kernels.
//!
//! Everything downstream works on small dense blocks (fiber dimension `m`)
//! or, for oracles only, on the assembled `N·m` matrix. The eigensolver is a
//! cyclic Jacobi method; eigenvalue counting goes through a Bunch–Kaufman
//! LDL* factorization instead so that it never needs a full eigensolve.
//! General (non-Hermitian) eigenvalues come from shifted Hessenberg QR.

mod eigen;
mod inertia;
mod lu;
mod matrix;
mod schur;
mod unitary;

pub use eigen::{
    hermitian_eigen, hermitian_eigen_capped, operator_norm, singular_value_range, HermitianEigen,
    ORACLE_DIM_CAP,
};
pub use inertia::{default_zero_tol, hermitian_inertia, Inertia};
pub use lu::{inverse, solve, Lu, PIVOT_FLOOR};
pub use matrix::{c64, gemm_adjoint_left_into, gemm_into, ComplexMatrix};
pub use schur::eigenvalues;
pub use unitary::{orthonormalize_columns, polar_projection, unitary_defect};

pub(crate) use inertia::ldl_inertia_in_place;
pub(crate) use lu::{factor_in_place, solve_packed};
pub(crate) use matrix::{I, ONE, ZERO};
pub(crate) use unitary::defect_of_gram;


#[cfg(test)]
mod proptests {
    use super::testing::random_hermitian;
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn inertia_agrees_with_eigensolve(n in 1usize..=64, seed in any::<u64>()) {
            let mut s = seed;
            let h = random_hermitian(n, &mut s);
            let eig = hermitian_eigen(&h).unwrap();
            let tol = default_zero_tol(&h);
            prop_assume!(eig.eigenvalues.iter().all(|l| (l.abs() - tol).abs() > 1e-8));
            let inertia = hermitian_inertia(&h, tol).unwrap();
            prop_assert_eq!(inertia.negative, eig.eigenvalues.iter().filter(|&&l| l < -tol).count());
            prop_assert_eq!(inertia.positive, eig.eigenvalues.iter().filter(|&&l| l > tol).count());
        }

        #[test]
        fn solve_round_trip(n in 1usize..=12, seed in any::<u64>()) {
            let mut s = seed;
            let a = testing::random_matrix(n, n, &mut s).shift_diagonal(c64::new(2.0 * n as f64, 0.0));
            let x = testing::random_matrix(n, 2, &mut s);
            let got = solve(&a, &(&a * &x)).unwrap();
            prop_assert!((&got - &x).frobenius_norm() <= 1e-8 * x.frobenius_norm());
        }
    }
}
