//! Oscillation theory for block Jacobi operators.
//!
//! The crate computes the integrated density of states (IDOS) of finite
//! block Jacobi matrices in two independent ways:
//!
//! - by counting eigenvalues below an energy with a block LDL* inertia
//!   recursion ([`spectra`]), and
//! - by the rotation number of the matrix Pruefer phase, the integral over
//!   energy of the normalized trace of its phase velocity ([`pruefer`],
//!   [`flow`]).
//!
//! The two agree up to `2/N` for a strip of length `N`, uniformly in the
//! fiber dimension. The rotation number is evaluated either exactly, through
//! the continuous branch of `arg det U`, or by panel quadrature of the
//! velocity. Everything here is pure computation over dense complex
//! matrices; the crate is `no_std` and only needs `alloc`. IO, configuration
//! and the command-line driver live in the `pruefer-cli` crate.
//!
//! Module map:
//!
//! | module     | contents                                                        |
//! |------------|-----------------------------------------------------------------|
//! | [`linalg`] | dense complex kernels: LU, Jacobi and QR eigensolvers, inertia  |
//! | [`model`]  | Anderson-type strip models and the assembled block Jacobi matrix |
//! | [`krein`]  | the `J`/`I` forms, Cayley transform, Moebius action, frames     |
//! | [`pruefer`]| transfer matrices, the stable Pruefer recursion, phase velocity |
//! | [`spectra`]| eigenvalue counting and normalized IDOS                          |
//! | [`flow`]   | rotation numbers, IDOS comparisons, ensemble sweeps             |
//! | [`exec`]   | the executor trait used to parallelize energy and seed loops    |
#![cfg_attr(not(test), no_std)]
// `!(x >= y)` is used on purpose so that NaN lands on the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod exec;
pub mod flow;
pub mod krein;
pub mod linalg;
pub mod model;
pub mod pruefer;
pub mod rng;
pub mod spectra;
pub mod stats;

pub use error::{Error, Result};
pub use linalg::{c64, ComplexMatrix, Inertia};
