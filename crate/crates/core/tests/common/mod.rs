#![allow(dead_code)]

use pruefer_core::c64;
use pruefer_core::linalg::ComplexMatrix;
use pruefer_core::model::BlockJacobi;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn centered(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>() - 0.5
}

pub fn hermitian(m: usize, scale: f64, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(m, m, |_, _| c64::new(centered(rng), centered(rng)));
    (&a + &a.adjoint()).scale_real(scale)
}

/// Complex Hermitian potentials; hoppings either `1` or `1 + 0.3·R`.
pub fn chain(m: usize, n: usize, general: bool, rng: &mut ChaCha8Rng) -> BlockJacobi {
    let v = (0..n).map(|_| hermitian(m, 2.0, rng)).collect();
    let t = (0..n)
        .map(|k| {
            if k == 0 || !general {
                ComplexMatrix::identity(m)
            } else {
                ComplexMatrix::from_fn(m, m, |i, j| {
                    let d = if i == j { 1.0 } else { 0.0 };
                    c64::new(d + 0.3 * centered(rng), 0.3 * centered(rng))
                })
            }
        })
        .collect();
    BlockJacobi::new(v, t).unwrap()
}

/// Real scalar chain with potentials in `[−w/2, w/2]` and hoppings in `[0.5, 1.5]`.
pub fn scalar_chain(n: usize, w: f64, rng: &mut ChaCha8Rng) -> BlockJacobi {
    let v: Vec<f64> = (0..n).map(|_| w * centered(rng)).collect();
    let t: Vec<f64> = (1..n).map(|_| 1.0 + centered(rng)).collect();
    BlockJacobi::scalar(&v, &t).unwrap()
}
