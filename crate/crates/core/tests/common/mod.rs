#![allow(dead_code)]

use dvqa::qstate::{CMatrix, DensityMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn ginibre(d: usize, rng: &mut impl Rng) -> CMatrix {
    DMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// `G G^dag / Tr`, full rank with probability one.
pub fn random_density(n: usize, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ginibre(1 << n, &mut rng);
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).unwrap()
}

/// Haar-ish unitary from the QR factor of a Ginibre matrix.
pub fn random_unitary(d: usize, rng: &mut impl Rng) -> CMatrix {
    ginibre(d, rng).qr().q()
}

/// Trace norm of a Hermitian matrix via its eigenvalues.
pub fn trace_norm(a: &CMatrix) -> f64 {
    let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
    dvqa::qstate::eigh(&h).0.iter().map(|v| v.abs()).sum()
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
