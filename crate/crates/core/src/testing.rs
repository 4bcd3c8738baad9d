//! Random instances for tests and benchmarks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::qtensor::{c, CMatrix, CVector, DensityMatrix, HermitianOperator};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_complex_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(gaussian(rng), gaussian(rng)))
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianOperator {
    let g = random_complex_matrix(dim, dim, rng);
    HermitianOperator::new((&g + g.adjoint()) * c(0.5, 0.0)).expect("symmetrized")
}

pub fn random_state_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(dim, |_, _| c(gaussian(rng), gaussian(rng)));
    let n = v.norm();
    v / c(n, 0.0)
}

/// Random density matrix of the given rank (Ginibre ensemble).
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let g = random_complex_matrix(dim, rank, rng);
    let m = &g * g.adjoint();
    let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
    DensityMatrix::new(m / c(tr, 0.0)).expect("Ginibre state")
}

/// Haar-random unitary via QR of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = random_complex_matrix(dim, dim, rng);
    let qr = g.qr();
    let (q, r) = qr.unpack();
    let mut q = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c(1.0, 0.0)
        };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}
