use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::qtensor::{c, eigh_matrix, re, CMatrix, HermitianOperator, C64};
use crate::testing::random_unitary;

/// Search space for one party's local term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzMode {
    /// `h = w c·σ` with `|c| = 1` and `|w| ≤ 1`; single-copy qubits only.
    Qubit,
    /// `h = w U diag(±1) U†` on the party's whole `d^M` space.
    #[default]
    SpectrumPinned,
    /// `h = w ⊗_m U_m diag(±1) U_m†`, one pinned factor per copy.
    ProductPinned,
}

/// Optimized local Hamiltonian: unit-spread directions and their weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalHamiltonianAnsatz {
    pub mode: AnsatzMode,
    /// Each direction has eigenvalues in `{+1, -1}`.
    pub directions: Vec<HermitianOperator>,
    /// Largest weight has magnitude 1.
    pub weights: Vec<f64>,
}

impl LocalHamiltonianAnsatz {
    pub fn local_terms(&self) -> Vec<HermitianOperator> {
        self.directions
            .iter()
            .zip(&self.weights)
            .map(|(h, &w)| h.scaled(w))
            .collect()
    }
}

/// Orthonormal basis of `D x D` Hermitian matrices and the unitaries
/// `exp(±iεE_j)` used for central differences.
#[derive(Debug, Clone)]
pub(crate) struct Generators {
    pub basis: Vec<CMatrix>,
    pub plus: Vec<CMatrix>,
    pub minus: Vec<CMatrix>,
}

impl Generators {
    pub fn new(dim: usize, eps: f64) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut basis = Vec::with_capacity(dim * dim);
        for k in 0..dim {
            let mut e = CMatrix::zeros(dim, dim);
            e[(k, k)] = re(1.0);
            basis.push(e);
        }
        for k in 0..dim {
            for l in (k + 1)..dim {
                let mut e = CMatrix::zeros(dim, dim);
                e[(k, l)] = re(s);
                e[(l, k)] = re(s);
                basis.push(e);
                let mut e = CMatrix::zeros(dim, dim);
                e[(k, l)] = c(0.0, -s);
                e[(l, k)] = c(0.0, s);
                basis.push(e);
            }
        }
        let plus = basis.iter().map(|e| unitary_exp(e, eps)).collect();
        let minus = basis.iter().map(|e| unitary_exp(e, -eps)).collect();
        Self { basis, plus, minus }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    /// `Σ_j x_j E_j`.
    pub fn combine(&self, x: &[f64]) -> CMatrix {
        let dim = self.basis[0].nrows();
        let mut a = CMatrix::zeros(dim, dim);
        for (e, &xj) in self.basis.iter().zip(x) {
            a += e * re(xj);
        }
        a
    }
}

/// `exp(i t A)` for Hermitian `A`.
pub(crate) fn unitary_exp(a: &CMatrix, t: f64) -> CMatrix {
    let es = eigh_matrix(a);
    let mut scaled = es.eigenvectors.clone();
    for (j, &l) in es.eigenvalues.iter().enumerate() {
        let phase = C64::from_polar(1.0, t * l);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= phase;
        }
    }
    scaled * es.eigenvectors.adjoint()
}

fn conjugate_signs(u: &CMatrix, signs: &[f64]) -> CMatrix {
    let mut us = u.clone();
    for (j, &s) in signs.iter().enumerate() {
        us.column_mut(j).scale_mut(s);
    }
    us * u.adjoint()
}

/// Direction parameters of one party.
#[derive(Debug, Clone)]
pub(crate) enum Direction {
    Bloch([f64; 3]),
    Pinned { u: CMatrix, signs: Vec<f64> },
    Product(Vec<(CMatrix, Vec<f64>)>),
}

/// Sign pattern with `plus` leading `+1` entries.
pub(crate) fn pattern(dim: usize, plus: usize) -> Vec<f64> {
    (0..dim).map(|k| if k < plus { 1.0 } else { -1.0 }).collect()
}

impl Direction {
    pub fn random<R: Rng + ?Sized>(
        mode: AnsatzMode,
        local_dim: usize,
        copies: usize,
        plus: usize,
        rng: &mut R,
    ) -> Self {
        match mode {
            AnsatzMode::Qubit => {
                let u = random_unitary(2, rng);
                let h = conjugate_signs(&u, &[1.0, -1.0]);
                Direction::Bloch([h[(0, 1)].re, -h[(0, 1)].im, h[(0, 0)].re])
            }
            AnsatzMode::SpectrumPinned => {
                let dim = local_dim.pow(copies as u32);
                Direction::Pinned {
                    u: random_unitary(dim, rng),
                    signs: pattern(dim, plus),
                }
            }
            AnsatzMode::ProductPinned => Direction::Product(
                (0..copies)
                    .map(|_| {
                        let k = rng.random_range(1..=local_dim / 2);
                        (random_unitary(local_dim, rng), pattern(local_dim, k))
                    })
                    .collect(),
            ),
        }
    }

    /// Direction closest to `h` in the given mode: eigenvectors of `h` with
    /// signs relative to the spectral midpoint.
    pub fn from_operator(mode: AnsatzMode, h: &HermitianOperator) -> Result<Self> {
        let es = h.eigh();
        let (lo, hi) = h.spectral_range();
        if hi - lo <= 1e-12 {
            return Err(invalid("warm start", "local term has a flat spectrum"));
        }
        let mid = 0.5 * (lo + hi);
        let signs: Vec<f64> = es
            .eigenvalues
            .iter()
            .map(|&l| if l >= mid { 1.0 } else { -1.0 })
            .collect();
        match mode {
            AnsatzMode::SpectrumPinned => Ok(Direction::Pinned {
                u: es.eigenvectors,
                signs,
            }),
            AnsatzMode::Qubit => {
                if h.dim() != 2 {
                    return Err(invalid("warm start", "qubit mode needs 2x2 terms"));
                }
                let g = conjugate_signs(&es.eigenvectors, &signs);
                Ok(Direction::Bloch([g[(0, 1)].re, -g[(0, 1)].im, g[(0, 0)].re]))
            }
            AnsatzMode::ProductPinned => Err(invalid(
                "warm start",
                "product mode does not take party-space warm starts",
            )),
        }
    }

    pub fn operator(&self) -> CMatrix {
        match self {
            Direction::Bloch(v) => HermitianOperator::bloch(unit(v)).into_matrix(),
            Direction::Pinned { u, signs } => conjugate_signs(u, signs),
            Direction::Product(f) => {
                let mut acc = CMatrix::from_element(1, 1, re(1.0));
                for (u, s) in f {
                    acc = acc.kronecker(&conjugate_signs(u, s));
                }
                acc
            }
        }
    }

    pub fn param_count(&self, gens: &Generators) -> usize {
        match self {
            Direction::Bloch(_) => 3,
            Direction::Pinned { .. } => gens.len(),
            Direction::Product(f) => f.len() * gens.len(),
        }
    }

    /// Parameter `j` moved by `±eps`; `gens` must have been built with `eps`.
    pub fn perturbed(&self, j: usize, sign: f64, eps: f64, gens: &Generators) -> Self {
        let pick = |k: usize| if sign > 0.0 { &gens.plus[k] } else { &gens.minus[k] };
        match self {
            Direction::Bloch(v) => {
                let mut w = *v;
                w[j] += sign * eps;
                Direction::Bloch(w)
            }
            Direction::Pinned { u, signs } => Direction::Pinned {
                u: pick(j) * u,
                signs: signs.clone(),
            },
            Direction::Product(f) => {
                let (m, k) = (j / gens.len(), j % gens.len());
                let mut f = f.clone();
                f[m].0 = pick(k) * &f[m].0;
                Direction::Product(f)
            }
        }
    }

    /// Ascent step along `grad` with length factor `t`, followed by the
    /// projection back onto the constraint set.
    pub fn stepped(&self, grad: &[f64], t: f64, gens: &Generators) -> Self {
        match self {
            Direction::Bloch(v) => {
                let w = [v[0] + t * grad[0], v[1] + t * grad[1], v[2] + t * grad[2]];
                Direction::Bloch(unit(&w))
            }
            Direction::Pinned { u, signs } => Direction::Pinned {
                u: unitary_exp(&gens.combine(grad), t) * u,
                signs: signs.clone(),
            },
            Direction::Product(f) => Direction::Product(
                f.iter()
                    .enumerate()
                    .map(|(m, (u, s))| {
                        let g = &grad[m * gens.len()..(m + 1) * gens.len()];
                        (unitary_exp(&gens.combine(g), t) * u, s.clone())
                    })
                    .collect(),
            ),
        }
    }

    /// Distance from the reference point, used only to break ties.
    pub fn norm(&self) -> f64 {
        match self {
            Direction::Bloch(v) => {
                let w = unit(v);
                (w[0] * w[0] + w[1] * w[1] + (w[2] - 1.0).powi(2)).sqrt()
            }
            Direction::Pinned { u, .. } => {
                (u - CMatrix::identity(u.nrows(), u.ncols())).norm()
            }
            Direction::Product(f) => f
                .iter()
                .map(|(u, _)| (u - CMatrix::identity(u.nrows(), u.ncols())).norm())
                .sum(),
        }
    }
}

fn unit(v: &[f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if n == 0.0 {
        [0.0, 0.0, 1.0]
    } else {
        [v[0] / n, v[1] / n, v[2] / n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn squares_to_identity(m: &CMatrix) -> bool {
        let n = m.nrows();
        (m * m - CMatrix::identity(n, n)).norm() < 1e-10
    }

    #[test]
    fn directions_have_unit_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cases = [
            (AnsatzMode::Qubit, 1, Generators::new(2, 1e-5)),
            (AnsatzMode::SpectrumPinned, 2, Generators::new(4, 1e-5)),
            (AnsatzMode::ProductPinned, 2, Generators::new(2, 1e-5)),
        ];
        for (mode, copies, gens) in cases {
            let d = Direction::random(mode, 2, copies, 1, &mut rng);
            assert!(squares_to_identity(&d.operator()));
            let g: Vec<f64> = (0..d.param_count(&gens)).map(|i| (i as f64).sin()).collect();
            let s = d.stepped(&g, 0.3, &gens);
            assert!(squares_to_identity(&s.operator()));
            let p = d.perturbed(g.len() - 1, 1.0, 1e-5, &gens);
            assert!(squares_to_identity(&p.operator()));
        }
    }

    #[test]
    fn unitary_exp_is_unitary() {
        let gens = Generators::new(3, 1e-5);
        let a = gens.combine(&[0.3, -0.2, 0.1, 0.5, 0.7, -0.4, 0.2, 0.9, -1.1]);
        let u = unitary_exp(&a, 0.8);
        assert!((&u * u.adjoint() - CMatrix::identity(3, 3)).norm() < 1e-12);
        let back = unitary_exp(&a, -0.8);
        assert!((&u * back - CMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn warm_start_roundtrip() {
        let z = HermitianOperator::pauli_z();
        let d = Direction::from_operator(AnsatzMode::Qubit, &z).unwrap();
        assert!((d.operator() - z.matrix()).norm() < 1e-12);
        let h = HermitianOperator::from_real_diagonal(&[2.0, -1.0, 0.7]).unwrap();
        let d = Direction::from_operator(AnsatzMode::SpectrumPinned, &h).unwrap();
        let expect = HermitianOperator::from_real_diagonal(&[1.0, -1.0, 1.0]).unwrap();
        assert!((d.operator() - expect.matrix()).norm() < 1e-12);
        assert!(Direction::from_operator(AnsatzMode::Qubit, &HermitianOperator::identity(2)).is_err());
    }
}
