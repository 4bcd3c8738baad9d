//! State families. Every factory returns the density matrix together with
//! the [`PartitionLayout`] describing its parties.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::qtensor::{re, CMatrix, CVector, DensityMatrix, PartitionLayout, C64};

/// A density matrix tagged with its party structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipartiteState {
    pub rho: DensityMatrix,
    pub layout: PartitionLayout,
}

impl MultipartiteState {
    pub fn new(rho: DensityMatrix, layout: PartitionLayout) -> Result<Self> {
        if rho.dim() != layout.global_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.global_dim(),
                got: rho.dim(),
            });
        }
        Ok(Self { rho, layout })
    }

    /// Same state with every site re-indexed into `new_dim` levels.
    pub fn embedded(&self, new_dim: usize) -> Result<Self> {
        let rho = crate::qtensor::embed_local_dim(&self.rho, &self.layout, new_dim)?;
        Ok(Self {
            rho,
            layout: self.layout.with_local_dim(new_dim)?,
        })
    }
}

/// Coefficients `c_kl` of a state supported on `span{|k⟩^{⊗N}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    c: DensityMatrix,
}

impl CoefficientMatrix {
    /// `c` must itself be a valid density matrix of dimension at least 2.
    pub fn new(c: CMatrix) -> Result<Self> {
        if c.nrows() < 2 {
            return Err(invalid("c", "dimension must be at least 2"));
        }
        Ok(Self {
            c: DensityMatrix::new(c)?,
        })
    }

    /// Real qubit coefficients with `c_11 = 1 - c_00` and `c_10 = c_01`.
    pub fn qubit(c00: f64, c01: f64) -> Result<Self> {
        Self::new(CMatrix::from_row_slice(
            2,
            2,
            &[re(c00), re(c01), re(c01), re(1.0 - c00)],
        ))
    }

    pub fn from_density(c: DensityMatrix) -> Result<Self> {
        if c.dim() < 2 {
            return Err(invalid("c", "dimension must be at least 2"));
        }
        Ok(Self { c })
    }

    pub fn d(&self) -> usize {
        self.c.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.c.matrix()
    }

    pub fn as_density(&self) -> &DensityMatrix {
        &self.c
    }
}

/// Normalized amplitudes `σ_k` of `Σ_k σ_k |k⟩^{⊗N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtVector {
    sigma: Vec<C64>,
}

impl SchmidtVector {
    pub fn new(sigma: Vec<C64>) -> Result<Self> {
        if sigma.len() < 2 {
            return Err(invalid("sigma", "needs at least two components"));
        }
        let norm2: f64 = sigma.iter().map(|z| z.norm_sqr()).sum();
        if norm2 == 0.0 {
            return Err(Error::Empty("zero Schmidt vector"));
        }
        if (norm2 - 1.0).abs() > 1e-10 {
            return Err(invalid("sigma", format!("squared norm {norm2} is not 1")));
        }
        Ok(Self { sigma })
    }

    pub fn from_real(sigma: &[f64]) -> Result<Self> {
        Self::new(sigma.iter().map(|&x| re(x)).collect())
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(sigma: Vec<C64>) -> Result<Self> {
        let norm: f64 = sigma.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::Empty("zero Schmidt vector"));
        }
        Self::new(sigma.into_iter().map(|z| z / norm).collect())
    }

    /// Two-term qubit vector `(√(1-s), √s)` with `s = σ_1²`.
    pub fn qubit_with_weight(s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(invalid("s", format!("{s} outside [0, 1]")));
        }
        Self::from_real(&[(1.0 - s).sqrt(), s.sqrt()])
    }

    pub fn d(&self) -> usize {
        self.sigma.len()
    }

    pub fn components(&self) -> &[C64] {
        &self.sigma
    }

    /// `|σ_k|²` for every k.
    pub fn weights(&self) -> Vec<f64> {
        self.sigma.iter().map(|z| z.norm_sqr()).collect()
    }

    /// More than one nonzero component.
    pub fn is_entangled(&self) -> bool {
        self.sigma.iter().filter(|z| z.norm_sqr() > 1e-14).count() > 1
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid("p", format!("{p} outside [0, 1]")));
    }
    Ok(())
}

/// Global index of `|k⟩^{⊗N}` for local dimension `d`.
fn repeated_index(k: usize, d: usize, n: usize) -> usize {
    (0..n).fold(0, |acc, _| acc * d + k)
}

/// `Σ_kl c_kl (|k⟩⟨l|)^{⊗N}`.
pub fn diagonal_subspace_state(c: &CoefficientMatrix, parties: usize) -> Result<MultipartiteState> {
    let layout = PartitionLayout::new(parties, 1, c.d())?;
    layout.ensure_within_cap()?;
    let dim = layout.global_dim();
    let d = c.d();
    let mut m = CMatrix::zeros(dim, dim);
    for k in 0..d {
        for l in 0..d {
            m[(repeated_index(k, d, parties), repeated_index(l, d, parties))] = c.matrix()[(k, l)];
        }
    }
    Ok(MultipartiteState {
        rho: DensityMatrix::from_matrix_unchecked(m),
        layout,
    })
}

/// Pure state vector `Σ_k σ_k |k⟩^{⊗N}`.
pub fn schmidt_vector(sigma: &SchmidtVector, parties: usize) -> Result<(CVector, PartitionLayout)> {
    let layout = PartitionLayout::new(parties, 1, sigma.d())?;
    layout.ensure_within_cap()?;
    let mut psi = CVector::zeros(layout.global_dim());
    for (k, &s) in sigma.components().iter().enumerate() {
        psi[repeated_index(k, sigma.d(), parties)] = s;
    }
    Ok((psi, layout))
}

pub fn schmidt_state(sigma: &SchmidtVector, parties: usize) -> Result<MultipartiteState> {
    let (psi, layout) = schmidt_vector(sigma, parties)?;
    Ok(MultipartiteState {
        rho: DensityMatrix::from_pure(&psi)?,
        layout,
    })
}

pub fn ghz_vector(parties: usize) -> Result<CVector> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ok(schmidt_vector(&SchmidtVector::from_real(&[h, h])?, parties)?.0)
}

pub fn ghz_state(parties: usize) -> Result<MultipartiteState> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    schmidt_state(&SchmidtVector::from_real(&[h, h])?, parties)
}

/// `p |GHZ⟩⟨GHZ| + (1-p) ((|0⟩⟨0|)^{⊗N} + (|1⟩⟨1|)^{⊗N}) / 2`.
pub fn ghz_diag_noise(p: f64, parties: usize) -> Result<MultipartiteState> {
    check_probability(p)?;
    diagonal_subspace_state(&CoefficientMatrix::qubit(0.5, p / 2.0)?, parties)
}

/// `p |GHZ⟩⟨GHZ| + (1-p) I / 2^N`.
pub fn noisy_ghz_white(p: f64, parties: usize) -> Result<MultipartiteState> {
    check_probability(p)?;
    let ghz = ghz_state(parties)?;
    let dim = ghz.layout.global_dim();
    let rho = DensityMatrix::mixture(&[
        (p, &ghz.rho),
        (1.0 - p, &DensityMatrix::maximally_mixed(dim)),
    ])?;
    Ok(MultipartiteState {
        rho,
        layout: ghz.layout,
    })
}

fn bell_phi_plus() -> CVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_vec(vec![re(h), re(0.0), re(0.0), re(h)])
}

fn bell_psi_plus() -> CVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_vec(vec![re(0.0), re(h), re(h), re(0.0)])
}

/// `p |Φ+⟩⟨Φ+| + (1-p) I/4`.
pub fn isotropic_two_qubit(p: f64) -> Result<MultipartiteState> {
    check_probability(p)?;
    let bell = DensityMatrix::from_pure(&bell_phi_plus())?;
    let rho = DensityMatrix::mixture(&[(p, &bell), (1.0 - p, &DensityMatrix::maximally_mixed(4))])?;
    Ok(MultipartiteState {
        rho,
        layout: PartitionLayout::qubits(2)?,
    })
}

pub fn ring_cluster_vector(parties: usize) -> Result<CVector> {
    if parties < 3 {
        return Err(invalid("parties", "ring cluster states need N >= 3"));
    }
    let layout = PartitionLayout::qubits(parties)?;
    layout.ensure_within_cap()?;
    let dim = layout.global_dim();
    let amp = (dim as f64).sqrt().recip();
    // CZ on every edge (n, n+1 mod N) applied to |+⟩^{⊗N}
    let bit = |b: usize, n: usize| (b >> (parties - 1 - n)) & 1;
    Ok(CVector::from_fn(dim, |b, _| {
        let parity: usize = (0..parties)
            .map(|n| bit(b, n) & bit(b, (n + 1) % parties))
            .sum();
        if parity % 2 == 0 {
            re(amp)
        } else {
            re(-amp)
        }
    }))
}

pub fn ring_cluster_state(parties: usize) -> Result<MultipartiteState> {
    let psi = ring_cluster_vector(parties)?;
    Ok(MultipartiteState {
        rho: DensityMatrix::from_pure(&psi)?,
        layout: PartitionLayout::qubits(parties)?,
    })
}

fn single_excitation(parties: usize, flipped: bool) -> Result<CVector> {
    if parties < 2 {
        return Err(invalid("parties", "W states need N >= 2"));
    }
    let layout = PartitionLayout::qubits(parties)?;
    layout.ensure_within_cap()?;
    let dim = layout.global_dim();
    let amp = re((parties as f64).sqrt().recip());
    let mut psi = CVector::zeros(dim);
    for site in 0..parties {
        let idx = 1usize << (parties - 1 - site);
        let idx = if flipped { (dim - 1) ^ idx } else { idx };
        psi[idx] = amp;
    }
    Ok(psi)
}

pub fn w_vector(parties: usize) -> Result<CVector> {
    single_excitation(parties, false)
}

pub fn wbar_vector(parties: usize) -> Result<CVector> {
    single_excitation(parties, true)
}

pub fn w_state(parties: usize) -> Result<MultipartiteState> {
    Ok(MultipartiteState {
        rho: DensityMatrix::from_pure(&w_vector(parties)?)?,
        layout: PartitionLayout::qubits(parties)?,
    })
}

pub fn wbar_state(parties: usize) -> Result<MultipartiteState> {
    Ok(MultipartiteState {
        rho: DensityMatrix::from_pure(&wbar_vector(parties)?)?,
        layout: PartitionLayout::qubits(parties)?,
    })
}

/// `p |W⟩⟨W| + (1-p) |W̄⟩⟨W̄|`.
pub fn w_wbar_mixture(p: f64, parties: usize) -> Result<MultipartiteState> {
    check_probability(p)?;
    let w = w_state(parties)?;
    let wb = wbar_state(parties)?;
    Ok(MultipartiteState {
        rho: DensityMatrix::mixture(&[(p, &w.rho), (1.0 - p, &wb.rho)])?,
        layout: w.layout,
    })
}

/// `p (|Ψ+⟩⟨Ψ+|)^{⊗2} + (1-p) (|Φ+⟩⟨Φ+|)^{⊗2}` with copies `AB` and `A'B'`.
pub fn two_copy_bell_mixture(p: f64) -> Result<MultipartiteState> {
    check_probability(p)?;
    let psi = DensityMatrix::from_pure(&bell_psi_plus())?.tensor_power(2);
    let phi = DensityMatrix::from_pure(&bell_phi_plus())?.tensor_power(2);
    Ok(MultipartiteState {
        rho: DensityMatrix::mixture(&[(p, &psi), (1.0 - p, &phi)])?,
        layout: PartitionLayout::new(2, 2, 2)?,
    })
}

/// Named single-parameter families used by scans and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateFamily {
    GhzDiagNoise,
    NoisyGhzWhite,
    Isotropic,
    WWbar,
    TwoCopyBell,
}

impl StateFamily {
    pub fn build(&self, p: f64, parties: usize) -> Result<MultipartiteState> {
        match self {
            Self::GhzDiagNoise => ghz_diag_noise(p, parties),
            Self::NoisyGhzWhite => noisy_ghz_white(p, parties),
            Self::Isotropic => isotropic_two_qubit(p),
            Self::WWbar => w_wbar_mixture(p, parties),
            Self::TwoCopyBell => two_copy_bell_mixture(p),
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "ghz_diag_noise" => Self::GhzDiagNoise,
            "noisy_ghz_white" | "noisy_ghz" => Self::NoisyGhzWhite,
            "isotropic" => Self::Isotropic,
            "w_wbar" => Self::WWbar,
            "two_copy_bell" => Self::TwoCopyBell,
            _ => return None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qtensor::{max_abs, partial_trace, tensor_product, HermitianOperator};

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        max_abs(&(a - b)) <= tol
    }

    #[test]
    fn diagonal_subspace_examples() {
        let s = diagonal_subspace_state(&CoefficientMatrix::qubit(1.0, 0.0).unwrap(), 3).unwrap();
        assert_eq!(s.rho.matrix()[(0, 0)], re(1.0));
        assert!((s.rho.purity() - 1.0).abs() < 1e-14);

        let s = diagonal_subspace_state(&CoefficientMatrix::qubit(0.5, 0.5).unwrap(), 3).unwrap();
        let ghz = ghz_state(3).unwrap();
        assert!(close(s.rho.matrix(), ghz.rho.matrix(), 1e-15));
    }

    #[test]
    fn schmidt_and_diag_agree() {
        let sigma = SchmidtVector::from_real(&[0.6, 0.0, 0.8]).unwrap();
        let a = schmidt_state(&sigma, 2).unwrap();
        let cm = CMatrix::from_fn(3, 3, |k, l| {
            sigma.components()[k] * sigma.components()[l].conj()
        });
        let b = diagonal_subspace_state(&CoefficientMatrix::new(cm).unwrap(), 2).unwrap();
        assert!(close(a.rho.matrix(), b.rho.matrix(), 1e-15));
        assert!((a.rho.purity() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn schmidt_rejects_bad_vectors() {
        assert!(matches!(
            SchmidtVector::from_real(&[0.0, 0.0]),
            Err(Error::Empty(_))
        ));
        assert!(SchmidtVector::from_real(&[1.0, 1.0]).is_err());
        assert!(SchmidtVector::normalized(vec![re(1.0), re(1.0)]).is_ok());
        let product = SchmidtVector::from_real(&[1.0, 0.0]).unwrap();
        assert!(!product.is_entangled());
        let s = schmidt_state(&product, 3).unwrap();
        assert_eq!(s.rho.matrix()[(0, 0)], re(1.0));
    }

    #[test]
    fn ghz_diag_noise_parametrization() {
        let s = ghz_diag_noise(0.6, 2).unwrap();
        assert!((s.rho.matrix()[(0, 3)] - re(0.3)).norm() < 1e-15);
        let pure = ghz_diag_noise(1.0, 3).unwrap();
        assert!((pure.rho.purity() - 1.0).abs() < 1e-14);
        assert!(ghz_diag_noise(1.1, 3).is_err());
        assert!(ghz_diag_noise(-0.1, 3).is_err());
    }

    #[test]
    fn white_noise_endpoints() {
        let s = noisy_ghz_white(0.0, 3).unwrap();
        assert!(close(
            s.rho.matrix(),
            DensityMatrix::maximally_mixed(8).matrix(),
            1e-15
        ));
        let s = noisy_ghz_white(0.5, 3).unwrap();
        assert_eq!(s.rho.rank(), 8);
        assert!(noisy_ghz_white(2.0, 3).is_err());
    }

    #[test]
    fn isotropic_endpoints() {
        let s = isotropic_two_qubit(1.0).unwrap();
        assert!((s.rho.purity() - 1.0).abs() < 1e-14);
        for p in [0.9, 0.52] {
            let s = isotropic_two_qubit(p).unwrap();
            assert!((s.rho.trace() - 1.0).abs() < 1e-14);
            assert!((s.rho.matrix()[(0, 3)] - re(p / 2.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn ring_cluster_reductions_and_stabilizers() {
        let n = 5;
        let s = ring_cluster_state(n).unwrap();
        assert!((s.rho.purity() - 1.0).abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(4);
        for a in 0..n {
            for b in (a + 1)..n {
                let r = partial_trace(&s.rho, &[a, b], &s.layout).unwrap();
                assert!(close(r.matrix(), mixed.matrix(), 1e-10));
            }
        }
        let x = HermitianOperator::pauli_x();
        let z = HermitianOperator::pauli_z();
        let id = HermitianOperator::identity(2);
        for site in 0..n {
            let ops: Vec<_> = (0..n)
                .map(|j| {
                    if j == site {
                        x.clone()
                    } else if j == (site + 1) % n || j == (site + n - 1) % n {
                        z.clone()
                    } else {
                        id.clone()
                    }
                })
                .collect();
            let k = tensor_product(&ops).unwrap();
            assert!((s.rho.expectation(&k).unwrap() - 1.0).abs() < 1e-10);
        }
        assert!(ring_cluster_state(2).is_err());
    }

    #[test]
    fn w_states() {
        let w = w_vector(3).unwrap();
        let wb = wbar_vector(3).unwrap();
        assert!(w.dotc(&wb).norm() < 1e-15);
        assert!((w.norm() - 1.0).abs() < 1e-15);
        let m = w_wbar_mixture(1.0, 3).unwrap();
        assert!((m.rho.trace() - 1.0).abs() < 1e-15);
        assert_eq!(w_wbar_mixture(0.5, 3).unwrap().rho.rank(), 2);
        assert!(w_wbar_mixture(1.5, 3).is_err());
        // excitation on site 0 is the most significant bit
        assert!((w[4] - re(1.0 / 3f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn two_copy_bell() {
        let s = two_copy_bell_mixture(1.0).unwrap();
        assert!((s.rho.purity() - 1.0).abs() < 1e-14);
        assert_eq!(two_copy_bell_mixture(0.5).unwrap().rho.rank(), 2);
        for p in [0.0, 0.3, 1.0] {
            assert!((two_copy_bell_mixture(p).unwrap().rho.trace() - 1.0).abs() < 1e-14);
        }
        assert_eq!(s.layout.global_dim(), 16);
    }

    #[test]
    fn embedding_ghz_into_qutrits() {
        let ghz = ghz_state(3).unwrap();
        let up = ghz.embedded(3).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let sigma = SchmidtVector::from_real(&[h, h, 0.0]).unwrap();
        let direct = schmidt_state(&sigma, 3).unwrap();
        assert!(close(up.rho.matrix(), direct.rho.matrix(), 1e-15));
    }
}
