//! Figures of merit for a probe state and a Hamiltonian: quantum Fisher
//! information, Wigner-Yanase skew information, the variance bound, the
//! separable maximum and the metrological gain, plus the closed-form
//! usefulness criteria for Schmidt-form states.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::qtensor::{
    embed_on_sites, CMatrix, DensityMatrix, HermitianOperator, PartitionLayout, C64, EIGEN_CLAMP,
};
use crate::states::SchmidtVector;

fn check_dims(rho: &DensityMatrix, h: &HermitianOperator) -> Result<()> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: h.dim(),
        });
    }
    Ok(())
}

/// Quantum Fisher information
/// `F_Q = 2 Σ_kl (λ_k - λ_l)² / (λ_k + λ_l) |⟨k|H|l⟩|²`.
///
/// Pairs with `λ_k + λ_l <= 1e-12` are skipped.
pub fn qfi(rho: &DensityMatrix, h: &HermitianOperator) -> Result<f64> {
    check_dims(rho, h)?;
    let es = rho.eigensystem();
    let v = &es.eigenvectors;
    let hp = v.adjoint() * h.matrix() * v;
    let lam = &es.eigenvalues;
    let n = rho.dim();
    let mut acc = 0.0;
    for k in 0..n {
        for l in (k + 1)..n {
            let s = lam[k] + lam[l];
            if s <= EIGEN_CLAMP {
                continue;
            }
            let d = lam[k] - lam[l];
            acc += 4.0 * d * d / s * hp[(k, l)].norm_sqr();
        }
    }
    Ok(acc)
}

/// Support of a density matrix: eigenvalues above the clamp and their
/// eigenvectors. Used for repeated QFI evaluations against one state.
#[derive(Debug, Clone)]
pub struct SupportBasis {
    pub weights: Vec<f64>,
    /// `dim x r` matrix of support eigenvectors.
    pub vectors: CMatrix,
}

impl SupportBasis {
    pub fn new(rho: &DensityMatrix) -> Self {
        let es = rho.eigensystem();
        let idx = es.support(EIGEN_CLAMP);
        let mut vectors = CMatrix::zeros(rho.dim(), idx.len());
        for (j, &k) in idx.iter().enumerate() {
            vectors.set_column(j, &es.eigenvectors.column(k));
        }
        Self {
            weights: idx.iter().map(|&k| es.eigenvalues[k]).collect(),
            vectors,
        }
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    /// QFI from the image `H V_r` of the support vectors:
    /// `4⟨H²⟩ - 8 Σ_{k,l ∈ supp} λ_k λ_l / (λ_k + λ_l) |⟨k|H|l⟩|²`.
    pub fn qfi_from_image(&self, hv: &CMatrix) -> f64 {
        let r = self.rank();
        let mut h2 = 0.0;
        for k in 0..r {
            h2 += self.weights[k] * hv.column(k).norm_squared();
        }
        let inner = self.vectors.adjoint() * hv;
        let mut corr = 0.0;
        for k in 0..r {
            let lk = self.weights[k];
            corr += lk / 2.0 * inner[(k, k)].norm_sqr();
            for l in (k + 1)..r {
                let ll = self.weights[l];
                corr += 2.0 * lk * ll / (lk + ll) * inner[(k, l)].norm_sqr();
            }
        }
        4.0 * h2 - 8.0 * corr
    }
}

/// Rank-reduced QFI: only eigenvector pairs inside the support enter the
/// correction sum. Agrees with [`qfi`] for every state.
pub fn qfi_rank_reduced(rho: &DensityMatrix, h: &HermitianOperator) -> Result<f64> {
    check_dims(rho, h)?;
    let basis = SupportBasis::new(rho);
    let hv = h.matrix() * &basis.vectors;
    Ok(basis.qfi_from_image(&hv))
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Wigner-Yanase skew information `Tr(ρH²) - Tr(√ρ H √ρ H)`.
pub fn skew_information(rho: &DensityMatrix, h: &HermitianOperator) -> Result<f64> {
    check_dims(rho, h)?;
    let sqrt_rho = rho.eigensystem().map_spectrum(|l| l.max(0.0).sqrt());
    let hm = h.matrix();
    let h2 = trace_product(rho.matrix(), &(hm * hm)).re;
    let a = &sqrt_rho * hm;
    Ok(h2 - trace_product(&a, &a).re)
}

/// `4 (⟨H²⟩ - ⟨H⟩²)`, an upper bound on the QFI.
pub fn variance_bound(rho: &DensityMatrix, h: &HermitianOperator) -> Result<f64> {
    check_dims(rho, h)?;
    let mean = rho.expectation(h)?;
    let h2 = trace_product(rho.matrix(), &(h.matrix() * h.matrix())).re;
    Ok(4.0 * (h2 - mean * mean))
}

/// Maximal QFI over separable states, `Σ_n (λ_max(h_n) - λ_min(h_n))²`.
pub fn separable_bound(local_terms: &[HermitianOperator]) -> Result<f64> {
    if local_terms.is_empty() {
        return Err(Error::Empty("local terms"));
    }
    Ok(local_terms
        .iter()
        .map(|h| {
            let (lo, hi) = h.spectral_range();
            (hi - lo) * (hi - lo)
        })
        .sum())
}

/// QFI, separable maximum and their ratio for one local Hamiltonian.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GainReport {
    pub fq: f64,
    pub fq_sep: f64,
    pub gain: f64,
    pub hamiltonian: HermitianOperator,
    pub local_terms: Vec<HermitianOperator>,
}

/// `H = Σ_n h_n` with `h_n` acting on all copies of party `n`.
pub fn collective_hamiltonian(
    local_terms: &[HermitianOperator],
    layout: &PartitionLayout,
) -> Result<HermitianOperator> {
    if local_terms.len() != layout.parties() {
        return Err(Error::DimensionMismatch {
            expected: layout.parties(),
            got: local_terms.len(),
        });
    }
    layout.ensure_within_cap()?;
    let mut total = HermitianOperator::zeros(layout.global_dim());
    for (n, h) in local_terms.iter().enumerate() {
        total = total.add(&embed_on_sites(h, &layout.party_sites(n), layout)?)?;
    }
    Ok(total)
}

/// Metrological gain `F_Q[ρ, H] / F_Q^(sep)(H)`.
///
/// Hamiltonians whose separable bound vanishes are rejected.
pub fn gain_for(
    rho: &DensityMatrix,
    local_terms: &[HermitianOperator],
    layout: &PartitionLayout,
) -> Result<GainReport> {
    if rho.dim() != layout.global_dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.global_dim(),
            got: rho.dim(),
        });
    }
    for h in local_terms {
        if h.dim() != layout.party_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.party_dim(),
                got: h.dim(),
            });
        }
    }
    let hamiltonian = collective_hamiltonian(local_terms, layout)?;
    let fq_sep = separable_bound(local_terms)?;
    if fq_sep <= 1e-300 {
        return Err(Error::TrivialHamiltonian);
    }
    let fq = qfi_rank_reduced(rho, &hamiltonian)?;
    Ok(GainReport {
        fq,
        fq_sep,
        gain: fq / fq_sep,
        hamiltonian,
        local_terms: local_terms.to_vec(),
    })
}

/// Usefulness verdict for a two-term qubit Schmidt state.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Usefulness {
    /// `E = 4 |σ_0 σ_1|²`.
    pub e: f64,
    /// `1 / N`.
    pub threshold: f64,
    pub useful: bool,
    /// `E - 1/N`.
    pub margin: f64,
    /// Best single-copy gain, `max(1, N E)`.
    pub best_gain: f64,
}

/// A single copy of `σ_0|0…0⟩ + σ_1|1…1⟩` is useful iff `E > 1/N`.
pub fn ghz_like_usefulness(sigma: &SchmidtVector, parties: usize) -> Result<Usefulness> {
    if sigma.d() != 2 {
        return Err(invalid(
            "sigma",
            format!("expected d = 2, got {}", sigma.d()),
        ));
    }
    if parties < 2 {
        return Err(invalid("parties", "needs N >= 2"));
    }
    let s = sigma.components();
    let e = 4.0 * (s[0] * s[1]).norm_sqr();
    let threshold = 1.0 / parties as f64;
    Ok(Usefulness {
        e,
        threshold,
        useful: e > threshold,
        margin: e - threshold,
        best_gain: (parties as f64 * e).max(1.0),
    })
}

/// Local term with `+1` on each `isolated` basis state and the remaining
/// basis states swapped pairwise, outermost first (`X` on the antidiagonal).
pub fn swap_pair_hamiltonian(d: usize, isolated: &[usize]) -> Result<HermitianOperator> {
    let mut rest: Vec<usize> = (0..d).filter(|k| !isolated.contains(k)).collect();
    if isolated.iter().any(|&k| k >= d) || rest.len() + isolated.len() != d {
        return Err(invalid("isolated", "indices must be distinct and below d"));
    }
    if rest.len() % 2 != 0 {
        return Err(invalid("isolated", "remaining levels must pair up"));
    }
    let mut m = CMatrix::zeros(d, d);
    for &k in isolated {
        m[(k, k)] = C64::new(1.0, 0.0);
    }
    while rest.len() >= 2 {
        let a = rest.remove(0);
        let b = rest.pop().expect("paired");
        m[(a, b)] = C64::new(1.0, 0.0);
        m[(b, a)] = C64::new(1.0, 0.0);
    }
    HermitianOperator::new(m)
}

/// `diag(1, X_{d-1})` for odd d.
pub fn h_odd(d: usize) -> Result<HermitianOperator> {
    if d < 3 || d % 2 == 0 {
        return Err(invalid("d", format!("{d} is not odd and >= 3")));
    }
    swap_pair_hamiltonian(d, &[0])
}

/// `diag(1, 1, X_{d-2})` for even d.
pub fn h_even(d: usize) -> Result<HermitianOperator> {
    if d < 4 || d % 2 != 0 {
        return Err(invalid("d", format!("{d} is not even and >= 4")));
    }
    swap_pair_hamiltonian(d, &[0, 1])
}

fn swap_pair_qfi(weight: f64, parties: usize) -> f64 {
    let n = parties as f64;
    4.0 * n + 4.0 * n * weight * (n * (1.0 - weight) - 1.0)
}

fn check_swap_pair(parties: usize) -> Result<()> {
    if parties < 3 {
        return Err(invalid("parties", "closed form needs N >= 3"));
    }
    Ok(())
}

/// Closed-form QFI of `Σ σ_k |k⟩^{⊗N}` under `Σ_n H_odd`, with `σ_1` the
/// amplitude on the isolated level 0.
pub fn obs2_qfi_odd(sigma: &SchmidtVector, parties: usize) -> Result<f64> {
    check_swap_pair(parties)?;
    let d = sigma.d();
    if d < 3 || d % 2 == 0 {
        return Err(invalid("sigma", format!("d = {d} is not odd and >= 3")));
    }
    Ok(swap_pair_qfi(sigma.weights()[0], parties))
}

/// Closed-form QFI under `Σ_n H_even`, isolated levels 0 and 1.
pub fn obs2_qfi_even(sigma: &SchmidtVector, parties: usize) -> Result<f64> {
    check_swap_pair(parties)?;
    let d = sigma.d();
    if d < 4 || d % 2 != 0 {
        return Err(invalid("sigma", format!("d = {d} is not even and >= 4")));
    }
    let w = sigma.weights();
    Ok(swap_pair_qfi(w[0] + w[1], parties))
}

/// Best row/column permutation of `H_odd` / `H_even` for a Schmidt state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwapPairWitness {
    /// Levels that carry the isolated `+1` entries.
    pub isolated: Vec<usize>,
    pub local_term: HermitianOperator,
    pub fq: f64,
    pub fq_sep: f64,
    pub gain: f64,
}

/// Enumerates every placement of the isolated levels and keeps the one with
/// the largest closed-form gain.
pub fn best_swap_pair_witness(sigma: &SchmidtVector, parties: usize) -> Result<SwapPairWitness> {
    check_swap_pair(parties)?;
    let d = sigma.d();
    if d < 3 {
        return Err(invalid("sigma", "needs d >= 3"));
    }
    let w = sigma.weights();
    let candidates: Vec<Vec<usize>> = if d % 2 == 1 {
        (0..d).map(|k| vec![k]).collect()
    } else {
        let mut v = Vec::new();
        for k in 0..d {
            for l in (k + 1)..d {
                v.push(vec![k, l]);
            }
        }
        v
    };
    let fq_sep = 4.0 * parties as f64;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for iso in candidates {
        let s: f64 = iso.iter().map(|&k| w[k]).sum();
        let fq = swap_pair_qfi(s, parties);
        if best.as_ref().map_or(true, |(b, _)| fq > *b) {
            best = Some((fq, iso));
        }
    }
    let (fq, isolated) = best.expect("at least one placement");
    Ok(SwapPairWitness {
        local_term: swap_pair_hamiltonian(d, &isolated)?,
        isolated,
        fq,
        fq_sep,
        gain: fq / fq_sep,
    })
}
