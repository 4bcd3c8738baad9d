//! Multicopy metrology: `M` copies of an `N`-partite state where party `n`
//! holds all of its copies and measures a local term on them jointly.
//!
//! Contains the diagonal-subspace mapping and its closed forms, exact and
//! sampled evaluators for `ρ^{⊗M}`, and analytic no-go bounds.

mod evaluate;

use serde::{Deserialize, Serialize};

pub use evaluate::{
    multicopy_figures_direct, multicopy_figures_matrix_free, multicopy_qfi_direct,
    multicopy_qfi_sampled, multicopy_qfi_symmetric, symmetric_class_count, tensor_power_support,
    MulticopyFigures, SampledEstimate,
};

use crate::error::{invalid, Error, Result};
use crate::qtensor::{
    embed_on_sites, tensor_product, DensityMatrix, HermitianOperator, PartitionLayout,
};
use crate::states::CoefficientMatrix;

/// Local term of one party on its `M` copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LocalTerm {
    /// One `d x d` factor per copy, copy 0 first; acts as their Kronecker
    /// product.
    Product(Vec<HermitianOperator>),
    /// Arbitrary operator on the `d^M`-dimensional party space.
    Full(HermitianOperator),
}

impl LocalTerm {
    /// `h^{⊗M}`.
    pub fn uniform(h: &HermitianOperator, copies: usize) -> Self {
        LocalTerm::Product(vec![h.clone(); copies])
    }

    pub fn to_operator(&self) -> Result<HermitianOperator> {
        match self {
            LocalTerm::Product(f) => tensor_product(f),
            LocalTerm::Full(h) => Ok(h.clone()),
        }
    }

    pub(crate) fn check(&self, layout: &PartitionLayout) -> Result<()> {
        match self {
            LocalTerm::Product(f) => {
                if f.len() != layout.copies() {
                    return Err(Error::DimensionMismatch {
                        expected: layout.copies(),
                        got: f.len(),
                    });
                }
                for h in f {
                    if h.dim() != layout.local_dim() {
                        return Err(Error::DimensionMismatch {
                            expected: layout.local_dim(),
                            got: h.dim(),
                        });
                    }
                }
            }
            LocalTerm::Full(h) => {
                if h.dim() != layout.party_dim() {
                    return Err(Error::DimensionMismatch {
                        expected: layout.party_dim(),
                        got: h.dim(),
                    });
                }
            }
        }
        Ok(())
    }

    /// The shared factor if every copy carries the same one.
    pub(crate) fn uniform_factor(&self) -> Option<&HermitianOperator> {
        match self {
            LocalTerm::Product(f) => {
                let first = f.first()?;
                f.iter().all(|h| h == first).then_some(first)
            }
            LocalTerm::Full(_) => None,
        }
    }
}

pub(crate) fn check_terms(terms: &[LocalTerm], layout: &PartitionLayout) -> Result<()> {
    if terms.len() != layout.parties() {
        return Err(Error::DimensionMismatch {
            expected: layout.parties(),
            got: terms.len(),
        });
    }
    terms.iter().try_for_each(|t| t.check(layout))
}

/// `diag(+1, -1, +1, ...)` on `d` levels.
pub fn alternating_diag(d: usize) -> HermitianOperator {
    let diag: Vec<f64> = (0..d)
        .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    HermitianOperator::from_real_diagonal(&diag).expect("real diagonal is Hermitian")
}

/// The `d`-dimensional stand-in for a diagonal-subspace state: the
/// coefficient matrix itself and `N D^{⊗M}` in place of `Σ_n D^{⊗M}`.
#[derive(Debug, Clone)]
pub struct DiagMappedPair {
    pub rho_tilde: DensityMatrix,
    pub h_tilde: HermitianOperator,
    pub parties: usize,
    pub copies: usize,
}

impl DiagMappedPair {
    /// `ρ̃^{⊗M}`.
    pub fn rho_tilde_power(&self) -> DensityMatrix {
        self.rho_tilde.tensor_power(self.copies)
    }

    /// Local terms `D^{⊗M}` of the original problem.
    pub fn original_terms(&self) -> Vec<LocalTerm> {
        let d = alternating_diag(self.rho_tilde.dim());
        vec![LocalTerm::uniform(&d, self.copies); self.parties]
    }
}

pub fn diag_map(c: &CoefficientMatrix, parties: usize, copies: usize) -> Result<DiagMappedPair> {
    if parties == 0 || copies == 0 {
        return Err(invalid("parties/copies", "must be positive"));
    }
    let d = c.d();
    PartitionLayout::new(1, copies, d)?.ensure_within_cap()?;
    let dm = alternating_diag(d);
    let h_tilde = tensor_product(&vec![dm; copies])?.scaled(parties as f64);
    Ok(DiagMappedPair {
        rho_tilde: c.as_density().clone(),
        h_tilde,
        parties,
        copies,
    })
}

/// `Tr(√ρ̃ D √ρ̃ D)`.
fn mapped_overlap(c: &CoefficientMatrix) -> f64 {
    let sqrt = c
        .as_density()
        .eigensystem()
        .map_spectrum(|l| l.max(0.0).sqrt());
    let dm = alternating_diag(c.d());
    let a = &sqrt * dm.matrix();
    (&a * &a).trace().re
}

/// Skew information of `ρ^{⊗M}` for `h_n = D^{⊗M}`:
/// `N² [1 - Tr(√ρ̃ D √ρ̃ D)^M]`.
pub fn skew_closed_form(c: &CoefficientMatrix, parties: usize, copies: usize) -> f64 {
    let n = parties as f64;
    n * n * (1.0 - mapped_overlap(c).powf(copies as f64))
}

/// Qubit case written out in the coefficients (real `c_01`).
pub fn skew_closed_form_qubit(c00: f64, c01: f64, parties: usize, copies: usize) -> f64 {
    if c01 == 0.0 {
        return 0.0;
    }
    let b2 = c01 * c01;
    let det = (c00 - c00 * c00 - b2).max(0.0);
    let num = 8.0 * b2 * det.sqrt() + 4.0 * (c00 - 1.0) * c00 + 1.0;
    let den = (1.0 - 2.0 * c00).powi(2) + 4.0 * b2;
    let n = parties as f64;
    n * n * (1.0 - (num / den).powf(copies as f64))
}

/// `c_00 = c_11 = 1/2`: `N² [1 - (1 - 4|c_01|²)^{M/2}]`.
pub fn ghz_family_skew(c01: f64, parties: usize, copies: usize) -> f64 {
    let n = parties as f64;
    n * n * (1.0 - (1.0 - 4.0 * c01 * c01).powf(copies as f64 / 2.0))
}

/// Gain of `M` copies of the two-term Schmidt state with `E = 1/N`:
/// `N [1 - (1 - 1/N)^M]`, evaluated without cancellation for large `N`.
pub fn scaling_gain(parties: u64, copies: u64) -> Result<f64> {
    if parties < 2 {
        return Err(invalid("parties", "needs N >= 2"));
    }
    if copies < 1 {
        return Err(invalid("copies", "needs M >= 1"));
    }
    let n = parties as f64;
    Ok(-n * (copies as f64 * (-1.0 / n).ln_1p()).exp_m1())
}

/// Coefficients of the pure two-term state with `4 c_00 c_11 = 1/N`.
pub fn scaling_coefficients(parties: usize) -> Result<CoefficientMatrix> {
    if parties < 2 {
        return Err(invalid("parties", "needs N >= 2"));
    }
    let n = parties as f64;
    let s = 0.5 * (1.0 - (1.0 - 1.0 / n).sqrt());
    CoefficientMatrix::qubit(1.0 - s, (s * (1.0 - s)).sqrt())
}

/// Upper bound on the gain when local terms may couple pairs of copies:
/// `(48M² - 32M)/M⁴` for even `M`, `(48M² - 32M)/(M² - 1)²` for odd `M`.
pub fn two_body_coupling_bound(copies: u64) -> Result<f64> {
    if copies < 2 {
        return Err(invalid("copies", "needs M >= 2"));
    }
    let m = copies as f64;
    let num = 48.0 * m * m - 32.0 * m;
    let den = if copies % 2 == 0 {
        m.powi(4)
    } else {
        (m * m - 1.0).powi(2)
    };
    Ok(num / den)
}

/// QFI of `M` copies of the `N`-qubit ring cluster state:
/// `4 Σ_n Tr(h_n²) / 2^M`, the variance in the completely mixed state.
pub fn cluster_multicopy_qfi(
    parties: usize,
    copies: usize,
    local_terms: &[HermitianOperator],
) -> Result<f64> {
    if parties < 5 {
        return Err(invalid(
            "parties",
            "closed form holds for rings with N >= 5",
        ));
    }
    if local_terms.len() != parties {
        return Err(Error::DimensionMismatch {
            expected: parties,
            got: local_terms.len(),
        });
    }
    let dim = PartitionLayout::new(1, copies, 2)?.party_dim();
    let mut acc = 0.0;
    for (index, h) in local_terms.iter().enumerate() {
        if h.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: h.dim(),
            });
        }
        let trace = h.trace();
        if trace.abs() > 1e-10 {
            return Err(Error::NotTraceless { index, trace });
        }
        acc += h.square().trace();
    }
    Ok(4.0 * acc / dim as f64)
}

/// `w` with `h² = w² I`, or the offending deviation.
fn square_weight(h: &HermitianOperator, index: usize) -> Result<f64> {
    let sq = h.square();
    let dim = h.dim();
    let w2 = sq.trace() / dim as f64;
    let mut dev: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let target = if i == j { w2 } else { 0.0 };
            dev = dev.max((sq.matrix()[(i, j)].re - target).abs());
            dev = dev.max(sq.matrix()[(i, j)].im.abs());
        }
    }
    if dev > 1e-10 {
        return Err(Error::NotSquareIdentity {
            index,
            deviation: dev,
        });
    }
    Ok(w2.sqrt())
}

/// `4 Σ_n w_n² + 4 Σ_{n≠n'} ⟨h_n ⊗ h_n'⟩` for terms with `h_n² = w_n² I`,
/// an upper bound on the QFI of `ρ^{⊗M}`.
///
/// Product terms use per-copy correlators raised over the copies; full
/// terms are evaluated on the explicit tensor power.
pub fn full_rank_upper_bound(
    rho: &DensityMatrix,
    local_terms: &[LocalTerm],
    layout: &PartitionLayout,
) -> Result<f64> {
    check_terms(local_terms, layout)?;
    if rho.dim() != layout.copy_dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.copy_dim(),
            got: rho.dim(),
        });
    }
    let mut weights = Vec::with_capacity(local_terms.len());
    for (i, t) in local_terms.iter().enumerate() {
        let w = match t {
            LocalTerm::Product(f) => {
                let mut w = 1.0;
                for h in f {
                    w *= square_weight(h, i)?;
                }
                w
            }
            LocalTerm::Full(h) => square_weight(h, i)?,
        };
        weights.push(w);
    }
    let parties = layout.parties();
    let factors: Option<Vec<&Vec<HermitianOperator>>> = local_terms
        .iter()
        .map(|t| match t {
            LocalTerm::Product(f) => Some(f),
            LocalTerm::Full(_) => None,
        })
        .collect();
    let single = layout.single_copy();
    let mut cross = 0.0;
    if let Some(factors) = factors {
        for n in 0..parties {
            for np in (0..parties).filter(|&np| np != n) {
                let mut corr = 1.0;
                for m in 0..layout.copies() {
                    let ha = embed_on_sites(&factors[n][m], &[n], &single)?;
                    let hb = embed_on_sites(&factors[np][m], &[np], &single)?;
                    let prod = HermitianOperator::from_matrix_unchecked(ha.matrix() * hb.matrix());
                    corr *= rho.expectation(&prod)?;
                }
                cross += corr;
            }
        }
    } else {
        layout.ensure_within_cap()?;
        let big = rho.tensor_power(layout.copies());
        let embedded: Vec<HermitianOperator> = local_terms
            .iter()
            .enumerate()
            .map(|(n, t)| embed_on_sites(&t.to_operator()?, &layout.party_sites(n), layout))
            .collect::<Result<_>>()?;
        for n in 0..parties {
            for np in 0..parties {
                if n != np {
                    let prod = HermitianOperator::from_matrix_unchecked(
                        embedded[n].matrix() * embedded[np].matrix(),
                    );
                    cross += big.expectation(&prod)?;
                }
            }
        }
    }
    Ok(4.0 * weights.iter().map(|w| w * w).sum::<f64>() + 4.0 * cross)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrology::{qfi, skew_information};
    use crate::states::{diagonal_subspace_state, isotropic_two_qubit};

    #[test]
    fn alternating_diag_pattern() {
        let d3 = alternating_diag(3);
        assert_eq!(
            d3,
            HermitianOperator::from_real_diagonal(&[1.0, -1.0, 1.0]).unwrap()
        );
        let d4 = alternating_diag(4);
        assert_eq!(d4.matrix()[(3, 3)].re, -1.0);
    }

    #[test]
    fn ghz_maps_to_pure_plus_state() {
        let c = CoefficientMatrix::qubit(0.5, 0.5).unwrap();
        let pair = diag_map(&c, 3, 1).unwrap();
        assert!((pair.rho_tilde.purity() - 1.0).abs() < 1e-12);
        let x = HermitianOperator::pauli_x();
        assert!((pair.rho_tilde.expectation(&x).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(pair.h_tilde, alternating_diag(2).scaled(3.0));
    }

    #[test]
    fn mapping_single_copy_matches_direct() {
        let c = CoefficientMatrix::qubit(0.4, 0.3).unwrap();
        let pair = diag_map(&c, 3, 1).unwrap();
        let state = diagonal_subspace_state(&c, 3).unwrap();
        let h = crate::metrology::collective_hamiltonian(
            &vec![HermitianOperator::pauli_z(); 3],
            &state.layout,
        )
        .unwrap();
        let lhs = qfi(&state.rho, &h).unwrap();
        let rhs = qfi(&pair.rho_tilde, &pair.h_tilde).unwrap();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.max(1.0));
    }

    #[test]
    fn ghz_family_arithmetic() {
        let v = ghz_family_skew(0.3, 2, 2);
        assert!((v - 1.44).abs() < 1e-12);
        let c = CoefficientMatrix::qubit(0.5, 0.3).unwrap();
        assert!((skew_closed_form(&c, 2, 2) - 1.44).abs() < 1e-12);
        assert!((skew_closed_form_qubit(0.5, 0.3, 2, 2) - 1.44).abs() < 1e-12);
        // single copy, N = 2: 4 (1 - 0.8)
        assert!((ghz_family_skew(0.3, 2, 1) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn mapped_skew_single_copy() {
        let c = CoefficientMatrix::qubit(0.5, 0.3).unwrap();
        let pair = diag_map(&c, 2, 1).unwrap();
        let direct = skew_information(&pair.rho_tilde, &pair.h_tilde).unwrap();
        assert!((direct - 0.8).abs() < 1e-12);
    }

    #[test]
    fn general_qubit_form_matches_mapped_form() {
        let c = CoefficientMatrix::qubit(0.3, 0.2).unwrap();
        let a = skew_closed_form(&c, 3, 3);
        let b = skew_closed_form_qubit(0.3, 0.2, 3, 3);
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        assert_eq!(skew_closed_form_qubit(0.3, 0.0, 3, 3), 0.0);
    }

    #[test]
    fn scaling_gain_values() {
        assert!((scaling_gain(2, 2).unwrap() - 1.5).abs() < 1e-14);
        assert!((scaling_gain(10, 2000).unwrap() - 10.0).abs() < 1e-3);
        // binomial series M - C(M,2)/N + C(M,3)/N² - ...
        let (n, m) = (1.0e6_f64, 2000.0_f64);
        let mut term = m;
        let mut series = 0.0;
        for j in 1..12 {
            series += term;
            term *= -(m - j as f64) / ((j + 1) as f64 * n);
        }
        assert!((scaling_gain(1_000_000, 2000).unwrap() - series).abs() < 1e-9);
        assert!(series < 2000.0 && series > 1998.0);
        assert!(scaling_gain(1, 3).is_err());
        assert!(scaling_gain(3, 0).is_err());
    }

    #[test]
    fn scaling_coefficients_have_threshold_e() {
        let c = scaling_coefficients(4).unwrap();
        let m = c.matrix();
        let e = 4.0 * m[(0, 1)].norm_sqr();
        assert!((e - 0.25).abs() < 1e-12);
        assert!((c.as_density().purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_body_table() {
        assert!((two_body_coupling_bound(2).unwrap() - 8.0).abs() < 1e-12);
        assert!((two_body_coupling_bound(7).unwrap() - 2128.0 / 2304.0).abs() < 1e-12);
        assert!((two_body_coupling_bound(8).unwrap() - 0.6875).abs() < 1e-12);
        assert!(two_body_coupling_bound(1).is_err());
    }

    #[test]
    fn cluster_closed_form() {
        let z = HermitianOperator::pauli_z();
        assert!((cluster_multicopy_qfi(5, 1, &vec![z.clone(); 5]).unwrap() - 20.0).abs() < 1e-12);
        let zz = z.kron(&z);
        assert!((cluster_multicopy_qfi(5, 2, &vec![zz; 5]).unwrap() - 20.0).abs() < 1e-12);
        let shifted = z.shifted(0.5);
        assert!(matches!(
            cluster_multicopy_qfi(5, 1, &vec![shifted; 5]),
            Err(Error::NotTraceless { index: 0, .. })
        ));
        assert!(cluster_multicopy_qfi(4, 1, &vec![z; 4]).is_err());
    }

    #[test]
    fn isotropic_full_rank_bound() {
        let z = HermitianOperator::pauli_z();
        for &p in &[0.3, 0.9, 1.0] {
            let s = isotropic_two_qubit(p).unwrap();
            for m in 1..=4 {
                let layout = s.layout.with_copies(m).unwrap();
                let terms = vec![LocalTerm::uniform(&z, m); 2];
                let b = full_rank_upper_bound(&s.rho, &terms, &layout).unwrap();
                assert!((b - (8.0 + 8.0 * p.powi(m as i32))).abs() < 1e-10);
                let full: Vec<LocalTerm> = terms
                    .iter()
                    .map(|t| LocalTerm::Full(t.to_operator().unwrap()))
                    .collect();
                let b2 = full_rank_upper_bound(&s.rho, &full, &layout).unwrap();
                assert!((b - b2).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn full_rank_bound_rejects_non_square_identity() {
        let s = isotropic_two_qubit(0.5).unwrap();
        let h = HermitianOperator::from_real_diagonal(&[1.0, 0.5]).unwrap();
        let terms = vec![LocalTerm::uniform(&h, 1); 2];
        assert!(matches!(
            full_rank_upper_bound(&s.rho, &terms, &s.layout),
            Err(Error::NotSquareIdentity { index: 0, .. })
        ));
    }
}
