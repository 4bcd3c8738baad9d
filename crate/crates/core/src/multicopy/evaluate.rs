//! Evaluators for `F_Q[ρ^{⊗M}, Σ_n h_n]`.
//!
//! None of them diagonalize `ρ^{⊗M}`: its eigenvectors are Kronecker
//! products of single-copy eigenvectors, so only the `d^N`-dimensional
//! single-copy state is decomposed.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_terms, LocalTerm};
use crate::error::{invalid, Error, Result};
use crate::metrology::SupportBasis;
use crate::qtensor::{
    apply_on_sites_into, embed_on_sites, CMatrix, CVector, DensityMatrix, Eigensystem,
    HermitianOperator, PartitionLayout, SiteMap, C64, EIGEN_CLAMP,
};

/// QFI together with the two quantities that bracket it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MulticopyFigures {
    pub fq: f64,
    /// `4 Var(H)`.
    pub variance_bound: f64,
    /// Wigner-Yanase skew information.
    pub skew: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

struct CopySpectrum {
    eig: Eigensystem,
    support: Vec<usize>,
    lam: Vec<f64>,
    ln_lam: Vec<f64>,
}

impl CopySpectrum {
    fn new(rho: &DensityMatrix) -> Result<Self> {
        let eig = rho.eigensystem();
        let support = eig.support(EIGEN_CLAMP);
        if support.is_empty() {
            return Err(Error::Numerical("state has empty support".into()));
        }
        let lam: Vec<f64> = support.iter().map(|&k| eig.eigenvalues[k]).collect();
        let ln_lam = lam.iter().map(|l| l.ln()).collect();
        Ok(Self {
            eig,
            support,
            lam,
            ln_lam,
        })
    }

    fn rank(&self) -> usize {
        self.lam.len()
    }

    fn support_vectors(&self) -> CMatrix {
        let dim = self.eig.dim();
        let mut v = CMatrix::zeros(dim, self.rank());
        for (j, &k) in self.support.iter().enumerate() {
            v.set_column(j, &self.eig.eigenvectors.column(k));
        }
        v
    }
}

fn check_state(rho: &DensityMatrix, terms: &[LocalTerm], layout: &PartitionLayout) -> Result<()> {
    if rho.dim() != layout.copy_dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.copy_dim(),
            got: rho.dim(),
        });
    }
    check_terms(terms, layout)?;
    layout.ensure_within_cap()
}

fn trace_prod(a: &CMatrix, b: &CMatrix) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

fn digits(mut index: usize, base: usize, len: usize, out: &mut [usize]) {
    for m in (0..len).rev() {
        out[m] = index % base;
        index /= base;
    }
}

/// `ln(e^a + e^b)`.
fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Single-copy matrix elements of product local terms in the support
/// eigenbasis, plus the closed-form moments of `H`.
struct ProductTables {
    r: usize,
    copies: usize,
    parties: usize,
    /// `b[m][n]`: factor of party `n` on copy `m`, `r x r`.
    b: Vec<Vec<CMatrix>>,
    ln_lam: Vec<f64>,
    lam: Vec<f64>,
    /// `⟨H²⟩` on `ρ^{⊗M}`.
    h2: f64,
    /// `⟨H⟩` on `ρ^{⊗M}`.
    mean: f64,
}

impl ProductTables {
    fn new(
        rho: &DensityMatrix,
        spec: &CopySpectrum,
        factors: &[&[HermitianOperator]],
        layout: &PartitionLayout,
    ) -> Result<Self> {
        let single = layout.single_copy();
        let (parties, copies) = (layout.parties(), layout.copies());
        let vs = spec.support_vectors();
        let vs_adj = vs.adjoint();
        let mut embedded = vec![Vec::with_capacity(parties); copies];
        let mut b = vec![Vec::with_capacity(parties); copies];
        for m in 0..copies {
            for (n, f) in factors.iter().enumerate() {
                let h = embed_on_sites(&f[m], &[n], &single)?.into_matrix();
                b[m].push(&vs_adj * &h * &vs);
                embedded[m].push(h);
            }
        }
        let rm = rho.matrix();
        let mut mean = 0.0;
        for n in 0..parties {
            let mut p = C64::new(1.0, 0.0);
            for row in embedded.iter() {
                p *= trace_prod(rm, &row[n]);
            }
            mean += p.re;
        }
        let mut h2 = C64::new(0.0, 0.0);
        for n in 0..parties {
            for np in 0..parties {
                let mut p = C64::new(1.0, 0.0);
                for row in embedded.iter() {
                    p *= trace_prod(rm, &(&row[n] * &row[np]));
                }
                h2 += p;
            }
        }
        Ok(Self {
            r: spec.rank(),
            copies,
            parties,
            b,
            ln_lam: spec.ln_lam.clone(),
            lam: spec.lam.clone(),
            h2: h2.re,
            mean,
        })
    }

    /// For fixed `K`, `Σ_{L ∈ supp} (e^{ln_mult} λ_K λ_L / (λ_K + λ_L) |H_KL|²,
    /// e^{ln_mult} √(λ_K λ_L) |H_KL|²)`, all weights formed in log space.
    fn l_sums(&self, k: &[usize], ln_k: f64, ln_mult: f64) -> (f64, f64) {
        let mut levels = vec![vec![C64::new(1.0, 0.0); self.parties]; self.copies + 1];
        let mut acc = (0.0, 0.0);
        self.descend(0, k, &mut levels, 0.0, ln_k, ln_mult, &mut acc);
        acc
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        m: usize,
        k: &[usize],
        levels: &mut [Vec<C64>],
        ln_l: f64,
        ln_k: f64,
        ln_mult: f64,
        acc: &mut (f64, f64),
    ) {
        for l in 0..self.r {
            let (head, tail) = levels.split_at_mut(m + 1);
            let prev = &head[m];
            let next = &mut tail[0];
            let row = &self.b[m];
            for n in 0..self.parties {
                next[n] = prev[n] * row[n][(k[m], l)];
            }
            let ln_l2 = ln_l + self.ln_lam[l];
            if m + 1 == self.copies {
                let h2 = next.iter().sum::<C64>().norm_sqr();
                if h2 == 0.0 {
                    continue;
                }
                let w = (ln_mult + ln_k + ln_l2 - log_add(ln_k, ln_l2)).exp();
                let s = (ln_mult + 0.5 * (ln_k + ln_l2)).exp();
                acc.0 += w * h2;
                acc.1 += s * h2;
            } else {
                self.descend(m + 1, k, levels, ln_l2, ln_k, ln_mult, acc);
            }
        }
    }

    fn figures(&self, corr: f64, cross: f64) -> MulticopyFigures {
        MulticopyFigures {
            fq: 4.0 * self.h2 - 8.0 * corr,
            variance_bound: 4.0 * (self.h2 - self.mean * self.mean),
            skew: self.h2 - cross,
        }
    }
}

fn product_factors(terms: &[LocalTerm]) -> Option<Vec<&[HermitianOperator]>> {
    terms
        .iter()
        .map(|t| match t {
            LocalTerm::Product(f) => Some(f.as_slice()),
            LocalTerm::Full(_) => None,
        })
        .collect()
}

fn product_path(tables: &ProductTables) -> MulticopyFigures {
    let (r, copies) = (tables.r, tables.copies);
    let total = r.pow(copies as u32);
    let parts: Vec<(f64, f64)> = (0..total)
        .into_par_iter()
        .map(|kidx| {
            let mut k = vec![0; copies];
            digits(kidx, r, copies, &mut k);
            let ln_k: f64 = k.iter().map(|&i| tables.ln_lam[i]).sum();
            tables.l_sums(&k, ln_k, 0.0)
        })
        .collect();
    let (corr, cross) = parts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    tables.figures(corr, cross)
}

/// Row-by-row evaluation for arbitrary party-space terms: `H|K⟩` is built
/// matrix-free for each support product vector `|K⟩` and rotated into the
/// product eigenbasis.
fn generic_path(
    spec: &CopySpectrum,
    terms: &[LocalTerm],
    layout: &PartitionLayout,
) -> Result<MulticopyFigures> {
    let copies = layout.copies();
    let d1 = layout.copy_dim();
    let dim = layout.global_dim();
    let ops: Vec<CMatrix> = terms
        .iter()
        .map(|t| t.to_operator().map(|h| h.into_matrix()))
        .collect::<Result<_>>()?;
    let party_maps: Vec<SiteMap> = (0..layout.parties())
        .map(|n| SiteMap::new(&layout.party_sites(n), layout))
        .collect::<Result<_>>()?;
    let copy_maps: Vec<SiteMap> = (0..copies)
        .map(|m| SiteMap::new(&layout.copy_sites(m), layout))
        .collect::<Result<_>>()?;
    let v = &spec.eig.eigenvectors;
    let v_adj = v.adjoint();
    let r = spec.rank();
    let total = r.pow(copies as u32);
    let global = |t: &[usize]| t.iter().fold(0, |acc, &j| acc * d1 + spec.support[j]);
    let support_globals: Vec<(usize, f64)> = (0..total)
        .map(|idx| {
            let mut t = vec![0; copies];
            digits(idx, r, copies, &mut t);
            let lam: f64 = t.iter().map(|&j| spec.lam[j]).product();
            (global(&t), lam)
        })
        .collect();

    let parts: Vec<[f64; 4]> = (0..total)
        .into_par_iter()
        .map(|kidx| {
            let mut k = vec![0; copies];
            digits(kidx, r, copies, &mut k);
            let mut ket = CVector::from_element(1, C64::new(1.0, 0.0));
            for &j in &k {
                ket = ket.kronecker(&v.column(spec.support[j]));
            }
            let mut y = vec![C64::new(0.0, 0.0); dim];
            for (op, map) in ops.iter().zip(&party_maps) {
                apply_on_sites_into(op, map, ket.as_slice(), &mut y);
            }
            let mut z = y.clone();
            let mut tmp = vec![C64::new(0.0, 0.0); dim];
            for map in &copy_maps {
                tmp.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
                apply_on_sites_into(&v_adj, map, &z, &mut tmp);
                std::mem::swap(&mut z, &mut tmp);
            }
            let (kg, lk) = support_globals[kidx];
            let norm2: f64 = y.iter().map(|x| x.norm_sqr()).sum();
            let mut corr = 0.0;
            let mut cross = 0.0;
            for &(lg, ll) in &support_globals {
                let e = z[lg].norm_sqr();
                corr += lk * ll / (lk + ll) * e;
                cross += (lk * ll).sqrt() * e;
            }
            [lk * norm2, lk * z[kg].re, corr, cross]
        })
        .collect();
    let mut s = [0.0; 4];
    for p in &parts {
        for i in 0..4 {
            s[i] += p[i];
        }
    }
    Ok(MulticopyFigures {
        fq: 4.0 * s[0] - 8.0 * s[2],
        variance_bound: 4.0 * (s[0] - s[1] * s[1]),
        skew: s[0] - s[3],
    })
}

/// QFI, `4 Var` and skew information of `ρ^{⊗M}` for `H = Σ_n h_n`, with
/// `rho` the single-copy state and `layout` carrying the copy count.
///
/// Exact: uses the Kronecker eigenstructure of `ρ^{⊗M}`. Product terms
/// take a pair-sum path over support indices; other terms are applied
/// matrix-free. The cheaper of the two is chosen.
pub fn multicopy_figures_direct(
    rho: &DensityMatrix,
    local_terms: &[LocalTerm],
    layout: &PartitionLayout,
) -> Result<MulticopyFigures> {
    check_state(rho, local_terms, layout)?;
    let spec = CopySpectrum::new(rho)?;
    let r = spec.rank() as f64;
    let copies = layout.copies() as i32;
    let generic_cost = r.powi(copies)
        * layout.global_dim() as f64
        * (layout.parties() * layout.party_dim() + layout.copies() * layout.copy_dim()) as f64;
    match product_factors(local_terms) {
        Some(f) if r.powi(2 * copies) * (layout.parties() as f64) <= generic_cost => {
            let tables = ProductTables::new(rho, &spec, &f, layout)?;
            Ok(product_path(&tables))
        }
        _ => generic_path(&spec, local_terms, layout),
    }
}

/// Generic path regardless of cost; used to cross-check the pair-sum path.
#[doc(hidden)]
pub fn multicopy_figures_matrix_free(
    rho: &DensityMatrix,
    local_terms: &[LocalTerm],
    layout: &PartitionLayout,
) -> Result<MulticopyFigures> {
    check_state(rho, local_terms, layout)?;
    generic_path(&CopySpectrum::new(rho)?, local_terms, layout)
}

pub fn multicopy_qfi_direct(
    rho: &DensityMatrix,
    local_terms: &[LocalTerm],
    layout: &PartitionLayout,
) -> Result<f64> {
    multicopy_figures_direct(rho, local_terms, layout).map(|f| f.fq)
}

/// Number of nondecreasing index vectors of length `copies` over `rank`
/// values, `C(M + r - 1, r - 1)`.
pub fn symmetric_class_count(rank: usize, copies: usize) -> u128 {
    let k = rank.saturating_sub(1) as u128;
    let n = (copies + rank).saturating_sub(1) as u128;
    (1..=k).fold(1u128, |acc, i| acc * (n - k + i) / i)
}

fn nondecreasing(r: usize, len: usize) -> Vec<Vec<usize>> {
    fn rec(r: usize, len: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for v in start..r {
            cur.push(v);
            rec(r, len, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(r, len, 0, &mut Vec::with_capacity(len), &mut out);
    out
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// Symmetric evaluator for identical per-copy factors `h_n^{⊗M}`: the sum
/// over `K` runs over nondecreasing index vectors weighted by their
/// multinomial multiplicity, the sum over `L` is complete.
///
/// Falls back to [`multicopy_qfi_direct`] when factors differ across copies.
pub fn multicopy_qfi_symmetric(
    rho: &DensityMatrix,
    local_terms: &[LocalTerm],
    layout: &PartitionLayout,
) -> Result<f64> {
    check_state(rho, local_terms, layout)?;
    let uniform: Option<Vec<&HermitianOperator>> =
        local_terms.iter().map(|t| t.uniform_factor()).collect();
    if uniform.is_none() {
        return multicopy_qfi_direct(rho, local_terms, layout);
    }
    let spec = CopySpectrum::new(rho)?;
    let factors = product_factors(local_terms).expect("uniform terms are products");
    let tables = ProductTables::new(rho, &spec, &factors, layout)?;
    let copies = layout.copies();
    let ln_m = ln_factorial(copies);
    let classes = nondecreasing(spec.rank(), copies);
    let parts: Vec<f64> = classes
        .par_iter()
        .map(|k| {
            let mut ln_mult = ln_m;
            let mut run = 1;
            for i in 1..=k.len() {
                if i < k.len() && k[i] == k[i - 1] {
                    run += 1;
                } else {
                    ln_mult -= ln_factorial(run);
                    run = 1;
                }
            }
            let ln_k: f64 = k.iter().map(|&i| tables.ln_lam[i]).sum();
            tables.l_sums(k, ln_k, ln_mult).0
        })
        .collect();
    let corr: f64 = parts.iter().sum();
    Ok(4.0 * tables.h2 - 8.0 * corr)
}

/// Monte Carlo estimate of the QFI. Each index of `K` is drawn
/// independently in proportion to its eigenvalue and the sum over `L` is
/// done exactly, so every sample is
/// `Σ_L λ_L |H_KL|² / (λ_K + λ_L) ≤ ⟨K|H²|K⟩` and the correction sum is its
/// expectation. Needs product terms.
pub fn multicopy_qfi_sampled(
    rho: &DensityMatrix,
    local_terms: &[LocalTerm],
    layout: &PartitionLayout,
    samples: usize,
    seed: u64,
) -> Result<SampledEstimate> {
    if samples == 0 {
        return Err(invalid("samples", "must be at least 1"));
    }
    check_state(rho, local_terms, layout)?;
    let factors = product_factors(local_terms)
        .ok_or_else(|| invalid("local_terms", "sampling needs per-copy product terms"))?;
    let spec = CopySpectrum::new(rho)?;
    let tables = ProductTables::new(rho, &spec, &factors, layout)?;
    let dist = WeightedIndex::new(&tables.lam)
        .map_err(|e| Error::Numerical(format!("eigenvalue weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let copies = layout.copies();
    let mut seen: HashMap<Vec<usize>, f64> = HashMap::new();
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..samples {
        let k: Vec<usize> = (0..copies).map(|_| dist.sample(&mut rng)).collect();
        let x = *seen.entry(k).or_insert_with_key(|k| {
            let ln_k: f64 = k.iter().map(|&j| tables.ln_lam[j]).sum();
            tables.l_sums(k, ln_k, -ln_k).0
        });
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let stderr = if samples > 1 {
        8.0 * (m2 / (samples - 1) as f64).sqrt() / (samples as f64).sqrt()
    } else if spec.rank() == 1 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(SampledEstimate {
        estimate: 4.0 * tables.h2 - 8.0 * mean,
        stderr,
        samples,
    })
}

/// Support eigenvectors of `ρ^{⊗M}` as Kronecker products, without
/// diagonalizing the tensor power.
pub fn tensor_power_support(rho: &DensityMatrix, copies: usize) -> Result<SupportBasis> {
    if copies == 0 {
        return Err(invalid("copies", "must be positive"));
    }
    let spec = CopySpectrum::new(rho)?;
    let vs = spec.support_vectors();
    let r = spec.rank();
    let total = r
        .checked_pow(copies as u32)
        .ok_or_else(|| invalid("copies", "support too large"))?;
    let dim = rho
        .dim()
        .checked_pow(copies as u32)
        .ok_or_else(|| invalid("copies", "dimension too large"))?;
    let mut vectors = CMatrix::zeros(dim, total);
    let mut weights = Vec::with_capacity(total);
    let mut t = vec![0; copies];
    for idx in 0..total {
        digits(idx, r, copies, &mut t);
        let mut ket = CVector::from_element(1, C64::new(1.0, 0.0));
        for &j in &t {
            ket = ket.kronecker(&vs.column(j));
        }
        vectors.set_column(idx, &ket);
        weights.push(t.iter().map(|&j| spec.lam[j]).product());
    }
    Ok(SupportBasis { weights, vectors })
}
