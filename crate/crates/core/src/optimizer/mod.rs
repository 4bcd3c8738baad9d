//! Maximization of the metrological gain over local Hamiltonians.
//!
//! Each party's term is a unit-spread direction (`±1` spectrum) times a
//! weight. For fixed directions the QFI is a quadratic form in the weights,
//! so the best weights are the top eigenvector of an `N x N` matrix and the
//! gain is its top eigenvalue over 4. Directions are improved by projected
//! gradient ascent with central-difference gradients from many random
//! starts; the winner is re-evaluated with [`gain_for`].

mod ansatz;
mod scan;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use ansatz::{AnsatzMode, LocalHamiltonianAnsatz};
pub use scan::{envelope_violations, locate_onset, optimize_gain_scan, Onset, ScanPoint};

use ansatz::{Direction, Generators};

use crate::error::{invalid, Error, Result};
use crate::metrology::{gain_for, GainReport, SupportBasis};
use crate::multicopy::tensor_power_support;
use crate::qtensor::{
    apply_on_sites_into, CMatrix, DensityMatrix, HermitianOperator, PartitionLayout, SiteMap, C64,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Iteration cap per ascent phase.
    pub max_iters: usize,
    /// Initial step of each phase; later entries are polish phases.
    pub steps: Vec<f64>,
    /// An ascent phase stops after three consecutive gain improvements
    /// below this value.
    pub tol: f64,
    pub seed: u64,
    /// Central-difference step.
    pub fd_step: f64,
    pub mode: AnsatzMode,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iters: 300,
            steps: vec![0.5, 0.05],
            tol: 1e-12,
            seed: 0,
            fd_step: 1e-5,
            mode: AnsatzMode::SpectrumPinned,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(invalid("restarts", "must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", "must be positive"));
        }
        if !(self.fd_step > 0.0) {
            return Err(invalid("fd_step", "must be positive"));
        }
        if self.steps.is_empty() || self.steps.iter().any(|s| !(*s > 0.0)) {
            return Err(invalid("steps", "needs at least one positive step"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Image `H_n V` of the support vectors and its projection `V† H_n V`.
#[derive(Clone)]
struct Image {
    a: Vec<Vec<C64>>,
    p: Vec<C64>,
}

/// Fast QFI bilinear form restricted to the support of a fixed state.
struct GainEvaluator {
    lam: Vec<f64>,
    /// `λ_k λ_l / (λ_k + λ_l)`, row-major `r x r`.
    pair_weight: Vec<f64>,
    vecs: Vec<Vec<C64>>,
    maps: Vec<SiteMap>,
    dim: usize,
}

impl GainEvaluator {
    fn new(basis: &SupportBasis, layout: &PartitionLayout) -> Result<Self> {
        let r = basis.rank();
        let lam = basis.weights.clone();
        let mut pair_weight = vec![0.0; r * r];
        for k in 0..r {
            for l in 0..r {
                pair_weight[k * r + l] = lam[k] * lam[l] / (lam[k] + lam[l]);
            }
        }
        let vecs = (0..r)
            .map(|k| basis.vectors.column(k).iter().copied().collect())
            .collect();
        let maps = (0..layout.parties())
            .map(|n| SiteMap::new(&layout.party_sites(n), layout))
            .collect::<Result<_>>()?;
        Ok(Self {
            lam,
            pair_weight,
            vecs,
            maps,
            dim: layout.global_dim(),
        })
    }

    fn image(&self, party: usize, op: &CMatrix) -> Image {
        let r = self.lam.len();
        let a: Vec<Vec<C64>> = self
            .vecs
            .iter()
            .map(|v| {
                let mut out = vec![C64::new(0.0, 0.0); self.dim];
                apply_on_sites_into(op, &self.maps[party], v, &mut out);
                out
            })
            .collect();
        let mut p = vec![C64::new(0.0, 0.0); r * r];
        for k in 0..r {
            for l in 0..r {
                p[k * r + l] = self.vecs[k]
                    .iter()
                    .zip(&a[l])
                    .map(|(x, y)| x.conj() * y)
                    .sum();
            }
        }
        Image { a, p }
    }

    /// `F(A, B)` with `F(H, H) = F_Q[ρ, H]`.
    fn bilinear(&self, x: &Image, y: &Image) -> f64 {
        let mut h2 = 0.0;
        for (k, &l) in self.lam.iter().enumerate() {
            let s: C64 = x.a[k].iter().zip(&y.a[k]).map(|(u, v)| u.conj() * v).sum();
            h2 += l * s.re;
        }
        let corr: f64 = self
            .pair_weight
            .iter()
            .zip(x.p.iter().zip(&y.p))
            .map(|(w, (u, v))| w * (u * v.conj()).re)
            .sum();
        4.0 * h2 - 8.0 * corr
    }

    fn gram(&self, images: &[Image]) -> DMatrix<f64> {
        let n = images.len();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.bilinear(&images[i], &images[j]);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    fn replaced(&self, g: &DMatrix<f64>, images: &[Image], n: usize, img: &Image) -> DMatrix<f64> {
        let mut g = g.clone();
        for (m, other) in images.iter().enumerate() {
            let v = if m == n {
                self.bilinear(img, img)
            } else {
                self.bilinear(img, other)
            };
            g[(n, m)] = v;
            g[(m, n)] = v;
        }
        g
    }
}

/// Top eigenvalue over 4 (the gain for unit-spread directions) and the
/// weights normalized to unit largest magnitude.
fn best_weights(g: &DMatrix<f64>) -> (f64, Vec<f64>) {
    let es = SymmetricEigen::new(g.clone());
    let (mut best, mut idx) = (f64::NEG_INFINITY, 0);
    for (i, &l) in es.eigenvalues.iter().enumerate() {
        if l > best {
            best = l;
            idx = i;
        }
    }
    let v = es.eigenvectors.column(idx);
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    // fix the overall sign so the largest entry is positive
    let pivot = v.iter().copied().fold(0.0f64, |p, x| if x.abs() > p.abs() { x } else { p });
    let weights = v.iter().map(|x| x / scale * pivot.signum()).collect();
    (best / 4.0, weights)
}

fn value(g: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(g.clone()).eigenvalues.max() / 4.0
}

#[derive(Clone)]
struct Candidate {
    gain: f64,
    norm: f64,
    restart: usize,
    dirs: Vec<Direction>,
    weights: Vec<f64>,
}

struct Engine<'a> {
    ev: GainEvaluator,
    gens: Generators,
    config: &'a OptimizerConfig,
}

impl Engine<'_> {
    fn images(&self, dirs: &[Direction]) -> Vec<Image> {
        dirs.iter()
            .enumerate()
            .map(|(n, d)| self.ev.image(n, &d.operator()))
            .collect()
    }

    fn ascend(&self, mut dirs: Vec<Direction>, restart: usize) -> Option<Candidate> {
        let eps = self.config.fd_step;
        let mut images = self.images(&dirs);
        let mut g = self.ev.gram(&images);
        let mut f = value(&g);
        if !f.is_finite() {
            return None;
        }
        for &step0 in &self.config.steps {
            let mut step = step0;
            let mut stall = 0;
            for _ in 0..self.config.max_iters {
                let grad: Vec<Vec<f64>> = dirs
                    .iter()
                    .enumerate()
                    .map(|(n, d)| {
                        (0..d.param_count(&self.gens))
                            .map(|j| {
                                let up = d.perturbed(j, 1.0, eps, &self.gens);
                                let dn = d.perturbed(j, -1.0, eps, &self.gens);
                                let fu = value(&self.ev.replaced(
                                    &g,
                                    &images,
                                    n,
                                    &self.ev.image(n, &up.operator()),
                                ));
                                let fd = value(&self.ev.replaced(
                                    &g,
                                    &images,
                                    n,
                                    &self.ev.image(n, &dn.operator()),
                                ));
                                (fu - fd) / (2.0 * eps)
                            })
                            .collect()
                    })
                    .collect();
                let gnorm: f64 = grad.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
                if !gnorm.is_finite() {
                    return None;
                }
                if gnorm < 1e-12 {
                    break;
                }
                let mut accepted = false;
                while step > 1e-14 {
                    let trial: Vec<Direction> = dirs
                        .iter()
                        .zip(&grad)
                        .map(|(d, gr)| d.stepped(gr, step, &self.gens))
                        .collect();
                    let timg = self.images(&trial);
                    let tg = self.ev.gram(&timg);
                    let tf = value(&tg);
                    if !tf.is_finite() {
                        return None;
                    }
                    if tf > f {
                        stall = if tf - f < self.config.tol { stall + 1 } else { 0 };
                        dirs = trial;
                        images = timg;
                        g = tg;
                        f = tf;
                        step *= 1.5;
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !accepted || stall >= 3 {
                    break;
                }
            }
        }
        let (gain, weights) = best_weights(&g);
        Some(Candidate {
            gain,
            norm: dirs.iter().map(|d| d.norm()).sum(),
            restart,
            dirs,
            weights,
        })
    }
}

fn party_patterns(mode: AnsatzMode, party_dim: usize, parties: usize, index: usize) -> Vec<usize> {
    let choices = match mode {
        AnsatzMode::SpectrumPinned => (party_dim / 2).max(1),
        _ => 1,
    };
    let mut rest = index;
    (0..parties)
        .map(|_| {
            let k = rest % choices + 1;
            rest /= choices;
            k
        })
        .collect()
}

/// Whether `a` beats `b`: higher gain, then (within tolerance) smaller
/// norm, then lower restart index.
fn beats(a: &Candidate, b: &Candidate) -> bool {
    let tol = 1e-9 * a.gain.abs().max(b.gain.abs()).max(1.0);
    if (a.gain - b.gain).abs() > tol {
        a.gain > b.gain
    } else if a.norm != b.norm {
        a.norm < b.norm
    } else {
        a.restart < b.restart
    }
}

/// Orders candidates best first by repeated selection; the tolerance makes
/// `beats` intransitive, so a comparison sort is not safe here.
fn select(cands: Vec<Candidate>) -> Vec<Candidate> {
    let mut rest = cands;
    rest.sort_by_key(|c| c.restart);
    let mut out = Vec::with_capacity(rest.len());
    while !rest.is_empty() {
        let mut best = 0;
        for i in 1..rest.len() {
            if beats(&rest[i], &rest[best]) {
                best = i;
            }
        }
        out.push(rest.remove(best));
    }
    out
}

fn run(
    basis: SupportBasis,
    layout: &PartitionLayout,
    config: &OptimizerConfig,
    warm: &[Vec<HermitianOperator>],
    full_state: impl FnOnce() -> DensityMatrix,
) -> Result<(GainReport, LocalHamiltonianAnsatz)> {
    config.validate()?;
    layout.ensure_within_cap()?;
    let mode = config.mode;
    if mode == AnsatzMode::Qubit && layout.party_dim() != 2 {
        return Err(invalid("mode", "qubit mode needs single-copy qubits"));
    }
    let gens_dim = match mode {
        AnsatzMode::ProductPinned => layout.local_dim(),
        _ => layout.party_dim(),
    };
    let engine = Engine {
        ev: GainEvaluator::new(&basis, layout)?,
        gens: ansatz::Generators::new(gens_dim, config.fd_step),
        config,
    };
    let mut starts: Vec<Vec<Direction>> = Vec::new();
    for w in warm {
        if w.len() != layout.parties() {
            return Err(Error::DimensionMismatch {
                expected: layout.parties(),
                got: w.len(),
            });
        }
        if let Ok(dirs) = w
            .iter()
            .map(|h| Direction::from_operator(mode, h))
            .collect::<Result<Vec<_>>>()
        {
            starts.push(dirs);
        }
    }
    let offset = starts.len();
    let total = offset + config.restarts;
    let cands: Vec<Candidate> = (0..total)
        .into_par_iter()
        .filter_map(|i| {
            let dirs = if i < offset {
                starts[i].clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream((i - offset) as u64);
                party_patterns(mode, layout.party_dim(), layout.parties(), i - offset)
                    .into_iter()
                    .map(|k| {
                        Direction::random(mode, layout.local_dim(), layout.copies(), k, &mut rng)
                    })
                    .collect()
            };
            engine.ascend(dirs, i)
        })
        .collect();
    if cands.is_empty() {
        return Err(Error::Numerical("every restart hit a non-finite value".into()));
    }
    let rho = full_state();
    for cand in &select(cands) {
        let directions: Vec<HermitianOperator> = cand
            .dirs
            .iter()
            .map(|d| HermitianOperator::new(d.operator()))
            .collect::<Result<_>>()?;
        let ansatz = LocalHamiltonianAnsatz {
            mode,
            directions,
            weights: cand.weights.clone(),
        };
        let report = gain_for(&rho, &ansatz.local_terms(), layout)?;
        if (report.gain - cand.gain).abs() <= 1e-6 * cand.gain.abs().max(1.0) {
            return Ok((report, ansatz));
        }
    }
    Err(Error::Numerical(
        "no candidate survived independent re-evaluation".into(),
    ))
}

/// Best gain found for a state given on the full layout.
pub fn optimize_gain(
    rho: &DensityMatrix,
    layout: &PartitionLayout,
    config: &OptimizerConfig,
) -> Result<GainReport> {
    optimize_gain_warm(rho, layout, config, &[]).map(|r| r.0)
}

/// As [`optimize_gain`], adding each warm-start term set as an extra
/// restart. Also returns the winning ansatz.
pub fn optimize_gain_warm(
    rho: &DensityMatrix,
    layout: &PartitionLayout,
    config: &OptimizerConfig,
    warm: &[Vec<HermitianOperator>],
) -> Result<(GainReport, LocalHamiltonianAnsatz)> {
    if rho.dim() != layout.global_dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.global_dim(),
            got: rho.dim(),
        });
    }
    layout.ensure_within_cap()?;
    run(SupportBasis::new(rho), layout, config, warm, || rho.clone())
}

/// Best gain for `M` copies of the single-copy state `rho`; `layout`
/// carries the copy count. The support of `ρ^{⊗M}` is built from
/// single-copy eigenvectors.
pub fn optimize_gain_multicopy(
    rho: &DensityMatrix,
    layout: &PartitionLayout,
    config: &OptimizerConfig,
    warm: &[Vec<HermitianOperator>],
) -> Result<(GainReport, LocalHamiltonianAnsatz)> {
    if rho.dim() != layout.copy_dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.copy_dim(),
            got: rho.dim(),
        });
    }
    layout.ensure_within_cap()?;
    let basis = tensor_power_support(rho, layout.copies())?;
    run(basis, layout, config, warm, || rho.tensor_power(layout.copies()))
}

/// `h ⊗ I ⊗ … ⊗ I`: a single-copy term acting on copy 0 only.
pub fn lift_to_copies(terms: &[HermitianOperator], copies: usize) -> Vec<HermitianOperator> {
    terms
        .iter()
        .map(|h| {
            let rest = HermitianOperator::identity(h.dim().pow(copies as u32 - 1));
            h.kron(&rest)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrology::qfi;
    use crate::states::{ghz_state, schmidt_state, w_state, SchmidtVector};

    fn quick() -> OptimizerConfig {
        OptimizerConfig {
            restarts: 6,
            ..OptimizerConfig::default()
        }
    }

    #[test]
    fn ghz_reaches_n() {
        let s = ghz_state(3).unwrap();
        let r = optimize_gain(&s.rho, &s.layout, &quick()).unwrap();
        assert!((r.gain - 3.0).abs() < 1e-4, "{}", r.gain);
        assert!((r.gain - r.fq / r.fq_sep).abs() <= 1e-12 * r.gain);
    }

    #[test]
    fn w_state_reaches_seven_thirds() {
        let s = w_state(3).unwrap();
        let r = optimize_gain(&s.rho, &s.layout, &quick()).unwrap();
        assert!((r.gain - 7.0 / 3.0).abs() < 1e-4, "{}", r.gain);
    }

    #[test]
    fn qubit_mode_matches_pinned() {
        let s = w_state(3).unwrap();
        let cfg = OptimizerConfig {
            mode: AnsatzMode::Qubit,
            ..quick()
        };
        let q = optimize_gain(&s.rho, &s.layout, &cfg).unwrap();
        for h in &q.local_terms {
            let (lo, hi) = h.spectral_range();
            assert!(hi - lo <= 2.0 + 1e-12);
        }
        assert!((q.gain - 7.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn weak_schmidt_state_is_separable_level() {
        // E = 4 s (1 - s) = 0.2 < 1/3
        let s = 0.5 * (1.0 - (0.8f64).sqrt());
        let st = schmidt_state(&SchmidtVector::qubit_with_weight(s).unwrap(), 3).unwrap();
        let r = optimize_gain(&st.rho, &st.layout, &quick()).unwrap();
        assert!((r.gain - 1.0).abs() < 1e-4, "{}", r.gain);
    }

    #[test]
    fn deterministic_under_seed() {
        let s = w_state(3).unwrap();
        let a = optimize_gain(&s.rho, &s.layout, &quick()).unwrap();
        let b = optimize_gain(&s.rho, &s.layout, &quick()).unwrap();
        assert_eq!(a.gain, b.gain);
        assert_eq!(a.local_terms, b.local_terms);
    }

    #[test]
    fn warm_start_is_kept_when_optimal() {
        let s = ghz_state(3).unwrap();
        let z = HermitianOperator::pauli_z();
        let cfg = OptimizerConfig {
            restarts: 1,
            ..OptimizerConfig::default()
        };
        let (r, ansatz) = optimize_gain_warm(&s.rho, &s.layout, &cfg, &[vec![z; 3]]).unwrap();
        assert!((r.gain - 3.0).abs() < 1e-8);
        assert_eq!(ansatz.weights.len(), 3);
        let h = crate::metrology::collective_hamiltonian(&r.local_terms, &s.layout).unwrap();
        assert!((qfi(&s.rho, &h).unwrap() - r.fq).abs() < 1e-9);
    }

    #[test]
    fn config_json_defaults_and_validation() {
        let c = OptimizerConfig::from_json(r#"{"restarts": 4, "mode": "qubit"}"#).unwrap();
        assert_eq!(c.restarts, 4);
        assert_eq!(c.mode, AnsatzMode::Qubit);
        assert_eq!(c.fd_step, 1e-5);
        assert!(OptimizerConfig::from_json(r#"{"restarts": 0}"#).is_err());
        assert!(OptimizerConfig::from_json(r#"{"tol": -1}"#).is_err());
        assert!(OptimizerConfig::from_json("not json").is_err());
    }

    #[test]
    fn qubit_mode_rejects_qutrits() {
        let s = ghz_state(3).unwrap().embedded(3).unwrap();
        let cfg = OptimizerConfig {
            mode: AnsatzMode::Qubit,
            ..quick()
        };
        assert!(optimize_gain(&s.rho, &s.layout, &cfg).is_err());
    }

    #[test]
    fn lifted_terms_act_on_first_copy() {
        let z = HermitianOperator::pauli_z();
        let lifted = lift_to_copies(&[z.clone()], 2);
        assert_eq!(lifted[0], z.kron(&HermitianOperator::identity(2)));
    }
}
