//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmetro_core::metrology::{
    collective_hamiltonian, gain_for, h_even, h_odd, obs2_qfi_even, obs2_qfi_odd, qfi,
    skew_information, variance_bound,
};
use qmetro_core::multicopy::{
    cluster_multicopy_qfi, diag_map, full_rank_upper_bound, ghz_family_skew,
    multicopy_figures_direct, multicopy_qfi_direct, multicopy_qfi_sampled,
    multicopy_qfi_symmetric, scaling_gain, two_body_coupling_bound, LocalTerm,
};
use qmetro_core::optimizer::{
    locate_onset, optimize_gain, optimize_gain_multicopy, optimize_gain_scan, OptimizerConfig,
};
use qmetro_core::qtensor::{partial_trace, re, DensityMatrix, HermitianOperator};
use qmetro_core::states::{
    diagonal_subspace_state, isotropic_two_qubit, noisy_ghz_white, ring_cluster_state,
    schmidt_state, two_copy_bell_mixture, w_wbar_mixture, CoefficientMatrix, SchmidtVector,
};
use qmetro_core::testing::{random_density, random_hermitian};

/// Largest explicit `ρ^{⊗M}` handed to the dense eigensolver.
const DENSE_LIMIT: usize = 512;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Running maximum that keeps NaN, so a broken value cannot pass silently.
fn worst(acc: f64, x: f64) -> f64 {
    if acc.is_nan() || x.is_nan() {
        f64::NAN
    } else {
        acc.max(x)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn within(limit: Duration, start: Instant, mut out: Outcome) -> Outcome {
    let took = start.elapsed();
    out.detail = format!("{} [{:.2?}, limit {:.0?}]", out.detail, took, limit);
    out.pass &= took < limit;
    out
}

fn ghz_skew() -> Outcome {
    let start = Instant::now();
    let mut dev: f64 = 0.0;
    for n in [2usize, 3] {
        for m in 1..=4usize {
            for c01 in [0.1, 0.3, 0.5] {
                let c = CoefficientMatrix::qubit(0.5, c01).unwrap();
                let state = diagonal_subspace_state(&c, n).unwrap();
                let layout = state.layout.with_copies(m).unwrap();
                let terms = diag_map(&c, n, m).unwrap().original_terms();
                let direct = if layout.global_dim() <= DENSE_LIMIT {
                    let ops: Vec<HermitianOperator> =
                        terms.iter().map(|t| t.to_operator().unwrap()).collect();
                    let h = collective_hamiltonian(&ops, &layout).unwrap();
                    skew_information(&state.rho.tensor_power(m), &h).unwrap()
                } else {
                    multicopy_figures_direct(&state.rho, &terms, &layout)
                        .unwrap()
                        .skew
                };
                dev = worst(dev, rel(direct, ghz_family_skew(c01, n, m)));
            }
        }
    }
    within(
        Duration::from_secs(30),
        start,
        Outcome::new(dev <= 1e-8, format!("max relative deviation {dev:.2e}")),
    )
}

fn mapping_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut dev: f64 = 0.0;
    let mut count = 0;
    for d in [2usize, 3] {
        for n in [2usize, 3] {
            for m in 1..=3usize {
                for i in 0..20 {
                    let rank = 1 + i % d;
                    let c = CoefficientMatrix::from_density(random_density(d, rank, &mut rng))
                        .unwrap();
                    let pair = diag_map(&c, n, m).unwrap();
                    let state = diagonal_subspace_state(&c, n).unwrap();
                    let layout = state.layout.with_copies(m).unwrap();
                    let big =
                        multicopy_qfi_direct(&state.rho, &pair.original_terms(), &layout).unwrap();
                    let small = qfi(&pair.rho_tilde_power(), &pair.h_tilde).unwrap();
                    dev = worst(dev, (big - small).abs());
                    count += 1;
                }
            }
        }
    }
    Outcome::new(
        dev <= 1e-8,
        format!("{count} instances, max |difference| {dev:.2e}"),
    )
}

fn swap_pair_closed_forms() -> Outcome {
    let third = (1.0f64 / 3.0).sqrt();
    let odd = SchmidtVector::new(vec![re(third); 3]).unwrap();
    let s = schmidt_state(&odd, 3).unwrap();
    let h = h_odd(3).unwrap();
    let report = gain_for(&s.rho, &vec![h; 3], &s.layout).unwrap();
    let closed_odd = obs2_qfi_odd(&odd, 3).unwrap();

    let sixth = (1.0f64 / 6.0).sqrt();
    let even = SchmidtVector::new(vec![re(sixth), re(sixth), re(third), re(third)]).unwrap();
    let s4 = schmidt_state(&even, 3).unwrap();
    let h4 = h_even(4).unwrap();
    let direct_even = gain_for(&s4.rho, &vec![h4; 3], &s4.layout).unwrap().fq;
    let closed_even = obs2_qfi_even(&even, 3).unwrap();

    let pass = (closed_odd - 16.0).abs() <= 1e-8
        && (report.fq - 16.0).abs() <= 1e-8
        && (report.gain - 4.0 / 3.0).abs() <= 1e-8
        && (direct_even - closed_even).abs() <= 1e-8;
    Outcome::new(
        pass,
        format!(
            "d=3 closed {closed_odd:.10} direct {:.10} gain {:.10}; d=4 closed {closed_even:.10} direct {direct_even:.10}",
            report.fq, report.gain
        ),
    )
}

fn schmidt_boundary() -> Outcome {
    let start = Instant::now();
    let cfg = OptimizerConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [3usize, 4, 5] {
        for delta in [-1e-3, 1e-3] {
            let e = 1.0 / n as f64 + delta;
            let s = 0.5 * (1.0 - (1.0 - e).sqrt());
            let sigma = SchmidtVector::qubit_with_weight(s).unwrap();
            let st = schmidt_state(&sigma, n).unwrap();
            let g = optimize_gain(&st.rho, &st.layout, &cfg).unwrap().gain;
            pass &= if delta < 0.0 {
                g <= 1.0 + 1e-4
            } else {
                g >= 1.0 + 1e-4
            };
            parts.push(format!("N={n} E{delta:+e}: {g:.6}"));
        }
    }
    within(
        Duration::from_secs(300),
        start,
        Outcome::new(pass, parts.join(", ")),
    )
}

fn fig2() -> Outcome {
    let start = Instant::now();
    let z = HermitianOperator::pauli_z();
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [0.9, 0.52] {
        let st = isotropic_two_qubit(p).unwrap();
        let mut fq = Vec::new();
        for m in 1..=7usize {
            let layout = st.layout.with_copies(m).unwrap();
            let terms = vec![LocalTerm::uniform(&z, m); 2];
            let f = multicopy_figures_direct(&st.rho, &terms, &layout).unwrap();
            pass &= f.fq <= 8.0 + 8.0 * p.powi(m as i32) + 1e-9;
            pass &= 4.0 * f.skew <= f.fq + 1e-8 && f.fq <= f.variance_bound + 1e-8;
            let bound = full_rank_upper_bound(&st.rho, &terms, &layout).unwrap();
            pass &= (bound - (8.0 + 8.0 * p.powi(m as i32))).abs() <= 1e-9;
            fq.push(f.fq);
        }
        if p > 0.6 {
            pass &= fq[..3].iter().all(|f| f / 8.0 > 1.0);
            pass &= fq[3..].windows(2).all(|w| w[1] < w[0]);
        } else {
            pass &= fq.iter().all(|&f| f < 8.0);
            pass &= fq.windows(2).all(|w| w[1] > w[0]);
        }
        let shown: Vec<String> = fq.iter().map(|f| format!("{f:.3}")).collect();
        parts.push(format!("p={p}: F=[{}]", shown.join(", ")));
    }
    within(
        Duration::from_secs(600),
        start,
        Outcome::new(pass, parts.join("; ")),
    )
}

fn fig3() -> Outcome {
    let start = Instant::now();
    let small = scaling_gain(10, 2000).unwrap();
    let large = scaling_gain(1_000_000, 2000).unwrap();
    let equal = scaling_gain(3000, 3000).unwrap() / 3000.0;
    let finite_n = 1.0 - (1.0 - 1.0 / 3000.0f64).powi(3000);
    let limit = 1.0 - (-1.0f64).exp();
    let checks = [
        (small - 10.0).abs() <= 1e-3,
        (large - 2000.0).abs() <= 1.0,
        (equal - finite_n).abs() <= 1e-12 && (equal - limit).abs() <= 1e-4,
    ];
    within(
        Duration::from_secs(1),
        start,
        Outcome::new(
            checks.iter().all(|&c| c),
            format!(
                "g(10,2000)={small:.6} [{}], g(1e6,2000)={large:.4} [{}], g(3000,3000)/N={equal:.6} vs 1-1/e={limit:.6} [{}]",
                ok(checks[0]),
                ok(checks[1]),
                ok(checks[2])
            ),
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "off"
    }
}

fn ring_cluster() -> Outcome {
    let st = ring_cluster_state(5).unwrap();
    let mut red_dev: f64 = 0.0;
    for i in 0..5 {
        for j in (i + 1)..5 {
            let r = partial_trace(&st.rho, &[i, j], &st.layout).unwrap();
            let target = DensityMatrix::maximally_mixed(4);
            red_dev = worst(
                red_dev,
                (r.matrix() - target.matrix())
                    .iter()
                    .fold(0.0, |a, z| worst(a, z.norm())),
            );
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut closed_dev: f64 = 0.0;
    let mut gains = Vec::new();
    let cfg = OptimizerConfig::default();
    for m in [1usize, 2] {
        let layout = st.layout.with_copies(m).unwrap();
        let dim = layout.party_dim();
        let terms: Vec<HermitianOperator> = (0..5)
            .map(|_| {
                let h = random_hermitian(dim, &mut rng);
                h.shifted(-h.trace() / dim as f64)
            })
            .collect();
        let closed = cluster_multicopy_qfi(5, m, &terms).unwrap();
        let h = collective_hamiltonian(&terms, &layout).unwrap();
        let mixed = DensityMatrix::maximally_mixed(layout.global_dim());
        let on_mixed = variance_bound(&mixed, &h).unwrap();
        let on_state = variance_bound(&st.rho.tensor_power(m), &h).unwrap();
        closed_dev = worst(
            worst(closed_dev, (closed - on_mixed).abs()),
            (closed - on_state).abs(),
        );
        let (r, _) = optimize_gain_multicopy(&st.rho, &layout, &cfg, &[]).unwrap();
        gains.push(r.gain);
    }
    let pass = red_dev <= 1e-10 && closed_dev <= 1e-8 && gains.iter().all(|&g| g <= 1.0 + 1e-4);
    Outcome::new(
        pass,
        format!(
            "reductions dev {red_dev:.1e}, closed form dev {closed_dev:.1e}, optimized gains {gains:.6?}"
        ),
    )
}

fn two_copy_space() -> Outcome {
    let z = HermitianOperator::pauli_z();
    let zz = z.kron(&z);
    let mut gains = Vec::new();
    for p in [0.0, 0.3, 0.5, 1.0] {
        let st = two_copy_bell_mixture(p).unwrap();
        gains.push(gain_for(&st.rho, &[zz.clone(), zz.clone()], &st.layout).unwrap().gain);
    }
    Outcome::new(
        gains.iter().all(|g| (g - 2.0).abs() <= 1e-10),
        format!("gains {gains:.12?}"),
    )
}

fn coupling_table() -> Outcome {
    let b2 = two_body_coupling_bound(2).unwrap();
    let b7 = two_body_coupling_bound(7).unwrap();
    let b8 = two_body_coupling_bound(8).unwrap();
    let tail = (7..=200u64).all(|m| two_body_coupling_bound(m).unwrap() < 1.0);
    let pass = (b2 - 8.0).abs() <= 1e-12
        && (b7 - 2128.0 / 2304.0).abs() <= 1e-12
        && (b8 - 0.6875).abs() <= 1e-12
        && tail;
    Outcome::new(
        pass,
        format!("M=2 {b2}, M=7 {b7:.12}, M=8 {b8}, below 1 for 7..=200: {tail}"),
    )
}

fn evaluator_equivalence() -> Outcome {
    let z = HermitianOperator::pauli_z();
    let mut sym_dev: f64 = 0.0;
    let mut worst_sigma: f64 = 0.0;
    for p in [0.52, 0.9] {
        let st = isotropic_two_qubit(p).unwrap();
        for m in 2..=6usize {
            let layout = st.layout.with_copies(m).unwrap();
            let terms = vec![LocalTerm::uniform(&z, m); 2];
            let direct = multicopy_qfi_direct(&st.rho, &terms, &layout).unwrap();
            let sym = multicopy_qfi_symmetric(&st.rho, &terms, &layout).unwrap();
            sym_dev = worst(sym_dev, rel(direct, sym));
            let est = multicopy_qfi_sampled(&st.rho, &terms, &layout, 100_000, m as u64).unwrap();
            worst_sigma = worst(worst_sigma, (est.estimate - direct).abs() / est.stderr);
        }
    }
    Outcome::new(
        sym_dev <= 1e-7 && worst_sigma <= 3.0,
        format!("symmetric rel dev {sym_dev:.2e}, sampled worst {worst_sigma:.2} stderr"),
    )
}

fn figs1_threshold() -> Outcome {
    let start = Instant::now();
    let cfg = OptimizerConfig::default();
    let embedded = |p: f64| noisy_ghz_white(p, 3).and_then(|s| s.embedded(3));
    let grid: Vec<f64> = (0..=10).map(|i| 0.40 + 0.01 * i as f64).collect();
    let pts = optimize_gain_scan(embedded, &grid, 1, &cfg);
    let first = pts
        .iter()
        .position(|pt| pt.gain().is_some_and(|g| g > 1.0 + 1e-9));
    let exact = 0.439576;
    let (onset, mut pass) = match first {
        Some(i) if i > 0 => {
            let on = locate_onset(embedded, grid[i - 1], grid[i], 1, &cfg, 1e-9, 1e-4).unwrap();
            (on.p, (on.p - exact).abs() <= 2e-3)
        }
        _ => (f64::NAN, false),
    };
    let mut shape = Vec::new();
    for p in [0.5, 0.6] {
        let orig = noisy_ghz_white(p, 3).unwrap();
        let g0 = optimize_gain(&orig.rho, &orig.layout, &cfg).unwrap().gain;
        let e = embedded(p).unwrap();
        let g1 = optimize_gain(&e.rho, &e.layout, &cfg).unwrap().gain;
        pass &= g1 >= g0 - 1e-6;
        shape.push(format!("p={p}: {g0:.6} -> {g1:.6}"));
    }
    within(
        Duration::from_secs(1800),
        start,
        Outcome::new(
            pass,
            format!("onset {onset:.5} (expected {exact}); {}", shape.join(", ")),
        ),
    )
}

fn figs2_structure() -> Outcome {
    let cfg = OptimizerConfig::default();
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let family = |p: f64| w_wbar_mixture(p, 3);
    let one: Vec<f64> = optimize_gain_scan(family, &grid, 1, &cfg)
        .iter()
        .map(|pt| pt.gain().unwrap_or(f64::NAN))
        .collect();
    let two: Vec<f64> = optimize_gain_scan(family, &grid, 2, &cfg)
        .iter()
        .map(|pt| pt.gain().unwrap_or(f64::NAN))
        .collect();
    let mid = 10;
    let minimal = |g: &[f64]| g.iter().all(|&x| x >= g[mid] - 1e-6);
    let dominates = one.iter().zip(&two).all(|(a, b)| *b >= a - 1e-6);
    let ends = (one[0] - two[0]).abs() <= 1e-3 && (one[20] - two[20]).abs() <= 1e-3;
    let pass = minimal(&one) && minimal(&two) && dominates && ends;
    Outcome::new(
        pass,
        format!(
            "p=0: {:.4}/{:.4}, p=0.5: {:.4}/{:.4}, p=1: {:.4}/{:.4}, minimal at 1/2: {}/{}, two >= one: {dominates}",
            one[0],
            two[0],
            one[mid],
            two[mid],
            one[20],
            two[20],
            minimal(&one),
            minimal(&two)
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("ghz-family skew closed form vs direct", ghz_skew),
        ("diagonal-subspace mapping identity", mapping_identity),
        ("odd/even swap-pair closed forms", swap_pair_closed_forms),
        ("Schmidt usefulness boundary", schmidt_boundary),
        ("isotropic copies (fig2)", fig2),
        ("scaling asymptotics (fig3)", fig3),
        ("ring cluster no-go", ring_cluster),
        ("two-copy-space state", two_copy_space),
        ("two-body coupling bound table", coupling_table),
        ("evaluator equivalence", evaluator_equivalence),
        ("embedded noisy GHZ onset (figS1)", figs1_threshold),
        ("W/W-bar mixture structure (figS2)", figs2_structure),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let out = run();
        if !out.pass {
            failed += 1;
        }
        println!(
            "acceptance {:>2} {}: {} ({})",
            id,
            if out.pass { "PASS" } else { "FAIL" },
            name,
            out.detail
        );
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
