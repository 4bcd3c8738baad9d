//! Aggregated consistency checks across all modules.

use anyhow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmetro_core::metrology::{
    collective_hamiltonian, gain_for, ghz_like_usefulness, h_odd, best_swap_pair_witness,
    obs2_qfi_even, obs2_qfi_odd, qfi, qfi_rank_reduced, skew_information, variance_bound,
};
use qmetro_core::multicopy::{
    diag_map, ghz_family_skew, multicopy_figures_direct, multicopy_qfi_direct,
    multicopy_qfi_sampled, multicopy_qfi_symmetric, scaling_gain, two_body_coupling_bound,
    LocalTerm,
};
use qmetro_core::optimizer::{optimize_gain, optimize_gain_multicopy};
use qmetro_core::qtensor::{partial_trace, re, DensityMatrix, HermitianOperator};
use qmetro_core::states::{
    diagonal_subspace_state, ghz_state, isotropic_two_qubit, ring_cluster_state, schmidt_state,
    two_copy_bell_mixture, w_state, CoefficientMatrix, SchmidtVector,
};
use qmetro_core::testing::{random_density, random_hermitian};

use crate::experiments::{worst, Check, RunContext, Summary};
use crate::output::write_json;

fn rel_check(name: &str, value: f64, expected: f64, rel: f64) -> Check {
    let tol = rel * expected.abs().max(1.0);
    Check::close(name, value, expected, tol)
}

pub fn run_verify(ctx: &RunContext) -> Result<Summary> {
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let cfg = &ctx.config;
    let z = HermitianOperator::pauli_z();

    // skew closed form against the explicit tensor power
    for m in 1..=3usize {
        let c = CoefficientMatrix::qubit(0.5, 0.3)?;
        let st = diagonal_subspace_state(&c, 3)?;
        let layout = st.layout.with_copies(m)?;
        let hz = LocalTerm::uniform(&z, m).to_operator()?;
        let h = collective_hamiltonian(&vec![hz; 3], &layout)?;
        let direct = skew_information(&st.rho.tensor_power(m), &h)?;
        checks.push(rel_check(
            &format!("ghz_skew_N3_M{m}"),
            direct,
            ghz_family_skew(0.3, 3, m),
            1e-8,
        ));
    }

    // mapping identity on random coefficients
    let mut dev: f64 = 0.0;
    for d in [2usize, 3] {
        for i in 0..5 {
            let c = CoefficientMatrix::from_density(random_density(d, 1 + i % d, &mut rng))?;
            let pair = diag_map(&c, 3, 2)?;
            let st = diagonal_subspace_state(&c, 3)?;
            let big = multicopy_qfi_direct(&st.rho, &pair.original_terms(), &st.layout.with_copies(2)?)?;
            dev = worst(dev, (big - qfi(&pair.rho_tilde_power(), &pair.h_tilde)?).abs());
        }
    }
    checks.push(Check::close("mapping_identity_N3_M2", dev, 0.0, 1e-8));

    // swap-pair closed forms
    let third = (1.0f64 / 3.0).sqrt();
    let sigma = SchmidtVector::new(vec![re(third); 3])?;
    let st = schmidt_state(&sigma, 3)?;
    let direct = gain_for(&st.rho, &vec![h_odd(3)?; 3], &st.layout)?;
    checks.push(Check::close("swap_pair_odd_d3_value", obs2_qfi_odd(&sigma, 3)?, 16.0, 1e-8));
    checks.push(Check::close("swap_pair_odd_d3_direct", direct.fq, 16.0, 1e-8));
    let sixth = (1.0f64 / 6.0).sqrt();
    let sigma4 = SchmidtVector::new(vec![re(sixth), re(sixth), re(third), re(third)])?;
    let w4 = best_swap_pair_witness(&sigma4, 3)?;
    let st4 = schmidt_state(&sigma4, 3)?;
    let direct4 = gain_for(&st4.rho, &vec![w4.local_term.clone(); 3], &st4.layout)?;
    checks.push(Check::close("swap_pair_even_d4_direct", direct4.fq, w4.fq, 1e-8));
    checks.push(Check::close("swap_pair_even_d4_value", obs2_qfi_even(&sigma4, 3)?, 16.0, 1e-8));

    // usefulness criterion for two-term states
    for n in [3usize, 4] {
        for (delta, useful) in [(-1e-3, false), (1e-3, true)] {
            let e = 1.0 / n as f64 + delta;
            let s = 0.5 * (1.0 - (1.0 - e).sqrt());
            let sv = SchmidtVector::qubit_with_weight(s)?;
            let verdict = ghz_like_usefulness(&sv, n)?;
            let st = schmidt_state(&sv, n)?;
            let g = optimize_gain(&st.rho, &st.layout, cfg)?.gain;
            let pass = verdict.useful == useful && ((g > 1.0 + 1e-4) == useful);
            checks.push(Check::flag(
                &format!("schmidt_boundary_N{n}_{}", if useful { "above" } else { "below" }),
                pass,
                format!("E={e:.5} g={g:.6}"),
            ));
        }
    }

    // rank-reduced formula and the bound chain
    let mut rr: f64 = 0.0;
    let mut chain = true;
    for _ in 0..10 {
        let rho = random_density(8, 2, &mut rng);
        let h = random_hermitian(8, &mut rng);
        let f = qfi(&rho, &h)?;
        rr = worst(rr, (f - qfi_rank_reduced(&rho, &h)?).abs() / f.max(1.0));
        chain &= 4.0 * skew_information(&rho, &h)? <= f + 1e-8 && f <= variance_bound(&rho, &h)? + 1e-8;
    }
    checks.push(Check::close("rank_reduced", rr, 0.0, 1e-9));
    checks.push(Check::flag("bound_chain_random", chain, ""));

    // evaluators on the isotropic family
    for p in [0.52, 0.9] {
        let st = isotropic_two_qubit(p)?;
        for m in [2usize, 4] {
            let layout = st.layout.with_copies(m)?;
            let terms = vec![LocalTerm::uniform(&z, m); 2];
            let direct = multicopy_figures_direct(&st.rho, &terms, &layout)?;
            let sym = multicopy_qfi_symmetric(&st.rho, &terms, &layout)?;
            checks.push(rel_check(&format!("symmetric_p{p}_M{m}"), sym, direct.fq, 1e-7));
            let est = multicopy_qfi_sampled(&st.rho, &terms, &layout, 20_000, ctx.seed)?;
            checks.push(Check::close(
                &format!("sampled_p{p}_M{m}"),
                est.estimate,
                direct.fq,
                3.0 * est.stderr,
            ));
            checks.push(Check::flag(
                &format!("chain_p{p}_M{m}"),
                4.0 * direct.skew <= direct.fq + 1e-8 && direct.fq <= direct.variance_bound + 1e-8,
                "",
            ));
        }
    }

    // ring cluster
    let ring = ring_cluster_state(5)?;
    let mut red: f64 = 0.0;
    for i in 0..5 {
        for j in (i + 1)..5 {
            let r = partial_trace(&ring.rho, &[i, j], &ring.layout)?;
            let diff = r.matrix() - DensityMatrix::maximally_mixed(4).matrix();
            red = worst(red, diff.iter().fold(0.0, |a, x| worst(a, x.norm())));
        }
    }
    checks.push(Check::close("ring_N5_reductions", red, 0.0, 1e-10));
    let mut ring_gain: f64 = 0.0;
    for m in [1usize, 2] {
        let (r, _) = optimize_gain_multicopy(&ring.rho, &ring.layout.with_copies(m)?, cfg, &[])?;
        ring_gain = worst(ring_gain, r.gain);
    }
    checks.push(Check {
        pass: ring_gain <= 1.0 + 1e-4,
        ..Check::close("ring_N5_gain_le_1", ring_gain, 1.0, 1e-4)
    });

    // two-copy-space state
    let zz = z.kron(&z);
    let mut g2: f64 = 0.0;
    for p in [0.0, 0.3, 1.0] {
        let st = two_copy_bell_mixture(p)?;
        let g = gain_for(&st.rho, &[zz.clone(), zz.clone()], &st.layout)?.gain;
        g2 = worst(g2, (g - 2.0).abs());
    }
    checks.push(Check::close("twocopy_bell_g2", 2.0 + g2, 2.0, 1e-10));

    // two-body coupling bound
    checks.push(Check::close("m2_two_body", two_body_coupling_bound(2)?, 8.0, 1e-12));
    let b7 = two_body_coupling_bound(7)?;
    checks.push(Check {
        pass: b7 < 1.0,
        ..Check::close("m7_two_body", b7, 2128.0 / 2304.0, 1e-12)
    });

    // reference states
    let ghz = ghz_state(3)?;
    checks.push(Check::close(
        "ghz_N3_gain",
        optimize_gain(&ghz.rho, &ghz.layout, cfg)?.gain,
        3.0,
        1e-4,
    ));
    let w = w_state(3)?;
    checks.push(Check::close(
        "w_N3_gain",
        optimize_gain(&w.rho, &w.layout, cfg)?.gain,
        7.0 / 3.0,
        1e-4,
    ));
    checks.push(Check::close("scaling_N10_M2000", scaling_gain(10, 2000)?, 10.0, 1e-3));

    let summary = Summary {
        experiment: "verify".into(),
        seed: ctx.seed,
        checks,
    };
    write_json(&ctx.path("verify", "json"), &summary)?;
    Ok(summary)
}
