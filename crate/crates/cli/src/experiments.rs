//! Figure reproductions. Each run writes `<outdir>/<name>.csv`, an SVG
//! rendered from that CSV, and a JSON file with the checks it evaluated.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use qmetro_core::multicopy::{
    full_rank_upper_bound, multicopy_figures_direct, scaling_gain, two_body_coupling_bound,
    LocalTerm,
};
use qmetro_core::optimizer::{
    envelope_violations, locate_onset, optimize_gain_scan, OptimizerConfig, ScanPoint,
};
use qmetro_core::states::{isotropic_two_qubit, noisy_ghz_white, w_wbar_mixture, StateFamily};
use qmetro_core::HermitianOperator;

use crate::grid::log_integers;
use crate::output::{plot_csv, write_json, PlotSpec, Table};

/// Largest copy number for the Fig. 2 sweep (two qubits, dim 4^7).
pub const FIG2_MAX_COPIES: usize = 7;

/// Usefulness threshold of the three-qubit noisy GHZ state, `(3 + √57)/24`.
pub const NOISY_GHZ_ONSET: f64 = 0.439576;

/// Output location, seed and optimizer settings shared by every run.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub outdir: PathBuf,
    pub seed: u64,
    pub config: OptimizerConfig,
}

impl RunContext {
    pub fn new(outdir: PathBuf, seed: u64, mut config: OptimizerConfig) -> Result<Self> {
        fs::create_dir_all(&outdir)
            .with_context(|| format!("cannot create output directory {}", outdir.display()))?;
        let probe = outdir.join(".qmetro-write-test");
        fs::write(&probe, b"")
            .with_context(|| format!("output directory {} is not writable", outdir.display()))?;
        fs::remove_file(&probe)?;
        config.seed = seed;
        config.validate()?;
        Ok(Self {
            outdir,
            seed,
            config,
        })
    }

    pub fn path(&self, name: &str, ext: &str) -> PathBuf {
        self.outdir.join(format!("{name}.{ext}"))
    }

    fn emit(&self, name: &str, table: &Table, plot: &PlotSpec) -> Result<()> {
        let csv = self.path(name, "csv");
        table.write(&csv)?;
        plot_csv(&csv, &self.path(name, "svg"), plot)
    }
}

/// Running maximum that keeps NaN, so a broken value fails its check.
pub fn worst(acc: f64, x: f64) -> f64 {
    if acc.is_nan() || x.is_nan() {
        f64::NAN
    } else {
        acc.max(x)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    pub fn close(name: &str, value: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            pass: (value - expected).abs() <= tolerance,
            value,
            expected,
            tolerance,
            detail: String::new(),
        }
    }

    pub fn flag(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            pass,
            value: f64::from(u8::from(pass)),
            expected: 1.0,
            tolerance: 0.0,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn finish(ctx: &RunContext, name: &str, checks: Vec<Check>) -> Result<Summary> {
    let summary = Summary {
        experiment: name.to_string(),
        seed: ctx.seed,
        checks,
    };
    write_json(&ctx.path(name, "json"), &summary)?;
    Ok(summary)
}

fn tag(p: f64) -> String {
    format!("p{p}")
}

pub fn run_fig2(ctx: &RunContext, ps: &[f64], max_copies: usize) -> Result<Summary> {
    if max_copies == 0 || max_copies > FIG2_MAX_COPIES {
        bail!("--mmax must be in 1..={FIG2_MAX_COPIES} for the direct evaluator");
    }
    if ps.is_empty() {
        bail!("need at least one p");
    }
    let z = HermitianOperator::pauli_z();
    let mut header = vec!["M".to_string()];
    for &p in ps {
        for col in ["F_Q", "4Var", "4I", "bound"] {
            header.push(format!("{col}_{}", tag(p)));
        }
    }
    header.push("F_sep".into());
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    let mut checks = Vec::new();
    let mut fq = vec![Vec::new(); ps.len()];
    for m in 1..=max_copies {
        let mut row = vec![m as f64];
        for (i, &p) in ps.iter().enumerate() {
            let st = isotropic_two_qubit(p)?;
            let layout = st.layout.with_copies(m)?;
            let terms = vec![LocalTerm::uniform(&z, m); 2];
            let f = multicopy_figures_direct(&st.rho, &terms, &layout)?;
            let bound = full_rank_upper_bound(&st.rho, &terms, &layout)?;
            let chain = 4.0 * f.skew <= f.fq + 1e-8 && f.fq <= f.variance_bound + 1e-8;
            checks.push(Check::flag(
                &format!("chain_{}_M{m}", tag(p)),
                chain && f.fq <= bound + 1e-9,
                format!("4I={:.6} F={:.6} 4Var={:.6} bound={bound:.6}", 4.0 * f.skew, f.fq, f.variance_bound),
            ));
            row.extend([f.fq, f.variance_bound, 4.0 * f.skew, bound]);
            fq[i].push(f.fq);
        }
        row.push(8.0);
        table.push(row);
    }
    for (i, &p) in ps.iter().enumerate() {
        let f = &fq[i];
        let peak = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let best_m = f.iter().position(|&x| x == peak).unwrap() + 1;
        let detail = format!("max F_Q {peak:.6} at M={best_m}");
        // the two panels of the figure have known shapes; other p are reported only
        if p == 0.9 {
            let early = f.iter().take(3).all(|&x| x > 8.0);
            let later = f.len() < 5 || f[3..].windows(2).all(|w| w[1] < w[0]);
            checks.push(Check::flag("useful_then_decreasing_p0.9", early && later, detail));
        } else if p == 0.52 {
            let below = f.iter().all(|&x| x < 8.0);
            let rising = f.windows(2).all(|w| w[1] > w[0]);
            checks.push(Check::flag("rising_below_separable_p0.52", below && rising, detail));
        } else {
            checks.push(Check {
                name: format!("peak_{}", tag(p)),
                pass: true,
                value: peak / 8.0,
                expected: 1.0,
                tolerance: 0.0,
                detail,
            });
        }
    }
    ctx.emit(
        "fig2",
        &table,
        &PlotSpec {
            title: "Isotropic state: Fisher information vs copies".into(),
            x: "M".into(),
            ys: table.header[1..table.header.len() - 1]
                .iter()
                .filter(|h| h.starts_with("F_Q") || h.starts_with("4"))
                .cloned()
                .collect(),
            log_x: false,
            reference: Some((8.0, "F_sep".into())),
        },
    )?;
    finish(ctx, "fig2", checks)
}

pub fn run_fig3(ctx: &RunContext, copies: &[u64], n_max: u64, points: usize) -> Result<Summary> {
    if copies.is_empty() || n_max < 2 || points < 2 {
        bail!("fig3 needs copy numbers, N max >= 2 and at least two points");
    }
    let ns = log_integers(2, n_max, points);
    let mut header = vec!["N".to_string()];
    header.extend(copies.iter().map(|m| format!("g_M{m}")));
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    for &n in &ns {
        let mut row = vec![n as f64];
        for &m in copies {
            row.push(scaling_gain(n, m)?);
        }
        table.push(row);
    }
    let limit = 1.0 - (-1.0f64).exp();
    let checks = vec![
        Check::close("small_N_gain_is_N", scaling_gain(10, 2000)?, 10.0, 1e-3),
        Check::close("large_N_gain_is_M", scaling_gain(1_000_000, 2000)?, 2000.0, 1.0),
        Check::close(
            "equal_N_M_gain_over_N",
            scaling_gain(3000, 3000)? / 3000.0,
            limit,
            1e-4,
        ),
    ];
    ctx.emit(
        "fig3",
        &table,
        &PlotSpec {
            title: "Gain of M copies vs number of parties".into(),
            x: "N".into(),
            ys: vec![],
            log_x: true,
            reference: None,
        },
    )?;
    finish(ctx, "fig3", checks)
}

fn gains(points: &[ScanPoint]) -> Vec<f64> {
    points.iter().map(|p| p.gain().unwrap_or(f64::NAN)).collect()
}

pub fn run_figs1(ctx: &RunContext, dims: &[usize], grid: &[f64]) -> Result<Summary> {
    if dims.iter().any(|&d| d < 2) || grid.is_empty() {
        bail!("figs1 needs local dimensions >= 2 and a nonempty grid");
    }
    let mut curves: Vec<usize> = vec![2];
    curves.extend(dims.iter().copied().filter(|&d| d != 2));
    let family = |d: usize| {
        move |p: f64| {
            let s = noisy_ghz_white(p, 3)?;
            if d == 2 {
                Ok(s)
            } else {
                s.embedded(d)
            }
        }
    };
    let cfg = &ctx.config;
    let scans: Vec<Vec<ScanPoint>> = curves
        .par_iter()
        .map(|&d| optimize_gain_scan(family(d), grid, 1, cfg))
        .collect();
    let mut header = vec!["p".to_string()];
    header.extend(curves.iter().map(|&d| if d == 2 { "g_qubit".to_string() } else { format!("g_d{d}") }));
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    let cols: Vec<Vec<f64>> = scans.iter().map(|s| gains(s)).collect();
    for (i, &p) in grid.iter().enumerate() {
        let mut row = vec![p];
        row.extend(cols.iter().map(|c| c[i]));
        table.push(row);
    }
    let mut checks = Vec::new();
    for (k, &d) in curves.iter().enumerate() {
        let name = if d == 2 { "qubit".to_string() } else { format!("d{d}") };
        let g = &cols[k];
        let first = g.iter().position(|&x| x > 1.0 + 1e-9);
        match first {
            Some(i) if i > 0 => {
                let on = locate_onset(family(d), grid[i - 1], grid[i], 1, cfg, 1e-9, 1e-4)?;
                checks.push(Check::close(&format!("onset_{name}"), on.p, NOISY_GHZ_ONSET, 2e-3));
            }
            _ => checks.push(Check::flag(
                &format!("onset_{name}"),
                false,
                "grid does not bracket the onset",
            )),
        }
        if let Some(i) = grid.iter().position(|&p| p == 1.0) {
            checks.push(Check::close(&format!("pure_ghz_{name}"), g[i], 3.0, 1e-4));
        }
        if d != 2 {
            let useless_stay = grid
                .iter()
                .enumerate()
                .filter(|(i, _)| cols[0][*i] <= 1.0 + 1e-9)
                .all(|(i, _)| g[i] <= 1.0 + 1e-6);
            checks.push(Check::flag(
                &format!("useless_stay_useless_{name}"),
                useless_stay,
                "",
            ));
            let not_worse = g.iter().zip(&cols[0]).all(|(e, q)| !(e < &(q - 1e-6)));
            checks.push(Check::flag(&format!("embedded_not_worse_{name}"), not_worse, ""));
        }
    }
    ctx.emit(
        "figs1",
        &table,
        &PlotSpec {
            title: "Noisy GHZ, qubit and embedded qudits".into(),
            x: "p".into(),
            ys: vec![],
            log_x: false,
            reference: Some((1.0, "separable".into())),
        },
    )?;
    finish(ctx, "figs1", checks)
}

pub fn run_figs2(ctx: &RunContext, grid: &[f64]) -> Result<Summary> {
    if grid.is_empty() {
        bail!("figs2 needs a nonempty grid");
    }
    let family = |p: f64| w_wbar_mixture(p, 3);
    let cfg = &ctx.config;
    let scans: Vec<Vec<f64>> = [1usize, 2]
        .par_iter()
        .map(|&m| gains(&optimize_gain_scan(family, grid, m, cfg)))
        .collect();
    let (one, two) = (&scans[0], &scans[1]);
    let mut table = Table::new(&["p", "g_one_copy", "g_two_copies"]);
    for (i, &p) in grid.iter().enumerate() {
        table.push(vec![p, one[i], two[i]]);
    }
    let mut checks = vec![Check::flag(
        "two_copies_not_worse",
        one.iter().zip(two).all(|(a, b)| *b >= a - 1e-6),
        "",
    )];
    let mut asym: f64 = 0.0;
    for (i, &p) in grid.iter().enumerate() {
        if let Some(j) = grid.iter().position(|&q| (q - (1.0 - p)).abs() < 1e-12) {
            asym = worst(worst(asym, (one[i] - one[j]).abs()), (two[i] - two[j]).abs());
        }
    }
    checks.push(Check::close("symmetric_about_half", asym, 0.0, 1e-4));
    for &end in &[0.0, 1.0] {
        if let Some(i) = grid.iter().position(|&p| p == end) {
            checks.push(Check::close(&format!("endpoint_p{end}"), two[i], one[i], 1e-3));
        }
    }
    if let Some(mid) = grid.iter().position(|&p| p == 0.5) {
        for (name, g) in [("one", one), ("two", two)] {
            checks.push(Check::flag(
                &format!("minimal_at_half_{name}"),
                g.iter().all(|&x| x >= g[mid] - 1e-6),
                format!("g(1/2) = {:.6}", g[mid]),
            ));
        }
    }
    ctx.emit(
        "figs2",
        &table,
        &PlotSpec {
            title: "W / W-bar mixture: one and two copies".into(),
            x: "p".into(),
            ys: vec![],
            log_x: false,
            reference: Some((1.0, "separable".into())),
        },
    )?;
    finish(ctx, "figs2", checks)
}

pub fn run_bounds(ctx: &RunContext, max_copies: u64) -> Result<Summary> {
    if max_copies < 2 {
        bail!("--m must be at least 2");
    }
    let mut table = Table::new(&["M", "bound"]);
    for m in 2..=max_copies {
        table.push(vec![m as f64, two_body_coupling_bound(m)?]);
    }
    let mut checks = vec![Check::close("M2", two_body_coupling_bound(2)?, 8.0, 1e-12)];
    if max_copies >= 7 {
        checks.push(Check::close("M7", two_body_coupling_bound(7)?, 2128.0 / 2304.0, 1e-12));
        checks.push(Check::flag(
            "below_one_from_M7",
            (7..=max_copies).all(|m| two_body_coupling_bound(m).map(|b| b < 1.0).unwrap_or(false)),
            "",
        ));
    }
    if max_copies >= 8 {
        checks.push(Check::close("M8", two_body_coupling_bound(8)?, 0.6875, 1e-12));
    }
    ctx.emit(
        "bounds",
        &table,
        &PlotSpec {
            title: "Two-body coupling bound on the gain".into(),
            x: "M".into(),
            ys: vec![],
            log_x: false,
            reference: Some((1.0, "g = 1".into())),
        },
    )?;
    finish(ctx, "bounds", checks)
}

#[derive(Debug, Serialize)]
struct ScanOutput<'a> {
    state: StateFamily,
    parties: usize,
    copies: usize,
    seed: u64,
    config: &'a OptimizerConfig,
    points: &'a [ScanPoint],
}

pub fn run_scan(
    ctx: &RunContext,
    state: StateFamily,
    parties: usize,
    copies: usize,
    grid: &[f64],
) -> Result<Summary> {
    if grid.is_empty() || copies == 0 {
        bail!("scan needs a nonempty grid and at least one copy");
    }
    let pts = optimize_gain_scan(|p| state.build(p, parties), grid, copies, &ctx.config);
    let mut table = Table::new(&["p", "gain", "F_Q", "F_sep"]);
    for pt in &pts {
        match &pt.report {
            Some(r) => table.push(vec![pt.p, r.gain, r.fq, r.fq_sep]),
            None => table.push(vec![pt.p, f64::NAN, f64::NAN, f64::NAN]),
        }
    }
    let failures: Vec<String> = pts
        .iter()
        .filter_map(|p| p.error.as_ref().map(|e| format!("p={}: {e}", p.p)))
        .collect();
    let mut checks = vec![Check::flag(
        "all_points_optimized",
        failures.is_empty(),
        failures.join("; "),
    )];
    let drops = envelope_violations(&pts, 1e-6);
    checks.push(Check {
        name: "monotone_envelope".into(),
        // informational: many families are not monotone in p
        pass: true,
        value: drops.len() as f64,
        expected: 0.0,
        tolerance: 0.0,
        detail: format!("{} points below the running maximum", drops.len()),
    });
    table.write(&ctx.path("scan", "csv"))?;
    plot_csv(
        &ctx.path("scan", "csv"),
        &ctx.path("scan", "svg"),
        &PlotSpec {
            title: format!("Optimized gain, {state:?}, N={parties}, M={copies}"),
            x: "p".into(),
            ys: vec!["gain".into()],
            log_x: false,
            reference: Some((1.0, "separable".into())),
        },
    )?;
    write_json(
        &ctx.path("scan", "json"),
        &ScanOutput {
            state,
            parties,
            copies,
            seed: ctx.seed,
            config: &ctx.config,
            points: &pts,
        },
    )?;
    Ok(Summary {
        experiment: "scan".into(),
        seed: ctx.seed,
        checks,
    })
}
