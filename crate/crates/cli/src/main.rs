use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use qmetro_core::optimizer::OptimizerConfig;
use qmetro_core::states::StateFamily;

mod experiments;
mod grid;
mod output;
mod verify;

use experiments::{RunContext, Summary};
use grid::{parse_list, parse_range};
use output::{plot_csv, PlotSpec};

/// Multicopy metrology experiments: figure data, bounds and checks.
#[derive(Parser)]
#[command(name = "qmetro", version)]
struct Cli {
    /// Directory for CSV, SVG and JSON outputs
    #[arg(long, global = true, default_value = "out")]
    outdir: PathBuf,

    /// Seed for optimizer restarts and sampling
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// JSON file with optimizer settings
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the number of optimizer restarts
    #[arg(long, global = true)]
    restarts: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Isotropic two-qubit state against the number of copies
    Fig2 {
        /// Noise parameter(s), comma separated
        #[arg(long, default_value = "0.9,0.52")]
        p: String,
        #[arg(long, default_value_t = experiments::FIG2_MAX_COPIES)]
        mmax: usize,
    },
    /// Closed-form gain against the number of parties
    Fig3 {
        #[arg(long, default_value = "2000,4000,6000")]
        m: String,
        #[arg(long, default_value_t = 1_000_000)]
        nmax: u64,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Noisy GHZ states embedded into qudits
    Figs1 {
        #[arg(long, default_value = "3,4,5")]
        d: String,
        #[arg(long, default_value = "p=0:1:0.02")]
        param: String,
    },
    /// W / W-bar mixtures with one and two copies
    Figs2 {
        #[arg(long, default_value = "p=0:1:0.05")]
        param: String,
    },
    /// Run every consistency check; exits nonzero if any fails
    Verify,
    /// Two-body coupling bound table for M = 2..=m
    Bounds {
        #[arg(long, default_value_t = 200)]
        m: u64,
    },
    /// Optimized gain along a named state family
    Scan {
        /// ghz_diag_noise, noisy_ghz_white, isotropic, w_wbar or two_copy_bell
        #[arg(long)]
        state: String,
        #[arg(long, default_value = "p=0:1:0.02")]
        param: String,
        #[arg(long, default_value_t = 3)]
        parties: usize,
        #[arg(long, default_value_t = 1)]
        copies: usize,
    },
    /// Re-render an SVG line chart from an existing CSV file
    Plot {
        csv: PathBuf,
        #[arg(long)]
        x: String,
        /// Columns to draw, comma separated; default all but x
        #[arg(long)]
        y: Option<String>,
        #[arg(long)]
        log_x: bool,
        #[arg(long, default_value = "")]
        title: String,
        /// Output path; default replaces the CSV extension
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("QMETRO_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("QMETRO_THREADS must be a positive integer, got `{v}`"))?;
        if n == 0 {
            bail!("QMETRO_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn load_config(cli: &Cli) -> Result<OptimizerConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            OptimizerConfig::from_json(&text)?
        }
        None => OptimizerConfig::default(),
    };
    if let Some(r) = cli.restarts {
        cfg.restarts = r;
    }
    Ok(cfg)
}

fn grid_of(param: &str) -> Result<Vec<f64>> {
    let (name, pts) = parse_range(param)?;
    if let Some(n) = name {
        if n != "p" {
            bail!("only the parameter `p` can be scanned, got `{n}`");
        }
    }
    Ok(pts)
}

fn report(summary: &Summary) {
    for c in &summary.checks {
        println!(
            "{:<4} {} value={} expected={} tol={}{}",
            if c.pass { "ok" } else { "FAIL" },
            c.name,
            c.value,
            c.expected,
            c.tolerance,
            if c.detail.is_empty() { String::new() } else { format!(" ({})", c.detail) }
        );
    }
}

fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    if let Command::Plot {
        csv,
        x,
        y,
        log_x,
        title,
        out,
    } = &cli.command
    {
        let spec = PlotSpec {
            title: title.clone(),
            x: x.clone(),
            ys: y.as_deref().map(parse_list::<String>).transpose()?.unwrap_or_default(),
            log_x: *log_x,
            reference: None,
        };
        let out = out.clone().unwrap_or_else(|| csv.with_extension("svg"));
        plot_csv(csv, &out, &spec)?;
        println!("wrote {}", out.display());
        return Ok(true);
    }
    let ctx = RunContext::new(cli.outdir.clone(), cli.seed, load_config(&cli)?)?;
    let summary = match &cli.command {
        Command::Fig2 { p, mmax } => experiments::run_fig2(&ctx, &parse_list(p)?, *mmax)?,
        Command::Fig3 { m, nmax, points } => {
            experiments::run_fig3(&ctx, &parse_list(m)?, *nmax, *points)?
        }
        Command::Figs1 { d, param } => {
            experiments::run_figs1(&ctx, &parse_list(d)?, &grid_of(param)?)?
        }
        Command::Figs2 { param } => experiments::run_figs2(&ctx, &grid_of(param)?)?,
        Command::Verify => verify::run_verify(&ctx)?,
        Command::Bounds { m } => experiments::run_bounds(&ctx, *m)?,
        Command::Scan {
            state,
            param,
            parties,
            copies,
        } => {
            let family = StateFamily::parse(state)
                .with_context(|| format!("unknown state family `{state}`"))?;
            experiments::run_scan(&ctx, family, *parties, *copies, &grid_of(param)?)?
        }
        Command::Plot { .. } => unreachable!(),
    };
    report(&summary);
    println!("outputs in {}", ctx.outdir.display());
    // only verify turns failed checks into a failing exit status
    Ok(!matches!(cli.command, Command::Verify) || summary.passed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
