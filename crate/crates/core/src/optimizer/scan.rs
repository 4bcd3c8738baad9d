//! Parameter scans and onset location for one-parameter state families.

use serde::{Deserialize, Serialize};

use super::{optimize_gain_multicopy, OptimizerConfig};
use crate::error::{invalid, Result};
use crate::metrology::GainReport;
use crate::qtensor::HermitianOperator;
use crate::states::MultipartiteState;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanPoint {
    pub p: f64,
    pub report: Option<GainReport>,
    pub error: Option<String>,
}

impl ScanPoint {
    pub fn gain(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.gain)
    }
}

/// Optimized gain of `copies` copies of `family(p)` for every `p` in
/// `grid`. Each interior point is warm-started from the previous point's
/// terms; the endpoints `p = 0` and `p = 1` start cold. A failure at one
/// point is recorded and the scan continues.
pub fn optimize_gain_scan<F>(
    family: F,
    grid: &[f64],
    copies: usize,
    config: &OptimizerConfig,
) -> Vec<ScanPoint>
where
    F: Fn(f64) -> Result<MultipartiteState>,
{
    let mut prev: Option<Vec<HermitianOperator>> = None;
    grid.iter()
        .map(|&p| {
            let endpoint = p <= 0.0 || p >= 1.0;
            let warm: Vec<Vec<HermitianOperator>> = match (&prev, endpoint) {
                (Some(t), false) => vec![t.clone()],
                _ => Vec::new(),
            };
            let result = family(p).and_then(|s| {
                let layout = s.layout.with_copies(copies)?;
                optimize_gain_multicopy(&s.rho, &layout, config, &warm)
            });
            match result {
                Ok((report, _)) => {
                    prev = Some(report.local_terms.clone());
                    ScanPoint {
                        p,
                        report: Some(report),
                        error: None,
                    }
                }
                Err(e) => ScanPoint {
                    p,
                    report: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Indices where the gain drops more than `tol` below an earlier value.
/// Meaningful for families expected to be monotone along the grid.
pub fn envelope_violations(points: &[ScanPoint], tol: f64) -> Vec<usize> {
    let mut best = f64::NEG_INFINITY;
    let mut out = Vec::new();
    for (i, pt) in points.iter().enumerate() {
        if let Some(g) = pt.gain() {
            if g < best - tol {
                out.push(i);
            }
            best = best.max(g);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Onset {
    /// Midpoint of the final bracket.
    pub p: f64,
    pub lower: f64,
    pub upper: f64,
    pub evaluations: usize,
}

/// Bisects for the smallest `p` with optimized gain above `1 + margin`.
/// `lo` must be not useful and `hi` useful.
pub fn locate_onset<F>(
    family: F,
    mut lo: f64,
    mut hi: f64,
    copies: usize,
    config: &OptimizerConfig,
    margin: f64,
    tol_p: f64,
) -> Result<Onset>
where
    F: Fn(f64) -> Result<MultipartiteState>,
{
    if !(tol_p > 0.0) || !(lo < hi) {
        return Err(invalid("bracket", "need lo < hi and a positive tolerance"));
    }
    let mut evaluations = 0;
    let mut useful = |p: f64| -> Result<bool> {
        evaluations += 1;
        let s = family(p)?;
        let layout = s.layout.with_copies(copies)?;
        let (r, _) = optimize_gain_multicopy(&s.rho, &layout, config, &[])?;
        Ok(r.gain > 1.0 + margin)
    };
    if useful(lo)? || !useful(hi)? {
        return Err(invalid("bracket", "onset is not bracketed"));
    }
    while hi - lo > tol_p {
        let mid = 0.5 * (lo + hi);
        if useful(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Onset {
        p: 0.5 * (lo + hi),
        lower: lo,
        upper: hi,
        evaluations,
    })
}
