//! Parsing of parameter ranges and lists given on the command line.

use anyhow::{bail, Context, Result};

/// `start:stop:step`, inclusive of `stop` up to rounding, optionally
/// prefixed with `name=`. Points are computed as `start + i * step` so the
/// grid does not accumulate error.
pub fn parse_range(text: &str) -> Result<(Option<String>, Vec<f64>)> {
    let (name, body) = match text.split_once('=') {
        Some((n, b)) => (Some(n.trim().to_string()), b),
        None => (None, text),
    };
    let parts: Vec<&str> = body.split(':').collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .with_context(|| format!("malformed range `{text}`"))?;
    let points = match nums.as_slice() {
        [x] => vec![*x],
        [start, stop, step] => {
            if !(*step > 0.0) || stop < start {
                bail!("range `{text}` needs start <= stop and a positive step");
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| start + i as f64 * step).collect()
        }
        _ => bail!("range `{text}` must be `start:stop:step` or a single value"),
    };
    Ok((name, points))
}

pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>> {
    let out = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| anyhow::anyhow!("bad list entry `{s}`"))
        })
        .collect::<Result<Vec<T>>>()?;
    if out.is_empty() {
        bail!("empty list `{text}`");
    }
    Ok(out)
}

/// Roughly `count` integers spread logarithmically over `[lo, hi]`,
/// deduplicated and sorted.
pub fn log_integers(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..count)
        .map(|i| {
            let t = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
            (a + t * (b - a)).exp().round() as u64
        })
        .map(|n| n.clamp(lo, hi))
        .collect();
    out.dedup();
    out
}
