//! CSV tables and SVG line charts. Charts are rendered from the CSV file
//! alone so they can be regenerated without rerunning an experiment.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

/// Numeric table; missing values are stored as NaN and written as `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        let header = r.headers()?.iter().map(|s| s.to_string()).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .with_context(|| format!("non-numeric cell in {}", path.display()))?;
            rows.push(row);
        }
        Ok(Self { header, rows })
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub title: String,
    pub x: String,
    /// Columns to draw; empty means every column except `x`.
    pub ys: Vec<String>,
    pub log_x: bool,
    /// Horizontal reference line, e.g. the separable limit.
    pub reference: Option<(f64, String)>,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn nice_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders `spec` from the table in `csv_path` into `svg_path`.
pub fn plot_csv(csv_path: &Path, svg_path: &Path, spec: &PlotSpec) -> Result<()> {
    let table = Table::read(csv_path)?;
    let svg = render(&table, spec)?;
    fs::write(svg_path, svg).with_context(|| format!("cannot write {}", svg_path.display()))
}

pub fn render(table: &Table, spec: &PlotSpec) -> Result<String> {
    let Some(xs) = table.column(&spec.x) else {
        bail!("no column `{}`", spec.x);
    };
    let ys: Vec<String> = if spec.ys.is_empty() {
        table.header.iter().filter(|h| **h != spec.x).cloned().collect()
    } else {
        spec.ys.clone()
    };
    let mut series = Vec::new();
    for name in &ys {
        let Some(col) = table.column(name) else {
            bail!("no column `{name}`");
        };
        series.push((name.clone(), col));
    }
    let fx = |x: f64| if spec.log_x { x.log10() } else { x };
    let usable = |x: f64, y: f64| x.is_finite() && y.is_finite() && (!spec.log_x || x > 0.0);

    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (_, col) in &series {
        for (&x, &y) in xs.iter().zip(col) {
            if usable(x, y) {
                x0 = x0.min(fx(x));
                x1 = x1.max(fx(x));
                y0 = y0.min(y);
                y1 = y1.max(y);
            }
        }
    }
    if let Some((r, _)) = spec.reference {
        y0 = y0.min(r);
        y1 = y1.max(r);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |x: f64| LEFT + (fx(x) - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    )?;
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#)?;
    writeln!(
        s,
        r#"<text x="{}" y="20" font-size="13" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&spec.title)
    )?;
    writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    )?;
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = x0 + t * (x1 - x0);
        let label = if spec.log_x { nice_label(10f64.powf(xv)) } else { nice_label(xv) };
        let x = LEFT + t * pw;
        writeln!(s, r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#ccc"/>"##, TOP, TOP + ph)?;
        writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#, TOP + ph + 16.0)?;
        let yv = y0 + t * (y1 - y0);
        let y = py(yv);
        writeln!(s, r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ccc"/>"##, LEFT + pw)?;
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, nice_label(yv))?;
    }
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 10.0,
        escape(&spec.x)
    )?;
    if let Some((r, ref label)) = spec.reference {
        let y = py(r);
        writeln!(
            s,
            r#"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="gray" stroke-dasharray="5,4"/>"#,
            LEFT + pw
        )?;
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" fill="gray">{}</text>"#, LEFT + pw + 6.0, y + 4.0, escape(label))?;
    }
    for (i, (name, col)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        // split the polyline at missing values
        let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for (&x, &y) in xs.iter().zip(col) {
            if usable(x, y) {
                runs.last_mut().unwrap().push((px(x), py(y)));
            } else if !runs.last().unwrap().is_empty() {
                runs.push(Vec::new());
            }
        }
        for run in runs.iter().filter(|r| !r.is_empty()) {
            let pts: Vec<String> = run.iter().map(|(a, b)| format!("{a:.1},{b:.1}")).collect();
            writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
                pts.join(" ")
            )?;
            if run.len() <= 12 {
                for (a, b) in run {
                    writeln!(s, r#"<circle cx="{a:.1}" cy="{b:.1}" r="2.5" fill="{color}"/>"#)?;
                }
            }
        }
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let lx = LEFT + pw + 10.0;
        writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            lx + 18.0
        )?;
        writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 22.0, ly + 4.0, escape(name))?;
    }
    writeln!(s, "</svg>")?;
    Ok(s)
}
