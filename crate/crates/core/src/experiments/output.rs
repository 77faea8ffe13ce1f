//! CSV, SVG and metadata emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use super::{Metric, Objective, SweepResult};
use crate::error::Result;
use crate::metrics::Architecture;

/// First line of every CSV.
pub const CSV_SCHEMA: &str = "schema=1";
pub const CSV_HEADER: &str = "n,trial,seed,arch,scheme,metric,value_db,wall_time_ms";

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

pub fn to_csv(res: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str(CSV_SCHEMA);
    out.push('\n');
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &res.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.trial,
            r.seed,
            r.arch.label(),
            r.scheme,
            r.metric.label(),
            num(r.value_db()),
            num(r.wall_time_ms)
        );
    }
    out
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let unit = if r < 1.5 {
        1.0
    } else if r < 3.0 {
        2.0
    } else if r < 7.0 {
        5.0
    } else {
        10.0
    };
    unit * mag
}

fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let step = nice_step((hi - lo).max(1e-9), target);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

/// Line chart of the aggregate means in dB against N, one polyline per
/// architecture, scheme and metric. Semi-passive series are dashed.
pub fn render_svg(res: &SweepResult) -> String {
    let (w, h) = (860.0, 540.0);
    let (left, right, top, bottom) = (80.0, 250.0, 40.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let keys = res.series_keys();
    let finite: Vec<(usize, f64)> = res.aggregates.iter().filter(|a| a.mean_db.is_finite()).map(|a| (a.n, a.mean_db)).collect();
    let (x_lo, x_hi) = (*res.config.n_list.first().unwrap() as f64, *res.config.n_list.last().unwrap() as f64);
    let x_hi = if x_hi > x_lo { x_hi } else { x_lo + 1.0 };
    let (mut y_lo, mut y_hi) = finite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| (lo.min(y), hi.max(y)));
    if !y_lo.is_finite() {
        (y_lo, y_hi) = (0.0, 1.0);
    }
    let pad = ((y_hi - y_lo) * 0.05).max(0.5);
    let step = nice_step(y_hi - y_lo + 2.0 * pad, 6);
    y_lo = ((y_lo - pad) / step).floor() * step;
    y_hi = ((y_hi + pad) / step).ceil() * step;
    let sx = |x: f64| left + (x - x_lo) / (x_hi - x_lo) * pw;
    let sy = |y: f64| top + (y_hi - y) / (y_hi - y_lo) * ph;

    let ylabel = match res.config.objective {
        Objective::Snr => "Average SNR (dB)",
        Objective::Crb => "Average CRB (dB, rad^2)",
        Objective::Detection => "Detection probability (dB)",
    };
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, left + pw / 2.0, res.config.name);
    for t in ticks(x_lo, x_hi, 8) {
        let x = sx(t);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{:.2}" stroke="#e5e5e5"/>"##, top + ph);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#, top + ph + 18.0);
    }
    for t in ticks(y_lo, y_hi, 6) {
        let y = sy(t);
        let _ = writeln!(s, r##"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e5e5e5"/>"##, left + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t}</text>"#, left - 6.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">Number of IRS elements N</text>"#, left + pw / 2.0, h - 18.0);
    let _ = writeln!(
        s,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{ylabel}</text>"#,
        top + ph / 2.0
    );
    for (i, (arch, scheme, metric)) in keys.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = match arch {
            Architecture::FullyPassive => "",
            Architecture::SemiPassive => r#" stroke-dasharray="6 4""#,
        };
        let pts: Vec<String> = res
            .series_db(*arch, scheme, *metric)
            .into_iter()
            .filter(|p| p.1.is_finite())
            .map(|(n, y)| format!("{:.2},{:.2}", sx(n as f64), sy(y)))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.6"{dash} points="{}"/>"#, pts.join(" "));
        }
        let ly = top + 10.0 + 18.0 * i as f64;
        let lx = left + pw + 14.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="1.6"{dash}/>"#, lx + 26.0);
        let metric_tag = if *metric == Metric::CrbApprox { " (approx)" } else { "" };
        let _ = writeln!(s, r#"<text x="{}" y="{}">{} {}{}</text>"#, lx + 32.0, ly + 4.0, arch.label(), scheme, metric_tag);
    }
    s.push_str("</svg>\n");
    s
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputFiles {
    pub csv: PathBuf,
    pub svg: PathBuf,
    pub meta: PathBuf,
}

impl OutputFiles {
    pub fn all(&self) -> [&Path; 3] {
        [&self.csv, &self.svg, &self.meta]
    }
}

/// Writes `<name>.csv`, `<name>.svg` and `<name>.meta.json` into `dir`.
pub fn write_outputs(res: &SweepResult, dir: &Path) -> Result<OutputFiles> {
    fs::create_dir_all(dir)?;
    let name = &res.config.name;
    let csv = to_csv(res);
    let digest = Sha256::digest(csv.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    let files = OutputFiles {
        csv: dir.join(format!("{name}.csv")),
        svg: dir.join(format!("{name}.svg")),
        meta: dir.join(format!("{name}.meta.json")),
    };
    let aggregates: Vec<_> = res
        .aggregates
        .iter()
        .map(|a| {
            json!({
                "n": a.n,
                "arch": a.arch.label(),
                "scheme": a.scheme,
                "metric": a.metric.label(),
                "mean_db": num(a.mean_db),
                "std_db": num(a.std_db),
                "trials": a.trials,
                "failed": a.failed,
            })
        })
        .collect();
    let meta = json!({
        "name": name,
        "master_seed": res.config.master_seed,
        "csv": files.csv.file_name().and_then(|f| f.to_str()),
        "csv_sha256": hex,
        "rows": res.rows.len(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": res.config,
        "aggregates": aggregates,
    });
    fs::write(&files.csv, csv)?;
    fs::write(&files.svg, render_svg(res))?;
    fs::write(&files.meta, serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n")?;
    Ok(files)
}
