//! Study outputs: rate CSVs, JSON summaries and log-log SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;
use crate::experiments::{Band, RateTable};

/// One fitted table judged against an optional band.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub table: RateTable,
    pub band: Option<Band>,
    /// Extra requirement beyond the slope band (e.g. monotone errors).
    pub monotone_required: bool,
}

impl Verdict {
    pub fn new(table: RateTable, band: Option<Band>) -> Self {
        Self {
            table,
            band,
            monotone_required: false,
        }
    }

    pub fn monotone(mut self) -> Self {
        self.monotone_required = true;
        self
    }

    pub fn passed(&self) -> bool {
        let band_ok = self.band.is_none_or(|b| b.contains(self.table.slope));
        band_ok && (!self.monotone_required || self.table.strictly_decreasing())
    }

    pub fn summary(&self) -> Value {
        json!({
            "label": self.table.label,
            "slope": self.table.slope,
            "intercept": self.table.intercept,
            "r_squared": self.table.r_squared,
            "band": self.band.map(|b| json!({
                "lo": b.lo,
                "hi": if b.hi.is_finite() { json!(b.hi) } else { Value::Null },
            })),
            "strictly_decreasing": self.table.strictly_decreasing(),
            "monotone_required": self.monotone_required,
            "pass": self.passed(),
        })
    }
}

/// CSV with header `epsilon,error,included_in_fit`.
pub fn write_rate_csv<W: Write>(table: &RateTable, mut w: W) -> Result<()> {
    writeln!(w, "epsilon,error,included_in_fit")?;
    for p in &table.points {
        writeln!(w, "{:e},{:e},{}", p.epsilon, p.error, p.included)?;
    }
    Ok(())
}

/// Writes `<stem>.csv`, `<stem>.json` and `<stem>.svg` for every verdict into
/// `dir`, where `stem` is the table label. Returns the written paths.
pub fn write_verdicts(dir: &Path, title: &str, verdicts: &[Verdict]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for v in verdicts {
        let stem = if v.table.label.is_empty() {
            "rate"
        } else {
            v.table.label.as_str()
        };
        let csv = dir.join(format!("{stem}.csv"));
        write_rate_csv(&v.table, fs::File::create(&csv)?)?;
        let js = dir.join(format!("{stem}.json"));
        fs::write(
            &js,
            serde_json::to_string_pretty(&v.summary()).expect("plain json") + "\n",
        )?;
        let svg = dir.join(format!("{stem}.svg"));
        fs::write(&svg, loglog_svg(&format!("{title}: {stem}"), &v.table))?;
        written.extend([csv, js, svg]);
    }
    Ok(written)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| crate::error::Error::Parse(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 60.0;

/// Log-log scatter of the table with its fitted line. Excluded points are
/// drawn hollow.
pub fn loglog_svg(title: &str, table: &RateTable) -> String {
    let pts: Vec<(f64, f64, bool)> = table
        .points
        .iter()
        .filter(|p| p.error > 0.0)
        .map(|p| (p.epsilon.log10(), p.error.log10(), p.included))
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    if pts.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let pad = |lo: f64, hi: f64| {
        let (lo, hi) = (lo.floor(), hi.ceil());
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 1.0, hi + 1.0)
        }
    };
    let (x0, x1) = pad(
        pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = pad(
        pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    );
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 1.5 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 1.7 * MARGIN);

    let _ = writeln!(
        svg,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        sx(x0),
        sy(y1),
        sx(x1) - sx(x0),
        sy(y0) - sy(y1)
    );
    for d in (x0 as i32)..=(x1 as i32) {
        let x = sx(d as f64);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{d}</text>"##,
            sy(y0),
            sy(y1),
            sy(y0) + 16.0
        );
    }
    for d in (y0 as i32)..=(y1 as i32) {
        let y = sy(d as f64);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"##,
            sx(x0),
            sx(x1),
            sx(x0) - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">epsilon</text>"#,
        (sx(x0) + sx(x1)) / 2.0,
        HEIGHT - 18.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">error</text>"#,
        (sy(y0) + sy(y1)) / 2.0,
        (sy(y0) + sy(y1)) / 2.0
    );

    // fitted line across the included range
    let inc: Vec<f64> = pts.iter().filter(|p| p.2).map(|p| p.0).collect();
    if let (Some(lo), Some(hi)) = (
        inc.iter().cloned().reduce(f64::min),
        inc.iter().cloned().reduce(f64::max),
    ) {
        let ln10 = std::f64::consts::LN_10;
        let fit = |x: f64| table.slope * x + table.intercept / ln10;
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#c33" stroke-width="1.5"/>"##,
            sx(lo),
            sy(fit(lo)),
            sx(hi),
            sy(fit(hi))
        );
    }
    for &(x, y, included) in &pts {
        let fill = if included { "#236" } else { "white" };
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{fill}" stroke="#236"/>"##,
            sx(x),
            sy(y)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}">slope {:.3}, r2 {:.3}</text>"#,
        sx(x0) + 8.0,
        sy(y1) + 16.0,
        table.slope,
        table.r_squared
    );
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
