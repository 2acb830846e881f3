//! Atomic file writes and minimal SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::data::Day;
use crate::diagnostics::CorrelogramPoint;
use crate::error::{Error, Result};

/// Writes through a sibling temporary file and a rename, so readers never
/// see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

const W: f64 = 900.0;
const H: f64 = 360.0;
const MARGIN: f64 = 50.0;

fn header(out: &mut String, title: &str, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" viewBox="0 0 {W} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    top: f64,
    bottom: f64,
}

impl Frame {
    fn new((x0, x1): (f64, f64), (y0, y1): (f64, f64), top: f64, bottom: f64) -> Self {
        let pad = if y1 > y0 { 0.05 * (y1 - y0) } else { 1.0 };
        Frame {
            x0,
            x1: if x1 > x0 { x1 } else { x0 + 1.0 },
            y0: y0 - pad,
            y1: y1 + pad,
            top,
            bottom,
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        self.bottom - (y - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)
    }

    fn axes(&self, out: &mut String, x_labels: (&str, &str)) {
        let (l, r) = (MARGIN, W - MARGIN);
        let _ = writeln!(
            out,
            r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#,
            t = self.top,
            b = self.bottom
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{:.1}</text>"#,
            l - 4.0,
            self.top + 4.0,
            self.y1
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{:.1}</text>"#,
            l - 4.0,
            self.bottom,
            self.y0
        );
        let _ = writeln!(
            out,
            r#"<text x="{l}" y="{:.1}">{}</text>"#,
            self.bottom + 14.0,
            x_labels.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{r}" y="{:.1}" text-anchor="end">{}</text>"#,
            self.bottom + 14.0,
            x_labels.1
        );
    }

    fn polyline(&self, out: &mut String, points: &[(f64, f64)], colour: &str) {
        let mut d = String::new();
        for (i, (x, y)) in points.iter().enumerate() {
            let _ = write!(
                d,
                "{}{:.2} {:.2}",
                if i == 0 { "M" } else { " L" },
                self.px(*x),
                self.py(*y)
            );
        }
        let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{colour}" stroke-width="1"/>"#);
    }
}

fn legend(out: &mut String, entries: &[(&str, &str)]) {
    for (i, (label, colour)) in entries.iter().enumerate() {
        let y = 36.0 + 14.0 * i as f64;
        let x = W - MARGIN - 120.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="{:.1}" width="12" height="3" fill="{colour}"/>"#,
            y - 4.0
        );
        let _ = writeln!(out, r#"<text x="{}" y="{y:.1}">{}</text>"#, x + 16.0, escape(label));
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// History and forecast on one time axis.
pub fn forecast_svg(title: &str, history_start: Day, history: &[f64], origin: Day, forecast: &[f64]) -> String {
    let hist: Vec<(f64, f64)> = history
        .iter()
        .enumerate()
        .map(|(i, v)| ((history_start.0 + i as i64) as f64, *v))
        .collect();
    let fc: Vec<(f64, f64)> = forecast
        .iter()
        .enumerate()
        .map(|(i, v)| ((origin.0 + 1 + i as i64) as f64, *v))
        .collect();
    let all = || hist.iter().chain(&fc);
    let frame = Frame::new(range(all().map(|p| p.0)), range(all().map(|p| p.1)), 40.0, H - 30.0);
    let first = history_start.to_string();
    let last = origin.offset(forecast.len() as i64).to_string();
    let mut out = String::new();
    header(&mut out, title, H);
    frame.axes(&mut out, (&first, &last));
    frame.polyline(&mut out, &hist, "#1f77b4");
    frame.polyline(&mut out, &fc, "#d62728");
    legend(&mut out, &[("history", "#1f77b4"), ("forecast", "#d62728")]);
    out.push_str("</svg>\n");
    out
}

/// ACF and PACF stem plots with the white-noise band.
pub fn correlogram_svg(title: &str, acf: &[CorrelogramPoint], pacf: &[CorrelogramPoint]) -> String {
    let height = 2.0 * H;
    let mut out = String::new();
    header(&mut out, title, height);
    for (k, (name, points)) in [("ACF", acf), ("PACF", pacf)].into_iter().enumerate() {
        let top = 40.0 + k as f64 * H;
        let bottom = top + H - 60.0;
        let max_lag = points.iter().map(|p| p.lag).max().unwrap_or(1) as f64;
        let frame = Frame {
            x0: 0.0,
            x1: max_lag.max(1.0) + 1.0,
            y0: -1.0,
            y1: 1.0,
            top,
            bottom,
        };
        frame.axes(&mut out, ("0", &format!("lag {}", max_lag)));
        let _ = writeln!(out, r#"<text x="{}" y="{:.1}">{name}</text>"#, MARGIN + 6.0, top + 12.0);
        let zero = frame.py(0.0);
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN}" y1="{zero:.2}" x2="{}" y2="{zero:.2}" stroke="#888"/>"##,
            W - MARGIN
        );
        if let Some(band) = points.first().map(|p| p.band) {
            for b in [band, -band] {
                let y = frame.py(b);
                let _ = writeln!(
                    out,
                    r##"<line x1="{MARGIN}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#d62728" stroke-dasharray="4 3"/>"##,
                    W - MARGIN
                );
            }
        }
        for p in points {
            let x = frame.px(p.lag as f64);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{zero:.2}" x2="{x:.2}" y2="{:.2}" stroke="#1f77b4" stroke-width="2"/>"##,
                frame.py(p.value)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
