//! Minimal SVG and PNG renderers for heatmaps and line charts.
//!
//! The PNG variants carry no text; the SVG variants carry axis labels.
//! Both are written next to a CSV of the plotted numbers.

use std::fmt::Write as _;
use std::path::Path;

use image::{Rgb, RgbImage};

use crate::{Error, Result};

const CELL: u32 = 24;
const UNDEFINED: [u8; 3] = [160, 160, 160];

/// Dark (low) to light (high) ramp over `[lo, hi]`.
pub fn ramp(v: f64, lo: f64, hi: f64) -> [u8; 3] {
    const STOPS: [[f64; 3]; 4] = [[20.0, 20.0, 70.0], [40.0, 110.0, 150.0], [110.0, 190.0, 110.0], [250.0, 240.0, 140.0]];
    let t = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
    let x = t * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (STOPS[i][c] + f * (STOPS[i + 1][c] - STOPS[i][c])).round() as u8;
    }
    out
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// A matrix of optional values with row and column labels.
pub struct Heatmap<'a> {
    pub title: &'a str,
    pub rows: &'a [String],
    pub cols: &'a [String],
    pub values: &'a [Vec<Option<f64>>],
    pub range: (f64, f64),
}

impl Heatmap<'_> {
    pub fn to_svg(&self) -> String {
        let left = 110;
        let top = 90;
        let w = left + self.cols.len() as u32 * CELL + 20;
        let h = top + self.rows.len() as u32 * CELL + 20;
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#);
        let _ = writeln!(s, r#"<text x="4" y="14" font-size="13">{}</text>"#, escape(self.title));
        for (j, c) in self.cols.iter().enumerate() {
            let x = left + j as u32 * CELL + CELL / 2;
            let _ = writeln!(s, r#"<text transform="translate({x},{}) rotate(-60)">{}</text>"#, top - 4, escape(c));
        }
        for (i, r) in self.rows.iter().enumerate() {
            let y = top + i as u32 * CELL;
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, left - 4, y + CELL / 2 + 4, escape(r));
            for (j, v) in self.values[i].iter().enumerate() {
                let x = left + j as u32 * CELL;
                let (fill, title) = match v {
                    Some(v) => (hex(ramp(*v, self.range.0, self.range.1)), format!("{v:.4}")),
                    None => (hex(UNDEFINED), "undefined".to_string()),
                };
                let _ = write!(s, r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}"><title>{title}</title></rect>"#);
                if v.is_none() {
                    let _ = write!(s, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{}" stroke="white"/>"#, x + CELL, y + CELL);
                }
                s.push('\n');
            }
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn to_image(&self) -> RgbImage {
        let w = (self.cols.len() as u32 * CELL).max(1);
        let h = (self.rows.len() as u32 * CELL).max(1);
        let mut img = RgbImage::new(w, h);
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                for dy in 0..CELL {
                    for dx in 0..CELL {
                        let c = match v {
                            Some(v) => ramp(*v, self.range.0, self.range.1),
                            // diagonal stripe marks undefined cells
                            None if dx == dy => [255, 255, 255],
                            None => UNDEFINED,
                        };
                        img.put_pixel(j as u32 * CELL + dx, i as u32 * CELL + dy, Rgb(c));
                    }
                }
            }
        }
        img
    }
}

/// One series per metric over a shared x axis.
pub struct LineChart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub xs: &'a [f64],
    pub series: &'a [(String, Vec<Option<f64>>)],
}

const PALETTE: [[u8; 3]; 4] = [[200, 50, 50], [40, 100, 200], [30, 150, 60], [150, 80, 180]];
const PLOT_W: f64 = 480.0;
const PLOT_H: f64 = 300.0;

impl LineChart<'_> {
    fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let xmin = self.xs.iter().copied().fold(f64::INFINITY, f64::min);
        let xmax = self.xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ys = self.series.iter().flat_map(|(_, v)| v.iter().flatten().copied());
        let (ymin, ymax) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
        let widen = |lo: f64, hi: f64| {
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-9 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        (widen(xmin, xmax), widen(ymin, ymax))
    }

    fn project(&self, x: f64, y: f64) -> (f64, f64) {
        let ((x0, x1), (y0, y1)) = self.bounds();
        ((x - x0) / (x1 - x0) * PLOT_W, PLOT_H - (y - y0) / (y1 - y0) * PLOT_H)
    }

    fn segments(&self, k: usize) -> Vec<Vec<(f64, f64)>> {
        let mut out = vec![Vec::new()];
        for (x, y) in self.xs.iter().zip(&self.series[k].1) {
            match y {
                Some(y) => out.last_mut().expect("non-empty").push(self.project(*x, *y)),
                None => out.push(Vec::new()),
            }
        }
        out.retain(|s| !s.is_empty());
        out
    }

    pub fn to_svg(&self) -> String {
        let (ox, oy) = (60.0, 40.0);
        let ((x0, x1), (y0, y1)) = self.bounds();
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">"#,
            PLOT_W + ox + 140.0,
            PLOT_H + oy + 50.0
        );
        let _ = writeln!(s, r#"<text x="4" y="16" font-size="13">{}</text>"#, escape(self.title));
        let _ = writeln!(s, r#"<g transform="translate({ox},{oy})">"#);
        let _ = writeln!(s, r#"<rect width="{PLOT_W}" height="{PLOT_H}" fill="none" stroke="black"/>"#);
        let _ = writeln!(s, r#"<text x="0" y="{}">{x0:.2}</text>"#, PLOT_H + 14.0);
        let _ = writeln!(s, r#"<text x="{PLOT_W}" y="{}" text-anchor="end">{x1:.2}</text>"#, PLOT_H + 14.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, PLOT_W / 2.0, PLOT_H + 30.0, escape(self.x_label));
        let _ = writeln!(s, r#"<text x="-4" y="{PLOT_H}" text-anchor="end">{y0:.3}</text>"#);
        let _ = writeln!(s, r#"<text x="-4" y="10" text-anchor="end">{y1:.3}</text>"#);
        for (k, (name, _)) in self.series.iter().enumerate() {
            let color = hex(PALETTE[k % PALETTE.len()]);
            for seg in self.segments(k) {
                let pts: Vec<String> = seg.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, pts.join(" "));
                for (x, y) in &seg {
                    let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
                }
            }
            let ly = 14.0 + 16.0 * k as f64;
            let _ = writeln!(s, r#"<rect x="{}" y="{}" width="12" height="4" fill="{color}"/>"#, PLOT_W + 12.0, ly - 4.0);
            let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, PLOT_W + 30.0, escape(name));
        }
        s.push_str("</g>\n</svg>\n");
        s
    }

    pub fn to_image(&self) -> RgbImage {
        let pad = 10.0;
        let mut img = RgbImage::from_pixel((PLOT_W + 2.0 * pad) as u32, (PLOT_H + 2.0 * pad) as u32, Rgb([255, 255, 255]));
        let mut plot = |x: f64, y: f64, c: [u8; 3]| {
            let (px, py) = ((x + pad).round() as i64, (y + pad).round() as i64);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (qx, qy) = (px + dx, py + dy);
                    if qx >= 0 && qy >= 0 && (qx as u32) < img.width() && (qy as u32) < img.height() {
                        img.put_pixel(qx as u32, qy as u32, Rgb(c));
                    }
                }
            }
        };
        for (k, _) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            for seg in self.segments(k) {
                if seg.len() == 1 {
                    plot(seg[0].0, seg[0].1, color);
                }
                for w in seg.windows(2) {
                    let ((ax, ay), (bx, by)) = (w[0], w[1]);
                    let steps = ((bx - ax).abs().max((by - ay).abs()).ceil() as usize).max(1);
                    for i in 0..=steps {
                        let t = i as f64 / steps as f64;
                        plot(ax + t * (bx - ax), ay + t * (by - ay), color);
                    }
                }
            }
        }
        img
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_png(path: &Path, img: &RgbImage) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}
