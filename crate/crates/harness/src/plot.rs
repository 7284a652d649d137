//! Query-distortion curves as a standalone SVG (log-scaled query axis).

use std::fmt::Write as _;
use std::path::Path;

use crate::{io_err, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series<'a> {
    pub label: &'a str,
    pub points: &'a [(usize, f64)],
}

/// Renders the series; points with infinite values or zero budgets are
/// skipped.
pub fn render_svg(series: &[Series<'_>], y_label: &str) -> String {
    let finite = |&&(q, v): &&(usize, f64)| q > 0 && v.is_finite();
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().filter(finite).map(|&(q, v)| ((q as f64).log10(), v)))
        .collect();
    let (x0, x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let y1 = pts.iter().fold(0.0f64, |m, p| m.max(p.1));
    let (x0, x1) = if x0 < x1 { (x0, x1) } else { (0.0, 3.0) };
    let y1 = if y1 > 0.0 { y1 * 1.05 } else { 1.0 };
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - y / y1 * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (left, bottom, right, top) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{left},{top} V{bottom} H{right}" stroke="black" fill="none"/>"#
    );
    for decade in (x0.floor() as i32)..=(x1.ceil() as i32) {
        let x = decade as f64;
        if x < x0 || x > x1 {
            continue;
        }
        let px = sx(x);
        let _ = writeln!(svg, r#"<line x1="{px:.1}" y1="{bottom}" x2="{px:.1}" y2="{:.1}" stroke="black"/>"#, bottom + 5.0);
        let _ = writeln!(svg, r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">1e{decade}</text>"#, bottom + 20.0);
    }
    for k in 0..=4 {
        let y = y1 * k as f64 / 4.0;
        let py = sy(y);
        let _ = writeln!(svg, r#"<line x1="{:.1}" y1="{py:.1}" x2="{left}" y2="{py:.1}" stroke="black"/>"#, left - 5.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{y:.3}</text>"#, left - 8.0, py + 4.0);
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">queries</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{:.1}" text-anchor="middle" transform="rotate(-90 15 {:.1})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );

    for (k, s) in series.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(finite)
            .enumerate()
            .map(|(i, &(q, v))| format!("{}{:.1},{:.1}", if i == 0 { 'M' } else { 'L' }, sx((q as f64).log10()), sy(v)))
            .collect();
        if !path.is_empty() {
            let _ = writeln!(svg, r#"<path d="{}" stroke="{colour}" stroke-width="2" fill="none"/>"#, path.join(" "));
        }
        let ly = top + 16.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{ly:.1}" fill="{colour}" text-anchor="end">{}</text>"#,
            right,
            escape(s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write_svg(path: impl AsRef<Path>, series: &[Series<'_>], y_label: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_svg(series, y_label)).map_err(io_err(path))
}
