//! Self-contained SVG line charts; no external assets or scripts.
//!
//! One polyline per series, a legend, labelled axes with five ticks each.
//! Output is a pure function of the input, so identical data yields
//! byte-identical files. Coordinates are printed at fixed precision and
//! computed directly from the series values; a chart regenerated from a
//! CSV round-trip of the same aggregates is byte-identical too.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 48.0;
const MARGIN_BOTTOM: f64 = 56.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// One labelled line.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn fmt_coord(v: f64) -> String {
    format!("{v:.2}")
}

/// Tick label: up to six fractional digits, trailing zeros trimmed.
fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders a line chart. Needs at least one series with at least one point.
///
/// A degenerate value range (e.g. an all-zero curve) is drawn along the
/// chart baseline.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    assert!(
        series.iter().any(|s| !s.points.is_empty()),
        "line_chart needs at least one non-empty series"
    );
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let y_span = if y_max > y_min { y_max - y_min } else { 1.0 };
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - x_min) / x_span * plot_w;
    let py = |y: f64| HEIGHT - MARGIN_BOTTOM - (y - y_min) / y_span * plot_h;

    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg version="1.1" xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = write!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = write!(
        svg,
        r#"<text x="{}" y="28" text-anchor="middle" font-family="sans-serif" font-size="18">{}</text>"#,
        fmt_coord(WIDTH / 2.0),
        escape(title)
    );

    // axes
    let x0 = fmt_coord(MARGIN_LEFT);
    let y0 = fmt_coord(HEIGHT - MARGIN_BOTTOM);
    let x1 = fmt_coord(WIDTH - MARGIN_RIGHT);
    let y1 = fmt_coord(MARGIN_TOP);
    let _ = write!(
        svg,
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#
    );

    // ticks and grid
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x_min + f * x_span;
        let yv = y_min + f * y_span;
        let xp = fmt_coord(px(xv));
        let yp = fmt_coord(py(yv));
        let _ = write!(
            svg,
            r#"<line x1="{xp}" y1="{y0}" x2="{xp}" y2="{}" stroke="black"/>"#,
            fmt_coord(HEIGHT - MARGIN_BOTTOM + 5.0)
        );
        let _ = write!(
            svg,
            r#"<text x="{xp}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
            fmt_coord(HEIGHT - MARGIN_BOTTOM + 20.0),
            fmt_tick(xv)
        );
        let _ = write!(
            svg,
            r#"<line x1="{}" y1="{yp}" x2="{x0}" y2="{yp}" stroke="black"/>"#,
            fmt_coord(MARGIN_LEFT - 5.0)
        );
        let _ = write!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="12">{}</text>"#,
            fmt_coord(MARGIN_LEFT - 9.0),
            fmt_coord(py(yv) + 4.0),
            fmt_tick(yv)
        );
    }

    // axis labels
    let _ = write!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        fmt_coord(MARGIN_LEFT + plot_w / 2.0),
        fmt_coord(HEIGHT - 12.0),
        escape(x_label)
    );
    let _ = write!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14" transform="rotate(-90 18 {})">{}</text>"#,
        fmt_coord(MARGIN_TOP + plot_h / 2.0),
        fmt_coord(MARGIN_TOP + plot_h / 2.0),
        escape(y_label)
    );

    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut points = String::new();
        for &(x, y) in &s.points {
            let _ = write!(points, "{},{} ", fmt_coord(px(x)), fmt_coord(py(y)));
        }
        let _ = write!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.trim_end()
        );
        if s.points.len() <= 32 {
            for &(x, y) in &s.points {
                let _ = write!(
                    svg,
                    r#"<circle cx="{}" cy="{}" r="3" fill="{color}"/>"#,
                    fmt_coord(px(x)),
                    fmt_coord(py(y))
                );
            }
        }
        // legend entry
        let ly = MARGIN_TOP + 8.0 + 18.0 * idx as f64;
        let _ = write!(
            svg,
            r#"<rect x="{}" y="{}" width="12" height="12" fill="{color}"/>"#,
            fmt_coord(MARGIN_LEFT + 10.0),
            fmt_coord(ly)
        );
        let _ = write!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            fmt_coord(MARGIN_LEFT + 27.0),
            fmt_coord(ly + 10.0),
            escape(&s.label)
        );
    }
    svg.push_str("</svg>");
    svg
}

/// Renders and writes in one step.
pub fn write_svg(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) -> io::Result<()> {
    std::fs::write(path, line_chart(title, x_label, y_label, series))
}
