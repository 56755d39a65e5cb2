//! Static SVG charts: scatter/line plots and grouped bar charts.
//!
//! Axis ranges always cover every plotted value (plus a small margin), so
//! no mark is clipped.

use std::fmt::Write as _;

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// A labelled set of `(x, y)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points }
    }
}

/// Plot rectangle in pixels: `(x0, y0, x1, y1)` with `y0` at the top.
pub fn plot_area() -> (f64, f64, f64, f64) {
    (LEFT, TOP, WIDTH - RIGHT, HEIGHT - BOTTOM)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.to_string() }
    }
}

/// Data range padded by 5% on each side; degenerate ranges are widened.
fn padded(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        let w = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        return (lo - w, hi + w);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let (x0, _, x1, _) = plot_area();
        x0 + (x - self.x.0) / (self.x.1 - self.x.0) * (x1 - x0)
    }

    fn py(&self, y: f64) -> f64 {
        let (_, y0, _, y1) = plot_area();
        y1 - (y - self.y.0) / (self.y.1 - self.y.0) * (y1 - y0)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, frame: Option<&Frame>, xlabel: &str, ylabel: &str) {
    let (x0, y0, x1, y1) = plot_area();
    let _ = writeln!(out, r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y1 - y0);
    if let Some(f) = frame {
        for i in 0..=TICKS {
            let t = i as f64 / TICKS as f64;
            let xv = f.x.0 + t * (f.x.1 - f.x.0);
            let yv = f.y.0 + t * (f.y.1 - f.y.0);
            let (px, py) = (f.px(xv), f.py(yv));
            let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{y1}" x2="{px:.2}" y2="{}" stroke="black"/>"#, y1 + 5.0);
            let _ = writeln!(out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, y1 + 18.0, fmt_num(xv));
            let _ = writeln!(out, r#"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0);
            let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, py + 4.0, fmt_num(yv));
        }
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 15.0, escape(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn no_data(out: &mut String) {
    let (x0, y0, x1, y1) = plot_area();
    let _ = writeln!(
        out,
        r#"<text class="no-data" x="{}" y="{}" text-anchor="middle" font-size="16" fill="gray">no data</text>"#,
        (x0 + x1) / 2.0,
        (y0 + y1) / 2.0
    );
}

fn legend(out: &mut String, labels: &[&str]) {
    let (_, y0, x1, _) = plot_area();
    for (i, label) in labels.iter().enumerate() {
        let y = y0 + 10.0 + 20.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(out, r#"<rect x="{}" y="{}" width="12" height="12" fill="{color}"/>"#, x1 + 12.0, y - 6.0);
        let _ = writeln!(out, r#"<text class="legend" x="{}" y="{}">{}</text>"#, x1 + 30.0, y + 4.0, escape(label));
    }
}

/// Scatter (markers only) or line chart of one or more series.
pub fn xy_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series], lines: bool) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let all = || series.iter().flat_map(|s| s.points.iter().copied()).filter(|(x, y)| x.is_finite() && y.is_finite());
    if all().next().is_none() {
        axes(&mut out, None, xlabel, ylabel);
        no_data(&mut out);
        out.push_str("</svg>\n");
        return out;
    }
    let frame = Frame { x: padded(all().map(|p| p.0)), y: padded(all().map(|p| p.1)) };
    axes(&mut out, Some(&frame), xlabel, ylabel);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
        if lines && pts.len() > 1 {
            let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y))).collect();
            let _ = writeln!(
                out,
                r#"<polyline class="series" data-label="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                escape(&s.label),
                coords.join(" ")
            );
        }
        for &(x, y) in &pts {
            let _ = writeln!(
                out,
                r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                frame.px(x),
                frame.py(y)
            );
        }
    }
    let labels: Vec<&str> = series.iter().map(|s| s.label.as_str()).collect();
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

/// Grouped bars: one group per category, one bar per variant.
pub fn bar_chart(title: &str, ylabel: &str, categories: &[String], variants: &[String], value: impl Fn(usize, usize) -> Option<f64>) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let values: Vec<f64> = (0..categories.len())
        .flat_map(|c| (0..variants.len()).map(move |v| (c, v)))
        .filter_map(|(c, v)| value(c, v))
        .filter(|v| v.is_finite())
        .collect();
    if values.is_empty() {
        axes(&mut out, None, "", ylabel);
        no_data(&mut out);
        out.push_str("</svg>\n");
        return out;
    }
    // bars start at zero, so the range always includes it
    let lo = values.iter().copied().fold(0.0, f64::min);
    let hi = values.iter().copied().fold(0.0, f64::max);
    let (lo, hi) = padded([lo, hi].into_iter());
    let frame = Frame { x: (0.0, categories.len() as f64), y: (lo.min(0.0), hi) };
    let (x0, _, x1, y1) = plot_area();
    let _ = writeln!(out, r#"<rect x="{x0}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#, TOP, x1 - x0, y1 - TOP);
    for i in 0..=TICKS {
        let yv = frame.y.0 + i as f64 / TICKS as f64 * (frame.y.1 - frame.y.0);
        let py = frame.py(yv);
        let _ = writeln!(out, r#"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, py + 4.0, fmt_num(yv));
    }
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        (TOP + y1) / 2.0,
        escape(ylabel)
    );
    let group_w = (x1 - x0) / categories.len() as f64;
    let bar_w = 0.8 * group_w / variants.len().max(1) as f64;
    let zero = frame.py(0.0);
    for (c, cat) in categories.iter().enumerate() {
        let gx = x0 + c as f64 * group_w;
        let _ = writeln!(out, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, gx + group_w / 2.0, y1 + 18.0, escape(cat));
        for v in 0..variants.len() {
            let Some(val) = value(c, v).filter(|x| x.is_finite()) else { continue };
            let top = frame.py(val);
            let (y, h) = if top < zero { (top, zero - top) } else { (zero, top - zero) };
            let _ = writeln!(
                out,
                r#"<rect class="bar" data-value="{val}" x="{:.2}" y="{y:.2}" width="{bar_w:.2}" height="{h:.2}" fill="{}"/>"#,
                gx + 0.1 * group_w + v as f64 * bar_w,
                PALETTE[v % PALETTE.len()]
            );
        }
    }
    let labels: Vec<&str> = variants.iter().map(String::as_str).collect();
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}
