//! Minimal SVG charts for study and matrix output.

use std::fmt::Write as _;

use crate::network::FeasibilityMatrix;

const W: f64 = 720.0;
const H: f64 = 360.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 40.0;
const COLORS: [&str; 4] = ["#c0392b", "#2e6da4", "#27ae60", "#8e44ad"];

pub struct Series<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
    /// Optional (low, high) whisker per category.
    pub range: Option<&'a [(f64, f64)]>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    lo: f64,
    hi: f64,
}

impl Frame {
    fn new<'a>(vals: impl Iterator<Item = &'a f64>) -> Self {
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for v in vals.filter(|v| v.is_finite()) {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        if hi - lo < 1e-12 {
            hi = lo + 1.0;
        }
        let pad = 0.05 * (hi - lo);
        Self {
            lo: if lo < 0.0 { lo - pad } else { lo },
            hi: hi + pad,
        }
    }

    fn y(&self, v: f64) -> f64 {
        TOP + (H - TOP - BOTTOM) * (self.hi - v) / (self.hi - self.lo)
    }
}

fn header(s: &mut String, title: &str, y_label: &str, frame: &Frame) {
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>
<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>
"#,
        W / 2.0,
        escape(title),
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for i in 0..=4 {
        let v = frame.lo + (frame.hi - frame.lo) * i as f64 / 4.0;
        let y = frame.y(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">{v:.1}</text>"##,
            W - RIGHT,
            LEFT - 4.0,
            y + 4.0
        );
    }
}

fn legend(s: &mut String, series: &[Series]) {
    for (i, se) in series.iter().enumerate() {
        let x = LEFT + 10.0 + 140.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="28" width="10" height="10" fill="{}"/><text x="{}" y="37">{}</text>"#,
            COLORS[i % COLORS.len()],
            x + 14.0,
            escape(se.name)
        );
    }
}

/// Grouped bar chart with optional min–max whiskers.
pub fn bar_chart(title: &str, y_label: &str, categories: &[String], series: &[Series]) -> String {
    let frame = Frame::new(series.iter().flat_map(|se| {
        se.values
            .iter()
            .chain(se.range.into_iter().flatten().flat_map(|(a, b)| [a, b]))
    }));
    let mut s = String::new();
    header(&mut s, title, y_label, &frame);
    let n = categories.len().max(1) as f64;
    let group = (W - LEFT - RIGHT) / n;
    let bar = group * 0.8 / series.len().max(1) as f64;
    let zero = frame.y(0.0);
    for (ci, cat) in categories.iter().enumerate() {
        let gx = LEFT + group * ci as f64;
        for (si, se) in series.iter().enumerate() {
            let Some(&v) = se.values.get(ci) else { continue };
            let x = gx + group * 0.1 + bar * si as f64;
            let y = frame.y(v);
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{:.1}" width="{bar:.1}" height="{:.1}" fill="{}"/>"#,
                y.min(zero),
                (zero - y).abs(),
                COLORS[si % COLORS.len()]
            );
            if let Some(&(lo, hi)) = se.range.and_then(|r| r.get(ci)) {
                let cx = x + bar / 2.0;
                let _ = writeln!(
                    s,
                    r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#,
                    frame.y(lo),
                    frame.y(hi)
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            gx + group / 2.0,
            H - BOTTOM + 16.0,
            escape(cat)
        );
    }
    legend(&mut s, series);
    s.push_str("</svg>\n");
    s
}

/// Line chart with one point per category.
pub fn line_chart(title: &str, y_label: &str, categories: &[String], series: &[Series]) -> String {
    let frame = Frame::new(series.iter().flat_map(|se| se.values.iter()));
    let mut s = String::new();
    header(&mut s, title, y_label, &frame);
    let n = categories.len().max(1) as f64;
    let step = (W - LEFT - RIGHT) / n;
    let x = |i: usize| LEFT + step * (i as f64 + 0.5);
    for (si, se) in series.iter().enumerate() {
        let pts: Vec<String> = se
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{:.1},{:.1}", x(i), frame.y(*v)))
            .collect();
        let color = COLORS[si % COLORS.len()];
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        for p in &pts {
            let (px, py) = p.split_once(',').unwrap();
            let _ = writeln!(s, r#"<circle cx="{px}" cy="{py}" r="3" fill="{color}"/>"#);
        }
    }
    for (i, cat) in categories.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            x(i),
            H - BOTTOM + 16.0,
            escape(cat)
        );
    }
    legend(&mut s, series);
    s.push_str("</svg>\n");
    s
}

/// Heat grid of contract feasibility: rows are wind buses, columns storage
/// buses; green is feasible, red infeasible.
pub fn matrix_svg(m: &FeasibilityMatrix) -> String {
    let n = m.buses.len();
    let cell = 28.0;
    let off = 60.0;
    let size = off + cell * n as f64 + 20.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" font-family="sans-serif" font-size="11">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="16" text-anchor="middle">storage bus</text>
<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">wind bus</text>"#,
        off + cell * n as f64 / 2.0,
        off + cell * n as f64 / 2.0,
        off + cell * n as f64 / 2.0
    );
    for (i, b) in m.buses.iter().enumerate() {
        let c = off + cell * (i as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<text x="{c:.1}" y="{}" text-anchor="middle">{b}</text><text x="{}" y="{:.1}" text-anchor="end">{b}</text>"#,
            off - 8.0,
            off - 6.0,
            c + 4.0
        );
    }
    for (w, row) in m.entries.iter().enumerate() {
        for (st, e) in row.iter().enumerate() {
            let _ = writeln!(
                s,
                r##"<rect x="{:.1}" y="{:.1}" width="{cell}" height="{cell}" fill="{}" stroke="white"/>"##,
                off + cell * st as f64,
                off + cell * w as f64,
                if e.feasible { "#4caf50" } else { "#e53935" }
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
