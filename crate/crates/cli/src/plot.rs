//! Minimal static SVG charts.

use std::fmt::Write as _;

use mortstat::survival::SurvivalCurve;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 56.0;
const COLOURS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let widen = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = widen(x0, x1);
        let (y0, y1) = widen(y0, y1);
        Frame { x0, x1, y0, y1 }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        H - MARGIN - (v - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(s: &mut String, title: &str, xlabel: &str, ylabel: &str, f: &Frame) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let (l, r, b, t) = (MARGIN, W - MARGIN, H - MARGIN, MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let fx = f.x0 + (f.x1 - f.x0) * i as f64 / 4.0;
        let fy = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            f.x(fx),
            b + 16.0,
            tick(fx)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            l - 6.0,
            f.y(fy) + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 14.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Scatter of (total, incorrect) with the fitted least-squares line.
pub fn scatter(title: &str, points: &[(String, f64, f64)], line: Option<(f64, f64)>) -> String {
    let max_x = points.iter().map(|p| p.1).fold(0.0, f64::max);
    let max_y = points.iter().map(|p| p.2).fold(0.0, f64::max);
    let f = Frame::new(0.0, max_x * 1.05, 0.0, max_y * 1.05);
    let mut s = String::new();
    open(&mut s, title, "total articles", "incorrectly phrased articles", &f);
    if let Some((slope, intercept)) = line {
        let (a, b) = (f.x0, f.x1);
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-dasharray="4 3"/>"#,
            f.x(a),
            f.y(intercept + slope * a),
            f.x(b),
            f.y(intercept + slope * b),
            COLOURS[1]
        );
    }
    for (name, x, y) in points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{}"><title>{}</title></circle>"#,
            f.x(*x),
            f.y(*y),
            COLOURS[0],
            escape(name)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#,
            f.x(*x) + 6.0,
            f.y(*y) - 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Step plot of one or more survival curves with a ±1 std band.
pub fn survival(title: &str, curves: &[(String, &SurvivalCurve)]) -> String {
    let t_max = curves
        .iter()
        .filter_map(|(_, c)| c.steps.last().map(|s| s.time))
        .fold(0.0, f64::max);
    let t_end = if t_max > 0.0 { t_max * 1.05 } else { 1.0 };
    let f = Frame::new(0.0, t_end, 0.0, 1.0);
    let mut s = String::new();
    open(&mut s, title, "time", "survival probability", &f);
    for (k, (label, curve)) in curves.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        // piecewise-constant segments (start, end, estimate, sd)
        let mut segs = Vec::new();
        let (mut t, mut est, mut sd) = (0.0, 1.0, 0.0);
        for step in &curve.steps {
            segs.push((t, step.time, est, sd));
            t = step.time;
            est = step.estimate;
            sd = step.variance.max(0.0).sqrt();
        }
        segs.push((t, t_end, est, sd));

        let mut upper = String::new();
        let mut lower = Vec::new();
        for &(a, b, e, d) in &segs {
            let hi = (e + d).min(1.0);
            let lo = (e - d).max(0.0);
            let _ = write!(upper, "{:.1},{:.1} {:.1},{:.1} ", f.x(a), f.y(hi), f.x(b), f.y(hi));
            lower.push(format!("{:.1},{:.1} {:.1},{:.1}", f.x(b), f.y(lo), f.x(a), f.y(lo)));
        }
        lower.reverse();
        let _ = writeln!(
            s,
            r#"<polygon points="{}{}" fill="{colour}" fill-opacity="0.15" stroke="none"/>"#,
            upper,
            lower.join(" ")
        );
        let mut path = String::new();
        for (i, &(a, b, e, _)) in segs.iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            let _ = write!(path, "{cmd}{:.1} {:.1} L{:.1} {:.1} ", f.x(a), f.y(e), f.x(b), f.y(e));
        }
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            path.trim_end()
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{colour}">{}</text>"#,
            W - MARGIN - 120.0,
            MARGIN + 16.0 * (k as f64 + 1.0),
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}
