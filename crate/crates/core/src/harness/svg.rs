//! Minimal dependency-free line plots.

use std::fmt::Write;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub dashed: bool,
}

/// Shaded region between two curves sharing x coordinates.
pub struct Band {
    pub x: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub color: &'static str,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub bands: Vec<Band>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let u = MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN);
        let v = HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN);
        (u, v)
    }
}

impl Plot {
    fn frame(&self) -> Frame {
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for s in &self.series {
            for &(x, y) in &s.points {
                xs.push(x);
                ys.push(y);
            }
        }
        for b in &self.bands {
            xs.extend(&b.x);
            ys.extend(&b.lower);
            ys.extend(&b.upper);
        }
        let range = |v: &[f64]| {
            let (lo, hi) = v
                .iter()
                .filter(|a| a.is_finite())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a)));
            if !lo.is_finite() {
                return (0.0, 1.0);
            }
            let pad = ((hi - lo) * 0.05).max(1e-9);
            (lo - pad, hi + pad)
        };
        let (x0, x1) = range(&xs);
        let (y0, y1) = range(&ys);
        Frame { x0, x1, y0, y1 }
    }

    pub fn render(&self) -> String {
        let f = self.frame();
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        );
        let _ = writeln!(out, r#"<text x="{}" y="30" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, self.title);
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 15.0, self.x_label);
        let _ = writeln!(
            out,
            r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            self.y_label
        );
        for (val, anchor) in [(f.x0, MARGIN), (f.x1, WIDTH - MARGIN)] {
            let _ = writeln!(out, r#"<text x="{anchor}" y="{}" text-anchor="middle">{val:.2}</text>"#, HEIGHT - MARGIN + 15.0);
        }
        for (val, anchor) in [(f.y0, HEIGHT - MARGIN), (f.y1, MARGIN)] {
            let _ = writeln!(out, r#"<text x="{}" y="{anchor}" text-anchor="end">{val:.2}</text>"#, MARGIN - 5.0);
        }

        for b in &self.bands {
            let mut pts = String::new();
            let fwd = b.x.iter().zip(&b.upper);
            let back = b.x.iter().zip(&b.lower).rev();
            for (x, y) in fwd.chain(back) {
                if x.is_finite() && y.is_finite() {
                    let (u, v) = f.map(*x, *y);
                    let _ = write!(pts, "{u:.2},{v:.2} ");
                }
            }
            let _ = writeln!(
                out,
                r#"<polygon points="{}" fill="{}" fill-opacity="0.25" stroke="none"/>"#,
                pts.trim_end(),
                b.color
            );
        }
        for (k, s) in self.series.iter().enumerate() {
            let mut pts = String::new();
            for &(x, y) in &s.points {
                if x.is_finite() && y.is_finite() {
                    let (u, v) = f.map(x, y);
                    let _ = write!(pts, "{u:.2},{v:.2} ");
                }
            }
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                pts.trim_end(),
                s.color
            );
            let ly = MARGIN + 15.0 + 15.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{ly}" fill="{}">{}</text>"#,
                WIDTH - MARGIN - 150.0,
                s.color,
                s.label
            );
        }
        out.push_str("</svg>\n");
        out
    }
}
