//! Hand-written SVG for the eigenvalue locus.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn span(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi + 0.05 * (hi - lo))
    } else {
        (lo - 1.0, lo + 1.0)
    }
}

/// `points` are `(Re λ, Im λ)` along the unstable branch in sweep order; the
/// origin is prepended as the `μ → 0` end. `slope` is the predicted
/// `dIm/dRe`, drawn dashed through the origin when finite.
pub fn locus(title: &str, points: &[(f64, f64)], slope: f64) -> String {
    let mut pts = vec![(0.0, 0.0)];
    pts.extend(points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()));
    let (xmin, xmax) = pts.iter().fold((0.0f64, 0.0f64), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (ymin, ymax) = pts.iter().fold((0.0f64, 0.0f64), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (x0, x1) = span(xmin, xmax);
    let (y0, y1) = span(ymin, ymax);
    let f = Frame { x0, x1, y0, y1 };

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = x0 + t * (x1 - x0);
        let yv = y0 + t * (y1 - y0);
        let (xp, yp) = (f.px(xv), f.py(yv));
        let _ = writeln!(s, r#"<line x1="{xp:.2}" y1="{:.2}" x2="{xp:.2}" y2="{:.2}" stroke="black"/>"#, H - BOTTOM, H - BOTTOM + 5.0);
        let _ = writeln!(s, r#"<text x="{xp:.2}" y="{:.2}" text-anchor="middle">{xv:.2e}</text>"#, H - BOTTOM + 18.0);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{yp:.2}" x2="{LEFT}" y2="{yp:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.2e}</text>"#, LEFT - 8.0, yp + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">Re λ</text>"#, LEFT + (W - LEFT - RIGHT) / 2.0, H - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">Im λ</text>"#,
        TOP + (H - TOP - BOTTOM) / 2.0
    );

    if slope.is_finite() && slope != 0.0 {
        // Clip y = slope·x to the frame.
        let mut xe = x1;
        let mut ye = slope * xe;
        if ye > y1 || ye < y0 {
            ye = if ye > y1 { y1 } else { y0 };
            xe = ye / slope;
        }
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6 4"/>"#,
            f.px(0.0),
            f.py(0.0),
            f.px(xe),
            f.py(ye)
        );
    }
    let poly: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, poly.join(" "));
    for &(x, y) in &pts[1..] {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, f.px(x), f.py(y));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" fill="steelblue">computed branch</text>"#, LEFT + 10.0, TOP + 16.0);
    if slope.is_finite() {
        let _ = writeln!(s, r#"<text x="{}" y="{}" fill="gray">slope √2/ε = {slope:.4}</text>"#, LEFT + 10.0, TOP + 32.0);
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_formed_enough() {
        let s = locus("ε = 0.05", &[(1e-5, 2.5e-4), (2e-5, 5e-4)], 28.28);
        assert!(s.starts_with("<svg"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<circle").count(), 2);
        assert!(s.contains("stroke-dasharray"));
        assert!(s.contains("Re λ") && s.contains("Im λ"));
    }

    #[test]
    fn empty_and_flat() {
        let s = locus("flat", &[], f64::INFINITY);
        assert!(!s.contains("stroke-dasharray"));
        assert!(!s.contains("NaN"));
    }
}
