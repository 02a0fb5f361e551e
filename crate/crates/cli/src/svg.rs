//! A small deterministic SVG writer.
//!
//! Every figure uses an 800 × 600 canvas with a 40 px margin. Data
//! coordinates are mapped affinely onto the inner box with `y` pointing up,
//! and every number is printed with three decimals so that output bytes do
//! not depend on anything but the data.

use std::fmt::Write;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
pub const MARGIN: f64 = 40.0;

/// Colors by depth, cycled: depth 1 is the first entry.
pub const DEPTH_COLORS: &[&str] = &["#1b1b1b", "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

pub const OUTLINE: &str = "#444444";
pub const CURVE: &str = "#1f77b4";
pub const HIGHLIGHT: &str = "#d62728";
pub const FILL: &str = "#9ecae1";
pub const FIELD: &str = "#7f7f7f";

pub fn depth_color(depth: usize) -> &'static str {
    DEPTH_COLORS[depth.saturating_sub(1) % DEPTH_COLORS.len()]
}

pub struct Svg {
    x: (f64, f64),
    y: (f64, f64),
    sx: f64,
    sy: f64,
    body: String,
}

impl Svg {
    /// A canvas showing `[x0, x1] × [y0, y1]`. With `equal` both axes share
    /// one scale and the box is centered.
    pub fn new(x: (f64, f64), y: (f64, f64), equal: bool) -> Self {
        let (w, h) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
        let dx = (x.1 - x.0).max(1e-300);
        let dy = (y.1 - y.0).max(1e-300);
        let (mut sx, mut sy) = (w / dx, h / dy);
        let (mut x, mut y) = (x, y);
        if equal {
            let s = sx.min(sy);
            let (cx, cy) = ((x.0 + x.1) / 2.0, (y.0 + y.1) / 2.0);
            x = (cx - w / s / 2.0, cx + w / s / 2.0);
            y = (cy - h / s / 2.0, cy + h / s / 2.0);
            sx = s;
            sy = s;
        }
        Svg { x, y, sx, sy, body: String::new() }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (MARGIN + (x - self.x.0) * self.sx, HEIGHT - MARGIN - (y - self.y.0) * self.sy)
    }

    fn points(&self, pts: &[(f64, f64)]) -> String {
        let mut s = String::new();
        for (i, &(x, y)) in pts.iter().enumerate() {
            let (u, v) = self.px(x, y);
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{u:.3},{v:.3}");
        }
        s
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, width: f64) {
        let p = self.points(pts);
        let _ = writeln!(
            self.body,
            r#"<polyline points="{p}" fill="none" stroke="{stroke}" stroke-width="{width:.3}" stroke-linejoin="round"/>"#
        );
    }

    pub fn polygon(&mut self, pts: &[(f64, f64)], fill: &str, opacity: f64, stroke: &str, width: f64) {
        let p = self.points(pts);
        let _ = writeln!(
            self.body,
            r#"<polygon points="{p}" fill="{fill}" fill-opacity="{opacity:.3}" stroke="{stroke}" stroke-width="{width:.3}"/>"#
        );
    }

    pub fn line(&mut self, a: (f64, f64), b: (f64, f64), stroke: &str, width: f64) {
        let (x1, y1) = self.px(a.0, a.1);
        let (x2, y2) = self.px(b.0, b.1);
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="{stroke}" stroke-width="{width:.3}"/>"#
        );
    }

    /// A segment through `at` in direction `dir`, `len` pixels long.
    pub fn tick(&mut self, at: (f64, f64), dir: (f64, f64), len: f64, stroke: &str) {
        let (u, v) = self.px(at.0, at.1);
        let (a, b) = (dir.0 * self.sx, -dir.1 * self.sy);
        let n = (a * a + b * b).sqrt().max(1e-300);
        let (a, b) = (a / n * len / 2.0, b / n * len / 2.0);
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{stroke}" stroke-width="1.000"/>"#,
            u - a,
            v - b,
            u + a,
            v + b
        );
    }

    pub fn dot(&mut self, at: (f64, f64), r: f64, fill: &str) {
        let (u, v) = self.px(at.0, at.1);
        let _ = writeln!(self.body, r#"<circle cx="{u:.3}" cy="{v:.3}" r="{r:.3}" fill="{fill}"/>"#);
    }

    /// Axis-aligned rectangle given by data corners.
    pub fn rect(&mut self, lo: (f64, f64), hi: (f64, f64), fill: &str) {
        let (x1, y1) = self.px(lo.0, hi.1);
        let (x2, y2) = self.px(hi.0, lo.1);
        let _ = writeln!(
            self.body,
            r#"<rect x="{x1:.3}" y="{y1:.3}" width="{:.3}" height="{:.3}" fill="{fill}"/>"#,
            x2 - x1,
            y2 - y1
        );
    }

    pub fn text(&mut self, at: (f64, f64), size: f64, content: &str) {
        let (u, v) = self.px(at.0, at.1);
        let escaped = content.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let _ = writeln!(
            self.body,
            r#"<text x="{u:.3}" y="{v:.3}" font-family="sans-serif" font-size="{size:.1}">{escaped}</text>"#
        );
    }

    /// Text at a pixel position, ignoring the data transform.
    pub fn caption(&mut self, content: &str) {
        let escaped = content.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let _ = writeln!(
            self.body,
            r#"<text x="{MARGIN:.3}" y="{:.3}" font-family="sans-serif" font-size="14.0">{escaped}</text>"#,
            MARGIN / 2.0 + 5.0
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners_map_to_margins() {
        let s = Svg::new((0.0, 1.0), (0.0, 1.0), false);
        assert_eq!(s.px(0.0, 0.0), (MARGIN, HEIGHT - MARGIN));
        assert_eq!(s.px(1.0, 1.0), (WIDTH - MARGIN, MARGIN));
    }

    #[test]
    fn equal_aspect_centers_the_box() {
        let s = Svg::new((0.0, 1.0), (0.0, 1.0), true);
        let (a, b) = s.px(0.5, 0.5);
        assert!((a - WIDTH / 2.0).abs() < 1e-9 && (b - HEIGHT / 2.0).abs() < 1e-9);
    }

    #[test]
    fn text_is_escaped() {
        let mut s = Svg::new((0.0, 1.0), (0.0, 1.0), false);
        s.text((0.0, 0.0), 10.0, "a<b & c");
        assert!(s.finish().contains("a&lt;b &amp; c"));
    }
}
