//! Minimal SVG emission for line plots in world coordinates.

use std::fmt::Write;

/// Plot panel mapping world `(x, y)` to pixels, `y` up.
pub struct Panel {
    lo: (f64, f64),
    scale: (f64, f64),
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    body: String,
}

impl Panel {
    /// Panel `width` pixels wide at `(left, top)` over the world box
    /// `lo..hi`. With `equal` both axes share one scale; otherwise the panel
    /// is `0.6·width` high.
    pub fn new(
        lo: (f64, f64),
        hi: (f64, f64),
        width: f64,
        equal: bool,
        left: f64,
        top: f64,
    ) -> Self {
        let span_x = (hi.0 - lo.0).max(1e-9);
        let span_y = (hi.1 - lo.1).max(1e-9);
        let sx = width / span_x;
        let sy = if equal { sx } else { 0.6 * width / span_y };
        Self {
            lo,
            scale: (sx, sy),
            left,
            top,
            width,
            height: span_y * sy,
            body: String::new(),
        }
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.left + (x - self.lo.0) * self.scale.0,
            self.top + self.height - (y - self.lo.1) * self.scale.1,
        )
    }

    fn points(&self, pts: &[(f64, f64)]) -> String {
        pts.iter()
            .map(|&(x, y)| {
                let (u, v) = self.px(x, y);
                format!("{u:.2},{v:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, width: f64) {
        let pts = self.points(pts);
        let _ = writeln!(
            self.body,
            r#"<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#
        );
    }

    pub fn polygon(&mut self, pts: &[(f64, f64)], fill: &str, stroke: &str) {
        let pts = self.points(pts);
        let _ = writeln!(
            self.body,
            r#"<polygon points="{pts}" fill="{fill}" fill-opacity="0.35" stroke="{stroke}"/>"#
        );
    }

    pub fn dot(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        let (u, v) = self.px(x, y);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{u:.2}" cy="{v:.2}" r="{r}" fill="{fill}"/>"#
        );
    }

    /// Text at `(dx, dy)` pixels from the panel's top-left corner.
    pub fn label(&mut self, dx: f64, dy: f64, text: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
            self.left + dx,
            self.top + dy,
            escape(text)
        );
    }

    fn frame(&self) -> String {
        format!(
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#999"/>"##,
            self.left, self.top, self.width, self.height
        )
    }
}

/// Document made of framed panels.
pub struct Document {
    panels: Vec<Panel>,
}

impl Document {
    pub fn new() -> Self {
        Self { panels: Vec::new() }
    }

    pub fn push(&mut self, panel: Panel) {
        self.panels.push(panel);
    }

    pub fn render(&self) -> String {
        let w = self
            .panels
            .iter()
            .map(|p| p.left + p.width)
            .fold(0.0, f64::max)
            + 20.0;
        let h = self
            .panels
            .iter()
            .map(|p| p.top + p.height)
            .fold(0.0, f64::max)
            + 20.0;
        let mut out = format!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
        );
        out.push('\n');
        out.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
        out.push('\n');
        for p in &self.panels {
            out.push_str(&p.frame());
            out.push('\n');
            out.push_str(&p.body);
        }
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
