//! Minimal self-contained SVG plots.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

/// A plot with linear axes over `[x0, x1] × [y0, y1]`.
pub struct Plot {
    x: (f64, f64),
    y: (f64, f64),
    body: String,
    title: String,
    x_label: String,
    y_label: String,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn num(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    format!("{r}")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

/// Roughly five round tick positions in `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let mut out = Vec::new();
    let mut t = (lo / step).ceil() * step;
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        let d = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - d, hi + d)
    }
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        Self {
            x: padded(x.0, x.1),
            y: padded(y.0, y.1),
            body: String::new(),
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
        }
    }

    pub fn sx(&self, v: f64) -> f64 {
        LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    pub fn sy(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    /// Filled rectangle between data corners.
    pub fn rect(&mut self, x0: f64, x1: f64, y0: f64, y1: f64, fill: &str) {
        let (a, b) = (self.sx(x0), self.sx(x1));
        let (c, d) = (self.sy(y1), self.sy(y0));
        writeln!(
            self.body,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
            num(a.min(b)),
            num(c.min(d)),
            num((b - a).abs().max(0.01)),
            num((d - c).abs().max(0.01))
        )
        .unwrap();
    }

    pub fn hline(&mut self, y: f64, stroke: &str, label: &str) {
        let py = self.sy(y);
        writeln!(
            self.body,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{stroke}" stroke-dasharray="6 4"/>"#,
            num(LEFT),
            num(py),
            num(WIDTH - RIGHT),
            num(py)
        )
        .unwrap();
        if !label.is_empty() {
            writeln!(
                self.body,
                r#"<text x="{}" y="{}" font-size="12" fill="{stroke}" text-anchor="end">{}</text>"#,
                num(WIDTH - RIGHT - 4.0),
                num(py - 4.0),
                esc(label)
            )
            .unwrap();
        }
    }

    /// Points with vertical error bars of half-width `err`.
    pub fn error_bars(&mut self, pts: &[(f64, f64, f64)], color: &str) {
        for &(x, y, err) in pts {
            if !(x.is_finite() && y.is_finite()) {
                continue;
            }
            let px = self.sx(x);
            if err.is_finite() && err > 0.0 {
                writeln!(
                    self.body,
                    r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="{color}" stroke-opacity="0.5"/>"#,
                    num(px),
                    num(self.sy(y - err)),
                    num(self.sy(y + err))
                )
                .unwrap();
            }
            writeln!(
                self.body,
                r#"<circle cx="{}" cy="{}" r="1.8" fill="{color}"/>"#,
                num(px),
                num(self.sy(y))
            )
            .unwrap();
        }
    }

    pub fn note(&mut self, text: &str) {
        writeln!(
            self.body,
            r##"<text x="{}" y="{}" font-size="14" fill="#666" text-anchor="middle">{}</text>"##,
            num((LEFT + WIDTH - RIGHT) / 2.0),
            num((TOP + HEIGHT - BOTTOM) / 2.0),
            esc(text)
        )
        .unwrap();
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
        )
        .unwrap();
        writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="24" font-size="15" text-anchor="middle">{}</text>"#,
            num(WIDTH / 2.0),
            esc(&self.title)
        )
        .unwrap();
        s.push_str(&self.body);
        // frame
        writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            num(LEFT),
            num(TOP),
            num(WIDTH - LEFT - RIGHT),
            num(HEIGHT - TOP - BOTTOM)
        )
        .unwrap();
        for t in ticks(self.x.0, self.x.1) {
            let px = num(self.sx(t));
            let base = HEIGHT - BOTTOM;
            writeln!(
                s,
                r#"<line x1="{px}" y1="{}" x2="{px}" y2="{}" stroke="black"/><text x="{px}" y="{}" font-size="11" text-anchor="middle">{}</text>"#,
                num(base),
                num(base + 5.0),
                num(base + 18.0),
                tick_label(t)
            )
            .unwrap();
        }
        for t in ticks(self.y.0, self.y.1) {
            let py = num(self.sy(t));
            writeln!(
                s,
                r#"<line x1="{}" y1="{py}" x2="{}" y2="{py}" stroke="black"/><text x="{}" y="{py}" font-size="11" text-anchor="end" dominant-baseline="middle">{}</text>"#,
                num(LEFT - 5.0),
                num(LEFT),
                num(LEFT - 8.0),
                tick_label(t)
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">{}</text>"#,
            num((LEFT + WIDTH - RIGHT) / 2.0),
            num(HEIGHT - 12.0),
            esc(&self.x_label)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="16" y="{0}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            num((TOP + HEIGHT - BOTTOM) / 2.0),
            esc(&self.y_label)
        )
        .unwrap();
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round_and_inside() {
        let t = ticks(1.0, 1.6);
        assert!(t.len() >= 3 && t.len() <= 7, "{t:?}");
        assert!(t.iter().all(|&v| (1.0..=1.6 + 1e-12).contains(&v)));
        assert_eq!(ticks(-3.0, -3.0), vec![-3.0]);
    }

    #[test]
    fn degenerate_range_renders() {
        let mut p = Plot::new("t", "x", "y", (0.5, 0.5), (f64::NAN, 1.0));
        p.note("empty");
        let s = p.render();
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(!s.contains("NaN"));
    }
}
