//! Minimal deterministic SVG charts: stacked panels of lines, dots and
//! vertical markers on "nice" axes. Output depends only on the data.

use std::fmt::Write as _;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const WIDTH: f64 = 820.0;
const PANEL_HEIGHT: f64 = 260.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Line,
    Dashed,
    Dots,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub mark: Mark,
}

impl Series {
    pub fn line(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
            mark: Mark::Line,
        }
    }

    pub fn dashed(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
            mark: Mark::Dashed,
        }
    }

    pub fn dots(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
            mark: Mark::Dots,
        }
    }

    /// `(index, value)` points.
    pub fn indexed(name: impl Into<String>, values: &[f64]) -> Self {
        Self::line(
            name,
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| (i as f64, v))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Vertical markers at an x position.
    pub markers: Vec<(f64, String)>,
}

impl Panel {
    pub fn new(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
    ) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Self::default()
        }
    }

    pub fn with(mut self, series: Series) -> Self {
        self.series.push(series);
        self
    }

    pub fn marker(mut self, x: f64, label: impl Into<String>) -> Self {
        self.markers.push((x, label.into()));
        self
    }
}

/// Tick step from {1, 2, 5} x 10^k giving about `target` intervals.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let m = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

/// Axis bounds snapped outwards to the tick grid, and the tick step.
fn nice_range(lo: f64, hi: f64) -> (f64, f64, f64) {
    let (lo, hi) = if (hi - lo).abs() < 1e-12 * lo.abs().max(1.0) {
        (lo - 0.5 * lo.abs().max(1.0), hi + 0.5 * hi.abs().max(1.0))
    } else {
        (lo, hi)
    };
    let step = nice_step(hi - lo, 5.0);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

fn tick_label(v: f64, step: f64) -> String {
    let digits = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    let s = format!("{v:.digits$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn bounds(panel: &Panel) -> Option<((f64, f64), (f64, f64))> {
    let mut out: Option<((f64, f64), (f64, f64))> = None;
    for &(x, y) in panel.series.iter().flat_map(|s| s.points.iter()) {
        if !(x.is_finite() && y.is_finite()) {
            continue;
        }
        out = Some(match out {
            None => ((x, x), (y, y)),
            Some(((xl, xh), (yl, yh))) => ((xl.min(x), xh.max(x)), (yl.min(y), yh.max(y))),
        });
    }
    out
}

fn render_panel(out: &mut String, panel: &Panel, top: f64) {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let y0 = top + MARGIN_TOP;
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        top + 18.0,
        escape(&panel.title)
    );
    let Some(((xl, xh), (yl, yh))) = bounds(panel) else {
        return;
    };
    let (xl, xh, xs) = nice_range(xl, xh);
    let (yl, yh, ys) = nice_range(yl, yh);
    let px = |x: f64| MARGIN_LEFT + (x - xl) / (xh - xl) * plot_w;
    let py = |y: f64| y0 + plot_h - (y - yl) / (yh - yl) * plot_h;
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN_LEFT:.2}" y="{y0:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#444"/>"##
    );
    let n_x = ((xh - xl) / xs).round() as i64;
    for i in 0..=n_x {
        let v = xl + i as f64 * xs;
        let x = px(v);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"##,
            y0,
            y0 + plot_h,
            y0 + plot_h + 14.0,
            tick_label(v, xs)
        );
    }
    let n_y = ((yh - yl) / ys).round() as i64;
    for i in 0..=n_y {
        let v = yl + i as f64 * ys;
        let y = py(v);
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN_LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"##,
            MARGIN_LEFT + plot_w,
            MARGIN_LEFT - 4.0,
            y + 3.0,
            tick_label(v, ys)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        y0 + plot_h + 30.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.2}" font-size="11" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
        y0 + plot_h / 2.0,
        y0 + plot_h / 2.0,
        escape(&panel.y_label)
    );
    for (x, label) in &panel.markers {
        if *x < xl || *x > xh {
            continue;
        }
        let xp = px(*x);
        let _ = writeln!(
            out,
            r##"<line x1="{xp:.2}" y1="{y0:.2}" x2="{xp:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="2,3"/><text x="{:.2}" y="{:.2}" font-size="9" fill="#555">{}</text>"##,
            y0 + plot_h,
            xp + 2.0,
            y0 + 10.0,
            escape(label)
        );
    }
    for (k, s) in panel.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| (px(x), py(y)))
            .collect();
        match s.mark {
            Mark::Dots => {
                for (x, y) in &pts {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{color}"/>"#
                    );
                }
            }
            Mark::Line | Mark::Dashed => {
                let coords: Vec<String> =
                    pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let dash = if s.mark == Mark::Dashed {
                    r#" stroke-dasharray="6,4""#
                } else {
                    ""
                };
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.4"{dash} points="{}"/>"#,
                    coords.join(" ")
                );
            }
        }
        let ly = y0 + 12.0 + 16.0 * k as f64;
        let lx = MARGIN_LEFT + plot_w + 10.0;
        let _ = writeln!(
            out,
            r#"<rect x="{lx:.2}" y="{:.2}" width="12" height="4" fill="{color}"/><text x="{:.2}" y="{ly:.2}" font-size="10">{}</text>"#,
            ly - 5.0,
            lx + 16.0,
            escape(&s.name)
        );
    }
}

/// Renders panels stacked top to bottom into one document.
pub fn render(panels: &[Panel]) -> String {
    let height = PANEL_HEIGHT * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        render_panel(&mut out, p, i as f64 * PANEL_HEIGHT);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nice_steps() {
        assert_eq!(nice_step(10.0, 5.0), 2.0);
        assert_eq!(nice_step(0.7, 5.0), 0.2);
        assert_eq!(nice_range(0.3, 9.7), (0.0, 10.0, 2.0));
        let (lo, hi, _) = nice_range(5.0, 5.0);
        assert!(lo < 5.0 && hi > 5.0);
    }

    #[test]
    fn labels() {
        assert_eq!(tick_label(-0.0, 0.5), "0.0");
        assert_eq!(tick_label(1500.0, 500.0), "1500");
        assert_eq!(tick_label(0.25, 0.05), "0.25");
    }

    #[test]
    fn deterministic_and_well_formed() {
        let p = Panel::new("a<b", "day", "price")
            .with(Series::indexed("x", &[1.0, 2.0, 1.5]))
            .with(Series::dots("y", vec![(0.5, 1.2)]))
            .marker(1.0, "flip");
        let a = render(&[p.clone(), p.clone()]);
        assert_eq!(a, render(&[p.clone(), p]));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("a&lt;b"));
        assert_eq!(a.matches("<polyline").count(), 2);
        assert_eq!(a.matches("<circle").count(), 2);
    }

    #[test]
    fn empty_panel_renders_title_only() {
        let s = render(&[Panel::new("empty", "", "")]);
        assert!(s.contains("empty") && !s.contains("polyline"));
    }
}
