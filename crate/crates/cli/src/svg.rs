//! Minimal SVG 1.1 line charts.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
    pub markers: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Round tick spacing (1, 2 or 5 times a power of ten) giving about `target`
/// intervals over `span`.
pub fn tick_step(span: f64, target: usize) -> f64 {
    if span.is_nan() || span <= 0.0 {
        return 1.0;
    }
    let raw = span / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let unit = raw / mag;
    let nice = if unit <= 1.0 {
        1.0
    } else if unit <= 2.0 {
        2.0
    } else if unit <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) =
        values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < f64::EPSILON * lo.abs().max(1.0) {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    format!("{v:.decimals$}")
}

impl LineChart {
    pub fn render(&self) -> String {
        let (x0, x1) = range(self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
        let (y0, y1) = range(self.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
        let (xs, ys) = (tick_step(x1 - x0, 5), tick_step(y1 - y0, 5));
        let (x0, x1) = ((x0 / xs).floor() * xs, (x1 / xs).ceil() * xs);
        let (y0, y1) = ((y0 / ys).floor() * ys, (y1 / ys).ceil() * ys);
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
        let sy = |y: f64| TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;

        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
        );

        let mut x = x0;
        while x <= x1 + xs * 1e-9 {
            let px = sx(x);
            let _ = writeln!(
                out,
                r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#ddd"/><text x="{px:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"##,
                TOP,
                TOP + plot_h,
                TOP + plot_h + 16.0,
                fmt_tick(x, xs)
            );
            x += xs;
        }
        let mut y = y0;
        while y <= y1 + ys * 1e-9 {
            let py = sy(y);
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"##,
                LEFT + plot_w,
                LEFT - 6.0,
                py + 4.0,
                fmt_tick(y, ys)
            );
            y += ys;
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
            TOP + plot_h / 2.0,
            TOP + plot_h / 2.0,
            escape(&self.y_label)
        );

        for s in &self.series {
            let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"><title>{}</title></polyline>"#,
                escape(&s.color),
                pts.join(" "),
                escape(&s.name)
            );
            if s.markers {
                for &(x, y) in &s.points {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{}"/>"#,
                        sx(x),
                        sy(y),
                        escape(&s.color)
                    );
                }
            }
        }

        for (i, s) in self.series.iter().enumerate() {
            let ly = TOP + 16.0 + 18.0 * i as f64;
            let lx = LEFT + 12.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"/><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
                lx + 24.0,
                escape(&s.color),
                lx + 30.0,
                ly + 4.0,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> LineChart {
        LineChart {
            title: "panel <1>".into(),
            x_label: "m".into(),
            y_label: "p".into(),
            series: vec![
                Series {
                    name: "empirical".into(),
                    color: "red".into(),
                    points: vec![(100.0, 30.0), (200.0, 60.0)],
                    markers: true,
                },
                Series {
                    name: "formula".into(),
                    color: "blue".into(),
                    points: vec![(100.0, 28.0), (200.0, 55.0)],
                    markers: false,
                },
            ],
        }
    }

    #[test]
    fn renders_both_series_and_legend() {
        let svg = chart().render();
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains(">empirical</text>") && svg.contains(">formula</text>"));
        assert!(svg.contains("panel &lt;1&gt;"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn single_point_and_empty_do_not_break() {
        let mut c = chart();
        c.series[0].points.truncate(1);
        c.series[1].points.clear();
        assert!(!c.render().contains("NaN"));
        c.series.clear();
        assert!(c.render().contains("</svg>"));
    }

    #[test]
    fn tick_steps() {
        assert_eq!(tick_step(900.0, 5), 200.0);
        assert_eq!(tick_step(1.0, 5), 0.2);
        assert_eq!(tick_step(50.0, 5), 10.0);
        assert_eq!(tick_step(0.0, 5), 1.0);
    }
}
