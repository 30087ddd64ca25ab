//! Minimal deterministic SVG charts.
//!
//! Output depends only on the data passed in: fixed canvas size, fixed
//! palette, every coordinate printed with two decimals, text set in a
//! monospace family, and no timestamps or generated ids. Rendering the same
//! numbers therefore always produces byte-identical files.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 52.0;
const FONT: &str = "font-family=\"monospace\" font-size=\"12\"";
const PALETTE: [&str; 6] = ["#1f6f8b", "#c0541e", "#3a7d44", "#7d3a6f", "#8a7a1e", "#444444"];
const N_TICKS: usize = 5;

/// One polyline on a chart.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn from_ranges(xs: (f64, f64), ys: (f64, f64)) -> Frame {
        let pad = |lo: f64, hi: f64| {
            if (hi - lo).abs() < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x_min, x_max) = pad(xs.0, xs.1);
        let (y_min, y_max) = pad(ys.0, ys.1);
        Frame { x_min, x_max, y_min, y_max }
    }

    fn sx(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn sy(&self, y: f64) -> f64 {
        HEIGHT
            - MARGIN_BOTTOM
            - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn open_svg(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        fmt2(WIDTH),
        fmt2(HEIGHT),
        fmt2(WIDTH),
        fmt2(HEIGHT)
    );
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>",
        fmt2(WIDTH),
        fmt2(HEIGHT)
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" {FONT} font-weight=\"bold\">{}</text>",
        fmt2(WIDTH / 2.0),
        escape(title)
    );
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    let _ = writeln!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#222222\"/>",
        fmt2(x0),
        fmt2(y0),
        fmt2(x1),
        fmt2(y0)
    );
    let _ = writeln!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#222222\"/>",
        fmt2(x0),
        fmt2(y0),
        fmt2(x0),
        fmt2(y1)
    );
    for i in 0..=N_TICKS {
        let t = i as f64 / N_TICKS as f64;
        let xv = frame.x_min + t * (frame.x_max - frame.x_min);
        let yv = frame.y_min + t * (frame.y_max - frame.y_min);
        let sx = frame.sx(xv);
        let sy = frame.sy(yv);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#222222\"/>",
            fmt2(sx),
            fmt2(y0),
            fmt2(sx),
            fmt2(y0 + 4.0)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" {FONT}>{}</text>",
            fmt2(sx),
            fmt2(y0 + 18.0),
            fmt_tick(xv)
        );
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#222222\"/>",
            fmt2(x0 - 4.0),
            fmt2(sy),
            fmt2(x0),
            fmt2(sy)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" {FONT}>{}</text>",
            fmt2(x0 - 8.0),
            fmt2(sy + 4.0),
            fmt_tick(yv)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" {FONT}>{}</text>",
        fmt2((x0 + x1) / 2.0),
        fmt2(HEIGHT - 14.0),
        escape(x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" {FONT} transform=\"rotate(-90 16 {})\">{}</text>",
        fmt2((y0 + y1) / 2.0),
        fmt2((y0 + y1) / 2.0),
        escape(y_label)
    );
}

/// Render one or more numeric series as polylines with a shared axis frame.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut out = String::new();
    open_svg(&mut out, title);

    let points: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    if points.is_empty() {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" {FONT}>no data</text>",
            fmt2(WIDTH / 2.0),
            fmt2(HEIGHT / 2.0)
        );
        out.push_str("</svg>\n");
        return out;
    }
    let xs = points.iter().map(|p| p.0);
    let ys = points.iter().map(|p| p.1);
    let frame = Frame::from_ranges(
        (xs.clone().fold(f64::INFINITY, f64::min), xs.fold(f64::NEG_INFINITY, f64::max)),
        (ys.clone().fold(f64::INFINITY, f64::min), ys.fold(f64::NEG_INFINITY, f64::max)),
    );
    axes(&mut out, &frame, x_label, y_label);

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if s.points.len() == 1 {
            let (x, y) = s.points[0];
            let _ = writeln!(
                out,
                "<circle cx=\"{}\" cy=\"{}\" r=\"3.00\" fill=\"{color}\"/>",
                fmt2(frame.sx(x)),
                fmt2(frame.sy(y))
            );
        } else if !s.points.is_empty() {
            let path: Vec<String> =
                s.points.iter().map(|&(x, y)| format!("{},{}", fmt2(frame.sx(x)), fmt2(frame.sy(y)))).collect();
            let _ = writeln!(
                out,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
                path.join(" ")
            );
        }
        let ly = MARGIN_TOP + 14.0 * i as f64;
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"10.00\" height=\"10.00\" fill=\"{color}\"/>",
            fmt2(WIDTH - MARGIN_RIGHT - 150.0),
            fmt2(ly)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" {FONT}>{}</text>",
            fmt2(WIDTH - MARGIN_RIGHT - 136.0),
            fmt2(ly + 9.0),
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Render labeled values as vertical bars.
pub fn bar_chart(title: &str, x_label: &str, y_label: &str, bars: &[(String, f64)]) -> String {
    let mut out = String::new();
    open_svg(&mut out, title);
    if bars.is_empty() {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" {FONT}>no data</text>",
            fmt2(WIDTH / 2.0),
            fmt2(HEIGHT / 2.0)
        );
        out.push_str("</svg>\n");
        return out;
    }
    let y_hi = bars.iter().map(|b| b.1).fold(0.0_f64, f64::max);
    let y_lo = bars.iter().map(|b| b.1).fold(0.0_f64, f64::min);
    let frame = Frame::from_ranges((0.0, bars.len() as f64), (y_lo, y_hi));
    axes(&mut out, &frame, x_label, y_label);

    let slot = (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / bars.len() as f64;
    let bar_w = slot * 0.6;
    for (i, (label, value)) in bars.iter().enumerate() {
        let cx = MARGIN_LEFT + slot * (i as f64 + 0.5);
        let top = frame.sy(value.max(0.0));
        let bottom = frame.sy(value.min(0.0));
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
            fmt2(cx - bar_w / 2.0),
            fmt2(top),
            fmt2(bar_w),
            fmt2((bottom - top).max(0.5)),
            PALETTE[0]
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" {FONT}>{}</text>",
            fmt2(cx),
            fmt2(HEIGHT - MARGIN_BOTTOM + 32.0),
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_data_renders_identical_bytes() {
        let series = vec![Series { label: "acc".into(), points: vec![(1.0, 0.5), (2.0, 0.75)] }];
        let a = line_chart("t", "x", "y", &series);
        let b = line_chart("t", "x", "y", &series);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.ends_with("</svg>\n"));
    }

    #[test]
    fn charts_carry_no_volatile_content() {
        let svg = bar_chart("bars", "year", "accuracy", &[("2014".into(), 0.7), ("2015".into(), 0.6)]);
        assert!(!svg.contains("date"));
        assert!(!svg.contains("id="));
        assert!(svg.contains("monospace"));
    }

    #[test]
    fn empty_and_singleton_inputs_render() {
        let empty = line_chart("t", "x", "y", &[]);
        assert!(empty.contains("no data"));
        let single =
            line_chart("t", "x", "y", &[Series { label: "s".into(), points: vec![(3.0, 1.0)] }]);
        assert!(single.contains("<circle"));
    }

    #[test]
    fn labels_are_escaped() {
        let svg = bar_chart("a<b", "x", "y", &[("p&q".into(), 1.0)]);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains("p&amp;q"));
    }
}
