//! Log-log SVG chart of a sweep: mean, min and max critical radius against
//! `n`, plus a reference line of slope `-1/d` through the first mean.

use std::fmt::Write as _;

use crate::experiments::SweepResult;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 64.0;

struct LogAxis {
    lo: f64,
    hi: f64,
    from: f64,
    to: f64,
}

impl LogAxis {
    fn new(min: f64, max: f64, from: f64, to: f64) -> Self {
        let (mut lo, mut hi) = (min.log10(), max.log10());
        if hi - lo < 1e-9 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.05 * (hi - lo);
        LogAxis {
            lo: lo - pad,
            hi: hi + pad,
            from,
            to,
        }
    }

    fn map(&self, v: f64) -> f64 {
        self.from + (v.log10() - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }

    /// Tick values at 1, 2 and 5 times powers of ten inside the range.
    fn ticks(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for e in self.lo.floor() as i32..=self.hi.ceil() as i32 {
            for m in [1.0, 2.0, 5.0] {
                let v = m * 10f64.powi(e);
                let l = v.log10();
                if l >= self.lo && l <= self.hi {
                    out.push(v);
                }
            }
        }
        out
    }
}

fn label(v: f64) -> String {
    if (1e-3..1e5).contains(&v.abs()) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.0e}")
    }
}

fn polyline(out: &mut String, class: &str, color: &str, dash: Option<&str>, pts: &[(f64, f64)]) {
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let dash = dash
        .map(|d| format!(" stroke-dasharray=\"{d}\""))
        .unwrap_or_default();
    let _ = writeln!(
        out,
        "<polyline class=\"{class}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"{dash} points=\"{}\"/>",
        coords.join(" ")
    );
}

/// Renders the chart. Levels without complete statistics are skipped.
pub fn sweep_svg(result: &SweepResult) -> String {
    let levels: Vec<(f64, f64, f64, f64)> = result
        .aggregates
        .iter()
        .filter(|a| a.is_complete())
        .map(|a| {
            (
                a.n as f64,
                a.mean_r.unwrap(),
                a.min_r.unwrap(),
                a.max_r.unwrap(),
            )
        })
        .collect();

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let d = result.config.d;
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">Critical radius, d = {d}, {} trials per n</text>",
        WIDTH / 2.0,
        result.config.trials
    );

    if levels.is_empty() {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">no complete levels</text>",
            WIDTH / 2.0,
            HEIGHT / 2.0
        );
        out.push_str("</svg>\n");
        return out;
    }

    let (n0, mean0) = (levels[0].0, levels[0].1);
    let n_last = levels[levels.len() - 1].0;
    let reference = |n: f64| mean0 * (n / n0).powf(-1.0 / d as f64);

    let y_min = levels
        .iter()
        .map(|l| l.2)
        .chain([reference(n_last)])
        .fold(f64::INFINITY, f64::min);
    let y_max = levels
        .iter()
        .map(|l| l.3)
        .chain([mean0])
        .fold(f64::NEG_INFINITY, f64::max);
    let x_axis = LogAxis::new(n0, n_last, LEFT, WIDTH - RIGHT);
    let y_axis = LogAxis::new(y_min, y_max, HEIGHT - BOTTOM, TOP);

    // frame and ticks
    let _ = writeln!(
        out,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    for v in x_axis.ticks() {
        let x = x_axis.map(v);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"#ddd\"/><text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            TOP,
            HEIGHT - BOTTOM,
            HEIGHT - BOTTOM + 16.0,
            label(v)
        );
    }
    for v in y_axis.ticks() {
        let y = y_axis.map(v);
        let _ = writeln!(
            out,
            "<line x1=\"{LEFT}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" stroke=\"#ddd\"/><text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            WIDTH - RIGHT,
            LEFT - 6.0,
            y + 4.0,
            label(v)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">n (log scale)</text>",
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        out,
        "<text transform=\"translate(20 {}) rotate(-90)\" text-anchor=\"middle\">critical radius (log scale)</text>",
        (TOP + HEIGHT - BOTTOM) / 2.0
    );

    let curve = |pick: fn(&(f64, f64, f64, f64)) -> f64| -> Vec<(f64, f64)> {
        levels
            .iter()
            .map(|l| (x_axis.map(l.0), y_axis.map(pick(l))))
            .collect()
    };
    polyline(&mut out, "curve mean", "#1f77b4", None, &curve(|l| l.1));
    polyline(
        &mut out,
        "curve min",
        "#2ca02c",
        Some("6 3"),
        &curve(|l| l.2),
    );
    polyline(
        &mut out,
        "curve max",
        "#d62728",
        Some("6 3"),
        &curve(|l| l.3),
    );
    let ref_pts = [
        (x_axis.map(n0), y_axis.map(reference(n0))),
        (x_axis.map(n_last), y_axis.map(reference(n_last))),
    ];
    let _ = writeln!(
        out,
        "<line class=\"reference\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"1.5\" stroke-dasharray=\"2 3\"/>",
        ref_pts[0].0, ref_pts[0].1, ref_pts[1].0, ref_pts[1].1
    );

    let legend = [
        ("#1f77b4", "mean"),
        ("#2ca02c", "min"),
        ("#d62728", "max"),
        ("black", "C n^(-1/d)"),
    ];
    for (i, (color, name)) in legend.iter().enumerate() {
        let y = TOP + 16.0 + 16.0 * i as f64;
        let x = WIDTH - RIGHT - 110.0;
        let _ = writeln!(
            out,
            "<line x1=\"{x}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"2\"/><text x=\"{}\" y=\"{}\">{name}</text>",
            x + 20.0,
            x + 26.0,
            y + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}
