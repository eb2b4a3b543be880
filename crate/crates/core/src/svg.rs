//! Minimal static SVG charts for analysis reports.

use std::fmt::Write;

use crate::stats::{percentile, RunningPoint};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn x_of(f: f64) -> f64 {
    MARGIN + f * (WIDTH - 2.0 * MARGIN)
}

fn y_of(v: f64) -> f64 {
    HEIGHT - MARGIN - v * (HEIGHT - 2.0 * MARGIN)
}

fn frame(title: &str, x_label: &str) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (x_of(0.0), x_of(1.0), y_of(0.0), y_of(1.0));
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>");
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>");
    for i in 0..=4 {
        let v = f64::from(i) / 4.0;
        let y = y_of(v);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{v:.2}</text>", x0 - 6.0, y + 4.0);
        let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" stroke=\"#ddd\"/>");
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    s
}

fn polyline(points: impl Iterator<Item = (f64, f64)>, color: &str, dashed: bool) -> String {
    let coords: Vec<String> = points.map(|(x, y)| format!("{:.2},{:.2}", x_of(x), y_of(y))).collect();
    let dash = if dashed { " stroke-dasharray=\"4 3\"" } else { "" };
    format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash} points=\"{}\"/>\n",
        coords.join(" ")
    )
}

/// Running median per series, with dashed quartile bands.
pub fn running_median_chart(title: &str, series: &[(String, Vec<RunningPoint>)]) -> String {
    let mut s = frame(title, "initial set fraction");
    for (i, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        s += &polyline(points.iter().map(|p| (p.fraction, p.median)), color, false);
        s += &polyline(points.iter().map(|p| (p.fraction, p.p25)), color, true);
        s += &polyline(points.iter().map(|p| (p.fraction, p.p75)), color, true);
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>",
            x_of(1.0) - 140.0,
            y_of(0.0) - 12.0 - 14.0 * i as f64,
            escape(name)
        );
    }
    s + "</svg>\n"
}

/// One box per group: quartile box, median bar, whiskers at the extremes.
pub fn box_chart(title: &str, groups: &[(String, Vec<f64>)]) -> String {
    let mut s = frame(title, "");
    let n = groups.len().max(1) as f64;
    for (i, (name, values)) in groups.iter().enumerate() {
        let (Some(lo), Some(q1), Some(med), Some(q3), Some(hi)) = (
            percentile(values, 0.0),
            percentile(values, 0.25),
            percentile(values, 0.5),
            percentile(values, 0.75),
            percentile(values, 1.0),
        ) else {
            continue;
        };
        let color = PALETTE[i % PALETTE.len()];
        let cx = x_of((i as f64 + 0.5) / n);
        let half = ((WIDTH - 2.0 * MARGIN) / n * 0.3).min(30.0);
        let _ = writeln!(
            s,
            "<line x1=\"{cx}\" y1=\"{}\" x2=\"{cx}\" y2=\"{}\" stroke=\"{color}\"/>",
            y_of(lo),
            y_of(hi)
        );
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"white\" stroke=\"{color}\"/>",
            cx - half,
            y_of(q3),
            2.0 * half,
            (y_of(q1) - y_of(q3)).max(0.5)
        );
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            cx - half,
            y_of(med),
            cx + half,
            y_of(med)
        );
        let _ = writeln!(
            s,
            "<text x=\"{cx}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            y_of(0.0) + 16.0,
            escape(name)
        );
    }
    s + "</svg>\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed() {
        let points = vec![
            RunningPoint {
                fraction: 0.1,
                median: 0.5,
                p25: 0.4,
                p75: 0.6,
            },
            RunningPoint {
                fraction: 0.2,
                median: 0.6,
                p25: 0.5,
                p75: 0.7,
            },
        ];
        let line = running_median_chart("a & b", &[("nb+cda".into(), points)]);
        assert!(line.starts_with("<svg") && line.ends_with("</svg>\n"));
        assert!(line.contains("a &amp; b"));
        assert_eq!(line.matches("<polyline").count(), 3);
        let boxes = box_chart("f1", &[("x".into(), vec![0.1, 0.5, 0.9]), ("empty".into(), vec![])]);
        assert_eq!(boxes.matches("<rect").count(), 2);
    }
}
