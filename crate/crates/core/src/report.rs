//! Campaign artifacts as in-memory files, plus minimal SVG charts.

use std::fmt::Write as _;

use crate::broadcasting::Measure;
use crate::error::Result;
use crate::io::{centrality_csv, format_float};
use crate::montecarlo::CampaignResult;
use crate::stats::{histogram, least_squares, Histogram};

pub const HISTOGRAM_BINS: usize = 30;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 40.0;

/// A named text file produced by a command.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    fn new(name: impl Into<String>, contents: String) -> Self {
        Artifact { name: name.into(), contents }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), format_float)
}

pub fn correlations_csv(result: &CampaignResult) -> String {
    let mut out = String::from("measure,pearson,spearman,top5\n");
    for s in &result.statistics {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            s.measure.broadcast_name(),
            opt(s.pearson),
            opt(s.spearman),
            opt(s.top5)
        );
    }
    out
}

pub fn centralizations_csv(result: &CampaignResult) -> String {
    let mut out = String::from("run");
    for m in Measure::ALL {
        let _ = write!(out, ",{}", m.broadcast_name());
    }
    out.push('\n');
    for (run, c) in &result.centralizations {
        out.push_str(&run.to_string());
        for x in c {
            let _ = write!(out, ",{}", format_float(*x));
        }
        out.push('\n');
    }
    out
}

pub fn histogram_csv(h: &Histogram) -> String {
    let mut out = String::from("bin,lower,upper,count\n");
    for (k, c) in h.counts.iter().enumerate() {
        let _ = writeln!(out, "{k},{},{},{c}", format_float(h.edges[k]), format_float(h.edges[k + 1]));
    }
    out
}

fn svg_open(title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, y0, x1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{MARGIN}" stroke="black"/>"#);
    out
}

fn axis_labels(out: &mut String, lo: f64, hi: f64, x_label: &str, y_label: &str) {
    let y = HEIGHT - MARGIN + 14.0;
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="{y}" font-family="sans-serif" font-size="10">{lo:.3e}</text>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{y}" font-family="sans-serif" font-size="10" text-anchor="end">{hi:.3e}</text>"#,
        WIDTH - MARGIN
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 8.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="12" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle" transform="rotate(-90 12 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn histogram_svg(h: &Histogram, title: &str) -> String {
    let mut out = svg_open(title);
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN - 10.0;
    let max = h.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let bar_w = plot_w / h.counts.len() as f64;
    for (k, &c) in h.counts.iter().enumerate() {
        let height = plot_h * c as f64 / max;
        let _ = writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4c72b0" stroke="white"/>"##,
            MARGIN + bar_w * k as f64,
            HEIGHT - MARGIN - height,
            bar_w,
            height
        );
    }
    axis_labels(&mut out, h.edges[0], h.edges[h.edges.len() - 1], "centralization", "runs");
    out.push_str("</svg>\n");
    out
}

fn span(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) }
}

/// Scatter of `y` against `x` with the least-squares line when it exists.
pub fn scatter_svg(x: &[f64], y: &[f64], fit: Option<(f64, f64)>, title: &str, x_label: &str, y_label: &str) -> String {
    let mut out = svg_open(title);
    let (xl, xh) = span(x);
    let (yl, yh) = span(y);
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN - 10.0;
    let px = |v: f64| MARGIN + plot_w * (v - xl) / (xh - xl);
    let py = |v: f64| HEIGHT - MARGIN - plot_h * (v - yl) / (yh - yl);
    for (&a, &b) in x.iter().zip(y) {
        let _ = writeln!(out, r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#dd8452"/>"##, px(a), py(b));
    }
    if let Some((slope, intercept)) = fit {
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-dasharray="4 2"/>"#,
            px(xl),
            py(slope * xl + intercept),
            px(xh),
            py(slope * xh + intercept)
        );
    }
    axis_labels(&mut out, xl, xh, x_label, y_label);
    out.push_str("</svg>\n");
    out
}

/// `node,classical,broadcast` points for one measure.
pub fn scatter_csv(classical: &[f64], broadcast: &[f64]) -> String {
    let mut out = String::from("node,classical,broadcast\n");
    for (i, (&a, &b)) in classical.iter().zip(broadcast).enumerate() {
        let _ = writeln!(out, "{i},{},{}", format_float(a), format_float(b));
    }
    out
}

/// Every campaign output file, in a fixed order. Equal results give
/// byte-identical artifacts.
pub fn campaign_artifacts(result: &CampaignResult) -> Result<Vec<Artifact>> {
    let mut files = vec![
        Artifact::new("nodewise_means.csv", centrality_csv(&result.means, &result.classical)),
        Artifact::new("correlations.csv", correlations_csv(result)),
        Artifact::new("centralizations.csv", centralizations_csv(result)),
    ];
    let mut fits = String::from("measure,slope,intercept\n");
    for m in Measure::ALL {
        let name = m.broadcast_name();
        let samples = result.centralization_samples(m);
        let h = histogram(&samples, HISTOGRAM_BINS)?;
        files.push(Artifact::new(format!("histogram_{name}.csv"), histogram_csv(&h)));
        files.push(Artifact::new(
            format!("histogram_{name}.svg"),
            histogram_svg(&h, &format!("{name} centralization, {} runs", samples.len())),
        ));

        let x = result.classical.get(m);
        let y = &result.means[m.index()];
        let fit = least_squares(x, y).ok();
        let (slope, intercept) = fit.unwrap_or((f64::NAN, f64::NAN));
        let _ = writeln!(fits, "{name},{},{}", format_float(slope), format_float(intercept));
        files.push(Artifact::new(format!("scatter_{name}.csv"), scatter_csv(x, y)));
        files.push(Artifact::new(
            format!("scatter_{name}.svg"),
            scatter_svg(x, y, fit, &format!("{name} vs {}", m.classical_name()), m.classical_name(), name),
        ));
    }
    files.push(Artifact::new("regression.csv", fits));
    if let Some(per_run) = &result.per_run {
        let mut out = String::from("run,node");
        for m in Measure::ALL {
            let _ = write!(out, ",{}", m.broadcast_name());
        }
        out.push('\n');
        for (run, set) in per_run {
            for i in 0..result.n {
                let _ = write!(out, "{run},{i}");
                for m in Measure::ALL {
                    let _ = write!(out, ",{}", format_float(set.get(m)[i]));
                }
                out.push('\n');
            }
        }
        files.push(Artifact::new("runs.csv", out));
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_chart_has_one_bar_per_bin() {
        let h = histogram(&[0.0, 0.5, 1.0, 1.0], 4).unwrap();
        let svg = histogram_svg(&h, "a < b");
        assert_eq!(svg.matches("<rect x=").count(), 4);
        assert!(svg.contains("a &lt; b"));
        assert!(histogram_csv(&h).starts_with("bin,lower,upper,count\n0,0.0000000000000000e0,"));
    }

    #[test]
    fn scatter_chart_draws_points_and_fit() {
        let svg = scatter_svg(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0], Some((1.0, 1.0)), "t", "x", "y");
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(svg.matches("stroke-dasharray").count(), 1);
        // constant data still renders
        let flat = scatter_svg(&[1.0, 1.0], &[2.0, 2.0], None, "t", "x", "y");
        assert!(!flat.contains("NaN"));
    }
}
