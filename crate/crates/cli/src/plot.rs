//! Plot-ready series and a small SVG line-chart writer.

use crate::output::*;
use anyhow::{bail, Context, Result};
use std::fmt::Write as _;
use std::path::Path;

pub const SERIES: [&str; 4] = ["a", "b", "q_l1", "scaled_l1"];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;

/// Reads `evolution.csv` and `summary.json` from `dir` and writes
/// `series.csv` plus one SVG per series.
pub fn emit_plot_data(dir: &Path) -> Result<Vec<SeriesRow>> {
    for needed in [EVOLUTION_CSV, SUMMARY_JSON] {
        if !dir.join(needed).is_file() {
            bail!("missing input {} in {}", needed, dir.display());
        }
    }
    let rows: Vec<EvolutionRow> = read_csv(&dir.join(EVOLUTION_CSV))?;
    let summary: EvolutionSummary = read_json(&dir.join(SUMMARY_JSON))?;
    if rows.is_empty() {
        bail!("{} has no rows", dir.join(EVOLUTION_CSV).display());
    }
    let mut series = Vec::with_capacity(4 * rows.len());
    for name in SERIES {
        for r in &rows {
            let value = match name {
                "a" => r.a,
                "b" => r.b,
                "q_l1" => r.q_l1,
                _ => (summary.lambda0 * r.t).exp() * r.q_l1,
            };
            series.push(SeriesRow {
                series: name.to_string(),
                t: r.t,
                value,
            });
        }
    }
    write_csv(&dir.join(SERIES_CSV), &series)?;
    for name in SERIES {
        let points: Vec<(f64, f64)> = series.iter().filter(|s| s.series == name).map(|s| (s.t, s.value)).collect();
        let title = match name {
            "scaled_l1" => format!("exp(λ₀t)·‖q‖₁, λ₀ = {:.6}", summary.lambda0),
            "q_l1" => "‖q‖₁".to_string(),
            other => other.to_string(),
        };
        let path = dir.join(format!("{name}.svg"));
        std::fs::write(&path, line_chart(&title, &points)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(series)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Axis range padded so that a constant series still gets a visible band.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1e-12) };
    (lo - pad, hi + pad)
}

pub fn line_chart(title: &str, points: &[(f64, f64)]) -> String {
    let (x0, x1) = range(points.iter().map(|p| p.0));
    let (y0, y1) = range(points.iter().map(|p| p.1));
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        MARGIN / 2.0,
        escape(title)
    );
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{}</text>"#,
            px(xv),
            bottom + 16.0,
            tick(xv, x1 - x0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="10">{}</text>"#,
            left - 6.0,
            py(yv) + 3.0,
            tick(yv, y1 - y0)
        );
    }
    let path: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        path.join(" ")
    );
    for &(x, y) in points {
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, px(x), py(y));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Enough digits to tell neighbouring ticks apart.
fn tick(v: f64, span: f64) -> String {
    let digits = (2.0 - (span / 4.0).log10().floor()).clamp(0.0, 12.0) as usize;
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{v:.digits$}")
    } else {
        format!("{v:.3e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_contains_every_point() {
        let svg = line_chart("a < b", &[(0.0, 1.0), (1.0, 2.0), (2.0, 1.5)]);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn constant_series_gets_a_finite_range() {
        let (lo, hi) = range([2.0, 2.0].into_iter());
        assert!(lo < 2.0 && hi > 2.0);
        let svg = line_chart("flat", &[(0.0, 2.0), (1.0, 2.0)]);
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn empty_directory_names_the_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let e = emit_plot_data(dir.path()).unwrap_err();
        assert!(e.to_string().contains(EVOLUTION_CSV), "{e}");
    }
}
