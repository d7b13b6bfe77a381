//! Minimal SVG 1.1 rendering of CSV series: line and scatter charts.
//! This module only draws; it never computes statistics.

use anyhow::{bail, Context, Result};
use std::path::Path;

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| anyhow::anyhow!("{}: empty file", path.display()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|v| {
                let v = v.trim();
                if v == "inf" {
                    Ok(f64::INFINITY)
                } else {
                    v.parse::<f64>()
                        .with_context(|| format!("{}: row {}: bad number {v:?}", path.display(), i + 2))
                }
            })
            .collect::<Result<_>>()?;
        if row.len() != header.len() {
            bail!("{}: row {} has {} fields, expected {}", path.display(), i + 2, row.len(), header.len());
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(Table { header, rows })
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

/// Renders the selected columns of a table against the x column.
/// `kind` is "line" or "scatter".
pub fn render(
    table: &Table,
    x: &str,
    ys: &[String],
    kind: &str,
    title: &str,
) -> Result<String> {
    if kind != "line" && kind != "scatter" {
        bail!("plot.kind: unknown kind {kind:?} (use \"line\" or \"scatter\")");
    }
    let col = |name: &str| -> Result<usize> {
        table
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow::anyhow!("column {name:?} not in header {:?}", table.header))
    };
    let xi = col(x)?;
    let yis: Vec<usize> = ys.iter().map(|y| col(y)).collect::<Result<_>>()?;
    let finite = |v: &f64| v.is_finite();
    let xs: Vec<f64> = table.rows.iter().map(|r| r[xi]).collect();
    let mut y_all = Vec::new();
    for &yi in &yis {
        y_all.extend(table.rows.iter().map(|r| r[yi]).filter(finite));
    }
    if y_all.is_empty() {
        bail!("no finite values to plot");
    }
    let (x_min, x_max) = bounds(&xs);
    let (y_min, y_max) = bounds(&y_all);
    let sx = |v: f64| MARGIN_L + (v - x_min) / (x_max - x_min).max(1e-300) * (WIDTH - MARGIN_L - MARGIN_R);
    let sy = |v: f64| HEIGHT - MARGIN_B - (v - y_min) / (y_max - y_min).max(1e-300) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B
    ));
    // ticks
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = x_min + t * (x_max - x_min);
        let yv = y_min + t * (y_max - y_min);
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            sx(xv),
            HEIGHT - MARGIN_B + 18.0,
            tick(xv)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            MARGIN_L - 6.0,
            sy(yv) + 4.0,
            tick(yv)
        ));
        svg.push_str(&format!(
            "<line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            sy(yv),
            WIDTH - MARGIN_R,
            sy(yv)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 12.0,
        escape(x)
    ));
    // series
    for (si, &yi) in yis.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        if kind == "line" {
            let points: Vec<String> = table
                .rows
                .iter()
                .filter(|r| r[yi].is_finite())
                .map(|r| format!("{:.2},{:.2}", sx(r[xi]), sy(r[yi])))
                .collect();
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                points.join(" ")
            ));
        } else {
            for r in table.rows.iter().filter(|r| r[yi].is_finite()) {
                svg.push_str(&format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n",
                    sx(r[xi]),
                    sy(r[yi])
                ));
            }
        }
        // legend entry
        let ly = MARGIN_T + 16.0 * si as f64;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"4\" fill=\"{color}\"/>\n",
            WIDTH - MARGIN_R - 130.0,
            ly
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            WIDTH - MARGIN_R - 112.0,
            ly + 6.0,
            escape(&ys[si])
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 0.01 && v.abs() < 10_000.0 {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
