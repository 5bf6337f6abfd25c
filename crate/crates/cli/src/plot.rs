//! Static SVG line plots of CSV columns against `tau`.
//!
//! Output depends only on the input table. Canvas and fonts are fixed and
//! coordinates are printed with two decimals.

use std::fmt::Write as _;

use anyhow::{bail, Result};

use crate::csv::Table;

pub const WIDTH: f64 = 960.0;
pub const HEIGHT: f64 = 600.0;
const LEFT: f64 = 100.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Axes {
    #[default]
    Linear,
    /// Logarithmic value axis; `tau` stays linear.
    LogY,
}

/// A horizontal line drawn across the plot, such as `M★`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub label: String,
    pub value: f64,
}

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

/// Renders the chosen columns of `table` against its `tau` column.
pub fn emit_plot(
    table: &Table,
    columns: &[String],
    axes: Axes,
    reference: Option<&Reference>,
) -> Result<String> {
    if table.rows.is_empty() {
        bail!("CSV has no data rows; nothing to plot");
    }
    if columns.is_empty() {
        bail!("no columns selected");
    }
    let Some(x_idx) = table.column_index("tau") else {
        bail!("CSV has no `tau` column");
    };
    let log = axes == Axes::LogY;
    let mut series = Vec::new();
    for name in columns {
        let Some(idx) = table.column_index(name) else {
            bail!(
                "column `{name}` not found; available: {}",
                table.columns.join(", ")
            );
        };
        let mut points = Vec::new();
        for (r, row) in table.rows.iter().enumerate() {
            let (Some(x), Some(y)) = (row[x_idx], row[idx]) else {
                continue;
            };
            if log && !(y > 0.0) {
                bail!(
                    "data row {} (tau = {x}) has nonpositive {name} = {y}; a log axis needs positive values",
                    r + 1
                );
            }
            points.push((x, if log { y.log10() } else { y }));
        }
        if points.is_empty() {
            bail!("column `{name}` has no values");
        }
        series.push(Series {
            name: name.clone(),
            points,
        });
    }
    let reference = match reference {
        Some(r) if log && r.value <= 0.0 => None,
        Some(r) => Some((r, if log { r.value.log10() } else { r.value })),
        None => None,
    };

    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if let Some((_, v)) = reference {
        y0 = y0.min(v);
        y1 = y1.max(v);
    }
    let (x0, x1) = widen(x0, x1);
    let (y0, y1) = widen(y0, y1);
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let title = format!(
        "{} vs tau{}",
        columns.join(", "),
        if log { " (log scale)" } else { "" }
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="30" font-size="18" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(&title)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333333" stroke-width="1"/>"##
    );

    for i in 0..=5 {
        let frac = i as f64 / 5.0;
        let x = x0 + frac * (x1 - x0);
        let px = sx(x);
        let _ = writeln!(
            svg,
            r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#333333"/>"##,
            TOP + ph,
            TOP + ph + 6.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{px:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            TOP + ph + 22.0,
            tick_label(x)
        );
        let y = y0 + frac * (y1 - y0);
        let py = sy(y);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT:.2}" y2="{py:.2}" stroke="#333333"/>"##,
            LEFT - 6.0
        );
        let label = if log {
            tick_label(10f64.powf(y))
        } else {
            tick_label(y)
        };
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{label}</text>"#,
            LEFT - 10.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">tau</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 20.0
    );

    if let Some((r, v)) = reference {
        let py = sy(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#7f7f7f" stroke-width="1.5" stroke-dasharray="8 5"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            svg,
            r##"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end" fill="#555555">{} = {}</text>"##,
            LEFT + pw - 6.0,
            py - 6.0,
            escape(&r.label),
            tick_label(r.value)
        );
    }

    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut pts = String::new();
        for (i, &(x, y)) in s.points.iter().enumerate() {
            if i > 0 {
                pts.push(' ');
            }
            let _ = write!(pts, "{:.2},{:.2}", sx(x), sy(y));
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>"#
        );
        let ly = TOP + 20.0 + 20.0 * k as f64;
        let lx = LEFT + 16.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 24.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="13">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let d = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        (lo - d, hi + d)
    }
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if (1e-2..1e4).contains(&a) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
