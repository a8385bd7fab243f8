use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{ExperimentOutcome, HarnessError};

/// A CSV table with its file name.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Table {
            file: file.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

pub fn render_csv(table: &Table) -> String {
    let mut out = table.header.join(",");
    out.push('\n');
    for row in &table.rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Writes every table, the JSON summary `<kind>.json` and the plot into `dir`.
pub fn emit_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for table in &outcome.tables {
        let path = dir.join(&table.file);
        fs::write(&path, render_csv(table))?;
        written.push(path);
    }
    let summary = serde_json::json!({
        "experiment": outcome.kind.name(),
        "passed": outcome.passed(),
        "assertions": outcome.assertions,
        "results": outcome.summary,
    });
    let path = dir.join(format!("{}.json", outcome.kind.name()));
    fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")?;
    written.push(path);
    if let Some((name, svg)) = &outcome.plot {
        let path = dir.join(name);
        fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

/// Log-log plot of `G` and `H^{-1}` against the shifted time, with reference
/// slopes `-1/(s-1)` and `-2/(s-1)` through the first point of each series.
pub fn render_decay_svg(
    geometric: &[(f64, f64)],
    functional: &[(f64, f64)],
    clock_offset: f64,
    s: f64,
) -> String {
    let to_log = |series: &[(f64, f64)]| -> Vec<(f64, f64)> {
        series
            .iter()
            .filter(|p| p.0 + clock_offset > 0.0 && p.1 > 0.0)
            .map(|p| ((p.0 + clock_offset).log10(), p.1.log10()))
            .collect()
    };
    let g = to_log(geometric);
    let h = to_log(functional);
    let slopes = [-1.0 / (s - 1.0), -2.0 / (s - 1.0)];
    let refs: Vec<Vec<(f64, f64)>> = [(&g, slopes[0]), (&h, slopes[1])]
        .iter()
        .filter_map(|(series, slope)| {
            let (&first, &last) = (series.first()?, series.last()?);
            Some(vec![first, (last.0, first.1 + slope * (last.0 - first.0))])
        })
        .collect();
    let all: Vec<(f64, f64)> = g
        .iter()
        .chain(&h)
        .chain(refs.iter().flatten())
        .copied()
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in &all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let path = |pts: &[(f64, f64)]| -> String {
        pts.iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">log10(T_n + {clock_offset:.4})</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" font-size="14" transform="rotate(-90 18 {})">log10(scale)</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (series, color, label) in [(&g, "#1f77b4", "G"), (&h, "#d62728", "Hm1")] {
        if series.is_empty() {
            continue;
        }
        let _ = writeln!(
            svg,
            r#"<polyline class="measured" data-series="{label}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path(series)
        );
        for &(x, y) in series.iter() {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(x),
                py(y)
            );
        }
    }
    for (line, slope) in refs.iter().zip(slopes) {
        let _ = writeln!(
            svg,
            r#"<polyline class="reference" data-slope="{slope:.4}" points="{}" fill="none" stroke="gray" stroke-dasharray="6 4"/>"#,
            path(line)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12">G (blue), Hm1 (red), slopes {:.3} and {:.3} (dashed)</text>"#,
        MARGIN,
        MARGIN - 10.0,
        slopes[0],
        slopes[1]
    );
    svg.push_str("</svg>\n");
    svg
}
