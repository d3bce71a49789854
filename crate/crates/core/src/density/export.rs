use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{DensityCurve, DensityGrid2D};
use crate::error::{Error, Result};

/// A rendered output file, held in memory until the caller commits it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportFile {
    pub name: String,
    pub contents: String,
}

/// Vertical annotation line drawn over density curves.
#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveStyle<'a> {
    pub label: &'a str,
    pub color: &'a str,
}

pub fn curve_csv(curve: &DensityCurve) -> String {
    let mut out = String::from("x,density\n");
    for (x, y) in curve.grid.iter().zip(&curve.values) {
        writeln!(out, "{x},{y}").unwrap();
    }
    out
}

/// Matrix CSV (one row per y bin, one column per x bin) plus the two edge
/// vectors.
pub fn grid_csv(grid: &DensityGrid2D) -> (String, String, String) {
    let mut matrix = String::new();
    for row in &grid.densities {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        matrix.push_str(&cells.join(","));
        matrix.push('\n');
    }
    let edges = |e: &[f64]| {
        let mut s = String::from("edge\n");
        for v in e {
            writeln!(s, "{v}").unwrap();
        }
        s
    };
    (matrix, edges(&grid.x_edges), edges(&grid.y_edges))
}

fn parse_number(text: &str, line: usize) -> Result<f64> {
    text.trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("not a number: {text:?}")))
}

pub fn parse_curve_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "x,density")) => {}
        _ => return Err(Error::Format("curve CSV must start with header x,density".into())),
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, line) in lines {
        let (x, y) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(k + 1, "expected two columns"))?;
        xs.push(parse_number(x, k + 1)?);
        ys.push(parse_number(y, k + 1)?);
    }
    Ok((xs, ys))
}

pub fn parse_matrix_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .enumerate()
        .map(|(k, line)| line.split(',').map(|c| parse_number(c, k + 1)).collect())
        .collect()
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 48.0;

/// Line plot of one or more density curves over [0, 1] with vertical
/// threshold markers.
pub fn curves_svg(curves: &[(CurveStyle<'_>, &DensityCurve)], markers: &[Marker]) -> String {
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let y_max = curves
        .iter()
        .flat_map(|(_, c)| c.values.iter().copied())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let px = |x: f64| MARGIN + x.clamp(0.0, 1.0) * plot_w;
    let py = |y: f64| HEIGHT - MARGIN - (y / y_max) * plot_h;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for (style, curve) in curves {
        let points: Vec<String> = curve
            .grid
            .iter()
            .zip(&curve.values)
            .filter(|(x, _)| (0.0..=1.0).contains(*x))
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            style.color,
            points.join(" "),
            escape(style.label)
        )
        .unwrap();
    }
    for m in markers {
        let x = px(m.value);
        writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{MARGIN}" x2="{x:.2}" y2="{:.2}" stroke="green" stroke-dasharray="4 3"><title>{}</title></line>"#,
            HEIGHT - MARGIN,
            escape(&m.label)
        )
        .unwrap();
    }
    for (k, (style, _)) in curves.iter().enumerate() {
        let y = MARGIN + 14.0 + 16.0 * k as f64;
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{y:.2}" font-size="12" fill="{}">{}</text>"#,
            MARGIN + 8.0,
            style.color,
            escape(style.label)
        )
        .unwrap();
    }
    axis_labels(&mut svg);
    svg.push_str("</svg>\n");
    svg
}

/// Heatmap of a joint grid with the y = x diagonal overlaid.
pub fn heatmap_svg(grid: &DensityGrid2D) -> String {
    let side = HEIGHT - 2.0 * MARGIN;
    let (nx, ny) = (grid.nx(), grid.ny());
    let (cw, ch) = (side / nx as f64, side / ny as f64);
    let peak = grid.densities.iter().flatten().copied().fold(0.0f64, f64::max);

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{HEIGHT}" height="{HEIGHT}" viewBox="0 0 {HEIGHT} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (j, row) in grid.densities.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            if v <= 0.0 {
                continue;
            }
            let shade = 255 - (255.0 * (v / peak).sqrt()).round() as u8;
            writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{cw:.2}" height="{ch:.2}" fill="rgb({shade},{shade},255)"/>"#,
                MARGIN + i as f64 * cw,
                HEIGHT - MARGIN - (j + 1) as f64 * ch,
            )
            .unwrap();
        }
    }
    writeln!(
        svg,
        r#"<line x1="{MARGIN}" y1="{:.2}" x2="{:.2}" y2="{MARGIN}" stroke="red" stroke-dasharray="5 4"/>"#,
        HEIGHT - MARGIN,
        MARGIN + side
    )
    .unwrap();
    writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{side}" height="{side}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    axis_labels(&mut svg);
    svg.push_str("</svg>\n");
    svg
}

fn axis_labels(svg: &mut String) {
    writeln!(svg, r#"<text x="{MARGIN}" y="{:.0}" font-size="11">0</text>"#, HEIGHT - MARGIN + 14.0).unwrap();
    writeln!(svg, r#"<text x="{:.0}" y="{:.0}" font-size="11">1</text>"#, MARGIN - 12.0, MARGIN + 4.0).unwrap();
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render curves and an optional joint grid into named files under `stem`.
pub fn export_plot_data(
    stem: &str,
    curves: &[(CurveStyle<'_>, &DensityCurve)],
    grid: Option<&DensityGrid2D>,
    markers: &[Marker],
) -> Vec<ExportFile> {
    let mut files = Vec::new();
    for (style, curve) in curves {
        files.push(ExportFile {
            name: format!("{stem}_curve_{}.csv", slug(style.label)),
            contents: curve_csv(curve),
        });
    }
    if !curves.is_empty() {
        files.push(ExportFile { name: format!("{stem}_curves.svg"), contents: curves_svg(curves, markers) });
    }
    if let Some(grid) = grid {
        let (matrix, xe, ye) = grid_csv(grid);
        files.push(ExportFile { name: format!("{stem}_grid.csv"), contents: matrix });
        files.push(ExportFile { name: format!("{stem}_grid_x_edges.csv"), contents: xe });
        files.push(ExportFile { name: format!("{stem}_grid_y_edges.csv"), contents: ye });
        files.push(ExportFile { name: format!("{stem}_grid.svg"), contents: heatmap_svg(grid) });
    }
    files
}

fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

/// Write every file into `dir`, creating it if needed.
pub fn write_files(dir: &Path, files: &[ExportFile]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    files
        .iter()
        .map(|f| {
            let path = dir.join(&f.name);
            fs::write(&path, &f.contents)?;
            Ok(path)
        })
        .collect()
}
