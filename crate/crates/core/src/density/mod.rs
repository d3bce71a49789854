//! Kernel density curves and joint score histograms.

mod export;

pub use export::{
    curve_csv, export_plot_data, grid_csv, heatmap_svg, parse_curve_csv, parse_matrix_csv,
    write_files, curves_svg, CurveStyle, ExportFile, Marker,
};

use serde::{Deserialize, Serialize};

use crate::accum::{self, Accumulator};
use crate::error::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 512;
pub const DEFAULT_JOINT_BINS: usize = 50;
pub const DEFAULT_SMOOTH_SIGMA: f64 = 1.0;

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
    pub n_source: usize,
}

impl DensityCurve {
    /// Trapezoidal integral over the evaluation grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }
}

pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .collect::<Accumulator>()
        .value()
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n).map(|k| if k == n - 1 { hi } else { lo + k as f64 * step }).collect()
        }
    }
}

/// Silverman's rule of thumb: `1.06 · σ̂ · n^(−1/5)` with the unbiased
/// sample standard deviation.
pub fn silverman_bandwidth(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: xs.len() });
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::ZeroVariance("bandwidth sample"));
    }
    let mean = accum::mean(xs);
    let ss = accum::sum(xs.iter().map(|&x| (x - mean) * (x - mean)));
    let sd = (ss / (xs.len() - 1) as f64).sqrt();
    Ok(1.06 * sd * (xs.len() as f64).powf(-0.2))
}

/// Gaussian kernel density estimate of `xs` evaluated at each grid point.
pub fn kde_1d(xs: &[f64], grid: &[f64], bandwidth: f64) -> Result<DensityCurve> {
    if xs.is_empty() {
        return Err(Error::EmptyInput("density sample"));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("evaluation grid must be ascending".into()));
    }
    let norm = 1.0 / (xs.len() as f64 * bandwidth * SQRT_2PI);
    let values = grid
        .iter()
        .map(|&g| {
            let s: Accumulator = xs
                .iter()
                .map(|&x| {
                    let z = (g - x) / bandwidth;
                    (-0.5 * z * z).exp()
                })
                .collect();
            norm * s.value()
        })
        .collect();
    Ok(DensityCurve { grid: grid.to_vec(), values, bandwidth, n_source: xs.len() })
}

/// KDE on the default 512-point grid over [0, 1] with Silverman's bandwidth.
pub fn kde_default(xs: &[f64]) -> Result<DensityCurve> {
    let h = silverman_bandwidth(xs)?;
    kde_1d(xs, &uniform_grid(0.0, 1.0, DEFAULT_GRID_POINTS), h)
}

/// Histogram densities on a regular grid over [0, 1]².
///
/// `densities[j][i]` holds the cell with x in bin `i` and y in bin `j`, so
/// rows run along the y axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid2D {
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
    pub densities: Vec<Vec<f64>>,
    pub n_source: usize,
    pub smoothed: bool,
    pub smooth_sigma: f64,
}

impl DensityGrid2D {
    pub fn nx(&self) -> usize {
        self.x_edges.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.y_edges.len() - 1
    }

    pub fn cell_area(&self) -> f64 {
        1.0 / (self.nx() * self.ny()) as f64
    }

    /// Σ ρ_ij · Δx · Δy.
    pub fn mass(&self) -> f64 {
        self.cell_area() * accum::sum(self.densities.iter().flatten().copied())
    }
}

fn bin_of(v: f64, n: usize) -> usize {
    ((v.clamp(0.0, 1.0) * n as f64) as usize).min(n - 1)
}

/// Joint histogram of `(x, y)` points over [0, 1]², values clamped into range.
pub fn joint_histogram(points: &[(f64, f64)], nx: usize, ny: usize) -> Result<DensityGrid2D> {
    if points.is_empty() {
        return Err(Error::EmptyInput("joint histogram points"));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument("histogram needs at least one bin per axis".into()));
    }
    let mut counts = vec![vec![0usize; nx]; ny];
    for &(x, y) in points {
        counts[bin_of(y, ny)][bin_of(x, nx)] += 1;
    }
    let scale = (nx * ny) as f64 / points.len() as f64;
    Ok(DensityGrid2D {
        x_edges: uniform_grid(0.0, 1.0, nx + 1),
        y_edges: uniform_grid(0.0, 1.0, ny + 1),
        densities: counts
            .into_iter()
            .map(|row| row.into_iter().map(|c| c as f64 * scale).collect())
            .collect(),
        n_source: points.len(),
        smoothed: false,
        smooth_sigma: 0.0,
    })
}

fn kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    (-radius..=radius).map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp()).collect()
}

/// Spread every cell over its in-range neighbours with weights renormalised
/// to sum to one, so nothing leaks past the border.
fn blur_line(line: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = line.len() as i64;
    let radius = (weights.len() / 2) as i64;
    let mut out = vec![Accumulator::new(); line.len()];
    for (i, &v) in line.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let i = i as i64;
        let lo = (i - radius).max(0);
        let hi = (i + radius).min(n - 1);
        let w = |t: i64| weights[(t - i + radius) as usize];
        let total: Accumulator = (lo..=hi).map(w).collect();
        let total = total.value();
        for t in lo..=hi {
            out[t as usize].add(v * w(t) / total);
        }
    }
    out.into_iter().map(|a| a.value()).collect()
}

/// Separable truncated Gaussian blur with a standard deviation of
/// `sigma_cells` cells. A zero sigma returns the grid unchanged.
pub fn gaussian_smooth(grid: &DensityGrid2D, sigma_cells: f64) -> Result<DensityGrid2D> {
    if !(sigma_cells >= 0.0 && sigma_cells.is_finite()) {
        return Err(Error::InvalidArgument(format!("smoothing sigma must be >= 0, got {sigma_cells}")));
    }
    if sigma_cells == 0.0 {
        return Ok(grid.clone());
    }
    let weights = kernel(sigma_cells);
    let rows: Vec<Vec<f64>> = grid.densities.iter().map(|r| blur_line(r, &weights)).collect();
    let (ny, nx) = (rows.len(), rows[0].len());
    let mut out = vec![vec![0.0; nx]; ny];
    for i in 0..nx {
        let column: Vec<f64> = rows.iter().map(|r| r[i]).collect();
        for (j, v) in blur_line(&column, &weights).into_iter().enumerate() {
            out[j][i] = v;
        }
    }
    Ok(DensityGrid2D {
        densities: out,
        smoothed: true,
        smooth_sigma: if grid.smoothed {
            (grid.smooth_sigma.powi(2) + sigma_cells.powi(2)).sqrt()
        } else {
            sigma_cells
        },
        ..grid.clone()
    })
}
