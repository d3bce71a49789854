//! Model–human alignment metrics: RMSE, MBE, ECE, Pearson and Spearman.
//!
//! All reductions use compensated summation in input order.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::accum::{self, Accumulator};
use crate::error::{Error, Result};
use crate::pairs::ScoredPair;

pub const DEFAULT_BINS: usize = 10;

/// One equal-width reliability bin on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// Mean human score in the bin.
    pub acc: f64,
    /// Mean model score in the bin.
    pub conf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EceDetail {
    pub ece: f64,
    pub bins: Vec<Bin>,
}

impl EceDetail {
    /// Recomputes ECE from the bin table.
    pub fn recompute(&self) -> f64 {
        let n: usize = self.bins.iter().map(|b| b.count).sum();
        accum::sum(
            self.bins.iter().map(|b| b.count as f64 / n as f64 * (b.acc - b.conf).abs()),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub n_bins: usize,
    pub rmse: f64,
    pub mbe: f64,
    pub ece: f64,
    pub pearson: f64,
    pub spearman: f64,
    pub bins: Vec<Bin>,
}

fn split(pairs: &[ScoredPair]) -> (Vec<f64>, Vec<f64>) {
    pairs.iter().map(|p| (p.model_score, p.human_score)).unzip()
}

fn non_empty(pairs: &[ScoredPair]) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("scored pairs"));
    }
    Ok(())
}

pub fn rmse(pairs: &[ScoredPair]) -> Result<f64> {
    non_empty(pairs)?;
    let (m, h) = split(pairs);
    Ok(rmse_of(&m, &h))
}

pub fn mbe(pairs: &[ScoredPair]) -> Result<f64> {
    non_empty(pairs)?;
    let (m, h) = split(pairs);
    Ok(mbe_of(&m, &h))
}

pub fn ece(pairs: &[ScoredPair], n_bins: usize) -> Result<EceDetail> {
    non_empty(pairs)?;
    let (m, h) = split(pairs);
    ece_of(&m, &h, n_bins)
}

pub fn pearson(pairs: &[ScoredPair]) -> Result<f64> {
    let (m, h) = split(pairs);
    pearson_of(&m, &h)
}

pub fn spearman(pairs: &[ScoredPair]) -> Result<f64> {
    let (m, h) = split(pairs);
    spearman_of(&m, &h)
}

/// All five metrics in one report. Values are bit-identical to the
/// individual metric functions.
pub fn evaluate_all(pairs: &[ScoredPair], n_bins: usize) -> Result<MetricsReport> {
    non_empty(pairs)?;
    let (m, h) = split(pairs);
    let detail = ece_of(&m, &h, n_bins)?;
    Ok(MetricsReport {
        n: pairs.len(),
        n_bins,
        rmse: rmse_of(&m, &h),
        mbe: mbe_of(&m, &h),
        ece: detail.ece,
        pearson: pearson_of(&m, &h)?,
        spearman: spearman_of(&m, &h)?,
        bins: detail.bins,
    })
}

pub fn rmse_of(model: &[f64], human: &[f64]) -> f64 {
    let sq = accum::sum(model.iter().zip(human).map(|(m, h)| (m - h) * (m - h)));
    (sq / model.len() as f64).sqrt()
}

pub fn mbe_of(model: &[f64], human: &[f64]) -> f64 {
    accum::sum(model.iter().zip(human).map(|(m, h)| m - h)) / model.len() as f64
}

/// Equal-width ECE on `[0, 1]`. Model scores are clamped into `[0, 1]` only
/// to pick a bin; `conf` averages the unclamped scores. The last bin is
/// right-closed.
pub fn ece_of(model: &[f64], human: &[f64], n_bins: usize) -> Result<EceDetail> {
    if model.is_empty() {
        return Err(Error::EmptyInput("scored pairs"));
    }
    if n_bins == 0 {
        return Err(Error::InvalidArgument("ECE needs at least one bin".into()));
    }
    let mut counts = vec![0usize; n_bins];
    let mut acc = vec![Accumulator::new(); n_bins];
    let mut conf = vec![Accumulator::new(); n_bins];
    for (&m, &h) in model.iter().zip(human) {
        let b = bin_index(m, n_bins);
        counts[b] += 1;
        acc[b].add(h);
        conf[b].add(m);
    }
    let n = model.len() as f64;
    let width = 1.0 / n_bins as f64;
    let bins: Vec<Bin> = (0..n_bins)
        .map(|b| {
            let c = counts[b];
            let (a, f) = if c == 0 {
                (0.0, 0.0)
            } else {
                (acc[b].value() / c as f64, conf[b].value() / c as f64)
            };
            Bin {
                lower: b as f64 * width,
                upper: if b + 1 == n_bins { 1.0 } else { (b + 1) as f64 * width },
                count: c,
                acc: a,
                conf: f,
            }
        })
        .collect();
    let ece = accum::sum(bins.iter().map(|b| b.count as f64 / n * (b.acc - b.conf).abs()));
    Ok(EceDetail { ece, bins })
}

fn bin_index(score: f64, n_bins: usize) -> usize {
    let x = score.clamp(0.0, 1.0);
    ((x * n_bins as f64) as usize).min(n_bins - 1)
}

fn is_constant(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}

/// Pearson correlation via the centered-sum formula.
pub fn pearson_of(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: x.len() });
    }
    if is_constant(x) {
        return Err(Error::UndefinedCorrelation("model scores"));
    }
    if is_constant(y) {
        return Err(Error::UndefinedCorrelation("human scores"));
    }
    let mx = accum::mean(x);
    let my = accum::mean(y);
    let mut sxy = Accumulator::new();
    let mut sxx = Accumulator::new();
    let mut syy = Accumulator::new();
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    let r = sxy.value() / (sxx.value().sqrt() * syy.value().sqrt());
    Ok(r.clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the average of the positions they span.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && xs[order[j]].total_cmp(&xs[order[i]]) == Ordering::Equal {
            j += 1;
        }
        // positions i..j (0-based) share rank mean((i+1)..=j)
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

pub fn spearman_of(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.len() >= 2 && is_constant(x) {
        return Err(Error::UndefinedCorrelation("model scores"));
    }
    if x.len() >= 2 && is_constant(y) {
        return Err(Error::UndefinedCorrelation("human scores"));
    }
    pearson_of(&average_ranks(x), &average_ranks(y))
}
