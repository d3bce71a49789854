//! Isotonic regression by pool-adjacent-violators.

use crate::accum::Accumulator;
use crate::error::{Error, Result};
use crate::pairs::ScoredPair;

use super::{CalibrationModel, TrainMeta};

/// Weighted least-squares non-decreasing fit of `y` (already ordered by the
/// regressor). Returns one fitted value per input point.
///
/// Panics if `y` and `w` differ in length.
pub fn pava(y: &[f64], w: &[f64]) -> Vec<f64> {
    assert_eq!(y.len(), w.len(), "values and weights must align");
    // each block: (weighted sum, total weight, number of points)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&yi, &wi) in y.iter().zip(w) {
        blocks.push((yi * wi, wi, 1));
        while blocks.len() >= 2 {
            let (s2, w2, c2) = blocks[blocks.len() - 1];
            let (s1, w1, c1) = blocks[blocks.len() - 2];
            // merge while the previous block mean exceeds the last one
            if s1 * w2 <= s2 * w1 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s1 + s2, w1 + w2, c1 + c2);
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (s, wsum, count) in blocks {
        out.extend(std::iter::repeat_n(s / wsum, count));
    }
    out
}

/// Sorts by `x` and pools equal `x` values into one point whose weight is the
/// multiplicity and whose value is the mean `y`.
/// Returns `(xs, ys, weights)` with `xs` strictly ascending.
pub fn merge_duplicates(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let xv = x[order[i]];
        let mut acc = Accumulator::new();
        let mut j = i;
        while j < order.len() && x[order[j]] == xv {
            acc.add(y[order[j]]);
            j += 1;
        }
        let count = (j - i) as f64;
        xs.push(xv);
        ys.push(acc.value() / count);
        ws.push(count);
        i = j;
    }
    (xs, ys, ws)
}

/// Fits a non-decreasing step function from model scores to human scores.
///
/// The stored table keeps one breakpoint per constant level: the smallest
/// model score of that level.
pub fn fit_isotonic(pairs: &[ScoredPair]) -> Result<CalibrationModel> {
    if pairs.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: pairs.len() });
    }
    let x: Vec<f64> = pairs.iter().map(|p| p.model_score).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.human_score).collect();
    let (xs, ys, ws) = merge_duplicates(&x, &y);
    let fitted = pava(&ys, &ws);

    let mut breakpoints = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (&xv, &v) in xs.iter().zip(&fitted) {
        let v = v.clamp(0.0, 1.0);
        if values.last() != Some(&v) {
            breakpoints.push(xv);
            values.push(v);
        }
    }

    let mut meta = TrainMeta::for_pairs(pairs);
    meta.flags.push(format!("levels={}", values.len()));
    let mut model = CalibrationModel::isotonic(breakpoints, values, meta)?;
    let sse: Accumulator =
        x.iter().zip(&y).map(|(&xi, &yi)| (model.apply(xi) - yi).powi(2)).collect();
    model.train_meta.sse = Some(sse.value());
    Ok(model)
}
