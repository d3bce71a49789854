//! Affine and polynomial least-squares calibration.

use crate::accum::{self, Accumulator};
use crate::error::{Error, Result};
use crate::pairs::ScoredPair;

use super::{CalibrationModel, Method, TrainMeta};

/// Ordinary least squares `y ≈ a·x + b`. A negative slope is allowed but
/// flagged in the model's diagnostics.
pub fn fit_linear(pairs: &[ScoredPair]) -> Result<CalibrationModel> {
    if pairs.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: pairs.len() });
    }
    let x: Vec<f64> = pairs.iter().map(|p| p.model_score).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.human_score).collect();
    if x.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::ZeroVariance("model scores"));
    }
    let (mx, my) = (accum::mean(&x), accum::mean(&y));
    let mut sxy = Accumulator::new();
    let mut sxx = Accumulator::new();
    for (&xi, &yi) in x.iter().zip(&y) {
        sxy.add((xi - mx) * (yi - my));
        sxx.add((xi - mx) * (xi - mx));
    }
    let a = sxy.value() / sxx.value();
    let b = my - a * mx;

    let mut meta = TrainMeta::for_pairs(pairs);
    meta.sse = Some(accum::sum(x.iter().zip(&y).map(|(&xi, &yi)| (a * xi + b - yi).powi(2))));
    if a < 0.0 {
        log::warn!("linear calibration fitted a negative slope ({a})");
        meta.flags.push("negative_slope".into());
    }
    CalibrationModel::parametric(Method::Linear, vec![a, b], meta)
}

/// Least-squares polynomial of the given degree (2, 3 or 4), solved by
/// Householder QR on the Vandermonde design. Coefficients are stored in
/// ascending order `a₀ … a_degree`.
pub fn fit_polynomial(pairs: &[ScoredPair], degree: usize) -> Result<CalibrationModel> {
    let method = match degree {
        2 => Method::Poly2,
        3 => Method::Poly3,
        4 => Method::Poly4,
        d => return Err(Error::InvalidArgument(format!("polynomial degree must be 2, 3 or 4, got {d}"))),
    };
    let n = pairs.len();
    if n < degree + 1 {
        return Err(Error::InsufficientData { needed: degree + 1, got: n });
    }
    let x: Vec<f64> = pairs.iter().map(|p| p.model_score).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.human_score).collect();

    let mut sorted = x.clone();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.len() < degree + 1 {
        return Err(Error::RankDeficient { degree, distinct: sorted.len() });
    }

    let columns: Vec<Vec<f64>> =
        (0..=degree).map(|k| x.iter().map(|&xi| xi.powi(k as i32)).collect()).collect();
    let coeffs = solve_least_squares(columns, y.clone())
        .ok_or(Error::RankDeficient { degree, distinct: sorted.len() })?;

    let mut meta = TrainMeta::for_pairs(pairs);
    let model = CalibrationModel::parametric(method, coeffs, meta.clone())?;
    meta.sse = Some(accum::sum(
        x.iter().zip(&y).map(|(&xi, &yi)| (model.predict_unclamped(xi) - yi).powi(2)),
    ));
    let monotone = (0..=400).map(|k| -1.0 + k as f64 / 200.0).collect::<Vec<_>>().windows(2).all(|w| {
        model.predict_unclamped(w[0]) <= model.predict_unclamped(w[1])
    });
    if !monotone {
        meta.flags.push("non_monotone_on_[-1,1]".into());
    }
    CalibrationModel::parametric(method, model.params().to_vec(), meta)
}

/// Minimizes `‖A·β − b‖₂` for a column-major `A` (n × p, n ≥ p) with
/// Householder reflections. Returns `None` when `A` is numerically rank
/// deficient.
pub(crate) fn solve_least_squares(mut cols: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let p = cols.len();
    let n = b.len();
    debug_assert!(cols.iter().all(|c| c.len() == n) && n >= p);
    let scale = cols
        .iter()
        .map(|c| accum::sum(c.iter().map(|v| v * v)).sqrt())
        .fold(0.0f64, f64::max);
    let mut diag = vec![0.0; p];

    for k in 0..p {
        let norm = accum::sum(cols[k][k..].iter().map(|v| v * v)).sqrt();
        if norm <= 1e-12 * scale {
            return None;
        }
        let alpha = if cols[k][k] > 0.0 { -norm } else { norm };
        // v = x − α e₁, stored in place of column k below the diagonal
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2 = accum::sum(v.iter().map(|t| t * t));
        diag[k] = alpha;
        for col in cols.iter_mut().skip(k + 1) {
            let proj = accum::dot(&v, &col[k..]) * 2.0 / vnorm2;
            for (c, vi) in col[k..].iter_mut().zip(&v) {
                *c -= proj * vi;
            }
        }
        let proj = accum::dot(&v, &b[k..]) * 2.0 / vnorm2;
        for (c, vi) in b[k..].iter_mut().zip(&v) {
            *c -= proj * vi;
        }
    }

    let mut beta = vec![0.0; p];
    for k in (0..p).rev() {
        let mut s = Accumulator::new();
        s.add(b[k]);
        for j in k + 1..p {
            s.add(-cols[j][k] * beta[j]);
        }
        beta[k] = s.value() / diag[k];
    }
    Some(beta)
}
