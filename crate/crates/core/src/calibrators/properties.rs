//! Randomized properties shared by every fitted transform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::metrics::{mbe, spearman, spearman_of};
use crate::pairs::{from_scores, human_scores, model_scores};
use crate::synth::noisy_monotone_pairs;

/// Weighted isotonic least squares by brute force: try every split of the
/// sequence into contiguous blocks, keep the partitions whose block means
/// are non-decreasing, return the one with the smallest weighted SSE.
fn partition_oracle(y: &[f64], w: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        let mut fitted = Vec::with_capacity(n);
        let mut start = 0;
        let mut prev = f64::NEG_INFINITY;
        let mut feasible = true;
        for end in 1..=n {
            if end < n && mask & (1 << (end - 1)) == 0 {
                continue;
            }
            let wsum: f64 = w[start..end].iter().sum();
            let mean = y[start..end].iter().zip(&w[start..end]).map(|(a, b)| a * b).sum::<f64>() / wsum;
            if mean < prev - 1e-12 {
                feasible = false;
                break;
            }
            prev = mean;
            fitted.extend(std::iter::repeat_n(mean, end - start));
            start = end;
        }
        if !feasible {
            continue;
        }
        let sse: f64 = fitted.iter().zip(y).zip(w).map(|((f, a), b)| b * (f - a) * (f - a)).sum();
        if best.as_ref().is_none_or(|(s, _)| sse < *s) {
            best = Some((sse, fitted));
        }
    }
    best.unwrap().1
}

#[test]
fn pava_matches_partition_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1_000 {
        let n = rng.random_range(1..=8);
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
        let got = pava(&y, &w);
        for (a, b) in got.iter().zip(partition_oracle(&y, &w)) {
            assert!((a - b).abs() <= 1e-9, "y={y:?} w={w:?}");
        }
    }
}

#[test]
fn fit_isotonic_matches_oracle_through_duplicates() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1_000 {
        let n = rng.random_range(2..=8);
        let xs: Vec<f64> = (0..n).map(|k| -0.9 + 0.2 * k as f64).collect();
        let mut mx = Vec::new();
        let mut my = Vec::new();
        let mut ys = Vec::new();
        let mut ws = Vec::new();
        for &x in &xs {
            let mult = rng.random_range(1..=3);
            let vals: Vec<f64> = (0..mult).map(|_| rng.random::<f64>()).collect();
            ys.push(vals.iter().sum::<f64>() / mult as f64);
            ws.push(mult as f64);
            for v in vals {
                mx.push(x);
                my.push(v);
            }
        }
        let model = fit_isotonic(&from_scores(&mx, &my)).unwrap();
        for (x, want) in xs.iter().zip(partition_oracle(&ys, &ws)) {
            assert!((model.apply(*x) - want).abs() <= 1e-9);
        }
    }
}

fn monotone_fits(pairs: &[ScoredPair]) -> Vec<CalibrationModel> {
    let mut out = vec![fit_isotonic(pairs).unwrap(), fit_sigmoid(pairs).unwrap(), fit_beta(pairs).unwrap()];
    let lin = fit_linear(pairs).unwrap();
    if lin.params()[0] >= 0.0 {
        out.push(lin);
    }
    out
}

#[test]
fn monotone_models_never_invert() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data = noisy_monotone_pairs(&mut rng, 300);
    for model in monotone_fits(&data) {
        assert!(model.is_monotone());
        for _ in 0..100_000 {
            let a: f64 = rng.random_range(-1.0..=1.0);
            let b: f64 = rng.random_range(-1.0..=1.0);
            let (lo, hi) = (a.min(b), a.max(b));
            assert!(model.apply(lo) <= model.apply(hi), "{} at {lo} {hi}", model.method());
        }
    }
}

#[test]
fn least_squares_fits_have_zero_training_bias() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let data = noisy_monotone_pairs(&mut rng, 200);
        let x = model_scores(&data);
        let y = human_scores(&data);
        let iso = fit_isotonic(&data).unwrap();
        assert!(mbe(&iso.calibrate_pairs(&data)).unwrap().abs() <= 1e-9);
        for method in [Method::Linear, Method::Poly2, Method::Poly3, Method::Poly4] {
            let m = fit(method, &data).unwrap();
            let residual = crate::accum::sum(x.iter().zip(&y).map(|(&a, &b)| m.predict_unclamped(a) - b));
            assert!((residual / x.len() as f64).abs() <= 1e-9, "{method}");
        }
    }
}

#[test]
fn monotone_fits_preserve_spearman() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let data = noisy_monotone_pairs(&mut rng, 150);
        let Ok(base) = spearman(&data) else { continue };
        let (x, y) = (model_scores(&data), human_scores(&data));
        for model in monotone_fits(&data) {
            // clamping a line ties up correctly ordered points at the edges,
            // so the linear check uses the raw affine output
            let scores: Vec<f64> = if model.method() == Method::Linear {
                x.iter().map(|&v| model.predict_unclamped(v)).collect()
            } else {
                model.apply_all(&x)
            };
            // a fit flat over the data has undefined rank correlation
            if let Ok(s) = spearman_of(&scores, &y) {
                assert!(s >= base - 1e-12, "{}: {s} < {base}", model.method());
            }
        }
    }
}

#[test]
fn strictly_increasing_transforms_leave_spearman_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let data = noisy_monotone_pairs(&mut rng, 400);
    let base = spearman(&data).unwrap();
    let x = model_scores(&data);
    let y = human_scores(&data);
    let beta = CalibrationModel::parametric(Method::Beta, vec![2.0, 3.0, 0.5, 0.5], TrainMeta::default()).unwrap();
    let t = beta.apply_all(&x);
    assert!((spearman_of(&t, &y).unwrap() - base).abs() <= 1e-12);
}

#[test]
fn isotonic_refit_is_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let n = rng.random_range(2..80);
        let data = noisy_monotone_pairs(&mut rng, n);
        let m = fit_isotonic(&data).unwrap();
        let x = model_scores(&data);
        let again = fit_isotonic(&from_scores(&x, &m.apply_all(&x))).unwrap();
        for &b in m.breakpoints() {
            assert!((again.apply(b) - m.apply(b)).abs() <= 1e-9);
        }
    }
}

#[test]
fn serialization_round_trip_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data = noisy_monotone_pairs(&mut rng, 120);
    for method in [Method::Linear, Method::Isotonic, Method::Sigmoid, Method::Poly2, Method::Poly3, Method::Poly4, Method::Beta] {
        let m = fit(method, &data).unwrap();
        let back = CalibrationModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        for _ in 0..10_000 {
            let x = rng.random_range(-1.0..=1.0);
            assert_eq!(back.apply(x).to_bits(), m.apply(x).to_bits());
        }
    }
}

#[test]
fn calibrated_data_gives_near_zero_ece_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x: Vec<f64> = (0..2_000).map(|_| rng.random::<f64>()).collect();
    let data = from_scores(&x, &x);
    let table = compare_methods(&data, 10).unwrap();
    let base = table.baseline().spearman;
    for row in &table.rows {
        let Some(method) = row.method else { continue };
        let model = row.model.as_ref().unwrap();
        if !model.is_monotone() {
            continue;
        }
        let r = row.report.as_ref().unwrap();
        // neither a logistic curve nor a beta CDF of (x + 1) / 2 can be the
        // identity on [0, 1], so their best fits stay a couple of points off
        let tol = if matches!(method, Method::Sigmoid | Method::Beta) { 0.03 } else { 0.01 };
        assert!(r.ece < tol, "{method}: {}", r.ece);
        assert!((r.spearman - base).abs() < 1e-12, "{method}");
    }
}
