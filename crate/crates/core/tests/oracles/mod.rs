//! Independent reference implementations used by the acceptance gate.
//! Written for clarity, not speed, and sharing no code with the library.

/// Weighted isotonic least squares by enumerating every split of the
/// sequence into contiguous blocks.
pub fn isotonic_by_partitions(y: &[f64], w: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut best_sse = f64::INFINITY;
    let mut best = Vec::new();
    for mask in 0u32..(1 << (n - 1)) {
        let mut cuts = vec![0];
        cuts.extend((1..n).filter(|k| mask & (1 << (k - 1)) != 0));
        cuts.push(n);
        let means: Vec<f64> = cuts
            .windows(2)
            .map(|c| {
                let ws: f64 = w[c[0]..c[1]].iter().sum();
                (c[0]..c[1]).map(|i| y[i] * w[i]).sum::<f64>() / ws
            })
            .collect();
        if means.windows(2).any(|m| m[1] < m[0] - 1e-12) {
            continue;
        }
        let mut fitted = Vec::with_capacity(n);
        for (c, m) in cuts.windows(2).zip(&means) {
            fitted.extend(std::iter::repeat_n(*m, c[1] - c[0]));
        }
        let sse: f64 = (0..n).map(|i| w[i] * (fitted[i] - y[i]).powi(2)).sum();
        if sse < best_sse {
            best_sse = sse;
            best = fitted;
        }
    }
    best
}

/// Gaussian KDE as a plain double loop with a two-term compensated sum.
pub fn kde_double_loop(xs: &[f64], grid: &[f64], h: f64) -> Vec<f64> {
    let norm = xs.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt();
    grid.iter()
        .map(|&g| {
            let (mut hi, mut lo) = (0.0f64, 0.0f64);
            for &x in xs {
                let k = (-((g - x) / h).powi(2) / 2.0).exp();
                let t = hi + k;
                lo += if hi.abs() >= k { (hi - t) + k } else { (k - t) + hi };
                hi = t;
            }
            (hi + lo) / norm
        })
        .collect()
}

pub fn silverman_direct(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    1.06 * sd * n.powf(-0.2)
}

/// (n, mean, population std, fraction ≥ tau).
pub fn group_stats(scores: &[f64], tau: f64) -> (usize, f64, f64, f64) {
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    (scores.len(), mean, var.sqrt(), scores.iter().filter(|&&s| s >= tau).count() as f64 / n)
}
