//! Seeded synthetic data for tests, benchmarks and the randomized
//! invariance suite.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use crate::calibrators::{fit_isotonic, CalibrationModel};
use crate::pairs::ScoredPair;
use crate::stability::{PerturbationPair, PERTURBATION_TYPES};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Pairs shaped like an anisotropic encoder on a graded similarity
/// benchmark: human scores spread over [0, 1], model scores squeezed into
/// a high band and rising with the human score.
pub fn sts_like_pairs(n: usize, seed: u64) -> Vec<ScoredPair> {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, 0.08).unwrap();
    (0..n)
        .map(|k| {
            let human: f64 = (r.random::<f64>() * 5.0).round() / 5.0 * 0.8 + r.random::<f64>() * 0.2;
            let human = human.clamp(0.0, 1.0);
            let model = (0.3 + 0.6 * human.powf(1.4) + noise.sample(&mut r)).clamp(-1.0, 1.0);
            ScoredPair { id: k.to_string(), model_score: model, human_score: human }
        })
        .collect()
}

/// Random pairs with a monotone trend plus noise; `n` ≥ 2.
pub fn noisy_monotone_pairs<R: Rng>(r: &mut R, n: usize) -> Vec<ScoredPair> {
    let slope = r.random_range(0.2..2.0);
    let offset = r.random_range(-0.5..0.5);
    let noise = r.random_range(0.0..0.3);
    (0..n)
        .map(|k| {
            let x: f64 = r.random_range(-1.0..1.0);
            let y = (slope * x + offset + noise * r.random_range(-1.0..1.0)).clamp(0.0, 1.0);
            ScoredPair { id: k.to_string(), model_score: x, human_score: y }
        })
        .collect()
}

/// An isotonic model fitted to random noisy monotone data.
pub fn random_isotonic_model<R: Rng>(r: &mut R) -> CalibrationModel {
    let n = r.random_range(2..60);
    fit_isotonic(&noisy_monotone_pairs(r, n)).expect("n >= 2")
}

/// Draw a score in [−1, 1], landing on or next to a model breakpoint often
/// enough to exercise plateau edges.
pub fn score_near_breakpoints<R: Rng>(r: &mut R, breakpoints: &[f64]) -> f64 {
    let roll: f64 = r.random();
    if breakpoints.is_empty() || roll >= 0.3 {
        return r.random_range(-1.0..=1.0);
    }
    let b = breakpoints[r.random_range(0..breakpoints.len())];
    let v = match r.random_range(0..3) {
        0 => b,
        1 => b.next_up(),
        _ => b.next_down(),
    };
    v.clamp(-1.0, 1.0)
}

/// A stability dataset with `per_type` pairs for each known perturbation
/// type, scores drawn around a type-specific centre.
pub fn perturbation_pairs(per_type: usize, seed: u64) -> Vec<PerturbationPair> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for (t, label) in PERTURBATION_TYPES.iter().enumerate() {
        let centre = 0.8 + 0.02 * t as f64;
        for k in 0..per_type {
            let score = (centre + r.random_range(-0.12..0.12)).clamp(-1.0, 1.0);
            out.push(PerturbationPair::scored(format!("{label}-{k}"), *label, score));
        }
    }
    out
}
