//! Unit-sphere geometry: normalization, cosine similarity and the isotropic
//! baseline that the anisotropic empirical distribution is contrasted with.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::accum::{self, Accumulator};
use crate::error::{Error, Result};

/// Embedding dimension of the reference encoder.
pub const DEFAULT_DIMENSION: usize = 768;

/// Tolerance on `‖v‖ − 1` accepted by [`cosine`].
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// An identifier plus its embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    pub vector: Vec<f64>,
}

impl EmbeddingRecord {
    pub fn new(id: impl Into<String>, vector: Vec<f64>) -> Self {
        EmbeddingRecord { id: id.into(), vector }
    }

    pub fn dimension(&self) -> usize {
        self.vector.len()
    }

    /// Returns a copy whose vector lies on the unit sphere.
    pub fn normalized(&self) -> Result<Self> {
        Ok(EmbeddingRecord { id: self.id.clone(), vector: normalize(&self.vector)? })
    }
}

/// Pairwise cosine statistics of a vector set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsotropyStats {
    pub n_pairs: u64,
    pub mean_cos: f64,
    pub std_cos: f64,
    pub dimension: usize,
}

pub fn norm(v: &[f64]) -> f64 {
    accum::sum(v.iter().map(|x| x * x)).sqrt()
}

/// Scales `v` to unit ℓ₂ norm.
pub fn normalize(v: &[f64]) -> Result<Vec<f64>> {
    let n = norm(v);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::DegenerateEmbedding);
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Inner product of two unit vectors, clamped to `[-1, 1]`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), found: v.len() });
    }
    for w in [u, v] {
        let n = norm(w);
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "cosine expects unit vectors, got norm {n}"
            )));
        }
    }
    Ok(accum::dot(u, v).clamp(-1.0, 1.0))
}

/// Draws `n` points uniformly from the unit sphere in ℝ^d by normalizing
/// i.i.d. standard Gaussian vectors. Deterministic for a given seed.
pub fn sample_uniform_sphere(d: usize, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::EmptyInput("sample count"));
    }
    Ok(SphereSampler::new(d, seed)?.take(n).collect())
}

/// Endless stream of uniform unit vectors; the first `n` items equal
/// `sample_uniform_sphere(d, n, seed)`.
pub struct SphereSampler {
    d: usize,
    rng: ChaCha8Rng,
}

impl SphereSampler {
    pub fn new(d: usize, seed: u64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument(format!("sphere dimension must be >= 2, got {d}")));
        }
        Ok(SphereSampler { d, rng: ChaCha8Rng::seed_from_u64(seed) })
    }
}

impl Iterator for SphereSampler {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        loop {
            let g: Vec<f64> = (0..self.d).map(|_| StandardNormal.sample(&mut self.rng)).collect();
            // a zero Gaussian vector has probability zero; redraw if it ever happens
            if let Ok(u) = normalize(&g) {
                return Some(u);
            }
        }
    }
}

/// Cosine statistics over `n_pairs` independent uniform pairs, streamed so
/// memory stays flat. Matches [`disjoint_pair_stats`] on
/// `sample_uniform_sphere(d, 2 * n_pairs, seed)`.
pub fn sampled_pair_stats(d: usize, n_pairs: u64, seed: u64) -> Result<IsotropyStats> {
    if n_pairs == 0 {
        return Err(Error::EmptyInput("pair count"));
    }
    let mut sampler = SphereSampler::new(d, seed)?;
    let mut s1 = Accumulator::new();
    let mut s2 = Accumulator::new();
    for _ in 0..n_pairs {
        let (u, v) = (sampler.next().unwrap(), sampler.next().unwrap());
        let c = cosine(&u, &v)?;
        s1.add(c);
        s2.add(c * c);
    }
    Ok(pair_stats(s1, s2, n_pairs, d))
}

/// Mean and population standard deviation of the cosine over all unordered
/// distinct pairs, accumulated in input order.
pub fn isotropy_stats(vectors: &[Vec<f64>]) -> Result<IsotropyStats> {
    if vectors.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: vectors.len() });
    }
    let dimension = vectors[0].len();
    if let Some(bad) = vectors.iter().find(|v| v.len() != dimension) {
        return Err(Error::DimensionMismatch { expected: dimension, found: bad.len() });
    }
    let mut s1 = Accumulator::new();
    let mut s2 = Accumulator::new();
    let mut n_pairs = 0u64;
    for (i, u) in vectors.iter().enumerate() {
        for v in &vectors[i + 1..] {
            let c = cosine(u, v)?;
            s1.add(c);
            s2.add(c * c);
            n_pairs += 1;
        }
    }
    Ok(pair_stats(s1, s2, n_pairs, dimension))
}

/// Statistics over independent disjoint pairs `(v[2k], v[2k+1])`.
pub fn disjoint_pair_stats(vectors: &[Vec<f64>]) -> Result<IsotropyStats> {
    if vectors.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: vectors.len() });
    }
    let dimension = vectors[0].len();
    let mut s1 = Accumulator::new();
    let mut s2 = Accumulator::new();
    let mut n_pairs = 0u64;
    for pair in vectors.chunks_exact(2) {
        let c = cosine(&pair[0], &pair[1])?;
        s1.add(c);
        s2.add(c * c);
        n_pairs += 1;
    }
    Ok(pair_stats(s1, s2, n_pairs, dimension))
}

fn pair_stats(s1: Accumulator, s2: Accumulator, n_pairs: u64, dimension: usize) -> IsotropyStats {
    let n = n_pairs as f64;
    let mean = s1.value() / n;
    let var = (s2.value() / n - mean * mean).max(0.0);
    IsotropyStats { n_pairs, mean_cos: mean, std_cos: var.sqrt(), dimension }
}
