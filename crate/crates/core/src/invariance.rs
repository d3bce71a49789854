//! Executable order-preservation checks for score transforms.
//!
//! Each checker takes the transform as a plain function so that fitted
//! models and hand-built negative controls go through the same code.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::calibrators::CalibrationModel;
use crate::error::{Error, Result};
use crate::pairs::ScoredPair;
use crate::synth::{self, score_near_breakpoints};
use crate::thresholds::hcs_threshold;

pub const VIOLATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: u64,
    pub inputs: Vec<f64>,
    pub outputs: Vec<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub n_trials: u64,
    pub violations: u64,
    pub witness: Option<Witness>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Sum counts; keep the witness from the earliest trial.
    pub fn merge(mut self, other: InvarianceReport) -> InvarianceReport {
        self.n_trials += other.n_trials;
        self.violations += other.violations;
        self.witness = match (self.witness, other.witness) {
            (Some(a), Some(b)) => Some(if b.trial < a.trial { b } else { a }),
            (a, b) => a.or(b),
        };
        self
    }

    fn record(&mut self, count: u64, witness: impl FnOnce() -> Witness) {
        self.violations += count;
        if count > 0 && self.witness.is_none() {
            self.witness = Some(witness());
        }
    }

    fn offset_trials(mut self, base: u64) -> Self {
        if let Some(w) = &mut self.witness {
            w.trial += base;
        }
        self
    }
}

/// For each `(a, b)` with `a ≥ b`, flag `g(a) < g(b) − tol`.
pub fn check_order_preservation<F: Fn(f64) -> f64>(g: F, score_pairs: &[(f64, f64)]) -> Result<InvarianceReport> {
    let mut report = InvarianceReport::default();
    for (k, &(a, b)) in score_pairs.iter().enumerate() {
        if !(a >= b && (-1.0..=1.0).contains(&a) && (-1.0..=1.0).contains(&b)) {
            return Err(Error::InvalidArgument(format!(
                "ordered pair {k} must satisfy 1 >= a >= b >= -1, got ({a}, {b})"
            )));
        }
        let (ga, gb) = (g(a), g(b));
        report.n_trials += 1;
        if ga < gb - VIOLATION_TOLERANCE {
            report.record(1, || Witness {
                trial: k as u64,
                inputs: vec![a, b],
                outputs: vec![ga, gb],
                detail: "order inverted".into(),
            });
        }
    }
    Ok(report)
}

/// Every candidate that maximizes the raw score must still maximize the
/// transformed score. Ties may grow, never shrink.
pub fn check_nn_preservation<F: Fn(f64) -> f64>(g: F, candidates: &[f64]) -> Result<InvarianceReport> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("nearest-neighbour candidates"));
    }
    let raw_max = candidates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mapped: Vec<f64> = candidates.iter().map(|&c| g(c)).collect();
    let mapped_max = mapped.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dropped = candidates
        .iter()
        .zip(&mapped)
        .filter(|&(&c, &m)| c == raw_max && m < mapped_max - VIOLATION_TOLERANCE)
        .count() as u64;
    let mut report = InvarianceReport { n_trials: 1, ..Default::default() };
    report.record(dropped, || Witness {
        trial: 0,
        inputs: candidates.to_vec(),
        outputs: mapped.clone(),
        detail: format!("{dropped} raw nearest neighbour(s) left the calibrated argmax"),
    });
    Ok(report)
}

/// Every edge `s_ij ≥ tau` must survive as `g(s_ij) ≥ g(tau)`.
pub fn check_threshold_graph<F: Fn(f64) -> f64>(g: F, scores: &[Vec<f64>], tau: f64) -> Result<InvarianceReport> {
    let n = scores.len();
    for (i, row) in scores.iter().enumerate() {
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: row.len() });
        }
        for j in 0..i {
            if row[j] != scores[j][i] {
                return Err(Error::NonSymmetric { row: i, col: j });
            }
        }
    }
    let mapped_tau = g(tau);
    let mut destroyed = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let s = scores[i][j];
            if s >= tau && g(s) < mapped_tau - VIOLATION_TOLERANCE {
                destroyed.push((i, j));
            }
        }
    }
    let mut report = InvarianceReport { n_trials: 1, ..Default::default() };
    if let Some(&(i, j)) = destroyed.first() {
        let s = scores[i][j];
        report.record(destroyed.len() as u64, || Witness {
            trial: 0,
            inputs: vec![s, tau],
            outputs: vec![g(s), mapped_tau],
            detail: format!("edge ({i}, {j}) removed"),
        });
    }
    Ok(report)
}

/// Every pair with raw score ≥ the raw high-confidence threshold keeps a
/// calibrated score ≥ the mapped threshold.
pub fn check_guarantee_transfer<F: Fn(f64) -> f64>(
    g: F,
    pairs: &[ScoredPair],
    alpha: f64,
    human_cutoff: f64,
) -> Result<InvarianceReport> {
    let tau = hcs_threshold(pairs, alpha, human_cutoff)?.value;
    let mapped_tau = g(tau);
    let mut report = InvarianceReport { n_trials: 1, ..Default::default() };
    let exceptions: Vec<&ScoredPair> = pairs
        .iter()
        .filter(|p| p.model_score >= tau && g(p.model_score) < mapped_tau)
        .collect();
    if let Some(first) = exceptions.first() {
        report.record(exceptions.len() as u64, || Witness {
            trial: 0,
            inputs: vec![first.model_score, tau],
            outputs: vec![g(first.model_score), mapped_tau],
            detail: format!("pair {} fell below the mapped threshold", first.id),
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub trials: u64,
    pub order: InvarianceReport,
    pub angular: InvarianceReport,
    pub nearest_neighbor: InvarianceReport,
    pub threshold_graph: InvarianceReport,
    pub guarantee: InvarianceReport,
}

impl SuiteReport {
    pub fn checks(&self) -> [(&'static str, &InvarianceReport); 5] {
        [
            ("order preservation", &self.order),
            ("angular order", &self.angular),
            ("nearest neighbour", &self.nearest_neighbor),
            ("threshold graph", &self.threshold_graph),
            ("threshold guarantee", &self.guarantee),
        ]
    }

    pub fn passed(&self) -> bool {
        self.checks().iter().all(|(_, r)| r.passed())
    }

    pub fn summary_lines(&self) -> Vec<String> {
        self.checks()
            .iter()
            .map(|(name, r)| {
                format!(
                    "{} {name}: {} trials, {} violations",
                    if r.passed() { "PASS" } else { "FAIL" },
                    r.n_trials,
                    r.violations
                )
            })
            .collect()
    }
}

fn ordered_pair<R: Rng>(r: &mut R, bps: &[f64]) -> (f64, f64) {
    let a = score_near_breakpoints(r, bps);
    let b = score_near_breakpoints(r, bps);
    (a.max(b), a.min(b))
}

/// Run every checker against `model` with `trials` random instances each
/// (the guarantee check uses one dataset per hundred trials).
pub fn run_suite(model: &CalibrationModel, seed: u64, trials: u64) -> Result<SuiteReport> {
    run_suite_with(|x| model.apply(x), model.breakpoints(), seed, trials)
}

/// [`run_suite`] for an arbitrary transform; `hot_spots` are inputs the
/// sampler should hit exactly now and then.
pub fn run_suite_with<F: Fn(f64) -> f64>(g: F, hot_spots: &[f64], seed: u64, trials: u64) -> Result<SuiteReport> {
    let mut r = synth::rng(seed);

    let pairs: Vec<(f64, f64)> = (0..trials).map(|_| ordered_pair(&mut r, hot_spots)).collect();
    let order = check_order_preservation(&g, &pairs)?;

    let angles: Vec<(f64, f64)> = (0..trials)
        .map(|_| {
            let t1 = r.random_range(0.0..=std::f64::consts::PI);
            let t2 = r.random_range(0.0..=std::f64::consts::PI);
            (t1.min(t2).cos(), t1.max(t2).cos())
        })
        .collect();
    let angular = check_order_preservation(&g, &angles)?;

    let mut nearest_neighbor = InvarianceReport::default();
    for t in 0..trials {
        let k = r.random_range(1..=16);
        let mut cands: Vec<f64> = (0..k).map(|_| score_near_breakpoints(&mut r, hot_spots)).collect();
        if r.random_bool(0.2) {
            cands.push(cands[0]);
        }
        nearest_neighbor = nearest_neighbor.merge(check_nn_preservation(&g, &cands)?.offset_trials(t));
    }

    let mut threshold_graph = InvarianceReport::default();
    for t in 0..trials {
        let n = r.random_range(2..=20);
        let mut m = vec![vec![1.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let s = score_near_breakpoints(&mut r, hot_spots);
                m[i][j] = s;
                m[j][i] = s;
            }
        }
        let tau = score_near_breakpoints(&mut r, hot_spots);
        threshold_graph = threshold_graph.merge(check_threshold_graph(&g, &m, tau)?.offset_trials(t));
    }

    let mut guarantee = InvarianceReport::default();
    for t in 0..(trials / 100).max(1) {
        let n = r.random_range(20..200);
        let data: Vec<ScoredPair> = (0..n)
            .map(|k| {
                let m = score_near_breakpoints(&mut r, hot_spots);
                let h = if k == 0 { 1.0 } else { r.random::<f64>() };
                ScoredPair { id: k.to_string(), model_score: m, human_score: h }
            })
            .collect();
        guarantee = guarantee.merge(check_guarantee_transfer(&g, &data, 0.05, 0.9)?.offset_trials(t));
    }

    Ok(SuiteReport { seed, trials, order, angular, nearest_neighbor, threshold_graph, guarantee })
}
