//! Quantiles and the high-confidence similarity threshold.
//!
//! The threshold for a similarity `s` is the `alpha`-quantile of `s` over the
//! pairs whose human score is strictly above `human_cutoff`.

use serde::{Deserialize, Serialize};

use crate::calibrators::CalibrationModel;
use crate::error::{Error, Result};
use crate::pairs::ScoredPair;

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_HUMAN_CUTOFF: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityKind {
    Raw,
    Calibrated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub alpha: f64,
    pub human_cutoff: f64,
    pub value: f64,
    pub similarity_label: SimilarityKind,
    pub n_support: usize,
}

/// Sample quantile with linear interpolation between order statistics at
/// rank `h = (n − 1)·p`.
pub fn quantile(xs: &[f64], p: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyInput("quantile sample"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("quantile level {p} outside [0, 1]")));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, p))
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

fn support_scores(pairs: &[ScoredPair], human_cutoff: f64) -> Result<Vec<f64>> {
    let s: Vec<f64> =
        pairs.iter().filter(|p| p.human_score > human_cutoff).map(|p| p.model_score).collect();
    if s.is_empty() {
        return Err(Error::NoSupport { cutoff: human_cutoff });
    }
    Ok(s)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// High-confidence threshold of the `model_score` column of `pairs`.
///
/// The result is labelled [`SimilarityKind::Raw`]; use [`ThresholdSpec::calibrated`]
/// when `pairs` already carry calibrated scores.
pub fn hcs_threshold(pairs: &[ScoredPair], alpha: f64, human_cutoff: f64) -> Result<ThresholdSpec> {
    check_alpha(alpha)?;
    let support = support_scores(pairs, human_cutoff)?;
    Ok(ThresholdSpec {
        alpha,
        human_cutoff,
        value: quantile(&support, alpha)?,
        similarity_label: SimilarityKind::Raw,
        n_support: support.len(),
    })
}

impl ThresholdSpec {
    pub fn calibrated(mut self) -> Self {
        self.similarity_label = SimilarityKind::Calibrated;
        self
    }
}

/// Image of a raw threshold under a calibration model.
pub fn calibrated_threshold(model: &CalibrationModel, tau_raw: f64) -> f64 {
    model.apply(tau_raw)
}

/// Fraction of high-similarity pairs whose score is at least `tau`.
pub fn guarantee_check(pairs: &[ScoredPair], tau: f64, human_cutoff: f64) -> Result<f64> {
    let support = support_scores(pairs, human_cutoff)?;
    let hits = support.iter().filter(|&&s| s >= tau).count();
    Ok(hits as f64 / support.len() as f64)
}

/// Outcome of checking that a raw threshold's guarantee survives calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeTransfer {
    pub tau_raw: f64,
    pub tau_mapped: f64,
    /// Pairs (any human score) with raw ≥ τ whose calibrated score falls
    /// below the mapped threshold. Zero for any monotone model.
    pub exceptions: usize,
    pub raw_coverage: f64,
    pub calibrated_coverage: f64,
}

pub fn guarantee_transfer(
    model: &CalibrationModel,
    pairs: &[ScoredPair],
    tau_raw: f64,
    human_cutoff: f64,
) -> Result<GuaranteeTransfer> {
    let tau_mapped = calibrated_threshold(model, tau_raw);
    let exceptions = pairs
        .iter()
        .filter(|p| p.model_score >= tau_raw && model.apply(p.model_score) < tau_mapped)
        .count();
    let calibrated = model.calibrate_pairs(pairs);
    Ok(GuaranteeTransfer {
        tau_raw,
        tau_mapped,
        exceptions,
        raw_coverage: guarantee_check(pairs, tau_raw, human_cutoff)?,
        calibrated_coverage: guarantee_check(&calibrated, tau_mapped, human_cutoff)?,
    })
}

/// Threshold report as written by front-ends: the threshold, its support
/// and its empirical coverage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub alpha: f64,
    pub cutoff: f64,
    pub value: f64,
    pub similarity: SimilarityKind,
    pub n_support: usize,
    pub coverage: f64,
    /// For calibrated reports: the model applied to the raw threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapped_raw_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapped_coverage: Option<f64>,
}

impl ThresholdReport {
    pub fn table_header() -> &'static str {
        "similarity   alpha  cutoff   value    n_support  coverage"
    }

    pub fn table_row(&self) -> String {
        let kind = match self.similarity {
            SimilarityKind::Raw => "raw",
            SimilarityKind::Calibrated => "calibrated",
        };
        format!(
            "{kind:<11} {:>6.3} {:>7.3} {:>7.4} {:>12} {:>9.4}",
            self.alpha, self.cutoff, self.value, self.n_support, self.coverage
        )
    }
}

/// Raw threshold report, plus the calibrated one when a model is supplied.
pub fn threshold_reports(
    pairs: &[ScoredPair],
    model: Option<&CalibrationModel>,
    alpha: f64,
    human_cutoff: f64,
) -> Result<Vec<ThresholdReport>> {
    let raw = hcs_threshold(pairs, alpha, human_cutoff)?;
    let mut out = vec![ThresholdReport {
        alpha,
        cutoff: human_cutoff,
        value: raw.value,
        similarity: SimilarityKind::Raw,
        n_support: raw.n_support,
        coverage: guarantee_check(pairs, raw.value, human_cutoff)?,
        mapped_raw_threshold: None,
        mapped_coverage: None,
    }];
    if let Some(model) = model {
        let calibrated_pairs = model.calibrate_pairs(pairs);
        let cal = hcs_threshold(&calibrated_pairs, alpha, human_cutoff)?.calibrated();
        let mapped = calibrated_threshold(model, raw.value);
        out.push(ThresholdReport {
            alpha,
            cutoff: human_cutoff,
            value: cal.value,
            similarity: SimilarityKind::Calibrated,
            n_support: cal.n_support,
            coverage: guarantee_check(&calibrated_pairs, cal.value, human_cutoff)?,
            mapped_raw_threshold: Some(mapped),
            mapped_coverage: Some(guarantee_check(&calibrated_pairs, mapped, human_cutoff)?),
        });
    }
    Ok(out)
}
