//! Similarity statistics over minimally perturbed sentence pairs.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::accum::{self, Accumulator};
use crate::calibrators::CalibrationModel;
use crate::embio::EmbeddingSet;
use crate::error::{Error, Result};
use crate::geometry;
use crate::thresholds::SimilarityKind;

pub const PERTURBATION_TYPES: [&str; 7] = [
    "DETERMINER_VARIATION",
    "TENSE_VARIATION",
    "SYNONYM_SUBSTITUTION",
    "LOGICAL_PARAPHRASE",
    "NOMINALIZATION",
    "COREFERENCE_EXPANSION",
    "QUANTIFIER_VARIATION",
];

/// The 35-pair example dataset shipped with the crate: five pairs per
/// perturbation type with synthetic raw scores.
pub const BUNDLED_DATASET: &str = include_str!("../data/perturbations.jsonl");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPair {
    pub id: String,
    #[serde(rename = "type")]
    pub type_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_a: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_b: Option<String>,
    pub raw_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emb_ref_a: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emb_ref_b: Option<String>,
}

impl PerturbationPair {
    pub fn scored(id: impl Into<String>, type_label: impl Into<String>, raw_score: f64) -> Self {
        PerturbationPair {
            id: id.into(),
            type_label: type_label.into(),
            text_a: None,
            text_b: None,
            raw_score,
            emb_ref_a: None,
            emb_ref_b: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub pairs: Vec<PerturbationPair>,
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
struct Line {
    id: serde_json::Value,
    #[serde(rename = "type")]
    type_label: String,
    raw_score: Option<f64>,
    text_a: Option<String>,
    text_b: Option<String>,
    emb_ref_a: Option<String>,
    emb_ref_b: Option<String>,
}

/// Parse a perturbation dataset. Missing `raw_score`s are computed as the
/// cosine of the referenced embeddings when `embeddings` is given.
pub fn load_perturbation_dataset<R: BufRead>(
    reader: R,
    embeddings: Option<&EmbeddingSet>,
) -> Result<LoadedDataset> {
    let index = embeddings.map(|e| e.index());
    let mut pairs = Vec::new();
    let mut warnings = Vec::new();
    let mut seen = HashSet::new();
    for (k, line) in reader.lines().enumerate() {
        let n = k + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Line = serde_json::from_str(&line).map_err(|e| Error::parse(n, e.to_string()))?;
        let id = match row.id {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(x) => x.to_string(),
            other => return Err(Error::parse(n, format!("id must be a string or number, got {other}"))),
        };
        let raw_score = match (row.raw_score, &row.emb_ref_a, &row.emb_ref_b) {
            (Some(s), _, _) => s,
            (None, Some(a), Some(b)) => {
                let (set, index) = embeddings
                    .zip(index.as_ref())
                    .ok_or_else(|| Error::parse(n, "raw_score missing and no embedding file supplied"))?;
                let lookup = |r: &str| {
                    index
                        .get(r)
                        .map(|&i| &set.records()[i])
                        .ok_or_else(|| Error::parse(n, format!("unknown embedding reference {r:?}")))
                };
                let (ea, eb) = (lookup(a)?.normalized()?, lookup(b)?.normalized()?);
                geometry::cosine(&ea.vector, &eb.vector)?
            }
            _ => {
                let what = if row.text_a.is_some() || row.text_b.is_some() {
                    "raw_score missing; texts alone cannot be scored without embedding references"
                } else {
                    "raw_score missing and no texts or embedding references"
                };
                return Err(Error::parse(n, what));
            }
        };
        if !(-1.0..=1.0).contains(&raw_score) {
            return Err(Error::parse(n, format!("raw_score {raw_score} outside [-1, 1]")));
        }
        if !PERTURBATION_TYPES.contains(&row.type_label.as_str()) {
            let w = format!("line {n}: unknown perturbation type {:?}", row.type_label);
            log::warn!("{w}");
            warnings.push(w);
        }
        if !seen.insert(id.clone()) {
            let w = format!("line {n}: duplicate id {id:?}");
            log::warn!("{w}");
            warnings.push(w);
        }
        pairs.push(PerturbationPair {
            id,
            type_label: row.type_label,
            text_a: row.text_a,
            text_b: row.text_b,
            raw_score,
            emb_ref_a: row.emb_ref_a,
            emb_ref_b: row.emb_ref_b,
        });
    }
    if pairs.is_empty() {
        return Err(Error::EmptyInput("perturbation dataset"));
    }
    Ok(LoadedDataset { pairs, warnings })
}

pub fn load_perturbation_file(path: &Path, embeddings: Option<&EmbeddingSet>) -> Result<LoadedDataset> {
    let f = std::fs::File::open(path)?;
    load_perturbation_dataset(std::io::BufReader::new(f), embeddings)
}

pub fn bundled_dataset() -> Vec<PerturbationPair> {
    load_perturbation_dataset(BUNDLED_DATASET.as_bytes(), None)
        .expect("bundled dataset is valid")
        .pairs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub label: String,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub rate: f64,
}

impl StabilityRow {
    fn from_scores(label: String, scores: &[f64], tau: f64) -> Self {
        let n = scores.len();
        let (mean, std) = if scores.iter().all(|&s| s == scores[0]) {
            (scores[0], 0.0)
        } else {
            let mean = accum::mean(scores);
            let ss = accum::sum(scores.iter().map(|&s| (s - mean) * (s - mean)));
            (mean, (ss / n as f64).sqrt())
        };
        let hits = scores.iter().filter(|&&s| s >= tau).count();
        StabilityRow { label, n, mean, std, rate: hits as f64 / n as f64 }
    }
}

pub const OVERALL_LABEL: &str = "All types (overall)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    pub overall: StabilityRow,
    pub threshold_used: f64,
    pub similarity_label: SimilarityKind,
}

/// Group by perturbation type and summarise the (optionally calibrated)
/// scores against `tau`. Known types come first in their canonical order,
/// unknown ones after in order of first appearance.
pub fn evaluate_stability(
    pairs: &[PerturbationPair],
    model: Option<&CalibrationModel>,
    tau: f64,
) -> Result<StabilityReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("perturbation pairs"));
    }
    let (kind, range) = match model {
        Some(m) => (SimilarityKind::Calibrated, m.clamp_bounds()),
        None => (SimilarityKind::Raw, (-1.0, 1.0)),
    };
    if !(tau >= range.0 && tau <= range.1) {
        return Err(Error::InvalidArgument(format!(
            "threshold {tau} outside the similarity range [{}, {}]",
            range.0, range.1
        )));
    }
    let score = |p: &PerturbationPair| model.map_or(p.raw_score, |m| m.apply(p.raw_score));

    let mut order: Vec<&str> = PERTURBATION_TYPES.to_vec();
    for p in pairs {
        if !order.contains(&p.type_label.as_str()) {
            order.push(&p.type_label);
        }
    }
    let mut groups: HashMap<&str, Vec<f64>> = HashMap::new();
    for p in pairs {
        groups.entry(&p.type_label).or_default().push(score(p));
    }
    let rows = order
        .iter()
        .filter_map(|label| groups.get(label).map(|s| StabilityRow::from_scores(label.to_string(), s, tau)))
        .collect();
    let all: Vec<f64> = pairs.iter().map(score).collect();
    Ok(StabilityReport {
        rows,
        overall: StabilityRow::from_scores(OVERALL_LABEL.into(), &all, tau),
        threshold_used: tau,
        similarity_label: kind,
    })
}

impl StabilityReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let kind = match self.similarity_label {
            SimilarityKind::Raw => "raw",
            SimilarityKind::Calibrated => "calibrated",
        };
        writeln!(out, "similarity: {kind}, threshold: {}", self.threshold_used).unwrap();
        writeln!(out, "{:<24} {:>6} {:>7} {:>7} {:>7}", "Perturbation Type", "N", "Mean", "Std", "Rate").unwrap();
        for r in self.rows.iter().chain(std::iter::once(&self.overall)) {
            if std::ptr::eq(r, &self.overall) {
                writeln!(out, "{}", "-".repeat(55)).unwrap();
            }
            writeln!(
                out,
                "{:<24} {:>6} {:>7.3} {:>7.3} {:>7.2}",
                r.label.replace('_', " "),
                r.n,
                r.mean,
                r.std,
                r.rate
            )
            .unwrap();
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("type,n,mean,std,rate\n");
        for r in self.rows.iter().chain(std::iter::once(&self.overall)) {
            writeln!(out, "{},{},{},{},{}", r.label, r.n, r.mean, r.std, r.rate).unwrap();
        }
        out
    }

    /// Pooled mean of the per-type rows.
    pub fn pooled_mean(&self) -> f64 {
        let weighted: Accumulator = self.rows.iter().map(|r| r.mean * r.n as f64).collect();
        weighted.value() / self.rows.iter().map(|r| r.n).sum::<usize>() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrators::{fit_isotonic, Method, TrainMeta};
    use crate::embio::EmbeddingSet;
    use crate::geometry::EmbeddingRecord;
    use crate::pairs::from_scores;

    fn load(text: &str) -> Result<LoadedDataset> {
        load_perturbation_dataset(text.as_bytes(), None)
    }

    #[test]
    fn bundled_dataset_contract() {
        let pairs = bundled_dataset();
        assert_eq!(pairs.len(), 35);
        let labels: HashSet<&str> = pairs.iter().map(|p| p.type_label.as_str()).collect();
        assert_eq!(labels.len(), 7);
        assert!(pairs.iter().all(|p| p.text_a.is_some() && p.text_b.is_some()));
        assert!(load(BUNDLED_DATASET).unwrap().warnings.is_empty());
    }

    #[test]
    fn missing_score_rejected_with_line() {
        let text = "{\"id\":1,\"type\":\"NOMINALIZATION\",\"raw_score\":0.9}\n{\"id\":2,\"type\":\"NOMINALIZATION\"}\n";
        assert!(matches!(load(text), Err(Error::Parse { line: 2, .. })));
        let texts_only = "{\"id\":1,\"type\":\"NOMINALIZATION\",\"text_a\":\"a\",\"text_b\":\"b\"}\n";
        assert!(matches!(load(texts_only), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(load("{\"id\":1,\"type\":\"X\",\"raw_score\":1.5}"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(load("{\"id\":1"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn duplicates_and_unknown_labels_warn() {
        let text = "{\"id\":\"a\",\"type\":\"TENSE_VARIATION\",\"raw_score\":0.9}\n\n{\"id\":\"a\",\"type\":\"WORD_ORDER\",\"raw_score\":0.8}\n";
        let d = load(text).unwrap();
        assert_eq!(d.pairs.len(), 2);
        assert_eq!(d.warnings.len(), 2);
        assert!(d.warnings[0].contains("WORD_ORDER") && d.warnings[1].contains("duplicate"));
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(load(""), Err(Error::EmptyInput(_))));
        assert!(load("\n  \n").is_err());
    }

    #[test]
    fn scores_from_embeddings() {
        let set = EmbeddingSet::new(
            2,
            vec![EmbeddingRecord::new("u", vec![1.0, 0.0]), EmbeddingRecord::new("v", vec![3.0, 4.0])],
        )
        .unwrap();
        let text = "{\"id\":1,\"type\":\"TENSE_VARIATION\",\"emb_ref_a\":\"u\",\"emb_ref_b\":\"v\"}";
        let d = load_perturbation_dataset(text.as_bytes(), Some(&set)).unwrap();
        assert!((d.pairs[0].raw_score - 0.6).abs() < 1e-12);
        assert!(load(text).is_err());
        let missing = "{\"id\":1,\"type\":\"TENSE_VARIATION\",\"emb_ref_a\":\"u\",\"emb_ref_b\":\"w\"}";
        assert!(load_perturbation_dataset(missing.as_bytes(), Some(&set)).is_err());
    }

    #[test]
    fn all_above_threshold() {
        let r = evaluate_stability(&bundled_dataset(), None, 0.5).unwrap();
        assert_eq!(r.rows.len(), 7);
        assert!(r.rows.iter().all(|row| row.rate == 1.0));
        assert_eq!(r.overall.n, 35);
        assert!((r.overall.mean - r.pooled_mean()).abs() <= 1e-12);
    }

    #[test]
    fn singleton_and_constant_groups_have_zero_std() {
        let pairs = vec![
            PerturbationPair::scored("1", "NOMINALIZATION", 0.81),
            PerturbationPair::scored("2", "TENSE_VARIATION", 0.7),
            PerturbationPair::scored("3", "TENSE_VARIATION", 0.7),
            PerturbationPair::scored("4", "TENSE_VARIATION", 0.7),
        ];
        let r = evaluate_stability(&pairs, None, 0.72).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[0].label, "TENSE_VARIATION");
        assert!(r.rows.iter().all(|row| row.std == 0.0));
        assert_eq!(r.rows[0].rate, 0.0);
        assert_eq!(r.rows[1].rate, 1.0);
    }

    #[test]
    fn population_std() {
        let pairs: Vec<_> = [0.6, 0.8].iter().enumerate().map(|(k, &s)| PerturbationPair::scored(k.to_string(), "X", s)).collect();
        let r = evaluate_stability(&pairs, None, 0.7).unwrap();
        assert!((r.rows[0].std - 0.1).abs() < 1e-15);
        assert_eq!(r.rows[0].rate, 0.5);
    }

    #[test]
    fn calibrated_report_and_threshold_range() {
        let model = fit_isotonic(&from_scores(&[0.7, 0.8, 0.9, 0.95], &[0.3, 0.6, 0.8, 0.95])).unwrap();
        let data = bundled_dataset();
        let r = evaluate_stability(&data, Some(&model), 0.65).unwrap();
        assert_eq!(r.similarity_label, SimilarityKind::Calibrated);
        assert!(evaluate_stability(&data, Some(&model), -0.2).is_err());
        assert!(evaluate_stability(&data, None, 1.2).is_err());
        assert!(evaluate_stability(&[], None, 0.5).is_err());
        let lin = CalibrationModel::parametric(Method::Linear, vec![1.0, 0.0], TrainMeta::default()).unwrap();
        assert_eq!(evaluate_stability(&data, Some(&lin), 0.72).unwrap().rows, evaluate_stability(&data, None, 0.72).unwrap().rows);
    }

    #[test]
    fn tables_have_expected_shape() {
        let r = evaluate_stability(&bundled_dataset(), None, 0.72).unwrap();
        let text = r.to_text();
        assert!(text.contains("DETERMINER VARIATION") && text.contains(OVERALL_LABEL));
        assert_eq!(text.lines().count(), 2 + 7 + 2);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 9);
        assert!(csv.starts_with("type,n,mean,std,rate\nDETERMINER_VARIATION,5,"));
    }

    fn recompute(pairs: &[PerturbationPair], model: Option<&CalibrationModel>, tau: f64, label: &str) -> (usize, f64, f64, f64) {
        let s: Vec<f64> = pairs
            .iter()
            .filter(|p| label == OVERALL_LABEL || p.type_label == label)
            .map(|p| model.map_or(p.raw_score, |m| m.apply(p.raw_score)))
            .collect();
        let n = s.len() as f64;
        let mean = s.iter().sum::<f64>() / n;
        let var = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (s.len(), mean, var.sqrt(), s.iter().filter(|&&v| v >= tau).count() as f64 / n)
    }

    fn assert_matches_recomputation(pairs: &[PerturbationPair], model: Option<&CalibrationModel>, tau: f64) {
        let r = evaluate_stability(pairs, model, tau).unwrap();
        for row in r.rows.iter().chain(std::iter::once(&r.overall)) {
            let (n, mean, std, rate) = recompute(pairs, model, tau, &row.label);
            assert_eq!(row.n, n);
            assert!((row.mean - mean).abs() <= 1e-12);
            assert!((row.std - std).abs() <= 1e-12);
            assert_eq!(row.rate, rate);
        }
        assert_eq!(r.overall.n, r.rows.iter().map(|x| x.n).sum::<usize>());
        assert!((r.overall.mean - r.pooled_mean()).abs() <= 1e-12);
    }

    #[test]
    fn statistics_match_recomputation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        assert_matches_recomputation(&bundled_dataset(), None, 0.72);
        for seed in 0..100 {
            let pairs = crate::synth::perturbation_pairs(rng.random_range(1..20), seed);
            let model = crate::synth::random_isotonic_model(&mut rng);
            assert_matches_recomputation(&pairs, None, rng.random_range(0.6..0.95));
            assert_matches_recomputation(&pairs, Some(&model), rng.random_range(0.0..1.0));
        }
    }

    #[test]
    fn matched_threshold_rates_never_drop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for seed in 0..100 {
            let pairs = crate::synth::perturbation_pairs(rng.random_range(1..30), seed);
            let model = crate::synth::random_isotonic_model(&mut rng);
            let tau = rng.random_range(0.6..0.95);
            let raw = evaluate_stability(&pairs, None, tau).unwrap();
            let cal = evaluate_stability(&pairs, Some(&model), model.apply(tau)).unwrap();
            for (a, b) in raw.rows.iter().zip(&cal.rows) {
                assert_eq!(a.label, b.label);
                assert!(b.rate >= a.rate, "{}: {} < {}", a.label, b.rate, a.rate);
            }
        }
    }

    #[test]
    fn report_ignores_pair_order() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(14);
        let mut pairs = crate::synth::perturbation_pairs(12, 3);
        let a = evaluate_stability(&pairs, None, 0.8).unwrap();
        for _ in 0..20 {
            pairs.shuffle(&mut rng);
            let b = evaluate_stability(&pairs, None, 0.8).unwrap();
            for (x, y) in a.rows.iter().zip(&b.rows) {
                assert_eq!((x.n, x.rate), (y.n, y.rate));
                assert!((x.mean - y.mean).abs() <= 1e-12 && (x.std - y.std).abs() <= 1e-12);
            }
        }
    }
}
