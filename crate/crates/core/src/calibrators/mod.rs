//! Calibration transforms from raw cosine similarity to human-aligned
//! similarity.
//!
//! Every fitted transform is a [`CalibrationModel`]: a method tag plus either
//! a parameter vector or (isotonic) a step table. Models are validated on
//! construction and on deserialization, so [`CalibrationModel::apply`] is
//! infallible.

mod compare;
mod isotonic;
mod least_squares;
mod parametric;
#[cfg(test)]
mod properties;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pairs::ScoredPair;

pub use compare::{compare_methods, ComparisonRow, ComparisonTable};
pub use isotonic::{fit_isotonic, merge_duplicates, pava};
pub use least_squares::{fit_linear, fit_polynomial};
pub use parametric::{fit_beta, fit_sigmoid, BETA_EPS};

pub const MODEL_SCHEMA: &str = "simcal-model v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Linear,
    Isotonic,
    Sigmoid,
    Poly2,
    Poly3,
    Poly4,
    Beta,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Linear,
        Method::Isotonic,
        Method::Sigmoid,
        Method::Beta,
        Method::Poly2,
        Method::Poly3,
        Method::Poly4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Linear => "linear",
            Method::Isotonic => "isotonic",
            Method::Sigmoid => "sigmoid",
            Method::Poly2 => "poly2",
            Method::Poly3 => "poly3",
            Method::Poly4 => "poly4",
            Method::Beta => "beta",
        }
    }

    /// Row label used in comparison tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Linear => "Linear",
            Method::Isotonic => "Isotonic",
            Method::Sigmoid => "Sigmoid",
            Method::Poly2 => "Polynomial-2",
            Method::Poly3 => "Polynomial-3",
            Method::Poly4 => "Polynomial-4",
            Method::Beta => "Beta",
        }
    }

    pub fn polynomial_degree(self) -> Option<usize> {
        match self {
            Method::Poly2 => Some(2),
            Method::Poly3 => Some(3),
            Method::Poly4 => Some(4),
            _ => None,
        }
    }

    fn param_len(self) -> usize {
        match self {
            Method::Linear | Method::Sigmoid => 2,
            Method::Isotonic => 0,
            Method::Beta => 4,
            m => m.polynomial_degree().unwrap() + 1,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown calibration method {s:?}")))
    }
}

/// Provenance and fit diagnostics carried with a model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    /// SHA-256 over the training pairs' score bits.
    pub digest: String,
    pub n: usize,
    /// Sum of squared residuals of the (unclamped) fit on the training set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl TrainMeta {
    pub fn for_pairs(pairs: &[ScoredPair]) -> Self {
        TrainMeta { digest: digest(pairs), n: pairs.len(), ..Default::default() }
    }
}

pub fn digest(pairs: &[ScoredPair]) -> String {
    let mut h = Sha256::new();
    for p in pairs {
        h.update(p.model_score.to_le_bytes());
        h.update(p.human_score.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// A fitted calibration transform.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationModel {
    method: Method,
    params: Vec<f64>,
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    clamp: [f64; 2],
    train_meta: TrainMeta,
}

/// On-disk form; validated into a [`CalibrationModel`].
#[derive(Debug, Serialize, Deserialize)]
struct ModelDocument {
    schema: String,
    method: Method,
    #[serde(default)]
    params: Vec<f64>,
    #[serde(default)]
    breakpoints: Vec<f64>,
    #[serde(default)]
    values: Vec<f64>,
    clamp: [f64; 2],
    #[serde(default)]
    train_meta: TrainMeta,
}

impl CalibrationModel {
    /// Builds a parametric model. Output bounds are `[0, 1]`.
    pub fn parametric(method: Method, params: Vec<f64>, train_meta: TrainMeta) -> Result<Self> {
        let m = CalibrationModel {
            method,
            params,
            breakpoints: Vec::new(),
            values: Vec::new(),
            clamp: [0.0, 1.0],
            train_meta,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn isotonic(breakpoints: Vec<f64>, values: Vec<f64>, train_meta: TrainMeta) -> Result<Self> {
        let m = CalibrationModel {
            method: Method::Isotonic,
            params: Vec::new(),
            breakpoints,
            values,
            clamp: [0.0, 1.0],
            train_meta,
        };
        m.validate()?;
        Ok(m)
    }

    /// `x ↦ x` (clamped), the uncalibrated baseline.
    pub fn identity() -> Self {
        CalibrationModel::parametric(Method::Linear, vec![1.0, 0.0], TrainMeta::default())
            .expect("identity model is valid")
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn clamp_bounds(&self) -> (f64, f64) {
        (self.clamp[0], self.clamp[1])
    }

    pub fn train_meta(&self) -> &TrainMeta {
        &self.train_meta
    }

    /// Whether the transform is non-decreasing on `[-1, 1]` by construction.
    pub fn is_monotone(&self) -> bool {
        match self.method {
            Method::Isotonic | Method::Beta => true,
            Method::Linear | Method::Sigmoid => self.params[0] >= 0.0,
            _ => false,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        let [lo, hi] = self.clamp;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad(format!("invalid clamp bounds [{lo}, {hi}]"));
        }
        if self.params.len() != self.method.param_len() {
            return bad(format!(
                "{} expects {} params, found {}",
                self.method,
                self.method.param_len(),
                self.params.len()
            ));
        }
        if let Some(p) = self.params.iter().find(|p| !p.is_finite()) {
            return bad(format!("non-finite parameter {p}"));
        }
        match self.method {
            Method::Isotonic => {
                if self.breakpoints.is_empty() {
                    return bad("empty breakpoint table".into());
                }
                if self.breakpoints.len() != self.values.len() {
                    return bad(format!(
                        "{} breakpoints but {} values",
                        self.breakpoints.len(),
                        self.values.len()
                    ));
                }
                if self.breakpoints.iter().chain(&self.values).any(|v| !v.is_finite()) {
                    return bad("non-finite entry in step table".into());
                }
                if let Some(w) = self.breakpoints.windows(2).find(|w| w[0] >= w[1]) {
                    return bad(format!("breakpoints not strictly ascending at {} >= {}", w[0], w[1]));
                }
                if let Some(w) = self.values.windows(2).find(|w| w[0] > w[1]) {
                    return bad(format!("values decrease from {} to {}", w[0], w[1]));
                }
            }
            _ if !self.breakpoints.is_empty() || !self.values.is_empty() => {
                return bad(format!("{} model carries a step table", self.method));
            }
            Method::Beta => {
                let (alpha, beta, slope) = (self.params[0], self.params[1], self.params[2]);
                if !(alpha > 0.0 && beta > 0.0) {
                    return bad(format!("beta shapes must be positive, got ({alpha}, {beta})"));
                }
                if !(slope > 0.0) {
                    return bad(format!("beta input map slope must be positive, got {slope}"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// The fitted curve before output clamping.
    pub fn predict_unclamped(&self, x: f64) -> f64 {
        let p = &self.params;
        match self.method {
            Method::Linear => p[0] * x + p[1],
            Method::Poly2 | Method::Poly3 | Method::Poly4 => {
                p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
            Method::Sigmoid => parametric::sigmoid(p[0], p[1], x),
            Method::Beta => parametric::beta_cdf(p[0], p[1], parametric::beta_input(p[2], p[3], x)),
            Method::Isotonic => {
                // greatest breakpoint <= x; below the table the first value
                let k = self.breakpoints.partition_point(|&b| b <= x);
                self.values[k.saturating_sub(1)]
            }
        }
    }

    /// Calibrated similarity `g(x)`, clamped to the model's output bounds.
    pub fn apply(&self, x: f64) -> f64 {
        self.predict_unclamped(x).clamp(self.clamp[0], self.clamp[1])
    }

    pub fn apply_all(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.apply(x)).collect()
    }

    /// Replaces model scores with calibrated scores, keeping ids and human
    /// scores.
    pub fn calibrate_pairs(&self, pairs: &[ScoredPair]) -> Vec<ScoredPair> {
        pairs
            .iter()
            .map(|p| ScoredPair { model_score: self.apply(p.model_score), ..p.clone() })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            schema: MODEL_SCHEMA.to_string(),
            method: self.method,
            params: self.params.clone(),
            breakpoints: self.breakpoints.clone(),
            values: self.values.clone(),
            clamp: self.clamp,
            train_meta: self.train_meta.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.schema != MODEL_SCHEMA {
            return Err(Error::InvalidModel(format!("unsupported schema {:?}", doc.schema)));
        }
        let m = CalibrationModel {
            method: doc.method,
            params: doc.params,
            breakpoints: doc.breakpoints,
            values: doc.values,
            clamp: doc.clamp,
            train_meta: doc.train_meta,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        CalibrationModel::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Fits the requested method.
pub fn fit(method: Method, pairs: &[ScoredPair]) -> Result<CalibrationModel> {
    match method {
        Method::Linear => fit_linear(pairs),
        Method::Isotonic => fit_isotonic(pairs),
        Method::Sigmoid => fit_sigmoid(pairs),
        Method::Beta => fit_beta(pairs),
        m => fit_polynomial(pairs, m.polynomial_degree().unwrap()),
    }
}
