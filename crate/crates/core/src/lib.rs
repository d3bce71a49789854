//! Monotone calibration of embedding cosine similarity against human
//! similarity judgments.
//!
//! The crate covers the whole pipeline around a calibration transform:
//!
//! * [`geometry`]: unit-sphere normalization, cosine similarity and the
//!   isotropic baseline sampler, with [`embio`] for embedding files;
//! * [`metrics`]: RMSE, MBE, ECE, Pearson and Spearman between model and
//!   human scores;
//! * [`calibrators`]: isotonic (PAVA), linear, polynomial, logistic and Beta
//!   calibration, plus model files and the method comparison table;
//! * [`thresholds`]: the high-confidence similarity threshold and its
//!   coverage guarantee;
//! * [`density`]: KDE marginals, joint histograms, smoothing and plot export;
//! * [`invariance`]: executable checks that a monotone calibration preserves
//!   order, nearest neighbours, threshold graphs and thresholds;
//! * [`stability`]: per-perturbation-type stability statistics.

pub mod accum;
pub mod calibrators;
pub mod density;
pub mod embio;
pub mod error;
pub mod geometry;
pub mod invariance;
pub mod metrics;
pub mod pairs;
pub mod stability;
pub mod synth;
pub mod thresholds;

pub use calibrators::{fit, CalibrationModel, Method, TrainMeta};
pub use error::{Error, ErrorClass, Result};
pub use geometry::{EmbeddingRecord, IsotropyStats};
pub use metrics::MetricsReport;
pub use pairs::ScoredPair;
pub use stability::{PerturbationPair, StabilityReport};
pub use thresholds::ThresholdSpec;
