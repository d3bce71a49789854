//! Side-by-side evaluation of every calibration method against the raw
//! scores.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{self, MetricsReport};
use crate::pairs::ScoredPair;

use super::{fit, CalibrationModel, Method};

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub label: String,
    /// `None` for the uncalibrated baseline.
    pub method: Option<Method>,
    pub report: Option<MetricsReport>,
    pub error: Option<String>,
    pub flags: Vec<String>,
    #[serde(skip)]
    pub model: Option<CalibrationModel>,
}

impl ComparisonRow {
    pub fn is_ok(&self) -> bool {
        self.report.is_some()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonTable {
    pub n_bins: usize,
    pub rows: Vec<ComparisonRow>,
}

/// Row order of the comparison table.
pub const ROW_ORDER: [Method; 7] = [
    Method::Linear,
    Method::Isotonic,
    Method::Sigmoid,
    Method::Beta,
    Method::Poly2,
    Method::Poly3,
    Method::Poly4,
];

/// Fits every method on `pairs` and evaluates it on the same pairs. A failing
/// fit marks its row instead of aborting the table.
pub fn compare_methods(pairs: &[ScoredPair], n_bins: usize) -> Result<ComparisonTable> {
    if pairs.len() < 5 {
        return Err(Error::InsufficientData { needed: 5, got: pairs.len() });
    }
    let baseline = metrics::evaluate_all(pairs, n_bins)?;
    let mut rows = vec![ComparisonRow {
        label: "Original".into(),
        method: None,
        report: Some(baseline),
        error: None,
        flags: Vec::new(),
        model: None,
    }];
    for method in ROW_ORDER {
        let outcome = fit(method, pairs).and_then(|model| {
            let report = metrics::evaluate_all(&model.calibrate_pairs(pairs), n_bins)?;
            Ok((model, report))
        });
        rows.push(match outcome {
            Ok((model, report)) => ComparisonRow {
                label: method.label().into(),
                method: Some(method),
                report: Some(report),
                error: None,
                flags: model.train_meta().flags.clone(),
                model: Some(model),
            },
            Err(e) => ComparisonRow {
                label: method.label().into(),
                method: Some(method),
                report: None,
                error: Some(e.to_string()),
                flags: vec!["failed".into()],
                model: None,
            },
        });
    }
    Ok(ComparisonTable { n_bins, rows })
}

/// Relative change in percent. MBE is compared by magnitude, the other
/// columns by signed value.
fn delta(value: f64, base: f64) -> Option<f64> {
    if base == 0.0 {
        return None;
    }
    Some((value - base) / base.abs() * 100.0)
}

fn columns(r: &MetricsReport) -> [f64; 5] {
    [r.rmse, r.mbe, r.ece, r.pearson, r.spearman]
}

impl ComparisonTable {
    pub fn baseline(&self) -> &MetricsReport {
        self.rows[0].report.as_ref().expect("baseline row always evaluates")
    }

    pub fn row(&self, method: Method) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.method == Some(method))
    }

    /// Percentage deltas `[rmse, |mbe|, ece, pearson, spearman]` of a row
    /// against the baseline.
    pub fn deltas(&self, row: &ComparisonRow) -> Option<[Option<f64>; 5]> {
        let r = row.report.as_ref()?;
        let (v, b) = (columns(r), columns(self.baseline()));
        Some([
            delta(v[0], b[0]),
            delta(v[1].abs(), b[1].abs()),
            delta(v[2], b[2]),
            delta(v[3], b[3]),
            delta(v[4], b[4]),
        ])
    }

    pub fn to_text(&self) -> String {
        let header = ["Method", "RMSE", "MBE", "ECE", "Pearson r", "Spearman rho"];
        let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for (i, row) in self.rows.iter().enumerate() {
            let mut line = vec![row.label.clone()];
            match (&row.report, self.deltas(row)) {
                (Some(r), Some(d)) => {
                    for (k, v) in columns(r).iter().enumerate() {
                        if i == 0 {
                            line.push(format!("{v:.4}"));
                        } else {
                            line.push(format!("{v:.4} ({})", fmt_delta(d[k])));
                        }
                    }
                }
                _ => {
                    line.push(format!("failed: {}", row.error.as_deref().unwrap_or("unknown")));
                }
            }
            cells.push(line);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|c| cells.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, row) in cells.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
            if i == 0 {
                out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
                out.push('\n');
            }
        }
        let _ = writeln!(out, "(ECE over {} equal-width bins; deltas relative to Original, MBE by magnitude)", self.n_bins);
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "method,rmse,mbe,ece,pearson,spearman,d_rmse_pct,d_mbe_pct,d_ece_pct,d_pearson_pct,d_spearman_pct,flags,error\n",
        );
        for row in &self.rows {
            let mut fields = vec![row.label.clone()];
            match (&row.report, self.deltas(row)) {
                (Some(r), Some(d)) => {
                    fields.extend(columns(r).iter().map(|v| v.to_string()));
                    fields.extend(d.iter().map(|x| x.map(|v| v.to_string()).unwrap_or_default()));
                }
                _ => fields.extend(std::iter::repeat_n(String::new(), 10)),
            }
            fields.push(row.flags.join(";"));
            fields.push(row.error.clone().unwrap_or_default().replace(',', ";"));
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

fn fmt_delta(d: Option<f64>) -> String {
    match d {
        None => "n/a".into(),
        Some(v) if v.abs() < 0.05 => "±0.0%".into(),
        Some(v) if v > 0.0 => format!("↑{v:.1}%"),
        Some(v) => format!("↓{:.1}%", -v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairs::from_scores;

    #[test]
    fn baseline_row_has_zero_deltas() {
        let x = [0.5, 0.6, 0.62, 0.7, 0.8, 0.85, 0.9, 0.95];
        let y = [0.1, 0.3, 0.2, 0.5, 0.6, 0.8, 0.7, 1.0];
        let t = compare_methods(&from_scores(&x, &y), 10).unwrap();
        assert_eq!(t.rows.len(), 8);
        let d = t.deltas(&t.rows[0]).unwrap();
        assert!(d.iter().all(|v| v.unwrap() == 0.0));
        let text = t.to_text();
        assert!(text.lines().nth(2).unwrap().starts_with("Original"));
        assert_eq!(t.to_csv().lines().count(), 9);
    }

    #[test]
    fn failed_rows_are_marked_not_fatal() {
        // four distinct inputs: the quartic is rank deficient
        let x = [0.2, 0.2, 0.4, 0.6, 0.8, 0.8];
        let y = [0.1, 0.2, 0.4, 0.5, 0.9, 0.7];
        let t = compare_methods(&from_scores(&x, &y), 10).unwrap();
        let quartic = t.row(Method::Poly4).unwrap();
        assert!(!quartic.is_ok());
        assert!(quartic.error.as_deref().unwrap().contains("rank-deficient"));
        assert!(t.row(Method::Isotonic).unwrap().is_ok());
        assert!(t.to_text().contains("failed"));
    }

    #[test]
    fn delta_formatting() {
        assert_eq!(fmt_delta(Some(0.0)), "±0.0%");
        assert_eq!(fmt_delta(Some(-11.46)), "↓11.5%");
        assert_eq!(fmt_delta(Some(230.2)), "↑230.2%");
        assert_eq!(fmt_delta(None), "n/a");
    }
}
