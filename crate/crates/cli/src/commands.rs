use std::path::Path;

use serde::Serialize;
use serde_json::json;
use simcal::calibrators::compare_methods;
use simcal::density::{
    self, export_plot_data, gaussian_smooth, joint_histogram, kde_1d, silverman_bandwidth, uniform_grid,
    CurveStyle, DensityCurve, Marker,
};
use simcal::metrics::{evaluate_all, MetricsReport};
use simcal::pairs::{self, human_scores, model_scores, ScoredPair};
use simcal::thresholds::{hcs_threshold, threshold_reports, ThresholdReport};
use simcal::{embio, geometry, invariance, stability, CalibrationModel, Error, Method};

use crate::output::{Failure, Output};

/// Bandwidth used when a sample has fewer than two distinct values.
const FALLBACK_BANDWIDTH: f64 = 0.01;

fn load_pairs(path: &Path) -> Result<Vec<ScoredPair>, Failure> {
    pairs::load(path).map_err(Failure::at(path))
}

fn load_model(path: &Path) -> Result<CalibrationModel, Failure> {
    CalibrationModel::load(path).map_err(Failure::at(path))
}

fn metrics_text(title: &str, r: &MetricsReport) -> String {
    format!(
        "{title}: n={} RMSE={:.4} MBE={:+.4} ECE={:.4} (bins={}) Pearson={:.4} Spearman={:.4}",
        r.n, r.rmse, r.mbe, r.ece, r.n_bins, r.pearson, r.spearman
    )
}

pub fn fit(input: &Path, method: Method, bins: usize) -> Result<Output, Failure> {
    let data = load_pairs(input)?;
    let model = simcal::fit(method, &data)?;
    let report = evaluate_all(&model.calibrate_pairs(&data), bins)?;
    let mut out = Output::default();
    out.file("model.json", model.to_json()? + "\n");
    out.json("metrics.json", &report)?;
    out.say(metrics_text(&format!("{} (training set)", method.label()), &report));
    let meta = model.train_meta();
    if !meta.flags.is_empty() {
        out.say(format!("flags: {}", meta.flags.join(", ")));
    }
    Ok(out)
}

fn parse_scores(text: &str) -> Result<Vec<f64>, Failure> {
    let mut scores = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| Failure::from(Error::Parse { line: k + 1, message: msg });
        let v: f64 = line.parse().map_err(|_| bad(format!("not a number: {line:?}")))?;
        if !(-1.0..=1.0).contains(&v) {
            return Err(bad(format!("score {v} outside [-1, 1]")));
        }
        scores.push(v);
    }
    Ok(scores)
}

pub fn apply(model: &Path, input: &Path) -> Result<Output, Failure> {
    let model = load_model(model)?;
    let text = std::fs::read_to_string(input).map_err(|e| Failure::at(input)(e.into()))?;
    let mut out = Output::default();
    let is_pairs = text.lines().find(|l| !l.trim().is_empty()).is_some_and(|l| l.trim_start().starts_with('{'));
    if is_pairs {
        let data = pairs::read_jsonl(text.as_bytes()).map_err(Failure::at(input))?;
        let mut buf = Vec::new();
        pairs::write_jsonl(&model.calibrate_pairs(&data), &mut buf)?;
        out.file("calibrated_pairs.jsonl", String::from_utf8(buf).expect("JSON is UTF-8"));
        out.say(format!("calibrated {} pairs", data.len()));
    } else {
        let scores = parse_scores(&text).map_err(|mut f| {
            f.message = format!("{}: {}", input.display(), f.message);
            f
        })?;
        let body: String = scores.iter().map(|&s| format!("{}\n", model.apply(s))).collect();
        out.file("calibrated_scores.txt", body);
        out.say(format!("calibrated {} scores", scores.len()));
    }
    Ok(out)
}

pub fn evaluate(input: &Path, model: Option<&Path>, bins: usize) -> Result<Output, Failure> {
    let mut data = load_pairs(input)?;
    let title = match model {
        Some(path) => {
            let m = load_model(path)?;
            data = m.calibrate_pairs(&data);
            format!("calibrated ({})", m.method().label())
        }
        None => "raw".to_string(),
    };
    let report = evaluate_all(&data, bins)?;
    let mut out = Output::default();
    let text = metrics_text(&title, &report);
    out.json("metrics.json", &report)?;
    out.file("metrics.txt", text.clone() + "\n");
    out.say(text);
    Ok(out)
}

pub fn compare(input: &Path, bins: usize) -> Result<Output, Failure> {
    let data = load_pairs(input)?;
    let table = compare_methods(&data, bins)?;
    let mut out = Output::default();
    out.file("comparison.txt", table.to_text());
    out.file("comparison.csv", table.to_csv());
    out.json("comparison.json", &table)?;
    out.say(table.to_text());
    Ok(out)
}

fn report_lines(out: &mut Output, reports: &[ThresholdReport]) {
    out.say(ThresholdReport::table_header());
    for r in reports {
        out.say(r.table_row());
        if let (Some(v), Some(c)) = (r.mapped_raw_threshold, r.mapped_coverage) {
            out.say(format!("  model(raw threshold) = {v:.4}, coverage {c:.4}"));
        }
    }
}

pub fn threshold(input: &Path, model: Option<&Path>, alpha: f64, cutoff: f64) -> Result<Output, Failure> {
    let data = load_pairs(input)?;
    let model = model.map(load_model).transpose()?;
    let reports = threshold_reports(&data, model.as_ref(), alpha, cutoff)?;
    let mut out = Output::default();
    out.json("threshold.json", &reports)?;
    report_lines(&mut out, &reports);
    Ok(out)
}

pub struct DensityOptions {
    pub tau: Option<f64>,
    pub grid: usize,
    pub bins: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub cutoff: f64,
}

#[derive(Serialize)]
struct CurveSummary {
    label: &'static str,
    bandwidth: f64,
    fallback_bandwidth: bool,
    integral: f64,
}

fn curve(label: &'static str, xs: &[f64], grid: &[f64]) -> Result<(DensityCurve, CurveSummary), Failure> {
    let (h, fallback) = match silverman_bandwidth(xs) {
        Ok(h) => (h, false),
        Err(Error::InsufficientData { .. } | Error::ZeroVariance(_)) => {
            log::warn!("{label}: fewer than two distinct values, using bandwidth {FALLBACK_BANDWIDTH}");
            (FALLBACK_BANDWIDTH, true)
        }
        Err(e) => return Err(e.into()),
    };
    let c = kde_1d(xs, grid, h)?;
    let summary = CurveSummary { label, bandwidth: h, fallback_bandwidth: fallback, integral: c.integral() };
    Ok((c, summary))
}

pub fn density(input: &Path, model: Option<&Path>, opts: DensityOptions) -> Result<Output, Failure> {
    if opts.grid < 2 {
        return Err(Failure::usage("--grid needs at least 2 points"));
    }
    if opts.bins == 0 {
        return Err(Failure::usage("--bins must be positive"));
    }
    let data = load_pairs(input)?;
    let model = model.map(load_model).transpose()?;
    let grid = uniform_grid(0.0, 1.0, opts.grid);
    let human = human_scores(&data);
    let raw = model_scores(&data);

    let tau = match opts.tau {
        Some(t) => Some(t),
        None => match hcs_threshold(&data, opts.alpha, opts.cutoff) {
            Ok(t) => Some(t.value),
            Err(Error::NoSupport { .. }) => None,
            Err(e) => return Err(e.into()),
        },
    };

    let (human_curve, human_sum) = curve("human", &human, &grid)?;
    let (raw_curve, raw_sum) = curve("raw", &raw, &grid)?;
    let mut summaries = vec![human_sum, raw_sum];
    let human_style = CurveStyle { label: "human", color: "black" };
    let raw_style = CurveStyle { label: "raw cosine", color: "steelblue" };
    let markers: Vec<Marker> = tau.iter().map(|&t| Marker { label: format!("tau = {t:.4}"), value: t }).collect();

    let joint = |ys: &[f64]| -> Result<density::DensityGrid2D, Failure> {
        let points: Vec<(f64, f64)> = human.iter().copied().zip(ys.iter().copied()).collect();
        Ok(gaussian_smooth(&joint_histogram(&points, opts.bins, opts.bins)?, opts.sigma)?)
    };
    let mut out = Output::default();
    out.files.extend(export_plot_data(
        "raw",
        &[(human_style, &human_curve), (raw_style, &raw_curve)],
        Some(&joint(&raw)?),
        &markers,
    ));

    let mut calibrated_tau = None;
    if let Some(m) = &model {
        let cal = m.apply_all(&raw);
        let (cal_curve, cal_sum) = curve("calibrated", &cal, &grid)?;
        summaries.push(cal_sum);
        calibrated_tau = tau.map(|t| m.apply(t));
        let cal_markers: Vec<Marker> =
            calibrated_tau.iter().map(|&t| Marker { label: format!("calibrated tau = {t:.4}"), value: t }).collect();
        let cal_style = CurveStyle { label: "calibrated", color: "darkorange" };
        out.files.extend(export_plot_data(
            "calibrated",
            &[(human_style, &human_curve), (cal_style, &cal_curve)],
            Some(&joint(&cal)?),
            &cal_markers,
        ));
    }

    let summary = json!({
        "n": data.len(),
        "grid_points": opts.grid,
        "joint_bins": opts.bins,
        "smooth_sigma": opts.sigma,
        "tau": tau,
        "calibrated_tau": calibrated_tau,
        "curves": summaries,
        "files": out.files.iter().map(|f| f.name.clone()).collect::<Vec<_>>(),
    });
    out.json("density.json", &summary)?;
    out.say(format!("wrote {} density files for {} pairs", out.files.len(), data.len()));
    Ok(out)
}

pub fn verify(model: &Path, seed: u64, trials: u64) -> Result<Output, Failure> {
    if trials == 0 {
        return Err(Failure::usage("--trials must be positive"));
    }
    let m = load_model(model)?;
    let report = invariance::run_suite(&m, seed, trials)?;
    let mut out = Output::default();
    out.say(format!("model: {} (seed {seed}, {trials} trials per check)", m.method().label()));
    for line in report.summary_lines() {
        out.say(line);
    }
    out.json("verify.json", &json!({ "method": m.method(), "report": report }))?;
    if !report.passed() {
        out.failure = Some(Failure::numeric("order-preservation checks failed"));
    }
    Ok(out)
}

pub fn stability(
    input: Option<&Path>,
    model: Option<&Path>,
    tau: f64,
    embeddings: Option<&Path>,
) -> Result<Output, Failure> {
    let set = embeddings.map(|p| embio::load(p).map_err(Failure::at(p))).transpose()?;
    let pairs = match input {
        Some(path) => {
            let loaded = stability::load_perturbation_file(path, set.as_ref()).map_err(Failure::at(path))?;
            for w in &loaded.warnings {
                eprintln!("simcal: warning: {w}");
            }
            loaded.pairs
        }
        None => stability::bundled_dataset(),
    };
    let model = model.map(load_model).transpose()?;
    let report = stability::evaluate_stability(&pairs, model.as_ref(), tau)?;
    let mut out = Output::default();
    out.file("stability.txt", report.to_text());
    out.file("stability.csv", report.to_csv());
    out.json("stability.json", &report)?;
    out.say(report.to_text());
    Ok(out)
}

pub fn baseline(dim: usize, pairs: u64, seed: u64) -> Result<Output, Failure> {
    let stats = geometry::sampled_pair_stats(dim, pairs, seed)?;
    let mut out = Output::default();
    out.json("baseline.json", &json!({ "seed": seed, "stats": stats, "reference_std": 1.0 / (dim as f64).sqrt() }))?;
    out.say(format!(
        "d={} pairs={} mean={:+.5} std={:.5} (1/sqrt(d) = {:.5})",
        stats.dimension,
        stats.n_pairs,
        stats.mean_cos,
        stats.std_cos,
        1.0 / (dim as f64).sqrt()
    ));
    Ok(out)
}
