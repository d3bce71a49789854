//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! The score-fixture criteria read `tests/data/sts_train_scores.jsonl`, or
//! the file named by `SIMCAL_STS_FIXTURE`, and fail when neither exists.

mod oracles;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simcal::calibrators::{compare_methods, fit_isotonic, fit_linear, fit_polynomial, pava};
use simcal::density::{kde_1d, silverman_bandwidth, uniform_grid};
use simcal::geometry::sampled_pair_stats;
use simcal::invariance::{run_suite, run_suite_with};
use simcal::metrics::spearman_of;
use simcal::pairs::{self, from_scores, human_scores, model_scores};
use simcal::stability::{bundled_dataset, evaluate_stability, PerturbationPair};
use simcal::thresholds::{calibrated_threshold, guarantee_check, guarantee_transfer, hcs_threshold};
use simcal::{synth, CalibrationModel, Method, ScoredPair};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn fixture_path() -> PathBuf {
    std::env::var_os("SIMCAL_STS_FIXTURE")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/sts_train_scores.jsonl"))
}

fn load_fixture() -> Result<Vec<ScoredPair>, String> {
    let path = fixture_path();
    if !path.exists() {
        return Err(format!("STS-train score fixture not found at {}", path.display()));
    }
    pairs::load(&path).map_err(|e| format!("{}: {e}", path.display()))
}

fn pava_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..1_000 {
        let n = rng.random_range(1..=8);
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mult: Vec<usize> = (0..n).map(|_| rng.random_range(1..=4)).collect();
        let w: Vec<f64> = mult.iter().map(|&m| m as f64).collect();
        let expected = oracles::isotonic_by_partitions(&y, &w);

        // direct weighted call
        for (a, b) in pava(&y, &w).iter().zip(&expected) {
            worst = worst.max((a - b).abs());
        }
        // the same weights expressed as repeated scores through the public fit
        if mult.iter().sum::<usize>() >= 2 {
            let xs: Vec<f64> = (0..n).map(|k| -0.8 + 0.2 * k as f64).collect();
            let mut mx = Vec::new();
            let mut my = Vec::new();
            for k in 0..n {
                for _ in 0..mult[k] {
                    mx.push(xs[k]);
                    my.push(y[k]);
                }
            }
            let model = fit_isotonic(&from_scores(&mx, &my)).unwrap();
            for (x, e) in xs.iter().zip(&expected) {
                worst = worst.max((model.apply(*x) - e).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-9 && secs < 10.0,
        format!("1000 weighted instances, max |deviation| = {worst:.2e}, {secs:.2} s"),
    )
}

fn zero_training_bias() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let data = synth::noisy_monotone_pairs(&mut rng, 200);
        let (x, y) = (model_scores(&data), human_scores(&data));
        let mut models = vec![fit_isotonic(&data).unwrap(), fit_linear(&data).unwrap()];
        for d in 2..=4 {
            models.push(fit_polynomial(&data, d).unwrap());
        }
        for m in &models {
            let bias = x.iter().zip(&y).map(|(&a, &b)| m.predict_unclamped(a) - b).sum::<f64>() / x.len() as f64;
            worst = worst.max(bias.abs());
        }
    }
    outcome(worst <= 1e-9, format!("100 datasets x 5 fits (n=200), max |MBE| = {worst:.2e}"))
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn calibration_table() -> Outcome {
    let data = match load_fixture() {
        Ok(d) => d,
        Err(e) => return outcome(false, e),
    };
    let start = Instant::now();
    let table = match compare_methods(&data, 10) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("comparison failed: {e}")),
    };
    let secs = start.elapsed().as_secs_f64();
    let mut problems = Vec::new();
    let o = table.baseline();
    let checks = [
        ("original RMSE", o.rmse, 0.1702, 0.005),
        ("original MBE", o.mbe, 0.0789, 0.005),
        ("original ECE", o.ece, 0.0797, 0.01),
        ("original Pearson", o.pearson, 0.8576, 0.005),
        ("original Spearman", o.spearman, 0.8430, 0.005),
    ];
    for (name, v, t, tol) in checks {
        if !within(v, t, tol) {
            problems.push(format!("{name} {v:.4} (want {t} ± {tol})"));
        }
    }
    let report = |m: Method| table.row(m).and_then(|r| r.report.clone());
    match report(Method::Isotonic) {
        Some(r) => {
            if r.rmse > 0.145 {
                problems.push(format!("isotonic RMSE {:.4} > 0.145", r.rmse));
            }
            if r.ece > 0.005 {
                problems.push(format!("isotonic ECE {:.4} > 0.005", r.ece));
            }
            if r.spearman < 0.850 {
                problems.push(format!("isotonic Spearman {:.4} < 0.850", r.spearman));
            }
        }
        None => problems.push("isotonic row failed".into()),
    }
    match report(Method::Linear) {
        Some(r) if !within(r.rmse, 0.1506, 0.005) => problems.push(format!("linear RMSE {:.4}", r.rmse)),
        None => problems.push("linear row failed".into()),
        _ => {}
    }
    let (x, y) = (model_scores(&data), human_scores(&data));
    for m in [Method::Sigmoid, Method::Beta] {
        let Some(model) = table.row(m).and_then(|r| r.model.as_ref()) else {
            problems.push(format!("{m} row failed"));
            continue;
        };
        let cal = model.apply_all(&x);
        let mut sorted = x.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| model.apply(w[0]) > model.apply(w[1])) {
            problems.push(format!("{m} not monotone"));
        }
        match spearman_of(&cal, &y) {
            Ok(s) if (s - o.spearman).abs() <= 1e-12 => {}
            other => problems.push(format!("{m} Spearman {other:?} vs {:.6}", o.spearman)),
        }
    }
    if secs >= 30.0 {
        problems.push(format!("runtime {secs:.1} s"));
    }
    let detail = format!(
        "n={}, original RMSE {:.4} MBE {:.4} ECE {:.4} r {:.4} rho {:.4}, {secs:.1} s{}",
        data.len(),
        o.rmse,
        o.mbe,
        o.ece,
        o.pearson,
        o.spearman,
        if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
    );
    outcome(problems.is_empty(), detail)
}

fn threshold_reproduction() -> Outcome {
    let data = match load_fixture() {
        Ok(d) => d,
        Err(e) => return outcome(false, e),
    };
    let run = || -> simcal::Result<Outcome> {
        let raw = hcs_threshold(&data, 0.05, 0.9)?;
        let model = fit_isotonic(&data)?;
        let calibrated = model.calibrate_pairs(&data);
        let quantile = hcs_threshold(&calibrated, 0.05, 0.9)?.value;
        let mapped = calibrated_threshold(&model, raw.value);
        let raw_cov = guarantee_check(&data, raw.value, 0.9)?;
        let q_cov = guarantee_check(&calibrated, quantile, 0.9)?;
        let m_cov = guarantee_check(&calibrated, mapped, 0.9)?;
        let in_band = |v: f64| (0.63..=0.67).contains(&v);
        let raw_ok = (0.70..=0.74).contains(&raw.value) && raw_cov >= 0.95;
        let cal_ok = (in_band(quantile) && q_cov >= 0.95) || (in_band(mapped) && m_cov >= 0.95);
        Ok(outcome(
            raw_ok && cal_ok,
            format!(
                "raw tau {:.4} (coverage {raw_cov:.4}); calibrated quantile {quantile:.4} (coverage {q_cov:.4}), mapped {mapped:.4} (coverage {m_cov:.4})",
                raw.value
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, e.to_string()))
}

fn invariance_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut trials = 0u64;
    let mut violations = 0u64;
    for _ in 0..4 {
        let model = fit_isotonic(&synth::sts_like_pairs(2_000, rng.random())).unwrap();
        let r = run_suite(&model, rng.random(), 25_000).unwrap();
        for (_, c) in r.checks() {
            trials += c.n_trials;
            violations += c.violations;
        }
    }
    let per_checker = 4 * 25_000;
    let control = CalibrationModel::parametric(Method::Linear, vec![-1.0, 1.0], Default::default()).unwrap();
    let neg = run_suite_with(|x| control.apply(x), &[], 104, 1_000).unwrap();
    let missed: Vec<&str> = neg.checks().iter().filter(|(_, r)| r.violations == 0).map(|(n, _)| *n).collect();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        violations == 0 && missed.is_empty() && secs < 20.0,
        format!(
            "{per_checker} trials per checker ({trials} total) on fitted isotonic models, {violations} violations; \
             non-monotone control caught by {}/5 checkers; {secs:.1} s",
            5 - missed.len()
        ),
    )
}

fn guarantee_preservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut exceptions = 0;
    for _ in 0..1_000 {
        let model = synth::random_isotonic_model(&mut rng);
        let n = rng.random_range(20..300);
        let m: Vec<f64> = (0..n).map(|_| synth::score_near_breakpoints(&mut rng, model.breakpoints())).collect();
        let mut h: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        h[0] = 0.95;
        let data = from_scores(&m, &h);
        let tau = hcs_threshold(&data, 0.05, 0.9).unwrap().value;
        exceptions += guarantee_transfer(&model, &data, tau, 0.9).unwrap().exceptions;
    }
    outcome(exceptions == 0, format!("1000 dataset/model pairs, {exceptions} exceptions"))
}

fn isotropy_baseline() -> Outcome {
    let s = sampled_pair_stats(768, 100_000, 106).unwrap();
    let target = 0.0361;
    let ok = s.mean_cos.abs() <= 0.005 && (s.std_cos - target).abs() <= 0.1 * target;
    outcome(ok, format!("d=768, {} pairs, mean {:+.5}, std {:.5}", s.n_pairs, s.mean_cos, s.std_cos))
}

fn kde_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let (mut worst_kde, mut worst_bw) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.random_range(2..1_500);
        let centre = rng.random_range(0.2..0.8);
        let spread = rng.random_range(0.02..0.3);
        let xs: Vec<f64> = (0..n).map(|_| centre + spread * (rng.random::<f64>() - 0.5)).collect();
        let h = silverman_bandwidth(&xs).unwrap();
        worst_bw = worst_bw.max((h - oracles::silverman_direct(&xs)).abs());
        let grid = uniform_grid(0.0, 1.0, 128);
        let got = kde_1d(&xs, &grid, h).unwrap();
        for (a, b) in got.values.iter().zip(oracles::kde_double_loop(&xs, &grid, h)) {
            worst_kde = worst_kde.max((a - b).abs());
        }
    }
    outcome(
        worst_kde <= 1e-12 && worst_bw <= 1e-12,
        format!("100 datasets, max |KDE diff| {worst_kde:.2e}, max |bandwidth diff| {worst_bw:.2e}"),
    )
}

fn stability_protocol() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut worst = 0.0f64;
    let mut count_mismatch = 0;
    let mut exceptions = 0;
    let mut check = |pairs: &[PerturbationPair], model: Option<&CalibrationModel>, tau: f64| {
        let report = evaluate_stability(pairs, model, tau).unwrap();
        for row in report.rows.iter().chain(std::iter::once(&report.overall)) {
            let scores: Vec<f64> = pairs
                .iter()
                .filter(|p| row.label == report.overall.label || p.type_label == row.label)
                .map(|p| model.map_or(p.raw_score, |m| m.apply(p.raw_score)))
                .collect();
            let (n, mean, std, rate) = oracles::group_stats(&scores, tau);
            count_mismatch += usize::from(n != row.n);
            for d in [mean - row.mean, std - row.std, rate - row.rate] {
                worst = worst.max(d.abs());
            }
        }
    };
    let fixture = bundled_dataset();
    check(&fixture, None, 0.72);
    let mut datasets = vec![fixture];
    for seed in 0..100 {
        datasets.push(synth::perturbation_pairs(rng.random_range(1..40), seed));
    }
    for pairs in &datasets {
        let model = synth::random_isotonic_model(&mut rng);
        let tau = rng.random_range(0.6..0.95);
        check(pairs, None, tau);
        let mapped = model.apply(tau);
        check(pairs, Some(&model), mapped);
        let raw = evaluate_stability(pairs, None, tau).unwrap();
        let cal = evaluate_stability(pairs, Some(&model), mapped).unwrap();
        exceptions += raw.rows.iter().zip(&cal.rows).filter(|(r, c)| c.rate < r.rate).count();
    }
    outcome(
        worst <= 1e-12 && count_mismatch == 0 && exceptions == 0,
        format!(
            "bundled fixture + 100 synthetic datasets, max |stat diff| {worst:.2e}, matched-threshold exceptions {exceptions}"
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("pava-oracle", pava_oracle),
        ("zero-training-bias", zero_training_bias),
        ("sts-calibration-table", calibration_table),
        ("sts-thresholds", threshold_reproduction),
        ("invariance-suite", invariance_suite),
        ("guarantee-preservation", guarantee_preservation),
        ("isotropy-baseline", isotropy_baseline),
        ("kde-oracle", kde_oracle),
        ("stability-protocol", stability_protocol),
    ];
    println!("acceptance: {} criteria", criteria.len());
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        failed += usize::from(!o.pass);
        println!("{} {name:<24} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
