//! Two-parameter monotone calibrators: logistic and Beta CDF.
//!
//! Both are fitted by least squares in two stages: an exhaustive 64×64 grid
//! over a fixed parameter box, then projected Levenberg–Marquardt from the
//! best grid point until the gradient of the mean squared residual drops
//! below [`GRAD_TOL`].

use statrs::function::beta::beta_reg;

use crate::accum::{self, Accumulator};
use crate::error::{Error, Result};
use crate::pairs::ScoredPair;

use super::{CalibrationModel, Method, TrainMeta};

/// Margin keeping the Beta CDF input inside the open unit interval.
pub const BETA_EPS: f64 = 1e-6;
pub const GRAD_TOL: f64 = 1e-8;
const GRID: usize = 64;
const MAX_ITER: usize = 500;

pub(crate) fn sigmoid(a: f64, b: f64, x: f64) -> f64 {
    1.0 / (1.0 + (-a * (x - b)).exp())
}

/// Affine map of a cosine score into `[ε, 1 − ε]`.
pub(crate) fn beta_input(slope: f64, intercept: f64, x: f64) -> f64 {
    (slope * x + intercept).clamp(BETA_EPS, 1.0 - BETA_EPS)
}

pub(crate) fn beta_cdf(alpha: f64, beta: f64, u: f64) -> f64 {
    beta_reg(alpha, beta, u)
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (l, h) = (lo.ln(), hi.ln());
    (0..n).map(|i| (l + (h - l) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// A two-parameter curve fitted in an internal parameterization `θ`.
trait Curve {
    fn value(&self, theta: [f64; 2], x: f64) -> f64;
    /// ∂value/∂θ.
    fn gradient(&self, theta: [f64; 2], x: f64) -> [f64; 2];
    /// Projection onto the feasible set.
    fn project(&self, theta: [f64; 2]) -> [f64; 2] {
        theta
    }
    /// Components of the gradient that point out of the feasible set at an
    /// active bound are not counted towards convergence.
    fn active_bound(&self, _theta: [f64; 2], _grad: [f64; 2]) -> [bool; 2] {
        [false, false]
    }
}

struct Logistic;

impl Curve for Logistic {
    fn value(&self, [a, b]: [f64; 2], x: f64) -> f64 {
        sigmoid(a, b, x)
    }

    fn gradient(&self, [a, b]: [f64; 2], x: f64) -> [f64; 2] {
        let s = sigmoid(a, b, x);
        let ds = s * (1.0 - s);
        [ds * (x - b), -ds * a]
    }

    fn project(&self, [a, b]: [f64; 2]) -> [f64; 2] {
        [a.max(0.0), b]
    }

    fn active_bound(&self, [a, _]: [f64; 2], g: [f64; 2]) -> [bool; 2] {
        [a <= 0.0 && g[0] > 0.0, false]
    }
}

/// Beta CDF in log-shape coordinates `θ = (ln α, ln β)`.
struct BetaCurve;

const LOG_SHAPE_MIN: f64 = -9.0; // α, β ≥ e⁻⁹ ≈ 1.2e-4
const LOG_SHAPE_MAX: f64 = 9.0; // α, β ≤ e⁹ ≈ 8.1e3
const FD_STEP: f64 = 1e-5;

impl Curve for BetaCurve {
    fn value(&self, [la, lb]: [f64; 2], u: f64) -> f64 {
        beta_cdf(la.exp(), lb.exp(), u)
    }

    fn gradient(&self, [la, lb]: [f64; 2], u: f64) -> [f64; 2] {
        let h = FD_STEP;
        let da = (self.value([la + h, lb], u) - self.value([la - h, lb], u)) / (2.0 * h);
        let db = (self.value([la, lb + h], u) - self.value([la, lb - h], u)) / (2.0 * h);
        [da, db]
    }

    fn project(&self, [la, lb]: [f64; 2]) -> [f64; 2] {
        [la.clamp(LOG_SHAPE_MIN, LOG_SHAPE_MAX), lb.clamp(LOG_SHAPE_MIN, LOG_SHAPE_MAX)]
    }

    fn active_bound(&self, t: [f64; 2], g: [f64; 2]) -> [bool; 2] {
        let at = |v: f64, gi: f64| (v <= LOG_SHAPE_MIN && gi > 0.0) || (v >= LOG_SHAPE_MAX && gi < 0.0);
        [at(t[0], g[0]), at(t[1], g[1])]
    }
}

#[derive(Debug, Clone, Copy)]
struct FitOutcome {
    theta: [f64; 2],
    mse: f64,
    grad_norm: f64,
    converged: bool,
    iterations: usize,
}

fn mse<C: Curve>(c: &C, theta: [f64; 2], x: &[f64], y: &[f64]) -> f64 {
    accum::sum(x.iter().zip(y).map(|(&xi, &yi)| (c.value(theta, xi) - yi).powi(2))) / x.len() as f64
}

/// Returns `(JᵀJ, Jᵀr, projected ‖∇mse‖)`.
fn normal_equations<C: Curve>(c: &C, theta: [f64; 2], x: &[f64], y: &[f64]) -> ([f64; 3], [f64; 2], f64) {
    let mut jtj = [Accumulator::new(); 3];
    let mut jtr = [Accumulator::new(); 2];
    for (&xi, &yi) in x.iter().zip(y) {
        let r = c.value(theta, xi) - yi;
        let g = c.gradient(theta, xi);
        jtj[0].add(g[0] * g[0]);
        jtj[1].add(g[0] * g[1]);
        jtj[2].add(g[1] * g[1]);
        jtr[0].add(g[0] * r);
        jtr[1].add(g[1] * r);
    }
    let jtj = [jtj[0].value(), jtj[1].value(), jtj[2].value()];
    let jtr = [jtr[0].value(), jtr[1].value()];
    let n = x.len() as f64;
    let grad = [2.0 * jtr[0] / n, 2.0 * jtr[1] / n];
    let active = c.active_bound(theta, grad);
    let free: f64 = (0..2).filter(|&i| !active[i]).map(|i| grad[i] * grad[i]).sum();
    (jtj, jtr, free.sqrt())
}

fn refine<C: Curve>(c: &C, start: [f64; 2], x: &[f64], y: &[f64]) -> FitOutcome {
    let mut theta = c.project(start);
    let mut current = mse(c, theta, x, y);
    let mut lambda = 1e-3;
    let (mut jtj, mut jtr, mut gnorm) = normal_equations(c, theta, x, y);
    let mut iterations = 0;
    while gnorm > GRAD_TOL && iterations < MAX_ITER {
        iterations += 1;
        let mut accepted = false;
        while lambda < 1e16 {
            let (a11, a12, a22) = (jtj[0] * (1.0 + lambda), jtj[1], jtj[2] * (1.0 + lambda));
            let (a11, a22) = (a11.max(1e-300), a22.max(1e-300));
            let det = a11 * a22 - a12 * a12;
            let step = [(-jtr[0] * a22 + jtr[1] * a12) / det, (-jtr[1] * a11 + jtr[0] * a12) / det];
            let candidate = c.project([theta[0] + step[0], theta[1] + step[1]]);
            let value = mse(c, candidate, x, y);
            if value.is_finite() && value <= current && candidate != theta {
                theta = candidate;
                current = value;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
        (jtj, jtr, gnorm) = normal_equations(c, theta, x, y);
    }
    FitOutcome { theta, mse: current, grad_norm: gnorm, converged: gnorm <= GRAD_TOL, iterations }
}

fn grid_search<C: Curve>(c: &C, g0: &[f64], g1: &[f64], x: &[f64], y: &[f64]) -> ([f64; 2], f64) {
    let mut best = ([g0[0], g1[0]], f64::INFINITY);
    for &t0 in g0 {
        for &t1 in g1 {
            let v = mse(c, [t0, t1], x, y);
            // strict comparison keeps the first minimum in grid order
            if v < best.1 {
                best = ([t0, t1], v);
            }
        }
    }
    best
}

fn fit_curve<C: Curve>(c: &C, g0: &[f64], g1: &[f64], x: &[f64], y: &[f64]) -> FitOutcome {
    let (start, grid_mse) = grid_search(c, g0, g1, x, y);
    let refined = refine(c, start, x, y);
    if refined.mse <= grid_mse {
        refined
    } else {
        FitOutcome { theta: start, mse: grid_mse, converged: false, ..refined }
    }
}

fn diagnostics(meta: &mut TrainMeta, out: &FitOutcome, n: usize) {
    meta.sse = Some(out.mse * n as f64);
    meta.converged = Some(out.converged);
    meta.grad_norm = Some(out.grad_norm);
    meta.flags.push(format!("iterations={}", out.iterations));
    if !out.converged {
        log::warn!("calibration refinement stopped with gradient norm {:.3e}", out.grad_norm);
        meta.flags.push("not_converged".into());
    }
}

/// Logistic calibration `1 / (1 + e^{−a(x − b)})` with `a ≥ 0`.
pub fn fit_sigmoid(pairs: &[ScoredPair]) -> Result<CalibrationModel> {
    if pairs.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: pairs.len() });
    }
    let x: Vec<f64> = pairs.iter().map(|p| p.model_score).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.human_score).collect();
    let mut out = fit_curve(&Logistic, &log_space(0.1, 50.0, GRID), &lin_space(-1.0, 1.0, GRID), &x, &y);
    // the flat model a = 0 is the boundary of the feasible set and not on the grid
    let flat = [0.0, 0.0];
    let flat_mse = mse(&Logistic, flat, &x, &y);
    if flat_mse < out.mse {
        let (_, _, gnorm) = normal_equations(&Logistic, flat, &x, &y);
        out = FitOutcome { theta: flat, mse: flat_mse, grad_norm: gnorm, converged: gnorm <= GRAD_TOL, iterations: 0 };
    }
    let mut meta = TrainMeta::for_pairs(pairs);
    diagnostics(&mut meta, &out, pairs.len());
    CalibrationModel::parametric(Method::Sigmoid, out.theta.to_vec(), meta)
}

/// Beta CDF calibration on `u = clamp((x + 1)/2, ε, 1 − ε)`.
pub fn fit_beta(pairs: &[ScoredPair]) -> Result<CalibrationModel> {
    if pairs.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: pairs.len() });
    }
    let (slope, intercept) = (0.5, 0.5);
    let u: Vec<f64> = pairs.iter().map(|p| beta_input(slope, intercept, p.model_score)).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.human_score).collect();
    let grid: Vec<f64> = log_space(0.05, 100.0, GRID).into_iter().map(f64::ln).collect();
    let out = fit_curve(&BetaCurve, &grid, &grid, &u, &y);
    let mut meta = TrainMeta::for_pairs(pairs);
    diagnostics(&mut meta, &out, pairs.len());
    let params = vec![out.theta[0].exp(), out.theta[1].exp(), slope, intercept];
    CalibrationModel::parametric(Method::Beta, params, meta)
}
