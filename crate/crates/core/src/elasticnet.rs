//! Elastic-net linear regression by cyclic coordinate descent.
//!
//! The objective is
//!
//! ```text
//! 1/2 Σ (y_i - β0 - x_iᵀβ)² + λ [ (1-α)/2 ‖β‖₂² + α ‖β‖₁ ]
//! ```
//!
//! with no `1/N` factor on the loss. The intercept is never penalized. By
//! default predictors are centered and scaled to unit (population) variance
//! before solving, so the penalty acts on standardized coefficients; the
//! returned coefficients are mapped back to original units. Columns with
//! zero variance are left out of the solve and keep a zero coefficient.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnetConfig {
    /// Mix between ridge (0) and lasso (1).
    pub alpha: f64,
    pub lambda: f64,
    /// Convergence tolerance on the largest coefficient change in a sweep.
    pub tol: f64,
    pub max_sweeps: usize,
    pub standardize: bool,
}

impl Default for EnetConfig {
    fn default() -> Self {
        EnetConfig {
            alpha: 0.02,
            lambda: 1.0,
            tol: 1e-7,
            max_sweeps: 10_000,
            standardize: true,
        }
    }
}

impl EnetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda {} must be finite and >= 0", self.lambda)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol {} must be > 0", self.tol)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Config("max_sweeps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnetModel {
    pub alpha: f64,
    pub lambda: f64,
    pub beta0: f64,
    /// Coefficients in original units.
    pub beta: Vec<f64>,
    pub column_names: Vec<String>,
    pub kkt_residual: f64,
    pub n_sweeps: usize,
    pub standardize: bool,
    /// Column scale used by the solver (standard deviation, or 1 without standardization).
    pub x_scale: Vec<f64>,
    /// Zero-variance columns left out of the solve.
    pub dropped: Vec<usize>,
}

impl EnetModel {
    /// Coefficients on the solver's scale, `β_j · scale_j`.
    pub fn standardized_beta(&self) -> Vec<f64> {
        self.beta
            .iter()
            .zip(&self.x_scale)
            .map(|(b, s)| b * s)
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.beta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.beta.len(),
                got: x.len(),
            });
        }
        Ok(self.beta0 + x.iter().zip(&self.beta).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn predict_matrix(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        if x.ncols() != self.beta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.beta.len(),
                got: x.ncols(),
            });
        }
        let beta = DVector::from_column_slice(&self.beta);
        Ok((x * beta).add_scalar(self.beta0))
    }

    pub fn nonzero_count(&self) -> usize {
        self.beta.iter().filter(|b| **b != 0.0).count()
    }
}

/// `sign(v) · max(|v| - t, 0)`.
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Centered (and optionally scaled) columns plus the statistics to undo it.
struct Prepared {
    cols: Vec<Vec<f64>>,
    /// `x_jᵀ x_j` of the prepared columns.
    sq_norms: Vec<f64>,
    means: Vec<f64>,
    scales: Vec<f64>,
    active: Vec<usize>,
    dropped: Vec<usize>,
    y_mean: f64,
    /// `x_jᵀ x_k` of the prepared columns, row-major `p x p`; zero for dropped columns.
    gram: Vec<f64>,
    /// `x_jᵀ yc`.
    xty: Vec<f64>,
    yy: f64,
}

fn column_stats(x: &DMatrix<f64>, standardize: bool) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let n = x.nrows() as f64;
    let mut means = Vec::with_capacity(x.ncols());
    let mut scales = Vec::with_capacity(x.ncols());
    let mut dropped = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j);
        let mean = col.sum() / n;
        let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / n).sqrt();
        if sd <= 1e-12 * mean.abs().max(1.0) {
            dropped.push(j);
        }
        means.push(mean);
        scales.push(if standardize && sd > 0.0 { sd } else { 1.0 });
    }
    (means, scales, dropped)
}

fn prepare(x: &DMatrix<f64>, y: &DVector<f64>, standardize: bool) -> Result<Prepared> {
    let (n, p) = x.shape();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::UndefinedInput("non-finite entry in X or y".into()));
    }
    let (means, scales, dropped) = column_stats(x, standardize);
    let active: Vec<usize> = (0..p).filter(|j| !dropped.contains(j)).collect();
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            x.column(j)
                .iter()
                .map(|v| (v - means[j]) / scales[j])
                .collect()
        })
        .collect();
    let sq_norms = cols.iter().map(|c| dot(c, c)).collect();
    let y_mean = y.sum() / n as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let mut gram = vec![0.0; p * p];
    for (a, &j) in active.iter().enumerate() {
        for &k in &active[a..] {
            let g = dot(&cols[j], &cols[k]);
            gram[j * p + k] = g;
            gram[k * p + j] = g;
        }
    }
    let xty = cols.iter().map(|c| dot(c, &yc)).collect();
    let yy = dot(&yc, &yc);
    Ok(Prepared {
        cols,
        sq_norms,
        means,
        scales,
        active,
        dropped,
        y_mean,
        gram,
        xty,
        yy,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn max_abs_correlation(prep: &Prepared) -> f64 {
    prep.active
        .iter()
        .map(|&j| prep.xty[j].abs())
        .fold(0.0, f64::max)
}

/// Penalized objective on the solver's scale, using
/// `‖r‖² = ycᵀyc - βᵀXᵀyc - βᵀXᵀr` so that it costs `O(p)` given the gradient.
fn objective(prep: &Prepared, beta: &[f64], grad: &[f64], lambda: f64, alpha: f64) -> f64 {
    let loss = 0.5 * (prep.yy - dot(beta, &prep.xty) - dot(beta, grad));
    let l2: f64 = beta.iter().map(|b| b * b).sum();
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    loss + lambda * (0.5 * (1.0 - alpha) * l2 + alpha * l1)
}

/// `x_jᵀ (yc - X β)` for every column, from the Gram matrix.
fn gradient(prep: &Prepared, beta: &[f64]) -> Vec<f64> {
    let p = beta.len();
    (0..p)
        .map(|j| {
            let row = &prep.gram[j * p..(j + 1) * p];
            prep.xty[j] - prep.active.iter().map(|&k| row[k] * beta[k]).sum::<f64>()
        })
        .collect()
}

/// Largest violation of the stationarity conditions on the solver's scale.
fn kkt_on_prepared(prep: &Prepared, beta: &[f64], grad: &[f64], lambda: f64, alpha: f64) -> f64 {
    let l1 = lambda * alpha;
    let l2 = lambda * (1.0 - alpha);
    let mut worst: f64 = 0.0;
    for &j in &prep.active {
        let g = grad[j] - l2 * beta[j];
        let v = if beta[j] != 0.0 {
            (g - l1 * beta[j].signum()).abs()
        } else {
            (g.abs() - l1).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Where the next polishing step heads from `beta`.
enum Heading {
    /// Minimizer over the support with the signs held fixed.
    Target(Vec<f64>),
    /// Direction within the support along which the fit does not change,
    /// oriented so that the l1 penalty does not grow.
    Null(Vec<f64>),
}

fn heading(prep: &Prepared, beta: &[f64], l1: f64, l2: f64) -> Option<Heading> {
    let p = beta.len();
    let support: Vec<usize> = prep.active.iter().copied().filter(|&j| beta[j] != 0.0).collect();
    if support.is_empty() {
        return None;
    }
    let gram = |sub: &[usize]| {
        DMatrix::from_fn(sub.len(), sub.len(), |a, b| {
            let g = prep.gram[sub[a] * p + sub[b]];
            if a == b {
                g + l2
            } else {
                g
            }
        })
    };
    match linalg::cholesky(&gram(&support)) {
        Ok(l) => {
            let rhs = DVector::from_iterator(
                support.len(),
                support.iter().map(|&j| prep.xty[j] - l1 * beta[j].signum()),
            );
            let mut out = vec![0.0; p];
            for (&j, &b) in support.iter().zip(linalg::cholesky_solve(&l, &rhs).iter()) {
                out[j] = b;
            }
            Some(Heading::Target(out))
        }
        Err(k) => {
            // column k is (numerically) a combination of the ones before it
            let head = &support[..k];
            let l = linalg::cholesky(&gram(head)).ok()?;
            let rhs = DVector::from_iterator(k, head.iter().map(|&j| prep.gram[j * p + support[k]]));
            let mut dir = vec![0.0; p];
            for (&j, &w) in head.iter().zip(linalg::cholesky_solve(&l, &rhs).iter()) {
                dir[j] = w;
            }
            dir[support[k]] = -1.0;
            let slope: f64 = dir.iter().zip(beta).map(|(d, b)| d * b.signum()).sum();
            if slope > 0.0 {
                dir.iter_mut().for_each(|d| *d = -*d);
            }
            Some(Heading::Null(dir))
        }
    }
}

/// Active-set refinement of a coordinate-descent iterate.
///
/// Coordinate descent crawls when columns are collinear (acceleration lags
/// are differences of velocity lags). Each step here either heads for the
/// sign-constrained minimizer over the support or slides along an exact
/// collinearity, and stops where the first coefficient reaches zero, so the
/// signs hold along the way. Returns the refined point and its gradient, or
/// `None` if no step lowered the objective.
fn polish(prep: &Prepared, beta: &[f64], cfg: &EnetConfig) -> Option<(Vec<f64>, Vec<f64>)> {
    let (l1, l2) = (cfg.lambda * cfg.alpha, cfg.lambda * (1.0 - cfg.alpha));
    let mut current = beta.to_vec();
    let mut grad = gradient(prep, &current);
    let mut obj = objective(prep, &current, &grad, cfg.lambda, cfg.alpha);
    let mut improved = false;
    let support = current.iter().filter(|b| **b != 0.0).count();
    for _ in 0..=2 * support {
        let Some(heading) = heading(prep, &current, l1, l2) else {
            break;
        };
        let (dir, mut step): (Vec<f64>, f64) = match heading {
            Heading::Target(t) => (t.iter().zip(&current).map(|(t, b)| t - b).collect(), 1.0),
            Heading::Null(d) => (d, f64::INFINITY),
        };
        let mut blocking = None;
        for (j, (&b, &d)) in current.iter().zip(&dir).enumerate() {
            if b != 0.0 && d != 0.0 && d.signum() != b.signum() {
                let s = -b / d;
                if s <= step {
                    step = s;
                    blocking = Some(j);
                }
            }
        }
        if !step.is_finite() {
            break;
        }
        let mut next: Vec<f64> = current.iter().zip(&dir).map(|(&b, &d)| b + step * d).collect();
        if let Some(j) = blocking {
            next[j] = 0.0;
        }
        let next_grad = gradient(prep, &next);
        let next_obj = objective(prep, &next, &next_grad, cfg.lambda, cfg.alpha);
        if !(next_obj <= obj + 1e-12 * obj.abs().max(prep.yy)) {
            break;
        }
        let done = blocking.is_none();
        (current, grad, obj, improved) = (next, next_grad, next_obj, true);
        if done {
            break;
        }
    }
    improved.then_some((current, grad))
}

/// Sweeps between attempts to polish while coordinate descent is still moving.
const POLISH_EVERY: usize = 50;

struct Solution {
    beta: Vec<f64>,
    sweeps: usize,
    kkt: f64,
}

/// Cyclic coordinate descent in covariance form: the gradient `Xᵀr` is kept
/// up to date through the Gram matrix, so an update costs `O(p)` rather than `O(n)`.
fn coordinate_descent(prep: &Prepared, cfg: &EnetConfig, warm: Option<&[f64]>) -> Result<Solution> {
    let p = prep.cols.len();
    let mut beta = warm.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; p]);
    for &j in &prep.dropped {
        beta[j] = 0.0;
    }
    let mut grad = gradient(prep, &beta);

    let l1 = cfg.lambda * cfg.alpha;
    let l2 = cfg.lambda * (1.0 - cfg.alpha);
    // stationarity is measured in gradient units, which scale with X'y
    let kkt_target = 1e-3 * cfg.tol * max_abs_correlation(prep).max(1.0);
    let mut prev_obj = objective(prep, &beta, &grad, cfg.lambda, cfg.alpha);
    let mut kkt = f64::INFINITY;

    for sweep in 1..=cfg.max_sweeps {
        let mut max_change: f64 = 0.0;
        for &j in &prep.active {
            let old = beta[j];
            let z = grad[j] + prep.sq_norms[j] * old;
            let new = soft_threshold(z, l1) / (prep.sq_norms[j] + l2);
            if new != old {
                let delta = new - old;
                let row = &prep.gram[j * p..(j + 1) * p];
                for &k in &prep.active {
                    grad[k] -= row[k] * delta;
                }
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }

        if cfg!(debug_assertions) {
            let obj = objective(prep, &beta, &grad, cfg.lambda, cfg.alpha);
            // the identity behind `objective` cancels terms of size ycᵀyc
            debug_assert!(
                obj <= prev_obj + 1e-10 * prev_obj.abs().max(1.0) + 1e-12 * prep.yy,
                "objective increased from {prev_obj} to {obj} in sweep {sweep}"
            );
            prev_obj = obj;
        }

        let settled = max_change < cfg.tol;
        if settled || sweep % POLISH_EVERY == 0 {
            // refresh to shed accumulated rounding before judging optimality
            grad = gradient(prep, &beta);
            kkt = kkt_on_prepared(prep, &beta, &grad, cfg.lambda, cfg.alpha);
            if settled && kkt <= kkt_target {
                return Ok(Solution {
                    beta,
                    sweeps: sweep,
                    kkt,
                });
            }
            if let Some((polished, polished_grad)) = polish(prep, &beta, cfg) {
                kkt = kkt_on_prepared(prep, &polished, &polished_grad, cfg.lambda, cfg.alpha);
                if cfg!(debug_assertions) {
                    prev_obj = objective(prep, &polished, &polished_grad, cfg.lambda, cfg.alpha);
                }
                beta = polished;
                grad = polished_grad;
                if kkt <= kkt_target {
                    return Ok(Solution {
                        beta,
                        sweeps: sweep,
                        kkt,
                    });
                }
            }
        }
    }
    if !kkt.is_finite() {
        kkt = kkt_on_prepared(prep, &beta, &gradient(prep, &beta), cfg.lambda, cfg.alpha);
    }
    let (beta0, beta) = back_transform(prep, &beta);
    Err(Error::NotConverged {
        lambda: cfg.lambda,
        sweeps: cfg.max_sweeps,
        kkt_residual: kkt,
        beta0,
        beta,
    })
}

fn back_transform(prep: &Prepared, beta_scaled: &[f64]) -> (f64, Vec<f64>) {
    let beta: Vec<f64> = beta_scaled
        .iter()
        .zip(&prep.scales)
        .map(|(b, s)| b / s)
        .collect();
    let shift: f64 = beta.iter().zip(&prep.means).map(|(b, m)| b * m).sum();
    (prep.y_mean - shift, beta)
}

fn to_model(prep: &Prepared, cfg: &EnetConfig, sol: Solution, names: &[String]) -> EnetModel {
    let (beta0, beta) = back_transform(prep, &sol.beta);
    EnetModel {
        alpha: cfg.alpha,
        lambda: cfg.lambda,
        beta0,
        beta,
        column_names: names.to_vec(),
        kkt_residual: sol.kkt,
        n_sweeps: sol.sweeps,
        standardize: cfg.standardize,
        x_scale: prep.scales.clone(),
        dropped: prep.dropped.clone(),
    }
}

fn default_names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

/// Fits one penalty level. Column names default to `x0, x1, ...`.
pub fn fit(x: &DMatrix<f64>, y: &DVector<f64>, cfg: &EnetConfig) -> Result<EnetModel> {
    fit_named(x, y, cfg, &default_names(x.ncols()))
}

pub fn fit_named(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    cfg: &EnetConfig,
    names: &[String],
) -> Result<EnetModel> {
    cfg.validate()?;
    check_names(x, names)?;
    let prep = prepare(x, y, cfg.standardize)?;
    let sol = coordinate_descent(&prep, cfg, None)?;
    Ok(to_model(&prep, cfg, sol, names))
}

fn check_names(x: &DMatrix<f64>, names: &[String]) -> Result<()> {
    if names.len() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            got: names.len(),
        });
    }
    Ok(())
}

/// Fits a sequence of penalties, warm-starting each fit from the previous one.
/// `lambdas` should be decreasing for the warm starts to pay off.
pub fn fit_path(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    cfg: &EnetConfig,
    lambdas: &[f64],
    names: &[String],
) -> Result<Vec<EnetModel>> {
    check_names(x, names)?;
    let prep = prepare(x, y, cfg.standardize)?;
    let mut warm: Option<Vec<f64>> = None;
    let mut models = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let step = EnetConfig { lambda, ..*cfg };
        step.validate()?;
        let sol = coordinate_descent(&prep, &step, warm.as_deref())?;
        warm = Some(sol.beta.clone());
        models.push(to_model(&prep, &step, sol, names));
    }
    Ok(models)
}

/// Smallest penalty at which every coefficient is zero.
pub fn lambda_max(x: &DMatrix<f64>, y: &DVector<f64>, alpha: f64, standardize: bool) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Config(format!(
            "lambda_max needs alpha in (0, 1], got {alpha}"
        )));
    }
    let prep = prepare(x, y, standardize)?;
    Ok(max_abs_correlation(&prep) / alpha)
}

/// Log-uniform decreasing grid from `lambda_max` down to `lambda_max · ratio`.
pub fn lambda_path(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    alpha: f64,
    standardize: bool,
    n_lambdas: usize,
    ratio: f64,
) -> Result<Vec<f64>> {
    if n_lambdas == 0 || !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!(
            "need n_lambdas >= 1 and ratio in (0, 1), got {n_lambdas}, {ratio}"
        )));
    }
    let top = lambda_max(x, y, alpha, standardize)?;
    if top <= 0.0 {
        return Err(Error::Config("response has no linear association with X (lambda_max = 0)".into()));
    }
    if n_lambdas == 1 {
        return Ok(vec![top]);
    }
    let last = (n_lambdas - 1) as f64;
    Ok((0..n_lambdas)
        .map(|k| top * ratio.powf(k as f64 / last))
        .collect())
}

/// Largest violation of the optimality conditions of `model` on `(x, y)`,
/// measured on the solver's scale. Zero at an exact optimum.
pub fn kkt_residual(model: &EnetModel, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    let (n, p) = x.shape();
    if p != model.beta.len() || y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: model.beta.len(),
            got: p,
        });
    }
    let fitted = model.predict_matrix(x)?;
    let resid: Vec<f64> = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let resid_sum: f64 = resid.iter().sum();
    let l1 = model.lambda * model.alpha;
    let l2 = model.lambda * (1.0 - model.alpha);
    // the unpenalized intercept requires the residuals to sum to zero
    let mut worst = resid_sum.abs();
    for j in 0..p {
        if model.dropped.contains(&j) {
            continue;
        }
        let col = x.column(j);
        let mean = col.sum() / n as f64;
        let scale = model.x_scale[j];
        let g_data: f64 = col.iter().zip(&resid).map(|(v, r)| (v - mean) * r).sum::<f64>() / scale;
        let b = model.beta[j] * scale;
        let g = g_data - l2 * b;
        let v = if b != 0.0 {
            (g - l1 * b.signum()).abs()
        } else {
            (g.abs() - l1).max(0.0)
        };
        worst = worst.max(v);
    }
    Ok(worst)
}

/// Objective value of `model` on its own scale.
pub fn objective_value(model: &EnetModel, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    let fitted = model.predict_matrix(x)?;
    let rss: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    let scaled = model.standardized_beta();
    let l2: f64 = scaled.iter().map(|b| b * b).sum();
    let l1: f64 = scaled.iter().map(|b| b.abs()).sum();
    Ok(0.5 * rss + model.lambda * (0.5 * (1.0 - model.alpha) * l2 + model.alpha * l1))
}
