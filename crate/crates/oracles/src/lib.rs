//! Reference implementations used as test oracles. Each one is coded
//! independently of the library algorithm it checks and shares no code with it.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Natural cubic spline through `(t, y)` in slope form: solves the dense
/// system for the knot first derivatives, then evaluates the cubic Hermite
/// piece. Returns `None` outside the knot span.
pub struct SlopeSpline {
    t: Vec<f64>,
    y: Vec<f64>,
    k: Vec<f64>,
}

impl SlopeSpline {
    pub fn new(t: &[f64], y: &[f64]) -> Self {
        let n = t.len();
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut b = DVector::<f64>::zeros(n);
        let h = |i: usize| t[i + 1] - t[i];
        a[(0, 0)] = 2.0;
        a[(0, 1)] = 1.0;
        b[0] = 3.0 * (y[1] - y[0]) / h(0);
        for i in 1..n - 1 {
            a[(i, i - 1)] = 1.0 / h(i - 1);
            a[(i, i)] = 2.0 * (1.0 / h(i - 1) + 1.0 / h(i));
            a[(i, i + 1)] = 1.0 / h(i);
            b[i] = 3.0 * ((y[i] - y[i - 1]) / (h(i - 1) * h(i - 1)) + (y[i + 1] - y[i]) / (h(i) * h(i)));
        }
        a[(n - 1, n - 2)] = 1.0;
        a[(n - 1, n - 1)] = 2.0;
        b[n - 1] = 3.0 * (y[n - 1] - y[n - 2]) / h(n - 2);
        let k = a.lu().solve(&b).expect("spline system is diagonally dominant");
        SlopeSpline {
            t: t.to_vec(),
            y: y.to_vec(),
            k: k.iter().copied().collect(),
        }
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        let n = self.t.len();
        if x < self.t[0] || x > self.t[n - 1] {
            return None;
        }
        let mut i = 0;
        while i + 2 < n && x > self.t[i + 1] {
            i += 1;
        }
        let h = self.t[i + 1] - self.t[i];
        let s = (x - self.t[i]) / h;
        let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
        let h10 = s.powi(3) - 2.0 * s * s + s;
        let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
        let h11 = s.powi(3) - s * s;
        Some(h00 * self.y[i] + h10 * h * self.k[i] + h01 * self.y[i + 1] + h11 * h * self.k[i + 1])
    }
}

/// Column means of `x`.
pub fn col_means(x: &DMatrix<f64>) -> Vec<f64> {
    (0..x.ncols()).map(|j| x.column(j).mean()).collect()
}

/// Population standard deviations of the columns of `x`.
pub fn col_sds(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows() as f64;
    (0..x.ncols())
        .map(|j| {
            let m = x.column(j).mean();
            (x.column(j).iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt()
        })
        .collect()
}

/// Least squares with intercept through the centered normal equations.
/// Returns `(beta0, beta)`.
pub fn ols_normal_equations(x: &DMatrix<f64>, y: &DVector<f64>) -> (f64, Vec<f64>) {
    let means = col_means(x);
    let y_mean = y.mean();
    let xc = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - means[j]);
    let yc = y.add_scalar(-y_mean);
    let beta = (xc.transpose() * &xc)
        .cholesky()
        .expect("full column rank")
        .solve(&(xc.transpose() * yc));
    let beta0 = y_mean - beta.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();
    (beta0, beta.iter().copied().collect())
}

/// Least-squares fitted values of `y` on `[1, x]` via SVD; valid for rank-deficient `x`.
pub fn ols_fitted_svd(x: &DMatrix<f64>, y: &DVector<f64>) -> Vec<f64> {
    let n = x.nrows();
    let design = DMatrix::from_fn(n, x.ncols() + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
    let svd = design.clone().svd(true, true);
    let coef = svd.solve(y, 1e-10 * svd.singular_values.max()).expect("svd solve");
    (design * coef).iter().copied().collect()
}

/// Ridge on standardized columns, objective `½‖r‖² + ½λ‖β̃‖²`, back-transformed.
pub fn ridge_closed_form(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> (f64, Vec<f64>) {
    let means = col_means(x);
    let sds = col_sds(x);
    let y_mean = y.mean();
    let xs = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - means[j]) / sds[j]);
    let yc = y.add_scalar(-y_mean);
    let a = xs.transpose() * &xs + DMatrix::identity(x.ncols(), x.ncols()) * lambda;
    let bs = a.lu().solve(&(xs.transpose() * yc)).expect("ridge system");
    let beta: Vec<f64> = bs.iter().zip(&sds).map(|(b, s)| b / s).collect();
    let beta0 = y_mean - beta.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();
    (beta0, beta)
}

/// Exhaustive split search: every feature, every midpoint between distinct
/// sorted values, sums recomputed from scratch for each candidate.
/// `gamma` and `lambda` are the split penalty and the leaf L2 penalty.
pub fn brute_force_split(x: &DMatrix<f64>, residuals: &[f64], gamma: f64, lambda: f64) -> Option<(usize, f64, f64)> {
    let n = x.nrows();
    let g: f64 = residuals.iter().sum();
    let h = n as f64;
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..x.ncols() {
        let mut values: Vec<f64> = x.column(f).iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let threshold = 0.5 * (w[0] + w[1]);
            let mut g_left = 0.0;
            let mut h_left = 0.0;
            for i in 0..n {
                if x[(i, f)] <= threshold {
                    g_left += residuals[i];
                    h_left += 1.0;
                }
            }
            let g_right = g - g_left;
            let h_right = h - h_left;
            let gain = 0.5
                * (g_left * g_left / (h_left + lambda) + g_right * g_right / (h_right + lambda)
                    - g * g / (h + lambda))
                - gamma;
            // candidates arrive by feature then threshold, so strict improvement keeps the tie rule
            if best.is_none_or(|(_, _, b)| gain > b) {
                best = Some((f, threshold, gain));
            }
        }
    }
    best
}

/// Sample Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va * vb).sqrt()
}
