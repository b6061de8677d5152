//! Semi-parametric additive model: linear controls plus one penalized
//! cubic regression spline per dynamic covariate.
//!
//! ```text
//! ŷ = θ0 + zᵀθ + Σ_j f_j(w_j)
//! ```
//!
//! Each `f_j` is a natural cubic spline parametrized by its values at `R`
//! quantile knots, penalized by its integrated squared second derivative,
//! and constrained to sum to zero over the training rows. Beyond the
//! outer knots it continues linearly. The constraint is absorbed with a
//! Householder reparametrization and the penalty is then diagonalized, so
//! every smooth contributes `R - 1` columns: one unpenalized linear
//! direction and `R - 2` penalized ones. A single smoothing parameter is
//! shared by all smooths and chosen by GCV unless fixed by the caller.
//! Penalties are rescaled to the magnitude of their own design block so
//! that one parameter treats covariates of different units alike.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Dataset, FeatureVector, W_DIM, X_DIM};
use crate::ingest::ControlVector;
use crate::linalg;

pub const DEFAULT_RANK: usize = 5;
pub const MIN_ROWS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineBasis {
    pub knots: Vec<f64>,
    /// Maps knot values to knot second derivatives (`R x R`, first and last rows zero).
    pub second_deriv_map: Vec<Vec<f64>>,
    /// `R x (R-1)`: centering null space followed by the penalty eigenvectors.
    pub transform: Vec<Vec<f64>>,
    /// Diagonal of the (rescaled) penalty in transformed coordinates.
    pub penalty: Vec<f64>,
    /// Uncentered `R x R` penalty, `Dᵀ B⁻¹ D`.
    pub raw_penalty: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SmoothBasis {
    Spline(SplineBasis),
    /// Too few distinct values for a spline: an unpenalized centered line.
    Linear { mean: f64 },
    /// Constant column.
    Dropped,
}

impl SplineBasis {
    pub fn rank(&self) -> usize {
        self.knots.len()
    }

    /// Interpolation basis before centering: value of every cardinal spline at `x`.
    pub fn raw_row(&self, x: f64) -> Vec<f64> {
        let r = self.knots.len();
        let k = &self.knots;
        let f = &self.second_deriv_map;
        let mut row = vec![0.0; r];
        if x < k[0] {
            let h = k[1] - k[0];
            row[0] = 1.0;
            let t = x - k[0];
            for c in 0..r {
                row[c] -= t * h / 6.0 * f[1][c];
            }
            row[0] -= t / h;
            row[1] += t / h;
        } else if x > k[r - 1] {
            let h = k[r - 1] - k[r - 2];
            row[r - 1] = 1.0;
            let t = x - k[r - 1];
            for c in 0..r {
                row[c] += t * h / 6.0 * f[r - 2][c];
            }
            row[r - 1] += t / h;
            row[r - 2] -= t / h;
        } else {
            let j = match k.partition_point(|&v| v <= x) {
                0 => 0,
                p => (p - 1).min(r - 2),
            };
            let h = k[j + 1] - k[j];
            let am = (k[j + 1] - x) / h;
            let ap = (x - k[j]) / h;
            let cm = ((k[j + 1] - x).powi(3) / h - h * (k[j + 1] - x)) / 6.0;
            let cp = ((x - k[j]).powi(3) / h - h * (x - k[j])) / 6.0;
            row[j] += am;
            row[j + 1] += ap;
            for c in 0..r {
                row[c] += cm * f[j][c] + cp * f[j + 1][c];
            }
        }
        row
    }

    /// Centered, penalty-diagonal basis row (`R - 1` entries).
    pub fn row(&self, x: f64) -> Vec<f64> {
        let raw = self.raw_row(x);
        (0..self.penalty.len())
            .map(|c| raw.iter().zip(&self.transform).map(|(v, t)| v * t[c]).sum())
            .collect()
    }
}

impl SmoothBasis {
    pub fn width(&self) -> usize {
        match self {
            SmoothBasis::Spline(s) => s.penalty.len(),
            SmoothBasis::Linear { .. } => 1,
            SmoothBasis::Dropped => 0,
        }
    }

    pub fn row(&self, x: f64) -> Vec<f64> {
        match self {
            SmoothBasis::Spline(s) => s.row(x),
            SmoothBasis::Linear { mean } => vec![x - mean],
            SmoothBasis::Dropped => vec![],
        }
    }

    pub fn penalty(&self) -> Vec<f64> {
        match self {
            SmoothBasis::Spline(s) => s.penalty.clone(),
            other => vec![0.0; other.width()],
        }
    }
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Knots at evenly spaced quantiles of the distinct values.
fn quantile_knots(distinct: &[f64], rank: usize) -> Vec<f64> {
    let m = distinct.len();
    (0..rank)
        .map(|k| {
            let pos = k as f64 * (m - 1) as f64 / (rank - 1) as f64;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            if lo + 1 < m {
                distinct[lo] + frac * (distinct[lo + 1] - distinct[lo])
            } else {
                distinct[m - 1]
            }
        })
        .collect()
}

/// Householder basis of the null space of the row vector `c`, as an `R x (R-1)` matrix.
fn constraint_null_space(c: &[f64]) -> DMatrix<f64> {
    let r = c.len();
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut v = DVector::from_column_slice(c);
    v[0] += if c[0] >= 0.0 { norm } else { -norm };
    let vv = v.dot(&v);
    let mut h = DMatrix::<f64>::identity(r, r);
    if vv > 0.0 {
        h -= (&v * v.transpose()) * (2.0 / vv);
    }
    h.columns(1, r - 1).into_owned()
}

/// Builds the smooth for one training column. Degrades to a line below `rank`
/// distinct values and to nothing for a constant column.
pub fn build_smooth_basis(values: &[f64], rank: usize) -> Result<SmoothBasis> {
    if rank < 3 {
        return Err(Error::Config(format!("basis rank must be >= 3, got {rank}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::UndefinedInput("non-finite smooth covariate".into()));
    }
    let mut distinct = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() <= 1 {
        return Ok(SmoothBasis::Dropped);
    }
    if distinct.len() < rank {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        return Ok(SmoothBasis::Linear { mean });
    }

    let knots = quantile_knots(&distinct, rank);
    let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
    let inner = rank - 2;
    let mut d = DMatrix::<f64>::zeros(inner, rank);
    let mut b = DMatrix::<f64>::zeros(inner, inner);
    for i in 0..inner {
        d[(i, i)] = 1.0 / h[i];
        d[(i, i + 1)] = -1.0 / h[i] - 1.0 / h[i + 1];
        d[(i, i + 2)] = 1.0 / h[i + 1];
        b[(i, i)] = (h[i] + h[i + 1]) / 3.0;
        if i + 1 < inner {
            b[(i, i + 1)] = h[i + 1] / 6.0;
            b[(i + 1, i)] = h[i + 1] / 6.0;
        }
    }
    let b_inv_d = b
        .lu()
        .solve(&d)
        .ok_or_else(|| Error::Config("degenerate knot spacing".into()))?;
    let mut second = DMatrix::<f64>::zeros(rank, rank);
    second.rows_mut(1, inner).copy_from(&b_inv_d);
    let raw_penalty = d.transpose() * &b_inv_d;

    let mut basis = SplineBasis {
        knots,
        second_deriv_map: to_rows(&second),
        transform: vec![],
        penalty: vec![],
        raw_penalty: to_rows(&raw_penalty),
    };

    let x_raw = DMatrix::from_fn(values.len(), rank, |i, c| basis.raw_row(values[i])[c]);
    let column_sums: Vec<f64> = (0..rank).map(|c| x_raw.column(c).sum()).collect();
    let z = constraint_null_space(&column_sums);
    let x_centered = &x_raw * &z;
    let mut s = z.transpose() * &raw_penalty * &z;
    s = (&s + s.transpose()) * 0.5;
    let s_norm = s.norm();
    if s_norm > 0.0 {
        s *= x_centered.norm_squared() / s_norm;
    }
    let eigen = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..rank - 1).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[a].total_cmp(&eigen.eigenvalues[b]));
    let top = eigen.eigenvalues.max();
    let penalty: Vec<f64> = order
        .iter()
        .map(|&k| {
            let e = eigen.eigenvalues[k];
            if e <= 1e-10 * top {
                0.0
            } else {
                e
            }
        })
        .collect();
    let u = DMatrix::from_fn(rank - 1, rank - 1, |i, c| eigen.eigenvectors[(i, order[c])]);
    basis.transform = to_rows(&(z * u));
    basis.penalty = penalty;
    Ok(SmoothBasis::Spline(basis))
}

/// How the smoothing parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothing {
    Fixed(f64),
    /// Generalized cross-validation over [`gcv_grid`].
    Auto,
}

/// Log grid searched by [`Smoothing::Auto`], ascending.
pub fn gcv_grid() -> Vec<f64> {
    (0..=30).map(|k| 10f64.powf(-4.0 + k as f64 / 3.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothTerm {
    pub name: String,
    /// Index into the 72 dynamic covariates.
    pub feature: usize,
    pub basis: SmoothBasis,
    pub coef: Vec<f64>,
    pub edf: f64,
}

impl SmoothTerm {
    /// Value of the fitted smooth at `w`.
    pub fn eval(&self, w: f64) -> f64 {
        self.basis.row(w).iter().zip(&self.coef).map(|(b, c)| b * c).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamModel {
    pub theta0: f64,
    pub theta: Vec<f64>,
    pub smooths: Vec<SmoothTerm>,
    pub lambda_s: f64,
    /// GCV score at `lambda_s`; absent when the fit interpolates the data.
    pub gcv: Option<f64>,
    /// `(lambda_s, gcv)` for every grid point with a defined score.
    pub gcv_curve: Vec<(f64, f64)>,
    pub total_edf: f64,
    /// Penalized objective at the solution.
    pub objective: f64,
    /// Fitted values on the training rows.
    pub fitted: Vec<f64>,
    /// Unpenalized columns fixed at zero because they duplicate earlier ones.
    pub aliased: Vec<String>,
}

impl GamModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != X_DIM {
            return Err(Error::DimensionMismatch {
                expected: X_DIM,
                got: x.len(),
            });
        }
        let controls: f64 = self.theta.iter().zip(&x[..ControlVector::DIM]).map(|(t, z)| t * z).sum();
        let smooths: f64 = self
            .smooths
            .iter()
            .map(|s| s.eval(x[ControlVector::DIM + s.feature]))
            .sum();
        Ok(self.theta0 + controls + smooths)
    }

    pub fn predict_features(&self, x: &FeatureVector) -> Result<f64> {
        self.predict(&x.to_vec())
    }

    pub fn edf_table(&self) -> Vec<(String, f64)> {
        self.smooths.iter().map(|s| (s.name.clone(), s.edf)).collect()
    }
}

/// Design matrix layout shared by every smoothing parameter on the grid.
struct Design {
    x: DMatrix<f64>,
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    y: DVector<f64>,
    penalty: Vec<f64>,
    labels: Vec<String>,
    control_cols: Vec<usize>,
    /// `(first column, width)` of each smooth in the full layout.
    blocks: Vec<(usize, usize)>,
    /// Full-layout index of every column of `x`.
    kept: Vec<usize>,
    /// Labels of unpenalized columns left out as linear combinations of earlier ones.
    aliased: Vec<String>,
    p_full: usize,
}

struct Solved {
    lambda: f64,
    coef: DVector<f64>,
    edf_diag: Vec<f64>,
    gcv: f64,
    objective: f64,
}

fn solve_at(design: &Design, lambda: f64) -> Result<Solved> {
    let mut a = design.xtx.clone();
    for (k, pen) in design.penalty.iter().enumerate() {
        a[(k, k)] += lambda * pen;
    }
    let l = linalg::cholesky(&a).map_err(|k| Error::Singular {
        term: design.labels[k].clone(),
    })?;
    let coef = linalg::cholesky_solve(&l, &design.xty);
    let influence = linalg::cholesky_solve_matrix(&l, &design.xtx);
    let edf_diag: Vec<f64> = (0..coef.len()).map(|k| influence[(k, k)]).collect();
    let trace: f64 = edf_diag.iter().sum();
    let resid = &design.y - &design.x * &coef;
    let rss = resid.norm_squared();
    let n = design.y.len() as f64;
    let gcv = if trace < n {
        n * rss / ((n - trace) * (n - trace))
    } else {
        f64::INFINITY
    };
    let penalty_value: f64 = design
        .penalty
        .iter()
        .zip(coef.iter())
        .map(|(p, c)| p * c * c)
        .sum();
    Ok(Solved {
        lambda,
        coef,
        edf_diag,
        gcv,
        objective: rss + lambda * penalty_value,
    })
}

fn build_design(data: &Dataset, rank: usize) -> Result<(Design, Vec<SmoothBasis>)> {
    let n = data.len();
    let xfull = data.x_matrix();
    let mut control_cols = Vec::new();
    for j in 0..ControlVector::DIM {
        let col = xfull.column(j);
        if col.max() > col.min() {
            control_cols.push(j);
        }
    }
    let bases = (0..W_DIM)
        .into_par_iter()
        .map(|j| {
            let col: Vec<f64> = xfull.column(ControlVector::DIM + j).iter().copied().collect();
            build_smooth_basis(&col, rank)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut labels = vec!["intercept".to_string()];
    labels.extend(control_cols.iter().map(|&j| format!("control {}", data.columns[j])));
    let mut blocks = Vec::with_capacity(W_DIM);
    let mut penalty = vec![0.0; 1 + control_cols.len()];
    let mut col = penalty.len();
    for (j, basis) in bases.iter().enumerate() {
        let width = basis.width();
        blocks.push((col, width));
        labels.extend((0..width).map(|_| data.columns[ControlVector::DIM + j].clone()));
        penalty.extend(basis.penalty());
        col += width;
    }
    let p = col;
    let mut x = DMatrix::<f64>::zeros(n, p);
    for i in 0..n {
        x[(i, 0)] = 1.0;
        for (k, &j) in control_cols.iter().enumerate() {
            x[(i, 1 + k)] = xfull[(i, j)];
        }
        for (j, basis) in bases.iter().enumerate() {
            let (start, width) = blocks[j];
            if width == 0 {
                continue;
            }
            let row = basis.row(xfull[(i, ControlVector::DIM + j)]);
            for (c, v) in row.into_iter().enumerate() {
                x[(i, start + c)] = v;
            }
        }
    }
    let kept = identifiable_columns(&x, &penalty);
    let aliased: Vec<String> = (0..p)
        .filter(|c| kept.binary_search(c).is_err())
        .map(|c| labels[c].clone())
        .collect();
    if !aliased.is_empty() {
        log::info!("{} unpenalized columns aliased and fixed at zero", aliased.len());
    }
    let x = x.select_columns(&kept);
    let penalty: Vec<f64> = kept.iter().map(|&c| penalty[c]).collect();
    let labels: Vec<String> = kept.iter().map(|&c| labels[c].clone()).collect();
    let y = data.y_vector();
    let xt = x.transpose();
    let xtx = &xt * &x;
    let xty = &xt * &y;
    Ok((
        Design {
            x,
            xtx,
            xty,
            y,
            penalty,
            labels,
            control_cols,
            blocks,
            kept,
            aliased,
            p_full: p,
        },
        bases,
    ))
}

/// Columns to keep, in order. An unpenalized column that is (numerically) a
/// linear combination of the unpenalized columns before it cannot be
/// identified at any smoothing level and is dropped. This happens in the
/// standard layout because every acceleration lag is the difference of two
/// adjacent velocity lags, so their linear parts coincide.
fn identifiable_columns(x: &DMatrix<f64>, penalty: &[f64]) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::with_capacity(x.ncols());
    for c in 0..x.ncols() {
        if penalty[c] > 0.0 {
            kept.push(c);
            continue;
        }
        let mut v = x.column(c).into_owned();
        let norm = v.norm();
        // two passes of modified Gram-Schmidt keep the residual honest
        for _ in 0..2 {
            for q in &basis {
                let d = q.dot(&v);
                v.axpy(-d, q, 1.0);
            }
        }
        let rest = v.norm();
        if norm > 0.0 && rest > 1e-8 * norm {
            basis.push(v / rest);
            kept.push(c);
        }
    }
    kept
}

/// Fits the additive model with basis rank [`DEFAULT_RANK`].
pub fn fit_gam(data: &Dataset, smoothing: Smoothing) -> Result<GamModel> {
    fit_gam_with_rank(data, smoothing, DEFAULT_RANK)
}

pub fn fit_gam_with_rank(data: &Dataset, smoothing: Smoothing, rank: usize) -> Result<GamModel> {
    if data.len() < MIN_ROWS {
        return Err(Error::TooFewPoints {
            needed: MIN_ROWS,
            got: data.len(),
        });
    }
    let (design, bases) = build_design(data, rank)?;
    let (best, curve) = match smoothing {
        Smoothing::Fixed(lambda) => {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(Error::Config(format!("smoothing parameter {lambda} must be finite and >= 0")));
            }
            let s = solve_at(&design, lambda)?;
            let curve = if s.gcv.is_finite() { vec![(lambda, s.gcv)] } else { vec![] };
            (s, curve)
        }
        Smoothing::Auto => {
            let grid = gcv_grid();
            let outcomes: Vec<Result<Solved>> = grid.par_iter().map(|&l| solve_at(&design, l)).collect();
            let mut curve = Vec::new();
            let mut best: Option<Solved> = None;
            let mut first_err = None;
            for outcome in outcomes {
                match outcome {
                    Ok(s) if !s.gcv.is_finite() => {
                        log::debug!("gcv undefined at lambda {}", s.lambda);
                    }
                    Ok(s) => {
                        curve.push((s.lambda, s.gcv));
                        // ascending grid and strict comparison: the smallest lambda wins ties
                        if best.as_ref().is_none_or(|b| s.gcv < b.gcv) {
                            best = Some(s);
                        }
                    }
                    Err(e) => {
                        log::debug!("gcv grid point failed: {e}");
                        first_err.get_or_insert(e);
                    }
                }
            }
            match best {
                Some(b) => (b, curve),
                None => {
                    return Err(first_err.unwrap_or_else(|| {
                        Error::Config("GCV undefined on the whole grid: more coefficients than rows".into())
                    }))
                }
            }
        }
    };

    let fitted: Vec<f64> = (&design.x * &best.coef).iter().copied().collect();
    let mut coef = vec![0.0; design.p_full];
    let mut edf = vec![0.0; design.p_full];
    for (i, &c) in design.kept.iter().enumerate() {
        coef[c] = best.coef[i];
        edf[c] = best.edf_diag[i];
    }
    let mut theta = vec![0.0; ControlVector::DIM];
    for (k, &j) in design.control_cols.iter().enumerate() {
        theta[j] = coef[1 + k];
    }
    let smooths = bases
        .into_iter()
        .enumerate()
        .map(|(j, basis)| {
            let (start, width) = design.blocks[j];
            SmoothTerm {
                name: data.columns[ControlVector::DIM + j].clone(),
                feature: j,
                basis,
                coef: coef[start..start + width].to_vec(),
                edf: edf[start..start + width].iter().sum(),
            }
        })
        .collect();
    Ok(GamModel {
        theta0: coef[0],
        aliased: design.aliased,
        theta,
        smooths,
        lambda_s: best.lambda,
        gcv: best.gcv.is_finite().then_some(best.gcv),
        gcv_curve: curve,
        total_edf: best.edf_diag.iter().sum(),
        objective: best.objective,
        fitted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::NaturalCubicSpline;

    fn spline(b: SmoothBasis) -> SplineBasis {
        match b {
            SmoothBasis::Spline(s) => s,
            other => panic!("expected spline, got {other:?}"),
        }
    }

    fn sample_values() -> Vec<f64> {
        (0..60).map(|i| ((i * 37) % 23) as f64 * 0.3 - 2.0 + (i as f64 * 0.01)).collect()
    }

    #[test]
    fn degenerate_columns() {
        assert_eq!(build_smooth_basis(&[2.0; 10], 5).unwrap(), SmoothBasis::Dropped);
        let b = build_smooth_basis(&[1.0, 2.0, 1.0, 3.0, 2.0, 1.0], 5).unwrap();
        assert!(matches!(b, SmoothBasis::Linear { .. }));
        assert_eq!(b.width(), 1);
    }

    #[test]
    fn centered_columns_have_zero_mean() {
        let values = sample_values();
        let b = build_smooth_basis(&values, 5).unwrap();
        assert_eq!(b.width(), 4);
        for c in 0..4 {
            let mean: f64 = values.iter().map(|&v| b.row(v)[c]).sum::<f64>() / values.len() as f64;
            assert!(mean.abs() <= 1e-12, "column {c} mean {mean}");
        }
    }

    #[test]
    fn raw_basis_is_identity_at_knots() {
        let s = spline(build_smooth_basis(&sample_values(), 5).unwrap());
        for (k, &t) in s.knots.iter().enumerate() {
            let row = s.raw_row(t);
            for (c, v) in row.iter().enumerate() {
                let expected = if c == k { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cardinal_splines_match_interpolating_spline() {
        let s = spline(build_smooth_basis(&sample_values(), 6).unwrap());
        for k in 0..s.rank() {
            let unit: Vec<f64> = (0..s.rank()).map(|c| if c == k { 1.0 } else { 0.0 }).collect();
            let oracle = NaturalCubicSpline::fit(&s.knots, &unit).unwrap();
            let lo = s.knots[0];
            let hi = s.knots[s.rank() - 1];
            for i in 0..=100 {
                let x = (lo + (hi - lo) * i as f64 / 100.0).min(hi);
                assert!((s.raw_row(x)[k] - oracle.eval(x).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_beyond_boundary() {
        let s = spline(build_smooth_basis(&sample_values(), 5).unwrap());
        let lo = s.knots[0];
        let hi = s.knots[4];
        for k in 0..5 {
            let f = |x: f64| s.raw_row(x)[k];
            let left = [lo - 3.0, lo - 2.0, lo - 1.0].map(f);
            let right = [hi + 1.0, hi + 2.0, hi + 3.0].map(f);
            assert!((left[0] - 2.0 * left[1] + left[2]).abs() < 1e-12);
            assert!((right[0] - 2.0 * right[1] + right[2]).abs() < 1e-12);
            // C¹ at the boundary: slope from outside equals the one-sided spline slope
            let eps = 1e-6;
            let inside = (f(lo + eps) - f(lo)) / eps;
            let outside = f(lo) - f(lo - 1.0);
            assert!((inside - outside).abs() < 1e-4);
        }
    }

    #[test]
    fn penalty_is_psd_with_linear_null_space() {
        let s = spline(build_smooth_basis(&sample_values(), 5).unwrap());
        let r = s.rank();
        let raw = DMatrix::from_fn(r, r, |i, j| s.raw_penalty[i][j]);
        assert!((&raw - raw.transpose()).abs().max() < 1e-12);
        let eig = SymmetricEigen::new(raw.clone()).eigenvalues;
        assert!(eig.iter().all(|&e| e > -1e-10));
        let line = DVector::from_iterator(r, s.knots.iter().map(|k| 2.0 - 0.5 * k));
        assert!((raw * line).abs().max() < 1e-10);
        assert_eq!(s.penalty.iter().filter(|&&p| p == 0.0).count(), 1);
        assert!(s.penalty.iter().all(|&p| p >= 0.0));
    }
}
