//! Splits, k-fold cross-validation curves, hyperparameter selection and MSE tables.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elasticnet::{self, EnetConfig};
use crate::error::{Error, Result};
use crate::gbt::{self, GbtConfig};
use crate::ingest::write_atomic;
use crate::rng::{stream_rng, Stream};
use crate::text::fmt_f64;

/// Candidate boosting round counts searched by [`cv_gbt_rounds`].
pub const GBT_ROUNDS: [usize; 10] = [50, 100, 150, 200, 250, 300, 350, 400, 450, 500];
pub const GBT_FOLDS: usize = 3;
pub const DEFAULT_ENET_FOLDS: usize = 10;
pub const DEFAULT_TRAIN_RATIO: f64 = 0.8;

/// `k` disjoint sorted index sets covering `0..n`, sizes differing by at most one.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::Config(format!("need 2 <= k <= N, got k={k}, N={n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream_rng(seed, Stream::Folds));
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut fold = perm[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    assert_partition(n, &folds);
    Ok(folds)
}

fn assert_partition(n: usize, folds: &[Vec<usize>]) {
    let mut seen = vec![false; n];
    for &i in folds.iter().flatten() {
        assert!(!seen[i], "index {i} in two folds");
        seen[i] = true;
    }
    assert!(seen.iter().all(|&s| s), "folds do not cover 0..{n}");
}

/// Indices in `0..n` not in the sorted set `held_out`.
pub fn complement(n: usize, held_out: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - held_out.len());
    let mut it = held_out.iter().peekable();
    for i in 0..n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub seed: u64,
    pub ratio: f64,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Seeded split with `ceil(ratio * n)` training rows.
pub fn train_test_split(n: usize, ratio: f64, seed: u64) -> Result<Split> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio {ratio} outside (0, 1)")));
    }
    // guard against 0.8 * 345 = 276.00000000000006
    let n_train = ((ratio * n as f64) * (1.0 - 1e-12)).ceil() as usize;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream_rng(seed, Stream::Split));
    let mut train = perm[..n_train].to_vec();
    let mut validation = perm[n_train..].to_vec();
    train.sort_unstable();
    validation.sort_unstable();
    Ok(Split {
        seed,
        ratio,
        train,
        validation,
    })
}

pub fn mse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: y_hat.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCurve {
    pub grid: Vec<f64>,
    pub mean_mse: Vec<f64>,
    pub stderr_mse: Vec<f64>,
    /// `fold_mse[f][g]`: validation MSE of fold `f` at grid point `g`.
    pub fold_mse: Vec<Vec<f64>>,
    pub k: usize,
    pub seed: u64,
}

impl CvCurve {
    fn from_folds(grid: Vec<f64>, fold_mse: Vec<Vec<f64>>, seed: u64) -> Self {
        let k = fold_mse.len();
        let mut mean_mse = Vec::with_capacity(grid.len());
        let mut stderr_mse = Vec::with_capacity(grid.len());
        for g in 0..grid.len() {
            let vals: Vec<f64> = fold_mse.iter().map(|f| f[g]).collect();
            let mean = vals.iter().sum::<f64>() / k as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64;
            mean_mse.push(mean);
            stderr_mse.push((var / k as f64).sqrt());
        }
        CvCurve {
            grid,
            mean_mse,
            stderr_mse,
            fold_mse,
            k,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

fn subset(x: &DMatrix<f64>, y: &[f64], rows: &[usize]) -> (DMatrix<f64>, Vec<f64>) {
    (x.select_rows(rows), rows.iter().map(|&i| y[i]).collect())
}

/// Cross-validated MSE along an elastic-net penalty grid. Within each fold
/// the fits run from the largest penalty down, warm-starting each from the last.
pub fn cv_curve_enet(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    cfg: &EnetConfig,
    grid: &[f64],
    k: usize,
    seed: u64,
) -> Result<CvCurve> {
    if grid.is_empty() {
        return Err(Error::Config("empty penalty grid".into()));
    }
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    let n = x.nrows();
    let folds = kfold_split(n, k, seed)?;
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[b].total_cmp(&grid[a]));
    let descending: Vec<f64> = order.iter().map(|&g| grid[g]).collect();
    let names: Vec<String> = (0..x.ncols()).map(|j| format!("x{j}")).collect();
    let y_slice = y.as_slice();

    let fold_mse = folds
        .par_iter()
        .enumerate()
        .map(|(f, test)| {
            let train = complement(n, test);
            let (x_tr, y_tr) = subset(x, y_slice, &train);
            let (x_te, y_te) = subset(x, y_slice, test);
            let models = elasticnet::fit_path(&x_tr, &DVector::from_vec(y_tr), cfg, &descending, &names)
                .map_err(|e| {
                    let lambda = match &e {
                        Error::NotConverged { lambda, .. } => *lambda,
                        _ => f64::NAN,
                    };
                    Error::Fold {
                        fold: f,
                        lambda,
                        source: Box::new(e),
                    }
                })?;
            let mut row = vec![0.0; grid.len()];
            for (model, &g) in models.iter().zip(&order) {
                let pred = model.predict_matrix(&x_te)?;
                row[g] = mse(&y_te, pred.as_slice())?;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CvCurve::from_folds(grid.to_vec(), fold_mse, seed))
}

/// How a penalty is picked from a cross-validation curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectRule {
    #[default]
    Min,
    OneSe,
}

impl fmt::Display for SelectRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectRule::Min => "min",
            SelectRule::OneSe => "one_se",
        })
    }
}

impl FromStr for SelectRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(SelectRule::Min),
            "one_se" | "1se" => Ok(SelectRule::OneSe),
            other => Err(Error::Config(format!("unknown selection rule `{other}` (min, one_se)"))),
        }
    }
}

/// Index into `curve.grid` chosen by `rule`. Ties go to the larger penalty.
pub fn select_index(curve: &CvCurve, rule: SelectRule) -> usize {
    let better = |a: usize, b: usize| {
        // is grid point a preferred over b at equal eligibility
        curve.grid[a] > curve.grid[b]
    };
    let mut best = 0;
    for g in 1..curve.len() {
        let (m, mb) = (curve.mean_mse[g], curve.mean_mse[best]);
        if m < mb || (m == mb && better(g, best)) {
            best = g;
        }
    }
    match rule {
        SelectRule::Min => best,
        SelectRule::OneSe => {
            let bound = curve.mean_mse[best] + curve.stderr_mse[best];
            let mut pick = best;
            for g in 0..curve.len() {
                if curve.mean_mse[g] <= bound && curve.grid[g] > curve.grid[pick] {
                    pick = g;
                }
            }
            pick
        }
    }
}

pub fn select_lambda(curve: &CvCurve, rule: SelectRule) -> f64 {
    curve.grid[select_index(curve, rule)]
}

/// Cross-validated MSE over boosting round counts. One ensemble of the
/// largest size is grown per fold and read off at every candidate.
pub fn cv_gbt_rounds(
    x: &DMatrix<f64>,
    y: &[f64],
    cfg: &GbtConfig,
    rounds: &[usize],
    k: usize,
    seed: u64,
) -> Result<CvCurve> {
    if rounds.is_empty() || rounds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("round candidates must be non-empty and ascending".into()));
    }
    let n = x.nrows();
    let folds = kfold_split(n, k, seed)?;
    let max_rounds = *rounds.last().expect("non-empty");
    let fold_mse = folds
        .par_iter()
        .map(|test| {
            let train = complement(n, test);
            let (x_tr, y_tr) = subset(x, y, &train);
            let (x_te, y_te) = subset(x, y, test);
            let grown = GbtConfig {
                n_rounds: max_rounds,
                ..*cfg
            };
            let model = gbt::fit_ensemble(&x_tr, &y_tr, &grown)?;
            model
                .staged_predict(&x_te, rounds)?
                .iter()
                .map(|pred| mse(&y_te, pred))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CvCurve::from_folds(
        rounds.iter().map(|&r| r as f64).collect(),
        fold_mse,
        seed,
    ))
}

/// Round count with the lowest mean CV error; ties go to fewer rounds.
pub fn select_rounds(curve: &CvCurve) -> usize {
    let mut best = 0;
    for g in 1..curve.len() {
        if curve.mean_mse[g] < curve.mean_mse[best] {
            best = g;
        }
    }
    curve.grid[best] as usize
}

fn write_curve(path: &Path, header: &str, curve: &CvCurve, fmt_grid: impl Fn(f64) -> String) -> Result<()> {
    let mut out = String::from(header);
    out.push('\n');
    for g in 0..curve.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_grid(curve.grid[g]),
            fmt_f64(curve.mean_mse[g]),
            fmt_f64(curve.stderr_mse[g])
        ));
    }
    write_atomic(path, out.as_bytes())
}

pub fn write_cv_curve(path: impl AsRef<Path>, curve: &CvCurve) -> Result<()> {
    write_curve(path.as_ref(), "lambda,mean_mse,stderr_mse", curve, fmt_f64)
}

pub fn write_rounds_curve(path: impl AsRef<Path>, curve: &CvCurve) -> Result<()> {
    write_curve(path.as_ref(), "n_rounds,mean_mse,stderr_mse", curve, |r| {
        format!("{}", r as usize)
    })
}

pub fn write_split(path: impl AsRef<Path>, split: &Split) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(split)?;
    bytes.push(b'\n');
    write_atomic(path.as_ref(), &bytes)
}

pub fn read_split(path: impl AsRef<Path>) -> Result<Split> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub model: String,
    pub train: f64,
    pub validation: f64,
}

pub fn write_mse_table(path: impl AsRef<Path>, rows: &[MseRow]) -> Result<()> {
    let mut out = String::from("model,train,validation\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.model, fmt_f64(r.train), fmt_f64(r.validation)));
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

pub fn read_mse_table(path: impl AsRef<Path>) -> Result<Vec<MseRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut rows = Vec::new();
    for rec in reader.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}
