//! Regularized gradient tree boosting for squared error.
//!
//! Each round fits a regression tree to the current residuals with exact
//! greedy split search. For squared error the gradient statistics reduce to
//! `G = Σ residual` and `H = count`, so a candidate split scores
//!
//! ```text
//! gain = 1/2 [ G_L²/(H_L+λ) + G_R²/(H_R+λ) - G²/(H+λ) ] - γ
//! ```
//!
//! and a leaf gets weight `G / (H + λ)`. Candidate thresholds are midpoints
//! between consecutive distinct values of a feature within the node. Ties
//! go to the lowest feature index, then the lowest threshold.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtConfig {
    /// Complexity cost per split.
    pub gamma: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    pub max_depth: usize,
    pub n_rounds: usize,
    pub learning_rate: f64,
    /// Initial prediction; the mean response when `None`.
    pub base_score: Option<f64>,
}

impl Default for GbtConfig {
    fn default() -> Self {
        GbtConfig {
            gamma: 0.1,
            lambda: 0.6,
            max_depth: 5,
            n_rounds: 100,
            learning_rate: 0.1,
            base_score: None,
        }
    }
}

impl GbtConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !(self.lambda >= 0.0) {
            return Err(Error::Config(format!(
                "gamma ({}) and lambda ({}) must be >= 0",
                self.gamma, self.lambda
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!(
                "learning rate {} outside (0, 1]",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        leaf_weight: f64,
    },
}

impl Node {
    fn route(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { leaf_weight } => return *leaf_weight,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    fn leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn max_feature(&self) -> Option<usize> {
        match self {
            Node::Leaf { .. } => None,
            Node::Split {
                feature, left, right, ..
            } => [Some(*feature), left.max_feature(), right.max_feature()]
                .into_iter()
                .flatten()
                .max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tree {
    pub root: Node,
}

impl Tree {
    /// Leaf weight reached by `x`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.root.route(x)
    }

    pub fn n_leaves(&self) -> usize {
        self.root.leaves()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Visits every leaf weight.
    pub fn leaf_weights(&self) -> Vec<f64> {
        fn walk(node: &Node, out: &mut Vec<f64>) {
            match node {
                Node::Leaf { leaf_weight } => out.push(*leaf_weight),
                Node::Split { left, right, .. } => {
                    walk(left, out);
                    walk(right, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Regularized gain of splitting `(g, h)` into `(g_left, h_left)` and the rest.
pub fn split_gain(g_left: f64, h_left: f64, g: f64, h: f64, cfg: &GbtConfig) -> f64 {
    let g_right = g - g_left;
    let h_right = h - h_left;
    0.5 * (g_left * g_left / (h_left + cfg.lambda) + g_right * g_right / (h_right + cfg.lambda)
        - g * g / (h + cfg.lambda))
        - cfg.gamma
}

fn best_for_feature(
    x: &DMatrix<f64>,
    rows: &[usize],
    residuals: &[f64],
    feature: usize,
    g: f64,
    cfg: &GbtConfig,
) -> Option<SplitCandidate> {
    let mut order: Vec<(f64, f64)> = rows.iter().map(|&i| (x[(i, feature)], residuals[i])).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let h = order.len() as f64;
    let mut best: Option<SplitCandidate> = None;
    let mut g_left = 0.0;
    for k in 0..order.len() - 1 {
        g_left += order[k].1;
        let (here, next) = (order[k].0, order[k + 1].0);
        if next == here {
            continue;
        }
        let gain = split_gain(g_left, (k + 1) as f64, g, h, cfg);
        if best.is_none_or(|b| gain > b.gain) {
            best = Some(SplitCandidate {
                feature,
                threshold: 0.5 * (here + next),
                gain,
            });
        }
    }
    best
}

/// Best split of the node holding `rows`, regardless of sign of the gain.
pub fn best_split(
    x: &DMatrix<f64>,
    rows: &[usize],
    residuals: &[f64],
    cfg: &GbtConfig,
) -> Option<SplitCandidate> {
    if rows.len() < 2 {
        return None;
    }
    let g: f64 = rows.iter().map(|&i| residuals[i]).sum();
    let per_feature: Vec<Option<SplitCandidate>> = (0..x.ncols())
        .into_par_iter()
        .map(|f| best_for_feature(x, rows, residuals, f, g, cfg))
        .collect();
    // sequential reduce in feature order keeps the tie rule independent of threading
    per_feature
        .into_iter()
        .flatten()
        .fold(None, |best: Option<SplitCandidate>, c| match best {
            Some(b) if c.gain <= b.gain => Some(b),
            _ => Some(c),
        })
}

fn leaf(rows: &[usize], residuals: &[f64], cfg: &GbtConfig) -> Node {
    let g: f64 = rows.iter().map(|&i| residuals[i]).sum();
    Node::Leaf {
        leaf_weight: g / (rows.len() as f64 + cfg.lambda),
    }
}

fn grow(x: &DMatrix<f64>, rows: Vec<usize>, residuals: &[f64], depth: usize, cfg: &GbtConfig) -> Node {
    if depth >= cfg.max_depth {
        return leaf(&rows, residuals, cfg);
    }
    match best_split(x, &rows, residuals, cfg) {
        Some(split) if split.gain > 0.0 => {
            let (left, right): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&i| x[(i, split.feature)] <= split.threshold);
            Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left: Box::new(grow(x, left, residuals, depth + 1, cfg)),
                right: Box::new(grow(x, right, residuals, depth + 1, cfg)),
            }
        }
        _ => leaf(&rows, residuals, cfg),
    }
}

/// Grows one tree on `residuals` (the negative gradient of squared error).
pub fn fit_tree(x: &DMatrix<f64>, residuals: &[f64], cfg: &GbtConfig) -> Tree {
    let rows: Vec<usize> = (0..x.nrows()).collect();
    Tree {
        root: grow(x, rows, residuals, 0, cfg),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub base_score: f64,
    pub config: GbtConfig,
    pub n_features: usize,
    pub trees: Vec<Tree>,
    /// Training MSE after each round.
    pub train_mse: Vec<f64>,
}

fn row(x: &DMatrix<f64>, i: usize) -> Vec<f64> {
    x.row(i).iter().copied().collect()
}

fn mean_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>() / a.len() as f64
}

pub fn fit_ensemble(x: &DMatrix<f64>, y: &[f64], cfg: &GbtConfig) -> Result<TreeEnsemble> {
    cfg.validate()?;
    let n = x.nrows();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::UndefinedInput("non-finite entry in X or y".into()));
    }
    let base_score = cfg.base_score.unwrap_or_else(|| y.iter().sum::<f64>() / n as f64);
    let rows: Vec<Vec<f64>> = (0..n).map(|i| row(x, i)).collect();
    let mut pred = vec![base_score; n];
    let mut trees = Vec::with_capacity(cfg.n_rounds);
    let mut train_mse = Vec::with_capacity(cfg.n_rounds);
    // an exact fit drives the MSE to round-off level, where it may jitter upward
    let noise_floor = 1e-12 * mean_sq(y, &pred);
    for _ in 0..cfg.n_rounds {
        let residuals: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
        let tree = fit_tree(x, &residuals, cfg);
        for (p, r) in pred.iter_mut().zip(&rows) {
            *p += cfg.learning_rate * tree.predict(r);
        }
        let mse = mean_sq(y, &pred);
        debug_assert!(
            train_mse.last().is_none_or(|&prev: &f64| mse <= prev * (1.0 + 1e-12) + noise_floor),
            "training MSE increased"
        );
        train_mse.push(mse);
        trees.push(tree);
    }
    Ok(TreeEnsemble {
        base_score,
        config: *cfg,
        n_features: x.ncols(),
        trees,
        train_mse,
    })
}

impl TreeEnsemble {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        // same accumulation order as training and staged prediction
        Ok(self
            .trees
            .iter()
            .fold(self.base_score, |acc, t| acc + self.config.learning_rate * t.predict(x)))
    }

    pub fn predict_matrix(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.check_dim(x.ncols())?;
        (0..x.nrows()).map(|i| self.predict(&row(x, i))).collect()
    }

    /// Predictions after each of the given round counts (ascending), for every row.
    /// `staged[k][i]` uses the first `rounds[k]` trees.
    pub fn staged_predict(&self, x: &DMatrix<f64>, rounds: &[usize]) -> Result<Vec<Vec<f64>>> {
        self.check_dim(x.ncols())?;
        let rows: Vec<Vec<f64>> = (0..x.nrows()).map(|i| row(x, i)).collect();
        let mut pred = vec![self.base_score; rows.len()];
        let mut done = 0;
        let mut out = Vec::with_capacity(rounds.len());
        for &r in rounds {
            if r > self.trees.len() || r < done {
                return Err(Error::Config(format!(
                    "round {r} not available (ensemble has {} trees, rounds must ascend)",
                    self.trees.len()
                )));
            }
            for tree in &self.trees[done..r] {
                for (p, xr) in pred.iter_mut().zip(&rows) {
                    *p += self.config.learning_rate * tree.predict(xr);
                }
            }
            done = r;
            out.push(pred.clone());
        }
        Ok(out)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got,
            });
        }
        Ok(())
    }

    /// Checks a deserialized ensemble: every split must route on a known feature.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        for (k, t) in self.trees.iter().enumerate() {
            if let Some(f) = t.root.max_feature() {
                if f >= self.n_features {
                    return Err(Error::Config(format!(
                        "tree {k} splits on feature {f} but the ensemble has {} features",
                        self.n_features
                    )));
                }
            }
        }
        Ok(())
    }
}
