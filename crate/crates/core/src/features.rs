//! Velocity and acceleration series, harvest lag windows and the covariate layout.
//!
//! A covariate vector has 81 entries: the nine controls followed by six
//! blocks of twelve lags. Blocks come in the order
//! `vel_ndvi, accel_ndvi, vel_prec, accel_prec, vel_temp, accel_temp` and
//! each block is ordered by lag, most recent week first. Block `b`, lag `d`
//! sits at w-index `12 b + d - 1`. Column names such as `vel_ndvi_lag8`
//! are the stable public identifiers of that layout.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{self, write_atomic, ControlVector, PlotRecord, Variable};
use crate::text::fmt_f64;
use crate::timeseries::{WeeklySeries, WeeklyStore};
use crate::weeks::Week;

pub const N_LAGS: usize = 12;
pub const N_BLOCKS: usize = 6;
pub const W_DIM: usize = N_LAGS * N_BLOCKS;
pub const X_DIM: usize = ControlVector::DIM + W_DIM;
pub const RESPONSE_NAME: &str = "prod_hect";

/// Weeks before harvest that every series must cover (Δ² needs two extra).
pub const HISTORY_WEEKS: i64 = N_LAGS as i64 + 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    Velocity,
    Acceleration,
}

impl Order {
    pub const ALL: [Order; 2] = [Order::Velocity, Order::Acceleration];

    pub fn slug(self) -> &'static str {
        match self {
            Order::Velocity => "vel",
            Order::Acceleration => "accel",
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Order::Velocity => "velocity",
            Order::Acceleration => "acceleration",
        })
    }
}

/// The six dynamic blocks in layout order.
pub fn blocks() -> impl Iterator<Item = (Variable, Order)> {
    Variable::ALL
        .into_iter()
        .flat_map(|v| Order::ALL.into_iter().map(move |o| (v, o)))
}

pub fn block_index(variable: Variable, order: Order) -> usize {
    let v = Variable::ALL.iter().position(|&x| x == variable).unwrap();
    let o = Order::ALL.iter().position(|&x| x == order).unwrap();
    2 * v + o
}

/// Position of `(variable, order, lag)` inside the 72-entry w vector. `lag` is 1-based.
pub fn w_index(variable: Variable, order: Order, lag: usize) -> usize {
    assert!((1..=N_LAGS).contains(&lag), "lag {lag} outside 1..=12");
    N_LAGS * block_index(variable, order) + lag - 1
}

pub fn lag_column_name(variable: Variable, order: Order, lag: usize) -> String {
    format!("{}_{}_lag{}", order.slug(), variable.slug(), lag)
}

/// The 81 covariate names in layout order.
pub fn covariate_names() -> Vec<String> {
    let mut names: Vec<String> = ControlVector::NAMES.iter().map(|s| s.to_string()).collect();
    for (variable, order) in blocks() {
        names.extend((1..=N_LAGS).map(|d| lag_column_name(variable, order, d)));
    }
    names
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub z: ControlVector,
    pub w: Vec<f64>,
}

impl FeatureVector {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(X_DIM);
        x.extend_from_slice(&self.z.as_f64());
        x.extend_from_slice(&self.w);
        x
    }

    /// Rebuilds a vector from 81 values; the control entries must be integral.
    pub fn from_slice(x: &[f64]) -> Result<Self> {
        if x.len() != X_DIM {
            return Err(Error::DimensionMismatch {
                expected: X_DIM,
                got: x.len(),
            });
        }
        let mut codes = [0i64; 9];
        for (k, code) in codes.iter_mut().enumerate() {
            if x[k].fract() != 0.0 || !x[k].is_finite() {
                return Err(Error::Config(format!(
                    "control `{}` must be an integer code, got {}",
                    ControlVector::NAMES[k],
                    x[k]
                )));
            }
            *code = x[k] as i64;
        }
        Ok(FeatureVector {
            z: ControlVector::from_codes(codes),
            w: x[ControlVector::DIM..].to_vec(),
        })
    }
}

/// First difference; the result starts one week later.
pub fn velocity(s: &WeeklySeries) -> Result<WeeklySeries> {
    if s.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: s.len(),
        });
    }
    Ok(WeeklySeries {
        plot_id: s.plot_id,
        variable: s.variable,
        start_week: s.start_week + 1,
        values: s.values.windows(2).map(|w| w[1] - w[0]).collect(),
    })
}

/// Second difference, `velocity(velocity(s))`.
pub fn acceleration(s: &WeeklySeries) -> Result<WeeklySeries> {
    if s.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: s.len(),
        });
    }
    velocity(&velocity(s)?)
}

/// Values at weeks `harvest - 1, ..., harvest - 12`, most recent first.
pub fn lag_window(s: &WeeklySeries, harvest: Week) -> Result<[f64; N_LAGS]> {
    let missing: Vec<Week> = (1..=N_LAGS as Week)
        .rev()
        .map(|d| harvest - d)
        .filter(|&w| !s.covers(w))
        .collect();
    if !missing.is_empty() {
        return Err(Error::OutOfCoverage {
            plot_id: Some(s.plot_id),
            weeks: missing,
        });
    }
    let mut out = [0.0; N_LAGS];
    for (d, slot) in out.iter_mut().enumerate() {
        *slot = s.at(harvest - 1 - d as Week).expect("coverage checked");
    }
    Ok(out)
}

/// Builds `x = (z, w)` from the three weekly series and the harvest week.
pub fn assemble_covariates(
    z: ControlVector,
    ndvi: &WeeklySeries,
    prec: &WeeklySeries,
    temp: &WeeklySeries,
    harvest: Week,
) -> Result<FeatureVector> {
    let mut w = vec![0.0; W_DIM];
    for series in [ndvi, prec, temp] {
        let missing: Vec<Week> = (harvest - HISTORY_WEEKS..=harvest)
            .filter(|&wk| !series.covers(wk))
            .collect();
        if !missing.is_empty() {
            return Err(Error::OutOfCoverage {
                plot_id: Some(series.plot_id),
                weeks: missing,
            });
        }
        let vel = velocity(series)?;
        let acc = velocity(&vel)?;
        for (order, derived) in [(Order::Velocity, &vel), (Order::Acceleration, &acc)] {
            let start = w_index(series.variable, order, 1);
            w[start..start + N_LAGS].copy_from_slice(&lag_window(derived, harvest)?);
        }
    }
    Ok(FeatureVector { z, w })
}

/// Rows of `(x, yield)` with the shared column layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub rows: Vec<(FeatureVector, f64)>,
}

impl Default for Dataset {
    fn default() -> Self {
        Dataset {
            columns: covariate_names(),
            rows: Vec::new(),
        }
    }
}

/// A plot that could not be featurized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub plot_id: u64,
    pub reason: String,
}

impl Dataset {
    pub fn new(rows: Vec<(FeatureVector, f64)>) -> Result<Self> {
        for (x, y) in &rows {
            if x.w.len() != W_DIM {
                return Err(Error::DimensionMismatch {
                    expected: W_DIM,
                    got: x.w.len(),
                });
            }
            if !y.is_finite() || x.w.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("dataset rows must be finite".into()));
            }
        }
        Ok(Dataset {
            columns: covariate_names(),
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of columns including the response.
    pub fn width(&self) -> usize {
        self.columns.len() + 1
    }

    /// The `N x 81` design matrix.
    pub fn x_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), X_DIM, |i, j| {
            let (fv, _) = &self.rows[i];
            if j < ControlVector::DIM {
                fv.z.as_f64()[j]
            } else {
                fv.w[j - ControlVector::DIM]
            }
        })
    }

    pub fn y_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|r| r.1))
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

fn featurize_plot(plot: &PlotRecord, weekly: &WeeklyStore) -> std::result::Result<FeatureVector, String> {
    let lookup = |v: Variable| {
        weekly
            .get(&(plot.id, v))
            .ok_or_else(|| format!("no weekly {v} series"))
    };
    let ndvi = lookup(Variable::Ndvi)?;
    let prec = lookup(Variable::Prec)?;
    let temp = lookup(Variable::Temp)?;
    assemble_covariates(plot.controls, ndvi, prec, temp, plot.harvest_week).map_err(|e| match e {
        Error::OutOfCoverage { weeks, .. } => format!(
            "harvest week {} not covered: first missing week {}",
            plot.harvest_week,
            weeks.first().copied().unwrap_or(plot.harvest_week)
        ),
        other => other.to_string(),
    })
}

/// One row per plot with full coverage, in plot order; the rest are reported.
pub fn build_dataset(plots: &[PlotRecord], weekly: &WeeklyStore) -> (Dataset, Vec<SkipRecord>) {
    let outcomes: Vec<_> = plots
        .par_iter()
        .map(|p| featurize_plot(p, weekly))
        .collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (plot, outcome) in plots.iter().zip(outcomes) {
        match outcome {
            Ok(x) if x.w.iter().all(|v| v.is_finite()) => rows.push((x, plot.yield_t_ha)),
            Ok(_) => skipped.push(SkipRecord {
                plot_id: plot.id,
                reason: "non-finite covariate".into(),
            }),
            Err(reason) => {
                log::warn!("skipping plot {}: {reason}", plot.id);
                skipped.push(SkipRecord {
                    plot_id: plot.id,
                    reason,
                });
            }
        }
    }
    let dataset = Dataset {
        columns: covariate_names(),
        rows,
    };
    (dataset, skipped)
}

pub fn write_dataset(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let mut out = data.columns.join(",");
    out.push(',');
    out.push_str(RESPONSE_NAME);
    out.push('\n');
    for (x, y) in &data.rows {
        let mut fields: Vec<String> = x.z.codes().iter().map(|c| c.to_string()).collect();
        fields.extend(x.w.iter().map(|v| fmt_f64(*v)));
        fields.push(fmt_f64(*y));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut expected = covariate_names();
    expected.push(RESPONSE_NAME.to_string());
    let header = reader.headers()?.clone();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Header {
            path: path.to_path_buf(),
            expected: expected.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = ingest::record_line(&record);
        let values = (0..expected.len())
            .map(|k| ingest::float_field(&record, k, &expected[k]))
            .collect::<Result<Vec<f64>>>()?;
        let x = FeatureVector::from_slice(&values[..X_DIM]).map_err(|e| Error::MalformedRow {
            row,
            message: e.to_string(),
        })?;
        rows.push((x, values[X_DIM]));
    }
    Dataset::new(rows)
}

pub fn write_skips(path: impl AsRef<Path>, skips: &[SkipRecord]) -> Result<()> {
    let mut out = String::from("plot_id,reason\n");
    for s in skips {
        out.push_str(&format!("{},\"{}\"\n", s.plot_id, s.reason.replace('"', "'")));
    }
    write_atomic(path.as_ref(), out.as_bytes())
}
