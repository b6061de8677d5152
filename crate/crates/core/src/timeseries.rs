//! Natural cubic spline interpolation and weekly resampling.
//!
//! Raw series arrive at their native cadence (16-day composites, pentads,
//! daily values). Each one is interpolated by a natural cubic spline and
//! sampled at the Monday of every ISO week inside the observed span. There
//! is no extrapolation: a week whose Monday falls outside the knot range is
//! an error.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{self, write_atomic, RawSeries, Variable};
use crate::text::fmt_f64;
use crate::weeks::{week_monday, Day, Week};

pub const WEEKLY_HEADER: [&str; 4] = ["plot_id", "variable", "week", "value"];

/// C² piecewise cubic through a set of knots with zero curvature at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaturalCubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Second derivative at each knot; the first and last are zero.
    second_derivs: Vec<f64>,
}

impl NaturalCubicSpline {
    /// Fits the interpolant. Needs at least two strictly increasing knots.
    pub fn fit(knots: &[f64], values: &[f64]) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: knots.len(),
                got: values.len(),
            });
        }
        let n = knots.len();
        if n < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: n });
        }
        if let Some(i) = (1..n).find(|&i| !(knots[i] > knots[i - 1])) {
            return Err(Error::UnsortedKnots { index: i });
        }
        if knots.iter().chain(values).any(|v| !v.is_finite()) {
            return Err(Error::UndefinedInput("non-finite knot or value".into()));
        }

        let mut second_derivs = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for the interior second derivatives, solved
            // by forward elimination and back substitution.
            let m = n - 2;
            let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
            let mut diag = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for i in 0..m {
                diag[i] = 2.0 * (h[i] + h[i + 1]);
                rhs[i] = 6.0
                    * ((values[i + 2] - values[i + 1]) / h[i + 1]
                        - (values[i + 1] - values[i]) / h[i]);
            }
            for i in 1..m {
                let factor = h[i] / diag[i - 1];
                diag[i] -= factor * h[i];
                rhs[i] -= factor * rhs[i - 1];
            }
            second_derivs[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                second_derivs[i + 1] = (rhs[i] - h[i + 1] * second_derivs[i + 2]) / diag[i];
            }
        }

        Ok(NaturalCubicSpline {
            knots: knots.to_vec(),
            values: values.to_vec(),
            second_derivs,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn second_derivs(&self) -> &[f64] {
        &self.second_derivs
    }

    pub fn first_knot(&self) -> f64 {
        self.knots[0]
    }

    pub fn last_knot(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Value at `t`, or `None` outside the knot range.
    pub fn eval(&self, t: f64) -> Option<f64> {
        if !(t >= self.first_knot() && t <= self.last_knot()) {
            return None;
        }
        // index of the segment [knots[i], knots[i+1]] holding t
        let i = match self.knots.partition_point(|&k| k <= t) {
            0 => 0,
            p => (p - 1).min(self.knots.len() - 2),
        };
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - t) / h;
        let b = (t - self.knots[i]) / h;
        let curvature = (a * a * a - a) * self.second_derivs[i]
            + (b * b * b - b) * self.second_derivs[i + 1];
        Some(a * self.values[i] + b * self.values[i + 1] + curvature * h * h / 6.0)
    }
}

/// A spline fitted to one plot's raw series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineModel {
    pub plot_id: u64,
    pub variable: Variable,
    pub spline: NaturalCubicSpline,
}

/// A gap-free week-indexed series. `values[k]` belongs to week `start_week + k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklySeries {
    pub plot_id: u64,
    pub variable: Variable,
    pub start_week: Week,
    pub values: Vec<f64>,
}

impl WeeklySeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// One past the last covered week.
    pub fn end_week(&self) -> Week {
        self.start_week + self.values.len() as Week
    }

    pub fn covers(&self, week: Week) -> bool {
        week >= self.start_week && week < self.end_week()
    }

    pub fn at(&self, week: Week) -> Option<f64> {
        self.covers(week)
            .then(|| self.values[(week - self.start_week) as usize])
    }
}

pub fn fit_natural_cubic_spline(series: &RawSeries) -> Result<SplineModel> {
    let knots: Vec<f64> = series.points.iter().map(|p| p.0 as f64).collect();
    let values: Vec<f64> = series.points.iter().map(|p| p.1).collect();
    Ok(SplineModel {
        plot_id: series.plot_id,
        variable: series.variable,
        spline: NaturalCubicSpline::fit(&knots, &values)?,
    })
}

fn week_timestamp(w: Week) -> f64 {
    week_monday(w) as f64
}

/// Samples the spline at the Monday of weeks `start_week .. start_week + n_weeks`.
pub fn resample_weekly(model: &SplineModel, start_week: Week, n_weeks: usize) -> Result<WeeklySeries> {
    let weeks = start_week..start_week + n_weeks as Week;
    let offending: Vec<Week> = weeks
        .clone()
        .filter(|&w| model.spline.eval(week_timestamp(w)).is_none())
        .collect();
    if !offending.is_empty() {
        return Err(Error::OutOfCoverage {
            plot_id: Some(model.plot_id),
            weeks: offending,
        });
    }
    let values = weeks
        .map(|w| model.spline.eval(week_timestamp(w)).expect("checked coverage"))
        .collect();
    Ok(WeeklySeries {
        plot_id: model.plot_id,
        variable: model.variable,
        start_week,
        values,
    })
}

/// The widest run of weeks whose Mondays lie inside the knot span, as `(start, count)`.
pub fn covered_weeks(model: &SplineModel) -> Option<(Week, usize)> {
    let first = model.spline.first_knot() as Day;
    let last = model.spline.last_knot() as Day;
    // first Monday >= first knot, last Monday <= last knot
    let start = (first + 3).div_euclid(7) + i64::from((first + 3).rem_euclid(7) != 0);
    let end = (last + 3).div_euclid(7);
    (end >= start).then(|| (start, (end - start + 1) as usize))
}

/// Fits and resamples every series over its full weekly coverage, in input order.
pub fn interpolate_all(series: &[RawSeries]) -> Result<Vec<WeeklySeries>> {
    series
        .par_iter()
        .map(|s| {
            let model = fit_natural_cubic_spline(s)?;
            let (start, n) = covered_weeks(&model).ok_or_else(|| Error::InvalidSeries {
                plot_id: s.plot_id,
                message: format!("{} series spans no complete week", s.variable),
            })?;
            resample_weekly(&model, start, n)
        })
        .collect()
}

/// Weekly series keyed by plot and variable.
pub type WeeklyStore = BTreeMap<(u64, Variable), WeeklySeries>;

pub fn to_store(series: Vec<WeeklySeries>) -> WeeklyStore {
    series
        .into_iter()
        .map(|s| ((s.plot_id, s.variable), s))
        .collect()
}

pub fn write_weekly(path: impl AsRef<Path>, series: &[WeeklySeries]) -> Result<()> {
    let mut out = WEEKLY_HEADER.join(",");
    out.push('\n');
    for s in series {
        for (k, v) in s.values.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.plot_id,
                s.variable,
                s.start_week + k as Week,
                fmt_f64(*v)
            ));
        }
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

pub fn read_weekly(path: impl AsRef<Path>) -> Result<WeeklyStore> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = reader.headers()?.clone();
    if header.iter().ne(WEEKLY_HEADER.iter().copied()) {
        return Err(Error::Header {
            path: path.to_path_buf(),
            expected: WEEKLY_HEADER.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut rows: BTreeMap<(u64, Variable), Vec<(Week, f64)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let row = ingest::record_line(&record);
        let plot_id: u64 = ingest::field(&record, 0, "plot_id")?;
        let variable: Variable = record
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|e: Error| Error::MalformedRow {
                row,
                message: e.to_string(),
            })?;
        let week: Week = ingest::field(&record, 2, "week")?;
        let value = ingest::float_field(&record, 3, "value")?;
        rows.entry((plot_id, variable)).or_default().push((week, value));
    }
    let mut store = WeeklyStore::new();
    for ((plot_id, variable), mut points) in rows {
        points.sort_by_key(|p| p.0);
        if let Some(pair) = points.windows(2).find(|w| w[1].0 != w[0].0 + 1) {
            return Err(Error::InvalidSeries {
                plot_id,
                message: format!(
                    "{variable} weekly series is not contiguous between weeks {} and {}",
                    pair[0].0, pair[1].0
                ),
            });
        }
        store.insert(
            (plot_id, variable),
            WeeklySeries {
                plot_id,
                variable,
                start_week: points[0].0,
                values: points.into_iter().map(|p| p.1).collect(),
            },
        );
    }
    Ok(store)
}
