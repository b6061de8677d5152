//! Synthetic plots with known lagged effects on yield.
//!
//! Each plot gets NDVI, precipitation and temperature series at their native
//! cadences (seasonal sine plus AR(1) noise), which are run through the
//! ordinary interpolation and featurization code. Yield is then linear in
//! the standardized lag features named by the planted effects, plus
//! Gaussian noise, so the true coefficient vector is known exactly.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::causal::LagReport;
use crate::error::{Error, Result};
use crate::features::{self, covariate_names, w_index, Dataset, Order, N_LAGS};
use crate::ingest::{write_atomic, ControlVector, PlotRecord, RawSeries, Variable};
use crate::rng::{keyed_rng, stream_rng, Stream};
use crate::timeseries;
use crate::weeks::{day_to_date, week_monday, week_of_day, Day, Week};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedEffect {
    pub variable: Variable,
    pub order: Order,
    pub lag: usize,
    /// Effect of one standard deviation of the feature on yield.
    pub coefficient: f64,
}

impl PlantedEffect {
    pub fn column(&self) -> usize {
        ControlVector::DIM + w_index(self.variable, self.order, self.lag)
    }

    fn validate(&self) -> Result<()> {
        if !(1..=N_LAGS).contains(&self.lag) {
            return Err(Error::Config(format!("planted lag {} outside 1..=12", self.lag)));
        }
        if self.coefficient == 0.0 || !self.coefficient.is_finite() {
            return Err(Error::Config(format!(
                "planted coefficient must be finite and nonzero, got {}",
                self.coefficient
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesParams {
    pub baseline: f64,
    /// Amplitude of the 52-week seasonal sine.
    pub amplitude: f64,
    /// AR(1) coefficient of the noise, per observation.
    pub rho: f64,
    pub innovation_sd: f64,
}

impl SeriesParams {
    fn validate(&self, variable: Variable) -> Result<()> {
        let finite = [self.baseline, self.amplitude, self.rho, self.innovation_sd]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.rho.abs() >= 1.0 || self.innovation_sd < 0.0 {
            return Err(Error::Config(format!(
                "{variable} series needs finite parameters, |rho| < 1 and innovation_sd >= 0"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesModels {
    pub ndvi: SeriesParams,
    pub prec: SeriesParams,
    pub temp: SeriesParams,
}

impl Default for SeriesModels {
    fn default() -> Self {
        SeriesModels {
            ndvi: SeriesParams {
                baseline: 0.5,
                amplitude: 0.2,
                rho: 0.9,
                innovation_sd: 0.03,
            },
            prec: SeriesParams {
                baseline: 30.0,
                amplitude: 15.0,
                rho: 0.9,
                innovation_sd: 3.0,
            },
            temp: SeriesParams {
                baseline: 295.0,
                amplitude: 5.0,
                rho: 0.9,
                innovation_sd: 1.0,
            },
        }
    }
}

impl SeriesModels {
    pub fn get(&self, variable: Variable) -> &SeriesParams {
        match variable {
            Variable::Ndvi => &self.ndvi,
            Variable::Prec => &self.prec,
            Variable::Temp => &self.temp,
        }
    }
}

fn default_intercept() -> f64 {
    10.0
}

fn default_start_date() -> String {
    "2015-01-05".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n_plots: usize,
    pub weeks_per_plot: usize,
    pub seed: u64,
    #[serde(default)]
    pub planted: Vec<PlantedEffect>,
    pub noise_sd: f64,
    /// Yield at the feature means.
    #[serde(default = "default_intercept")]
    pub intercept: f64,
    /// Earliest series start; plots start at random offsets within a year of it.
    #[serde(default = "default_start_date")]
    pub start_date: String,
    #[serde(default)]
    pub series: SeriesModels,
}

pub const MIN_WEEKS_PER_PLOT: usize = 30;

impl SynthConfig {
    /// Defaults for everything but size, seed, effects and noise.
    pub fn new(n_plots: usize, seed: u64, planted: Vec<PlantedEffect>, noise_sd: f64) -> Self {
        SynthConfig {
            n_plots,
            weeks_per_plot: 40,
            seed,
            planted,
            noise_sd,
            intercept: default_intercept(),
            start_date: default_start_date(),
            series: SeriesModels::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weeks_per_plot < MIN_WEEKS_PER_PLOT {
            return Err(Error::Config(format!(
                "weeks_per_plot {} below {MIN_WEEKS_PER_PLOT}",
                self.weeks_per_plot
            )));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Config(format!("noise_sd {} must be finite and >= 0", self.noise_sd)));
        }
        if !self.intercept.is_finite() {
            return Err(Error::Config("intercept must be finite".into()));
        }
        self.start_day()?;
        for p in &self.planted {
            p.validate()?;
        }
        for (i, a) in self.planted.iter().enumerate() {
            if self.planted[..i].iter().any(|b| b.column() == a.column()) {
                return Err(Error::Config(format!(
                    "effect {} {} lag {} planted twice",
                    a.variable, a.order, a.lag
                )));
            }
        }
        for v in Variable::ALL {
            self.series.get(v).validate(v)?;
        }
        Ok(())
    }

    fn start_day(&self) -> Result<Day> {
        crate::weeks::parse_date(&self.start_date)
            .ok_or_else(|| Error::Config(format!("start_date `{}` is not YYYY-MM-DD", self.start_date)))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SynthConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("synth config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// First and last day of a plot's observation window, and its harvest week.
fn plot_window(cfg: &SynthConfig, plot_id: u64) -> Result<(Day, Day, Week)> {
    let mut rng = keyed_rng(cfg.seed, plot_id, 0);
    let start = cfg.start_day()? + rng.random_range(0..364);
    let end = start + 7 * cfg.weeks_per_plot as Day;
    // the coarsest cadence may stop up to 15 days short of `end`
    let harvest = week_of_day(end - 16) - 1;
    debug_assert!(week_monday(harvest - features::HISTORY_WEEKS) >= start);
    Ok((start, end, harvest))
}

fn variable_key(variable: Variable) -> u64 {
    match variable {
        Variable::Ndvi => 1,
        Variable::Prec => 2,
        Variable::Temp => 3,
    }
}

/// AR(1) noise with stationary start, one value per step.
pub fn ar1_noise<R: Rng>(rng: &mut R, n: usize, rho: f64, innovation_sd: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut state = 0.0;
    for k in 0..n {
        let e: f64 = rng.sample(StandardNormal);
        state = if k == 0 {
            innovation_sd / (1.0 - rho * rho).sqrt() * e
        } else {
            rho * state + innovation_sd * e
        };
        out.push(state);
    }
    out
}

/// One plot's observed series for `variable`, sampled at its native cadence.
pub fn generate_series(cfg: &SynthConfig, plot_id: u64, variable: Variable) -> Result<RawSeries> {
    let (start, end, _) = plot_window(cfg, plot_id)?;
    let params = cfg.series.get(variable);
    let cadence = variable.native_cadence_days();
    let days: Vec<Day> = (0..).map(|k| start + k * cadence).take_while(|&d| d <= end).collect();
    let mut rng = keyed_rng(cfg.seed, plot_id, variable_key(variable));
    let noise = ar1_noise(&mut rng, days.len(), params.rho, params.innovation_sd);
    let points = days
        .iter()
        .zip(noise)
        .map(|(&d, e)| {
            let t_weeks = d as f64 / 7.0;
            let v = params.baseline + params.amplitude * (std::f64::consts::TAU * t_weeks / 52.0).sin() + e;
            let v = if variable == Variable::Ndvi { v.clamp(-1.0, 1.0) } else { v };
            (d, v)
        })
        .collect();
    RawSeries::new(plot_id, variable, points)
}

fn generate_plot(cfg: &SynthConfig, plot_id: u64) -> Result<(PlotRecord, Vec<RawSeries>)> {
    let (start, _, harvest) = plot_window(cfg, plot_id)?;
    let mut rng = keyed_rng(cfg.seed, plot_id, 4);
    let mut pick = |lo: i64, hi: i64| rng.random_range(lo..=hi);
    let planting = week_of_day(start) + pick(0, 4);
    let controls = ControlVector::from_codes([
        pick(1, 2),
        planting,
        pick(1, 3),
        pick(0, 1),
        pick(0, 1),
        pick(0, 1),
        pick(1, 7),
        pick(1, 8),
        pick(1, 2),
    ]);
    let lat = -18.0 + 18.0 * rng.random::<f64>();
    let lon = -81.0 + 12.0 * rng.random::<f64>();
    let record = PlotRecord {
        id: plot_id,
        year: chrono::Datelike::year(&day_to_date(week_monday(harvest))),
        ccdd: rng.random_range(1..=25),
        ccpp: rng.random_range(1..=20),
        ccdi: rng.random_range(1..=30),
        congl: rng.random_range(1..=9999),
        lat,
        lon,
        harvest_week: harvest,
        yield_t_ha: 0.0,
        controls,
    };
    let series = Variable::ALL
        .into_iter()
        .map(|v| generate_series(cfg, plot_id, v))
        .collect::<Result<Vec<_>>>()?;
    Ok((record, series))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub seed: u64,
    pub noise_sd: f64,
    pub planted: Vec<PlantedEffect>,
    pub column_names: Vec<String>,
    /// Raw-unit intercept and coefficients of the noiseless yield.
    pub beta0: f64,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub plots: Vec<PlotRecord>,
    pub series: Vec<RawSeries>,
    pub dataset: Dataset,
    pub truth: Truth,
}

/// Population mean and standard deviation of dataset column `j`.
fn column_moments(data: &Dataset, j: usize) -> (f64, f64) {
    let x = data.x_matrix();
    let col = x.column(j);
    let n = col.len() as f64;
    let mean = col.sum() / n;
    let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn generate_dataset(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let generated = (1..=cfg.n_plots as u64)
        .into_par_iter()
        .map(|id| generate_plot(cfg, id))
        .collect::<Result<Vec<_>>>()?;
    let mut plots = Vec::with_capacity(cfg.n_plots);
    let mut series = Vec::with_capacity(3 * cfg.n_plots);
    for (p, s) in generated {
        plots.push(p);
        series.extend(s);
    }

    let weekly = timeseries::to_store(timeseries::interpolate_all(&series)?);
    let (mut dataset, skipped) = features::build_dataset(&plots, &weekly);
    if let Some(s) = skipped.first() {
        return Err(Error::Config(format!(
            "synthetic plot {} could not be featurized: {}",
            s.plot_id, s.reason
        )));
    }
    assert_eq!(dataset.columns, covariate_names());

    let mut beta = vec![0.0; dataset.columns.len()];
    let mut beta0 = cfg.intercept;
    for p in &cfg.planted {
        let j = p.column();
        let (mean, sd) = if dataset.is_empty() { (0.0, 0.0) } else { column_moments(&dataset, j) };
        if !(sd > 0.0) {
            return Err(Error::Config(format!(
                "planted column {} has no variation",
                dataset.columns[j]
            )));
        }
        beta[j] = p.coefficient / sd;
        beta0 -= p.coefficient * mean / sd;
    }

    let mut noise_rng = stream_rng(cfg.seed, Stream::Synth);
    for ((x, y), plot) in dataset.rows.iter_mut().zip(plots.iter_mut()) {
        let xv = x.to_vec();
        let signal: f64 = beta0 + xv.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>();
        let e: f64 = noise_rng.sample(StandardNormal);
        *y = signal + cfg.noise_sd * e;
        if *y < 0.0 {
            return Err(Error::Config(format!(
                "plot {} has negative yield {}; raise the intercept",
                plot.id, y
            )));
        }
        plot.yield_t_ha = *y;
    }

    let truth = Truth {
        seed: cfg.seed,
        noise_sd: cfg.noise_sd,
        planted: cfg.planted.clone(),
        column_names: dataset.columns.clone(),
        beta0,
        beta,
    };
    Ok(SynthOutput {
        plots,
        series,
        dataset,
        truth,
    })
}

/// Fraction of planted effects active in `report` with the planted sign.
/// Vacuously 1 when nothing was planted.
pub fn recovery_score(report: &LagReport, truth: &[PlantedEffect]) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let found = truth
        .iter()
        .filter(|p| {
            let cell = report.profile(p.variable, p.order).cell(p.lag);
            cell.active && cell.coef_std.signum() == p.coefficient.signum()
        })
        .count();
    found as f64 / truth.len() as f64
}

/// Active lags in `report` that are not planted.
pub fn false_actives(report: &LagReport, truth: &[PlantedEffect]) -> usize {
    report
        .profiles
        .iter()
        .map(|p| {
            p.active_lags()
                .into_iter()
                .filter(|&lag| {
                    !truth
                        .iter()
                        .any(|t| t.variable == p.variable && t.order == p.order && t.lag == lag)
                })
                .count()
        })
        .sum()
}

pub fn write_truth(path: impl AsRef<Path>, truth: &Truth) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(truth)?;
    bytes.push(b'\n');
    write_atomic(path.as_ref(), &bytes)
}

pub fn read_truth(path: impl AsRef<Path>) -> Result<Truth> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
