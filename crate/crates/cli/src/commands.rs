use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use yieldlag::causal;
use yieldlag::elasticnet::{self, EnetConfig};
use yieldlag::eval::{self, MseRow};
use yieldlag::features::{self, Dataset};
use yieldlag::gam::{self, Smoothing};
use yieldlag::gbt::{self, GbtConfig};
use yieldlag::ingest;
use yieldlag::model::SavedModel;
use yieldlag::synth::{self, SynthConfig};
use yieldlag::timeseries;
use yieldlag::{Error, Result};

use crate::manifest::{config_hash, RunManifest};
use crate::{Auto, Command, ModelKind, ModelParams, DEFAULT_SEED};

/// Collects the files a command reads and writes.
struct Run<'a> {
    out: &'a Path,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Run<'_> {
    fn input(&mut self, path: &Path) -> PathBuf {
        self.inputs.push(path.to_path_buf());
        path.to_path_buf()
    }

    fn output(&mut self, name: &str) -> PathBuf {
        let path = self.out.join(name);
        self.outputs.push(path.clone());
        path
    }
}

pub fn run(command: &Command, seed: Option<u64>, out: &Path) -> Result<()> {
    let started = Instant::now();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut run = Run {
        out,
        inputs: vec![],
        outputs: vec![],
    };
    let seed = match command {
        Command::Simulate { config } => simulate(&mut run, config, seed)?,
        other => {
            let seed = seed.unwrap_or(DEFAULT_SEED);
            dispatch(&mut run, other, seed)?;
            seed
        }
    };
    RunManifest {
        command: command_name(command).to_string(),
        inputs: run.inputs,
        config_hash: config_hash(command, seed),
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: run.outputs,
        wall_clock_ms: started.elapsed().as_millis(),
    }
    .write(out)
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Interpolate { .. } => "interpolate",
        Command::Featurize { .. } => "featurize",
        Command::Fit { .. } => "fit",
        Command::Cv { .. } => "cv",
        Command::Report { .. } => "report",
        Command::Simulate { .. } => "simulate",
        Command::Eval { .. } => "eval",
    }
}

fn dispatch(run: &mut Run, command: &Command, seed: u64) -> Result<()> {
    match command {
        Command::Interpolate { plots, series } => interpolate(run, plots, series),
        Command::Featurize { plots, weekly } => featurize(run, plots, weekly),
        Command::Fit {
            dataset,
            model,
            params,
        } => fit(run, dataset, *model, params, seed),
        Command::Cv { dataset, params } => cv(run, dataset, params, seed),
        Command::Report { model, svg } => report(run, model, *svg),
        Command::Eval { dataset, params } => evaluate(run, dataset, params, seed),
        Command::Simulate { .. } => unreachable!("handled by run"),
    }
}

fn interpolate(run: &mut Run, plots: &Path, series: &Path) -> Result<()> {
    let plots = ingest::parse_plot_table(run.input(plots))?;
    let series = ingest::parse_all_series(run.input(series))?;
    let ids: BTreeSet<u64> = plots.iter().map(|p| p.id).collect();
    let (known, unknown): (Vec<_>, Vec<_>) = series.into_iter().partition(|s| ids.contains(&s.plot_id));
    if !unknown.is_empty() {
        log::warn!("ignoring {} series of plots missing from the plot table", unknown.len());
    }
    let weekly = timeseries::interpolate_all(&known)?;
    timeseries::write_weekly(run.output("weekly.csv"), &weekly)
}

fn featurize(run: &mut Run, plots: &Path, weekly: &Path) -> Result<()> {
    let plots = ingest::parse_plot_table(run.input(plots))?;
    let weekly = timeseries::read_weekly(run.input(weekly))?;
    let (dataset, skipped) = features::build_dataset(&plots, &weekly);
    log::info!("{} rows, {} plots skipped", dataset.len(), skipped.len());
    features::write_dataset(run.output("dataset.csv"), &dataset)?;
    features::write_skips(run.output("skips.csv"), &skipped)
}

fn enet_config(params: &ModelParams) -> EnetConfig {
    EnetConfig {
        alpha: params.alpha,
        ..EnetConfig::default()
    }
}

fn gbt_config(params: &ModelParams) -> GbtConfig {
    GbtConfig {
        gamma: params.gamma,
        lambda: params.l2,
        max_depth: params.max_depth,
        learning_rate: params.eta,
        ..GbtConfig::default()
    }
}

/// Elastic-net CV curve over a grid derived from `data`.
fn enet_curve(data: &Dataset, params: &ModelParams, seed: u64) -> Result<eval::CvCurve> {
    let (x, y) = (data.x_matrix(), data.y_vector());
    let grid = elasticnet::lambda_path(&x, &y, params.alpha, true, params.n_lambdas, params.lambda_ratio)?;
    eval::cv_curve_enet(&x, &y, &enet_config(params), &grid, params.folds, seed)
}

fn fit_model(run: &mut Run, kind: ModelKind, train: &Dataset, params: &ModelParams, seed: u64) -> Result<SavedModel> {
    match kind {
        ModelKind::Enet => {
            let lambda = match params.lambda {
                Auto::Value(l) => l,
                Auto::Auto => {
                    let curve = enet_curve(train, params, seed)?;
                    eval::write_cv_curve(run.output("cv_curve.csv"), &curve)?;
                    let l = eval::select_lambda(&curve, params.select);
                    log::info!("selected lambda {l} ({} rule)", params.select);
                    l
                }
            };
            let cfg = EnetConfig {
                lambda,
                ..enet_config(params)
            };
            let m = elasticnet::fit_named(&train.x_matrix(), &train.y_vector(), &cfg, &train.columns)?;
            Ok(SavedModel::Enet(m))
        }
        ModelKind::Gbt => {
            let base = gbt_config(params);
            let (x, y) = (train.x_matrix(), train.y_vector());
            let n_rounds = match params.rounds {
                Auto::Value(r) => r,
                Auto::Auto => {
                    let curve = eval::cv_gbt_rounds(&x, y.as_slice(), &base, &eval::GBT_ROUNDS, eval::GBT_FOLDS, seed)?;
                    eval::write_rounds_curve(run.output("gbt_cv.csv"), &curve)?;
                    eval::select_rounds(&curve)
                }
            };
            let m = gbt::fit_ensemble(&x, y.as_slice(), &GbtConfig { n_rounds, ..base })?;
            Ok(SavedModel::Gbt(m))
        }
        ModelKind::Gam => {
            let smoothing = match params.smoothing {
                Auto::Auto => Smoothing::Auto,
                Auto::Value(l) => Smoothing::Fixed(l),
            };
            Ok(SavedModel::Gam(gam::fit_gam(train, smoothing)?))
        }
    }
}

fn mse_row(model: &SavedModel, train: &Dataset, validation: &Dataset) -> Result<MseRow> {
    let err = |d: &Dataset| eval::mse(d.y_vector().as_slice(), &model.predict_matrix(&d.x_matrix())?);
    Ok(MseRow {
        model: model.kind().to_string(),
        train: err(train)?,
        validation: err(validation)?,
    })
}

fn split_dataset(run: &mut Run, dataset: &Path, params: &ModelParams, seed: u64) -> Result<(Dataset, Dataset)> {
    let data = features::read_dataset(run.input(dataset))?;
    let split = eval::train_test_split(data.len(), params.train_ratio, seed)?;
    eval::write_split(run.output("split.json"), &split)?;
    Ok((data.subset(&split.train), data.subset(&split.validation)))
}

fn fit(run: &mut Run, dataset: &Path, kind: ModelKind, params: &ModelParams, seed: u64) -> Result<()> {
    let (train, validation) = split_dataset(run, dataset, params, seed)?;
    let model = fit_model(run, kind, &train, params, seed)?;
    let row = mse_row(&model, &train, &validation)?;
    model.write(run.output("model.json"))?;
    eval::write_mse_table(run.output("mse_table.csv"), &[row])
}

fn evaluate(run: &mut Run, dataset: &Path, params: &ModelParams, seed: u64) -> Result<()> {
    let (train, validation) = split_dataset(run, dataset, params, seed)?;
    let mut rows = Vec::new();
    for kind in [ModelKind::Enet, ModelKind::Gbt, ModelKind::Gam] {
        let model = fit_model(run, kind, &train, params, seed)?;
        rows.push(mse_row(&model, &train, &validation)?);
        model.write(run.output(&format!("model_{}.json", model.kind())))?;
    }
    eval::write_mse_table(run.output("mse_table.csv"), &rows)
}

fn cv(run: &mut Run, dataset: &Path, params: &ModelParams, seed: u64) -> Result<()> {
    let data = features::read_dataset(run.input(dataset))?;
    let curve = enet_curve(&data, params, seed)?;
    eval::write_cv_curve(run.output("cv_curve.csv"), &curve)?;
    println!("{}", eval::select_lambda(&curve, params.select));
    Ok(())
}

fn report(run: &mut Run, model: &Path, svg: bool) -> Result<()> {
    let model = match SavedModel::read(run.input(model))? {
        SavedModel::Enet(m) => m,
        other => {
            return Err(Error::Config(format!(
                "lag report requires an elastic-net model, got {}",
                other.kind()
            )))
        }
    };
    let report = causal::lag_report(&model)?;
    causal::write_report_json(run.output("lag_report.json"), &report)?;
    causal::write_report_csv(run.output("lag_report.csv"), &report)?;
    if svg {
        let paths = causal::write_svgs(run.out, &report)?;
        run.outputs.extend(paths);
    }
    Ok(())
}

fn simulate(run: &mut Run, config: &Path, seed: Option<u64>) -> Result<u64> {
    let mut cfg = SynthConfig::read(run.input(config))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let out = synth::generate_dataset(&cfg)?;
    ingest::write_plot_table(run.output("plots.csv"), &out.plots)?;
    ingest::write_series(run.output("series.csv"), &out.series)?;
    synth::write_truth(run.output("truth.json"), &out.truth)?;
    Ok(cfg.seed)
}
