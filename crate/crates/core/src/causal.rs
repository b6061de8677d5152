//! Lag profiles of a fitted elastic-net model.
//!
//! The 72 dynamic coefficients are regrouped into six profiles, one per
//! `(variable, order)` block, each indexed by lag. A lag is active when its
//! standardized coefficient is nonzero beyond round-off. An active lag `d`
//! reads as "this change, `d` weeks before harvest, carries information
//! about yield beyond the other covariates"; no significance test is made.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::elasticnet::EnetModel;
use crate::error::{Error, Result};
use crate::features::{blocks, covariate_names, lag_column_name, Order, N_LAGS};
use crate::ingest::{write_atomic, Variable};
use crate::text::fmt_f64;

/// Standardized coefficients at or below this magnitude count as zero.
pub const ACTIVE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagCell {
    pub lag: usize,
    pub coef_std: f64,
    pub coef_raw: f64,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagProfile {
    pub variable: Variable,
    pub order: Order,
    pub lags: Vec<LagCell>,
    pub density: f64,
}

impl LagProfile {
    pub fn active_lags(&self) -> BTreeSet<usize> {
        self.lags.iter().filter(|c| c.active).map(|c| c.lag).collect()
    }

    pub fn cell(&self, lag: usize) -> &LagCell {
        &self.lags[lag - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagReport {
    pub lambda: f64,
    pub alpha: f64,
    pub profiles: Vec<LagProfile>,
}

impl LagReport {
    pub fn profile(&self, variable: Variable, order: Order) -> &LagProfile {
        self.profiles
            .iter()
            .find(|p| p.variable == variable && p.order == order)
            .expect("report holds all six profiles")
    }

    /// Raw-unit dynamic coefficients in layout order.
    pub fn w_coefficients(&self) -> Vec<f64> {
        self.profiles
            .iter()
            .flat_map(|p| p.lags.iter().map(|c| c.coef_raw))
            .collect()
    }

    pub fn n_active(&self) -> usize {
        self.profiles.iter().map(|p| p.active_lags().len()).sum()
    }
}

pub fn lag_report(model: &EnetModel) -> Result<LagReport> {
    let layout = covariate_names();
    let mut unmatched: Vec<String> = model
        .column_names
        .iter()
        .filter(|n| !layout.contains(n))
        .cloned()
        .collect();
    unmatched.extend(layout.iter().filter(|n| !model.column_names.contains(n)).cloned());
    if !unmatched.is_empty() || model.column_names.len() != layout.len() {
        return Err(Error::Layout(unmatched));
    }
    let std_beta = model.standardized_beta();
    let lookup = |name: &str| model.column_names.iter().position(|n| n == name).expect("checked above");
    let profiles = blocks()
        .map(|(variable, order)| {
            let lags: Vec<LagCell> = (1..=N_LAGS)
                .map(|lag| {
                    let j = lookup(&lag_column_name(variable, order, lag));
                    LagCell {
                        lag,
                        coef_std: std_beta[j],
                        coef_raw: model.beta[j],
                        active: std_beta[j].abs() > ACTIVE_TOL,
                    }
                })
                .collect();
            let density = lags.iter().filter(|c| c.active).count() as f64 / N_LAGS as f64;
            LagProfile {
                variable,
                order,
                lags,
                density,
            }
        })
        .collect();
    Ok(LagReport {
        lambda: model.lambda,
        alpha: model.alpha,
        profiles,
    })
}

pub fn active_lags(report: &LagReport, variable: Variable, order: Order) -> BTreeSet<usize> {
    report.profile(variable, order).active_lags()
}

pub fn density(report: &LagReport, variable: Variable, order: Order) -> f64 {
    report.profile(variable, order).density
}

pub fn write_report_json(path: impl AsRef<Path>, report: &LagReport) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(report)?;
    bytes.push(b'\n');
    write_atomic(path.as_ref(), &bytes)
}

pub fn read_report_json(path: impl AsRef<Path>) -> Result<LagReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_report_csv(path: impl AsRef<Path>, report: &LagReport) -> Result<()> {
    let mut out = String::from("variable,order,lag,coef_std,coef_raw,active\n");
    for p in &report.profiles {
        for c in &p.lags {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                p.variable,
                p.order,
                c.lag,
                fmt_f64(c.coef_std),
                fmt_f64(c.coef_raw),
                c.active
            )
            .expect("write to string");
        }
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

/// Bar chart of one profile's standardized coefficients against lag.
pub fn profile_svg(profile: &LagProfile) -> String {
    const W: f64 = 480.0;
    const H: f64 = 240.0;
    const PAD: f64 = 36.0;
    let peak = profile
        .lags
        .iter()
        .map(|c| c.coef_std.abs())
        .fold(0.0, f64::max);
    let scale = if peak > 0.0 { (H / 2.0 - PAD) / peak } else { 0.0 };
    let mid = H / 2.0;
    let slot = (W - 2.0 * PAD) / N_LAGS as f64;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{PAD}" y="20" font-family="sans-serif" font-size="13">{} {} (max |coef| {:.4e})</text>"#,
        profile.variable, profile.order, peak
    )
    .unwrap();
    writeln!(
        s,
        r#"<line x1="{PAD}" y1="{mid}" x2="{}" y2="{mid}" stroke="black"/>"#,
        W - PAD
    )
    .unwrap();
    for c in &profile.lags {
        let x = PAD + (c.lag - 1) as f64 * slot + slot * 0.15;
        let h = c.coef_std.abs() * scale;
        let y = if c.coef_std >= 0.0 { mid - h } else { mid };
        let fill = if c.coef_std >= 0.0 { "#3b6ea5" } else { "#b5473a" };
        writeln!(
            s,
            r#"<rect x="{x:.3}" y="{y:.3}" width="{:.3}" height="{h:.3}" fill="{fill}"/>"#,
            slot * 0.7
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.3}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            x + slot * 0.35,
            H - 10.0,
            c.lag
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `lag_<order>_<variable>.svg` for each profile, returning the paths.
pub fn write_svgs(dir: impl AsRef<Path>, report: &LagReport) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut paths = Vec::with_capacity(report.profiles.len());
    for p in &report.profiles {
        let path = dir.join(format!("lag_{}_{}.svg", p.order.slug(), p.variable.slug()));
        write_atomic(&path, profile_svg(p).as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}
