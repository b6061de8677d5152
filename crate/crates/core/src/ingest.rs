//! Plot records, raw remote-sensing series and the band-level index formulas.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{fmt_f64, parse_f64};
use crate::weeks::{format_day, parse_date, week_of_day, Day, Week};

pub const PLOT_HEADER: [&str; 19] = [
    "id",
    "year",
    "ccdd",
    "ccpp",
    "ccdi",
    "congl",
    "lat",
    "lon",
    "harvest_week",
    "yield_t_ha",
    "p204_tipo",
    "p206_ini",
    "p208",
    "p211_1",
    "p211_2",
    "p211_4",
    "p212",
    "p213",
    "p214",
];

pub const SERIES_HEADER: [&str; 4] = ["plot_id", "variable", "date", "value"];

/// Minimum number of raw observations per series.
pub const MIN_SERIES_POINTS: usize = 4;

/// Remote-sensing variable kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Variable {
    Ndvi,
    Prec,
    Temp,
}

impl Variable {
    pub const ALL: [Variable; 3] = [Variable::Ndvi, Variable::Prec, Variable::Temp];

    pub fn as_str(self) -> &'static str {
        match self {
            Variable::Ndvi => "NDVI",
            Variable::Prec => "PREC",
            Variable::Temp => "TEMP",
        }
    }

    /// Lower-case name used in column identifiers.
    pub fn slug(self) -> &'static str {
        match self {
            Variable::Ndvi => "ndvi",
            Variable::Prec => "prec",
            Variable::Temp => "temp",
        }
    }

    /// Native observation cadence in days (NDVI composites, precipitation pentads, daily LST).
    pub fn native_cadence_days(self) -> i64 {
        match self {
            Variable::Ndvi => 16,
            Variable::Prec => 5,
            Variable::Temp => 1,
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "NDVI" => Ok(Variable::Ndvi),
            "PREC" => Ok(Variable::Prec),
            "TEMP" => Ok(Variable::Temp),
            other => Err(Error::Config(format!(
                "unknown variable {other:?} (expected NDVI, PREC or TEMP)"
            ))),
        }
    }
}

/// The nine agronomic controls, integer coded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlVector {
    pub p204_tipo: i64,
    /// Harvest start, as a week index.
    pub p206_ini: Week,
    pub p208: i64,
    pub p211_1: i64,
    pub p211_2: i64,
    pub p211_4: i64,
    pub p212: i64,
    pub p213: i64,
    pub p214: i64,
}

struct LevelSet {
    field: &'static str,
    lo: i64,
    hi: i64,
    describe: &'static str,
}

const LEVELS: [Option<LevelSet>; 9] = [
    Some(LevelSet { field: "p204_tipo", lo: 1, hi: 2, describe: "{1,2}" }),
    None,
    Some(LevelSet { field: "p208", lo: 1, hi: 3, describe: "{1,2,3}" }),
    Some(LevelSet { field: "p211_1", lo: 0, hi: 1, describe: "{0,1}" }),
    Some(LevelSet { field: "p211_2", lo: 0, hi: 1, describe: "{0,1}" }),
    Some(LevelSet { field: "p211_4", lo: 0, hi: 1, describe: "{0,1}" }),
    Some(LevelSet { field: "p212", lo: 1, hi: 7, describe: "{1..7}" }),
    Some(LevelSet { field: "p213", lo: 1, hi: 8, describe: "{1..8}" }),
    Some(LevelSet { field: "p214", lo: 1, hi: 2, describe: "{1,2}" }),
];

impl ControlVector {
    pub const DIM: usize = 9;
    pub const NAMES: [&'static str; 9] = [
        "p204_tipo", "p206_ini", "p208", "p211_1", "p211_2", "p211_4", "p212", "p213", "p214",
    ];

    pub fn from_codes(codes: [i64; 9]) -> Self {
        let [p204_tipo, p206_ini, p208, p211_1, p211_2, p211_4, p212, p213, p214] = codes;
        ControlVector {
            p204_tipo,
            p206_ini,
            p208,
            p211_1,
            p211_2,
            p211_4,
            p212,
            p213,
            p214,
        }
    }

    pub fn codes(&self) -> [i64; 9] {
        [
            self.p204_tipo,
            self.p206_ini,
            self.p208,
            self.p211_1,
            self.p211_2,
            self.p211_4,
            self.p212,
            self.p213,
            self.p214,
        ]
    }

    pub fn as_f64(&self) -> [f64; 9] {
        self.codes().map(|c| c as f64)
    }

    /// Checks every code against its level set. `row` is only used in the error.
    pub fn validate(&self, row: usize) -> Result<()> {
        for (code, level) in self.codes().iter().zip(LEVELS.iter()) {
            if let Some(level) = level {
                if *code < level.lo || *code > level.hi {
                    return Err(Error::InvalidCode {
                        row,
                        field: level.field,
                        value: code.to_string(),
                        allowed: level.describe,
                    });
                }
            }
        }
        Ok(())
    }
}

/// One surveyed plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRecord {
    pub id: u64,
    pub year: i32,
    pub ccdd: u32,
    pub ccpp: u32,
    pub ccdi: u32,
    pub congl: u32,
    pub lat: f64,
    pub lon: f64,
    pub harvest_week: Week,
    pub yield_t_ha: f64,
    pub controls: ControlVector,
}

impl PlotRecord {
    pub fn validate(&self, row: usize) -> Result<()> {
        let bad = |message: String| Err(Error::MalformedRow { row, message });
        if self.id == 0 {
            return bad("id must be positive".into());
        }
        if !(-90.0..=90.0).contains(&self.lat) {
            return bad(format!("lat {} outside [-90, 90]", self.lat));
        }
        if !(-180.0..=180.0).contains(&self.lon) {
            return bad(format!("lon {} outside [-180, 180]", self.lon));
        }
        if !(self.yield_t_ha >= 0.0 && self.yield_t_ha.is_finite()) {
            return bad(format!("yield_t_ha {} must be finite and >= 0", self.yield_t_ha));
        }
        self.controls.validate(row)
    }
}

/// An irregularly sampled series for one plot and variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSeries {
    pub plot_id: u64,
    pub variable: Variable,
    /// `(day, value)` pairs with strictly increasing days.
    pub points: Vec<(Day, f64)>,
}

impl RawSeries {
    /// Validates ordering, length and value range.
    pub fn new(plot_id: u64, variable: Variable, points: Vec<(Day, f64)>) -> Result<Self> {
        let invalid = |message: String| Err(Error::InvalidSeries { plot_id, message });
        if points.len() < MIN_SERIES_POINTS {
            return invalid(format!(
                "{variable} series has {} points, at least {MIN_SERIES_POINTS} required",
                points.len()
            ));
        }
        for pair in points.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return invalid(format!(
                    "{variable} timestamps not strictly increasing at {}",
                    format_day(pair[1].0)
                ));
            }
        }
        for &(day, v) in &points {
            if !v.is_finite() {
                return invalid(format!("{variable} value at {} is not finite", format_day(day)));
            }
            if variable == Variable::Ndvi && !(-1.0..=1.0).contains(&v) {
                return invalid(format!("NDVI value {v} at {} outside [-1, 1]", format_day(day)));
            }
        }
        Ok(RawSeries {
            plot_id,
            variable,
            points,
        })
    }

    pub fn first_day(&self) -> Day {
        self.points[0].0
    }

    pub fn last_day(&self) -> Day {
        self.points[self.points.len() - 1].0
    }
}

/// NDVI from near-infrared and red reflectances.
pub fn compute_ndvi(nir: f64, red: f64) -> Result<f64> {
    if !(nir.is_finite() && red.is_finite()) || nir < 0.0 || red < 0.0 {
        return Err(Error::UndefinedInput(format!(
            "reflectances must be finite and non-negative (nir={nir}, red={red})"
        )));
    }
    let total = nir + red;
    if total == 0.0 {
        return Err(Error::UndefinedInput("nir + red = 0".into()));
    }
    Ok((nir - red) / total)
}

/// Coefficients of the split-window land-surface-temperature formula.
/// They are site and season specific and must be supplied by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitWindowCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Land surface temperature from the band 31/32 brightness temperatures (kelvin).
pub fn compute_lst_split_window(t31: f64, t32: f64, k: SplitWindowCoeffs) -> Result<f64> {
    let all_finite = [t31, t32, k.a, k.b, k.c, k.d].iter().all(|v| v.is_finite());
    if !all_finite {
        return Err(Error::UndefinedInput("non-finite split-window input".into()));
    }
    if t31 <= 0.0 || t32 <= 0.0 {
        return Err(Error::UndefinedInput(format!(
            "brightness temperatures must be positive kelvin (t31={t31}, t32={t32})"
        )));
    }
    let diff = t31 - t32;
    Ok(k.a + k.b * (t31 + t32) + k.c * diff + k.d * diff * diff)
}

fn open_csv(path: &Path, expected: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = reader.headers()?.clone();
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Header {
            path: path.to_path_buf(),
            expected: expected.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(reader)
}

pub(crate) fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map(|p| p.line() as usize).unwrap_or(0)
}

pub(crate) fn field<T: FromStr>(record: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    let row = record_line(record);
    let raw = record.get(idx).ok_or_else(|| Error::MalformedRow {
        row,
        message: format!("missing field `{name}`"),
    })?;
    raw.parse::<T>().map_err(|_| Error::MalformedRow {
        row,
        message: format!("cannot parse `{name}` from {raw:?}"),
    })
}

pub(crate) fn float_field(record: &csv::StringRecord, idx: usize, name: &str) -> Result<f64> {
    let row = record_line(record);
    record
        .get(idx)
        .and_then(parse_f64)
        .ok_or_else(|| Error::MalformedRow {
            row,
            message: format!("cannot parse `{name}` as a number"),
        })
}

/// `p206_ini` may be a week index or an ISO date; dates map to their week.
fn parse_week_or_date(record: &csv::StringRecord, idx: usize) -> Result<Week> {
    let raw = record.get(idx).unwrap_or("");
    if let Ok(w) = raw.parse::<Week>() {
        return Ok(w);
    }
    parse_date(raw)
        .map(week_of_day)
        .ok_or_else(|| Error::MalformedRow {
            row: record_line(record),
            message: format!("cannot parse `p206_ini` from {raw:?} (week index or YYYY-MM-DD)"),
        })
}

fn parse_plot_row(record: &csv::StringRecord) -> Result<PlotRecord> {
    let row = record_line(record);
    if record.len() != PLOT_HEADER.len() {
        return Err(Error::MalformedRow {
            row,
            message: format!("expected {} fields, got {}", PLOT_HEADER.len(), record.len()),
        });
    }
    let mut codes = [0i64; 9];
    for (k, code) in codes.iter_mut().enumerate() {
        let idx = 10 + k;
        *code = if k == 1 {
            parse_week_or_date(record, idx)?
        } else {
            field(record, idx, PLOT_HEADER[idx])?
        };
    }
    let plot = PlotRecord {
        id: field(record, 0, "id")?,
        year: field(record, 1, "year")?,
        ccdd: field(record, 2, "ccdd")?,
        ccpp: field(record, 3, "ccpp")?,
        ccdi: field(record, 4, "ccdi")?,
        congl: field(record, 5, "congl")?,
        lat: float_field(record, 6, "lat")?,
        lon: float_field(record, 7, "lon")?,
        harvest_week: field(record, 8, "harvest_week")?,
        yield_t_ha: float_field(record, 9, "yield_t_ha")?,
        controls: ControlVector::from_codes(codes),
    };
    plot.validate(row)?;
    Ok(plot)
}

/// Reads `plots.csv`. Row numbers in errors are file line numbers.
pub fn parse_plot_table(path: impl AsRef<Path>) -> Result<Vec<PlotRecord>> {
    let path = path.as_ref();
    let mut reader = open_csv(path, &PLOT_HEADER)?;
    let mut plots = Vec::new();
    for record in reader.records() {
        plots.push(parse_plot_row(&record?)?);
    }
    Ok(plots)
}

pub fn write_plot_table(path: impl AsRef<Path>, plots: &[PlotRecord]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&PLOT_HEADER.join(","));
    out.push('\n');
    for p in plots {
        let codes = p.controls.codes().map(|c| c.to_string()).join(",");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            p.id,
            p.year,
            p.ccdd,
            p.ccpp,
            p.ccdi,
            p.congl,
            fmt_f64(p.lat),
            fmt_f64(p.lon),
            p.harvest_week,
            fmt_f64(p.yield_t_ha),
            codes
        ));
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

fn read_series_rows(path: &Path) -> Result<BTreeMap<(u64, Variable), Vec<(Day, f64)>>> {
    let mut reader = open_csv(path, &SERIES_HEADER)?;
    let mut grouped: BTreeMap<(u64, Variable), Vec<(Day, f64)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let row = record_line(&record);
        let plot_id: u64 = field(&record, 0, "plot_id")?;
        let variable: Variable = record
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|e: Error| Error::MalformedRow {
                row,
                message: e.to_string(),
            })?;
        let day = record
            .get(2)
            .and_then(parse_date)
            .ok_or_else(|| Error::MalformedRow {
                row,
                message: "cannot parse `date` (expected YYYY-MM-DD)".into(),
            })?;
        let value = float_field(&record, 3, "value")?;
        grouped.entry((plot_id, variable)).or_default().push((day, value));
    }
    Ok(grouped)
}

fn finish_group(plot_id: u64, variable: Variable, mut points: Vec<(Day, f64)>) -> Result<RawSeries> {
    points.sort_by_key(|p| p.0);
    if let Some(pair) = points.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidSeries {
            plot_id,
            message: format!("duplicate {variable} timestamp {}", format_day(pair[0].0)),
        });
    }
    RawSeries::new(plot_id, variable, points)
}

/// Reads the rows of `series.csv` for one variable, grouped per plot and sorted by date.
pub fn parse_series(path: impl AsRef<Path>, variable: Variable) -> Result<Vec<RawSeries>> {
    read_series_rows(path.as_ref())?
        .into_iter()
        .filter(|((_, v), _)| *v == variable)
        .map(|((plot_id, v), points)| finish_group(plot_id, v, points))
        .collect()
}

/// Reads every series in the file, ordered by `(plot_id, variable)`.
pub fn parse_all_series(path: impl AsRef<Path>) -> Result<Vec<RawSeries>> {
    read_series_rows(path.as_ref())?
        .into_iter()
        .map(|((plot_id, v), points)| finish_group(plot_id, v, points))
        .collect()
}

pub fn write_series(path: impl AsRef<Path>, series: &[RawSeries]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&SERIES_HEADER.join(","));
    out.push('\n');
    for s in series {
        for &(day, value) in &s.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.plot_id,
                s.variable,
                format_day(day),
                fmt_f64(value)
            ));
        }
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    let mut file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(file);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
