//! Domain types: calendar days, univariate series, the five-column daily
//! dataset, exogenous regressor matrices, and CSV ingestion.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A calendar day, stored as days since 1970-01-01.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Day(pub i64);

impl Day {
    const EPOCH: NaiveDate = match NaiveDate::from_ymd_opt(1970, 1, 1) {
        Some(d) => d,
        None => unreachable!(),
    };

    pub fn from_ymd(y: i32, m: u32, d: u32) -> Option<Day> {
        NaiveDate::from_ymd_opt(y, m, d).map(Day::from)
    }

    pub fn date(self) -> NaiveDate {
        Self::EPOCH + chrono::Duration::days(self.0)
    }

    pub fn offset(self, days: i64) -> Day {
        Day(self.0 + days)
    }

    /// 0 = Monday .. 6 = Sunday.
    pub fn weekday(self) -> usize {
        self.date().weekday().num_days_from_monday() as usize
    }

    pub fn month(self) -> u32 {
        self.date().month()
    }

    /// 1-based day of year.
    pub fn ordinal(self) -> u32 {
        self.date().ordinal()
    }
}

impl From<NaiveDate> for Day {
    fn from(d: NaiveDate) -> Self {
        Day((d - Day::EPOCH).num_days())
    }
}

impl fmt::Display for Day {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.date().format("%Y-%m-%d"))
    }
}

impl FromStr for Day {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
            .map(Day::from)
            .map_err(|_| Error::MalformedCsv(format!("bad date {s:?}")))
    }
}

impl From<Day> for String {
    fn from(d: Day) -> String {
        d.to_string()
    }
}

impl TryFrom<String> for Day {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// A univariate daily series with explicit missing slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    name: String,
    unit: String,
    start: Day,
    values: Vec<Option<f64>>,
}

impl Series {
    pub fn new(name: impl Into<String>, unit: impl Into<String>, start: Day, values: Vec<Option<f64>>) -> Result<Self> {
        let unit = unit.into();
        if values.is_empty() {
            return Err(Error::InvalidSeries("series must have at least one value".into()));
        }
        if unit.is_empty() {
            return Err(Error::InvalidSeries("unit must be non-empty".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries("non-finite value".into()));
        }
        Ok(Series {
            name: name.into(),
            unit,
            start,
            values,
        })
    }

    /// Builds a MISSING-free series.
    pub fn from_values(name: impl Into<String>, unit: impl Into<String>, start: Day, values: &[f64]) -> Result<Self> {
        Series::new(name, unit, start, values.iter().map(|&v| Some(v)).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn start(&self) -> Day {
        self.start
    }

    /// Last date in the index.
    pub fn end(&self) -> Day {
        self.start.offset(self.values.len() as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn date_at(&self, i: usize) -> Day {
        self.start.offset(i as i64)
    }

    pub fn index_of(&self, day: Day) -> Option<usize> {
        let i = day.0 - self.start.0;
        (0..self.values.len() as i64).contains(&i).then_some(i as usize)
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn has_missing(&self) -> bool {
        self.values.iter().any(Option::is_none)
    }

    /// The values as plain floats; fails if any slot is missing.
    pub fn dense(&self) -> Result<Vec<f64>> {
        self.values.iter().map(|v| v.ok_or(Error::ContainsMissing)).collect()
    }

    /// Same name, unit and index, new values.
    pub fn with_values(&self, values: &[f64]) -> Result<Series> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch(self.len(), values.len()));
        }
        Series::from_values(self.name.clone(), self.unit.clone(), self.start, values)
    }

    /// Sub-series over `range` (index positions).
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Series> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::InvalidSeries(format!(
                "slice {range:?} outside 0..{}",
                self.len()
            )));
        }
        Series::new(
            self.name.clone(),
            self.unit.clone(),
            self.date_at(range.start),
            self.values[range].to_vec(),
        )
    }
}

/// The columns of the daily dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Column {
    Load,
    Generation,
    Deficit,
    Temperature,
    Humidity,
}

impl Column {
    pub const ALL: [Column; 5] = [
        Column::Load,
        Column::Generation,
        Column::Deficit,
        Column::Temperature,
        Column::Humidity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::Load => "load",
            Column::Generation => "generation",
            Column::Deficit => "deficit",
            Column::Temperature => "temperature",
            Column::Humidity => "humidity",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Column::Load | Column::Generation | Column::Deficit => "MWh",
            Column::Temperature => "degC",
            Column::Humidity => "%",
        }
    }
}

impl FromStr for Column {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Column::ALL
            .into_iter()
            .find(|c| c.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown column {s:?}")))
    }
}

/// Forecast targets; the three MWh columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Load,
    Generation,
    Deficit,
}

impl Target {
    pub fn column(self) -> Column {
        match self {
            Target::Load => Column::Load,
            Target::Generation => Column::Generation,
            Target::Deficit => Column::Deficit,
        }
    }
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "load" => Ok(Target::Load),
            "generation" => Ok(Target::Generation),
            "deficit" => Ok(Target::Deficit),
            _ => Err(Error::UnknownTarget(s.to_string())),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column().name())
    }
}

/// Aligned daily columns sharing one uniform index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    start: Day,
    columns: [Vec<Option<f64>>; 5],
}

impl Dataset {
    /// `columns` are in [`Column::ALL`] order and must share one length.
    pub fn new(start: Day, columns: [Vec<Option<f64>>; 5]) -> Result<Self> {
        let len = columns[0].len();
        if len == 0 {
            return Err(Error::MalformedCsv("no data rows".into()));
        }
        if columns.iter().any(|c| c.len() != len) {
            return Err(Error::MalformedCsv("columns differ in length".into()));
        }
        for (col, values) in Column::ALL.iter().zip(&columns) {
            for v in values.iter().flatten() {
                if !v.is_finite() {
                    return Err(Error::InvalidValue {
                        column: col.name().into(),
                        value: *v,
                        reason: "not finite",
                    });
                }
                let bad = match col {
                    Column::Deficit => (*v < 0.0).then_some("deficit must be >= 0"),
                    Column::Humidity => (!(0.0..=100.0).contains(v)).then_some("humidity must be in [0, 100]"),
                    _ => None,
                };
                if let Some(reason) = bad {
                    return Err(Error::InvalidValue {
                        column: col.name().into(),
                        value: *v,
                        reason,
                    });
                }
            }
        }
        Ok(Dataset { start, columns })
    }

    pub fn start(&self) -> Day {
        self.start
    }

    pub fn end(&self) -> Day {
        self.start.offset(self.len() as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, c: Column) -> &[Option<f64>] {
        &self.columns[c as usize]
    }

    pub fn series(&self, c: Column) -> Series {
        Series {
            name: c.name().into(),
            unit: c.unit().into(),
            start: self.start,
            values: self.columns[c as usize].clone(),
        }
    }

    /// Rows `range` as a new dataset.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Dataset> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::InvalidSeries(format!(
                "slice {range:?} outside 0..{}",
                self.len()
            )));
        }
        let columns = self.columns.clone().map(|c| c[range.clone()].to_vec());
        Dataset::new(self.start.offset(range.start as i64), columns)
    }

    /// Serializes to the `date,load,generation,deficit,temperature,humidity`
    /// schema. Missing cells are written empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("date,load,generation,deficit,temperature,humidity\n");
        for i in 0..self.len() {
            out.push_str(&self.start.offset(i as i64).to_string());
            for col in &self.columns {
                out.push(',');
                if let Some(v) = col[i] {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Parses the dataset CSV. Columns are matched by header name; absent
/// columns are all-missing and unknown columns (e.g. an hour field) are
/// ignored. Gaps in the date index become all-missing rows.
pub fn parse_dataset(csv_text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::MalformedCsv(e.to_string()))?
        .clone();
    let names: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    let date_idx = names
        .iter()
        .position(|h| h == "date")
        .ok_or_else(|| Error::MalformedCsv("header has no date column".into()))?;
    let col_idx: Vec<Option<usize>> = Column::ALL
        .iter()
        .map(|c| names.iter().position(|h| h == c.name()))
        .collect();

    let mut rows: Vec<(Day, [Option<f64>; 5])> = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let line = n + 2;
        let record = record.map_err(|e| Error::MalformedCsv(e.to_string()))?;
        if record.len() != names.len() {
            return Err(Error::MalformedCsv(format!(
                "line {line}: expected {} fields, found {}",
                names.len(),
                record.len()
            )));
        }
        let day: Day = record[date_idx]
            .parse()
            .map_err(|_| Error::MalformedCsv(format!("line {line}: bad date {:?}", &record[date_idx])))?;
        let mut cells = [None; 5];
        for (k, idx) in col_idx.iter().enumerate() {
            if let Some(i) = *idx {
                cells[k] = parse_cell(&record[i], Column::ALL[k], line)?;
            }
        }
        rows.push((day, cells));
    }
    if rows.is_empty() {
        return Err(Error::MalformedCsv("no data rows".into()));
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateDate(w[0].0.to_string()));
    }

    let start = rows[0].0;
    let len = (rows[rows.len() - 1].0 .0 - start.0 + 1) as usize;
    let mut columns: [Vec<Option<f64>>; 5] = std::array::from_fn(|_| vec![None; len]);
    for (day, cells) in rows {
        let i = (day.0 - start.0) as usize;
        for (k, cell) in cells.into_iter().enumerate() {
            columns[k][i] = cell;
        }
    }
    Dataset::new(start, columns)
}

fn parse_cell(cell: &str, column: Column, line: usize) -> Result<Option<f64>> {
    if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::NonNumericValue {
            column: column.name().into(),
            line,
            value: cell.into(),
        }),
    }
}

/// Projects one target column out of the dataset.
pub fn select_series(ds: &Dataset, target: &str) -> Result<Series> {
    let target: Target = target.parse()?;
    Ok(ds.series(target.column()))
}

/// Exogenous regressors aligned row-for-row with a target series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogMatrix {
    start: Day,
    names: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl ExogMatrix {
    pub fn new(start: Day, names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.iter().any(|r| r.len() != names.len()) {
            return Err(Error::ShapeMismatch(format!(
                "exogenous rows must have {} columns",
                names.len()
            )));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::ContainsMissing);
        }
        Ok(ExogMatrix { start, names, rows })
    }

    /// Pulls `columns` out of the dataset, linearly interpolating gaps.
    pub fn from_dataset(ds: &Dataset, columns: &[Column]) -> Result<Self> {
        let filled: Vec<Vec<f64>> = columns
            .iter()
            .map(|&c| crate::preprocess::interpolate_missing(&ds.series(c)).and_then(|s| s.dense()))
            .collect::<Result<_>>()?;
        let rows = (0..ds.len())
            .map(|i| filled.iter().map(|col| col[i]).collect())
            .collect();
        ExogMatrix::new(ds.start(), columns.iter().map(|c| c.name().to_string()).collect(), rows)
    }

    pub fn start(&self) -> Day {
        self.start
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> ExogMatrix {
        ExogMatrix {
            start: self.start.offset(range.start as i64),
            names: self.names.clone(),
            rows: self.rows[range].to_vec(),
        }
    }

    /// Checks that this matrix covers exactly the index of `s`.
    pub fn check_aligned(&self, s: &Series) -> Result<()> {
        if self.nrows() != s.len() || (self.nrows() > 0 && self.start != s.start()) {
            return Err(Error::ShapeMismatch(format!(
                "exogenous matrix ({} rows from {}) not aligned with series ({} rows from {})",
                self.nrows(),
                self.start,
                s.len(),
                s.start()
            )));
        }
        Ok(())
    }
}

/// Per-calendar-day means of exogenous columns over a training span; the
/// stand-in for unknown future weather.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Climatology {
    names: Vec<String>,
    /// 366 rows indexed by ordinal day - 1.
    by_day: Vec<Vec<f64>>,
}

impl Climatology {
    pub fn fit(exog: &ExogMatrix) -> Result<Self> {
        if exog.nrows() == 0 {
            return Err(Error::EmptyData);
        }
        let k = exog.ncols();
        let mut sums = vec![vec![0.0; k]; 366];
        let mut counts = vec![0usize; 366];
        for (i, row) in exog.rows().iter().enumerate() {
            let d = (exog.start().offset(i as i64).ordinal() - 1) as usize;
            counts[d] += 1;
            for (s, v) in sums[d].iter_mut().zip(row) {
                *s += v;
            }
        }
        // Unobserved days borrow the circularly nearest observed day.
        let observed: Vec<usize> = (0..366).filter(|&d| counts[d] > 0).collect();
        let by_day = (0..366)
            .map(|d| {
                let src = *observed
                    .iter()
                    .min_by_key(|&&o| {
                        let diff = o.abs_diff(d);
                        (diff.min(366 - diff), o)
                    })
                    .expect("at least one observed day");
                sums[src].iter().map(|s| s / counts[src] as f64).collect()
            })
            .collect();
        Ok(Climatology {
            names: exog.names().to_vec(),
            by_day,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row_for(&self, day: Day) -> &[f64] {
        &self.by_day[(day.ordinal() - 1) as usize]
    }

    /// `h` rows starting at `start`.
    pub fn rows_from(&self, start: Day, h: usize) -> ExogMatrix {
        let rows = (0..h).map(|i| self.row_for(start.offset(i as i64)).to_vec()).collect();
        ExogMatrix {
            start,
            names: self.names.clone(),
            rows,
        }
    }
}
