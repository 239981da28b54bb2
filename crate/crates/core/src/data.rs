//! Time-series containers, CSV ingestion, VAR design matrices and the
//! companion form.
//!
//! Regressor rows are laid out as `[y_{t-1}', ..., y_{t-p}', 1]`: lag-1 block
//! first, constant last. Every other module relies on this layout.

use std::collections::HashSet;
use std::fmt;
use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A calendar period: year plus zero-based sub-period (quarter, month, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Period {
    pub year: i32,
    pub sub: u32,
}

impl Period {
    pub fn new(year: i32, sub: u32) -> Self {
        Period { year, sub }
    }

    /// Parse `1955Q3`, `1955M07`, `1955` or a fractional year such as `2008.5`
    /// (converted with the frequency, so `2008.5` is 2008Q3 for quarterly data).
    pub fn parse(label: &str, frequency: u32) -> Result<Period> {
        let bad = || Error::InvalidPeriod(label.to_string());
        let s = label.trim();
        if frequency == 0 {
            return Err(bad());
        }
        let split = |sep: char| -> Option<(i32, u32)> {
            let (y, rest) = s.split_once(sep)?;
            Some((y.parse().ok()?, rest.parse().ok()?))
        };
        let period = if let Some((year, q)) = split('Q').or_else(|| split('q')) {
            if frequency != 4 || q == 0 || q > 4 {
                return Err(bad());
            }
            Period::new(year, q - 1)
        } else if let Some((year, m)) = split('M').or_else(|| split('m')) {
            if frequency != 12 || m == 0 || m > 12 {
                return Err(bad());
            }
            Period::new(year, m - 1)
        } else if let Ok(year) = s.parse::<i32>() {
            Period::new(year, 0)
        } else {
            let value: f64 = s.parse().map_err(|_| bad())?;
            if !value.is_finite() {
                return Err(bad());
            }
            let year = value.floor();
            let sub = (value - year) * frequency as f64;
            if (sub - sub.round()).abs() > 1e-6 {
                return Err(bad());
            }
            Period::new(year as i32, sub.round() as u32)
        };
        if period.sub >= frequency {
            return Err(bad());
        }
        Ok(period)
    }

    /// Shift by `offset` sub-periods.
    pub fn offset(self, offset: i64, frequency: u32) -> Period {
        let f = frequency as i64;
        let total = self.year as i64 * f + self.sub as i64 + offset;
        Period::new(total.div_euclid(f) as i32, total.rem_euclid(f) as u32)
    }

    pub fn label(self, frequency: u32) -> String {
        match frequency {
            1 => format!("{}", self.year),
            4 => format!("{}Q{}", self.year, self.sub + 1),
            12 => format!("{}M{:02}", self.year, self.sub + 1),
            _ => format!("{}:{}", self.year, self.sub + 1),
        }
    }
}

/// `T x N` observations with names and a regular calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: DMatrix<f64>,
    names: Vec<String>,
    start: Period,
    frequency: u32,
}

impl TimeSeries {
    pub fn new(values: DMatrix<f64>, names: Vec<String>, start: Period, frequency: u32) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidSeries("need at least one row and one column".into()));
        }
        if names.len() != values.ncols() {
            return Err(Error::InvalidSeries(format!("{} names for {} columns", names.len(), values.ncols())));
        }
        let unique: HashSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::InvalidSeries("variable names must be unique".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value at row {}, column {}",
                pos % values.nrows() + 1,
                pos / values.nrows() + 1
            )));
        }
        if frequency == 0 || start.sub >= frequency {
            return Err(Error::InvalidSeries(format!("bad calendar: frequency {frequency}")));
        }
        Ok(TimeSeries { values, names, start, frequency })
    }

    /// Series with default names `y1..yN` and an annual calendar starting in year 1.
    pub fn from_values(values: DMatrix<f64>) -> Result<Self> {
        let names = (1..=values.ncols()).map(|i| format!("y{i}")).collect();
        TimeSeries::new(values, names, Period::new(1, 0), 1)
    }

    pub fn with_calendar(mut self, start: Period, frequency: u32) -> Result<Self> {
        if frequency == 0 || start.sub >= frequency {
            return Err(Error::InvalidSeries(format!("bad calendar: frequency {frequency}")));
        }
        self.start = start;
        self.frequency = frequency;
        Ok(self)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn start(&self) -> Period {
        self.start
    }

    pub fn frequency(&self) -> u32 {
        self.frequency
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn variables(&self) -> usize {
        self.values.ncols()
    }

    pub fn period(&self, row: usize) -> Period {
        self.start.offset(row as i64, self.frequency)
    }

    pub fn end(&self) -> Period {
        self.period(self.len() - 1)
    }

    /// 1-based row of the period named by `label`.
    pub fn period_index(&self, label: &str) -> Result<usize> {
        let period = Period::parse(label, self.frequency)?;
        let f = self.frequency as i64;
        let offset = (period.year as i64 - self.start.year as i64) * f + period.sub as i64 - self.start.sub as i64;
        if offset < 0 || offset >= self.len() as i64 {
            return Err(Error::PeriodOutOfRange {
                label: label.to_string(),
                first: self.start.label(self.frequency),
                last: self.end().label(self.frequency),
            });
        }
        Ok(offset as usize + 1)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.names)?;
        for row in self.values.row_iter() {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Header handling for CSV input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Header {
    /// Header present if no cell of the first row parses as a number.
    #[default]
    Auto,
    Present,
    Absent,
}

pub fn load_csv(path: impl AsRef<Path>, header: Header) -> Result<TimeSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    read_csv(file, header)
}

pub fn read_csv<R: Read>(reader: R, header: Header) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);

    let mut names: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;

    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = i + 1;
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        if i == 0 {
            let is_header = match header {
                Header::Present => true,
                Header::Absent => false,
                Header::Auto => record.iter().all(|c| c.parse::<f64>().is_err()),
            };
            if is_header {
                names = Some(record.iter().map(str::to_string).collect());
                width = Some(record.len());
                continue;
            }
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow { row: line, expected, found: record.len() });
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, cell)| match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::NonNumericCell { row: line, column: j + 1, cell: cell.to_string() }),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }

    let n = width.unwrap_or(0);
    if rows.is_empty() || n == 0 {
        return Err(Error::InvalidSeries("no data rows".into()));
    }
    let values = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    match names {
        Some(names) => TimeSeries::new(values, names, Period::new(1, 0), 1),
        None => TimeSeries::from_values(values),
    }
}

/// Dependent and lagged regressor matrices of a VAR(p) with constant.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices {
    pub y: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub lags: usize,
}

impl DesignMatrices {
    pub fn variables(&self) -> usize {
        self.y.ncols()
    }

    pub fn regressors(&self) -> usize {
        self.x.ncols()
    }

    pub fn observations(&self) -> usize {
        self.y.nrows()
    }

    /// Regressor row for the period following the sample.
    pub fn next_regressors(&self) -> DVector<f64> {
        let n = self.variables();
        let k = self.regressors();
        let last = self.observations() - 1;
        let mut x = DVector::zeros(k);
        for j in 0..n {
            x[j] = self.y[(last, j)];
        }
        for j in n..k - 1 {
            x[j] = self.x[(last, j - n)];
        }
        x[k - 1] = 1.0;
        x
    }
}

pub fn build_design(ts: &TimeSeries, lags: usize) -> Result<DesignMatrices> {
    let t = ts.len();
    if lags == 0 {
        return Err(Error::InvalidSetting("lag order must be at least 1".into()));
    }
    if t <= lags {
        return Err(Error::TooFewObservations { observations: t, lags });
    }
    let n = ts.variables();
    let k = n * lags + 1;
    let t_eff = t - lags;
    let v = ts.values();
    let y = DMatrix::from_fn(t_eff, n, |r, j| v[(r + lags, j)]);
    let x = DMatrix::from_fn(t_eff, k, |r, c| {
        if c == k - 1 {
            1.0
        } else {
            let lag = c / n + 1;
            v[(r + lags - lag, c % n)]
        }
    });
    Ok(DesignMatrices { y, x, lags })
}

/// Companion matrix `(Np x Np)` and constant vector of a `K x N` coefficient
/// matrix with `K = N p + 1`.
pub fn companion(a: &DMatrix<f64>, lags: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = a.ncols();
    if lags == 0 || a.nrows() != n * lags + 1 {
        return Err(Error::Shape(format!(
            "coefficient matrix is {}x{}, expected {}x{}",
            a.nrows(),
            a.ncols(),
            n * lags + 1,
            n
        )));
    }
    let np = n * lags;
    let mut c = DMatrix::zeros(np, np);
    for l in 0..lags {
        let block = a.rows(l * n, n).transpose();
        c.view_mut((0, l * n), (n, n)).copy_from(&block);
    }
    for i in n..np {
        c[(i, i - n)] = 1.0;
    }
    let constant = a.row(np).transpose();
    Ok((c, constant))
}

impl fmt::Display for TimeSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} x {} series {}..{}",
            self.len(),
            self.variables(),
            self.start.label(self.frequency),
            self.end().label(self.frequency)
        )
    }
}
