//! Reading factor and return tables in the Fama-French CSV layout, and
//! plain matrix CSV files.
//!
//! The loaders skip any description text above the header. The header is
//! the line right before the first row that starts with a `YYYYMMDD` date.
//! Its first field (the date column) may be blank. Data rows run until the
//! first blank line; later sections, such as annual averages, are ignored.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimators::{FactorPanel, ReturnPanel};

pub const FACTOR_COLUMNS: [&str; 3] = ["Mkt-RF", "SMB", "HML"];
pub const RISK_FREE: &str = "RF";

/// Markers the data provider uses for missing observations.
pub const MISSING_MARKERS: [f64; 2] = [-99.99, -999.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    #[default]
    Reject,
    /// Drop every row containing a missing marker and record its date.
    DropRows,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub missing: MissingPolicy,
}

/// Columns of equal length indexed by strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct DatedTable {
    dates: Vec<u32>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    dropped: Vec<u32>,
}

impl DatedTable {
    pub fn new(dates: Vec<u32>, columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(format!("dates not increasing at {} -> {}", w[0], w[1])));
        }
        let mut seen = HashSet::new();
        for (name, col) in &columns {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate column {name:?}")));
            }
            if col.len() != dates.len() {
                return Err(Error::DimensionMismatch(format!(
                    "column {name:?} has {} values for {} dates",
                    col.len(),
                    dates.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("column {name:?} at date {}", dates[i])));
            }
        }
        let (names, columns) = columns.into_iter().unzip();
        Ok(Self {
            dates,
            names,
            columns,
            dropped: Vec::new(),
        })
    }

    pub fn dates(&self) -> &[u32] {
        &self.dates
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }

    pub fn require(&self, name: &str) -> Result<&[f64]> {
        self.column(name).ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Dates removed by [`MissingPolicy::DropRows`].
    pub fn dropped_dates(&self) -> &[u32] {
        &self.dropped
    }
}

fn is_date(field: &str) -> bool {
    let f = field.trim();
    f.len() == 8 && f.bytes().all(|b| b.is_ascii_digit())
}

fn is_missing(v: f64) -> bool {
    MISSING_MARKERS.iter().any(|m| (v - m).abs() < 1e-9)
}

fn read_table(path: &Path, opts: LoadOptions) -> Result<DatedTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<&str> = text.lines().collect();
    let first_row = lines
        .iter()
        .position(|l| is_date(l.split(',').next().unwrap_or("")))
        .ok_or_else(|| Error::parse(path, lines.len(), "empty data section: no dated rows found"))?;
    let header_idx = (0..first_row)
        .rev()
        .find(|&i| !lines[i].trim().is_empty())
        .ok_or_else(|| Error::parse(path, first_row + 1, "no header line before the first data row"))?;

    let header: Vec<String> = lines[header_idx].split(',').map(|s| s.trim().to_string()).collect();
    if header.len() < 2 {
        return Err(Error::parse(path, header_idx + 1, "header has no value columns"));
    }
    let names: Vec<String> = header[1..].to_vec();
    let mut seen = HashSet::new();
    for name in &names {
        if name.is_empty() {
            return Err(Error::parse(path, header_idx + 1, "blank column name"));
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::parse(path, header_idx + 1, format!("duplicate column {name:?}")));
        }
    }

    let mut dates: Vec<u32> = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut dropped = Vec::new();
    let mut previous: Option<u32> = None;
    for (i, line) in lines.iter().enumerate().skip(first_row) {
        let lineno = i + 1;
        if line.trim().is_empty() {
            break;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != header.len() {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {} fields, found {}", header.len(), fields.len()),
            ));
        }
        if !is_date(fields[0]) {
            return Err(Error::parse(path, lineno, format!("bad date {:?}", fields[0])));
        }
        let date: u32 = fields[0].parse().expect("eight digits fit in u32");
        if let Some(prev) = previous {
            if date <= prev {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("date {date} does not follow {prev}"),
                ));
            }
        }
        previous = Some(date);
        let values: Vec<f64> = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(path, lineno, format!("bad number {f:?}")))
            })
            .collect::<Result<_>>()?;
        if let Some(j) = values.iter().position(|v| is_missing(*v)) {
            match opts.missing {
                MissingPolicy::Reject => {
                    return Err(Error::parse(
                        path,
                        lineno,
                        format!("missing-value marker in column {:?}", names[j]),
                    ))
                }
                MissingPolicy::DropRows => {
                    dropped.push(date);
                    continue;
                }
            }
        }
        dates.push(date);
        for (col, v) in columns.iter_mut().zip(values) {
            col.push(v);
        }
    }
    if dates.is_empty() {
        return Err(Error::parse(path, first_row + 1, "no usable data rows"));
    }
    Ok(DatedTable {
        dates,
        names,
        columns,
        dropped,
    })
}

/// Loads a factor file; the columns `Mkt-RF`, `SMB` and `HML` are required.
pub fn load_factor_csv(path: &Path) -> Result<DatedTable> {
    load_factor_csv_with(path, LoadOptions::default())
}

pub fn load_factor_csv_with(path: &Path, opts: LoadOptions) -> Result<DatedTable> {
    let table = read_table(path, opts)?;
    for name in FACTOR_COLUMNS {
        table.require(name)?;
    }
    Ok(table)
}

pub fn load_returns_csv(path: &Path) -> Result<DatedTable> {
    read_table(path, LoadOptions::default())
}

pub fn load_returns_csv_with(path: &Path, opts: LoadOptions) -> Result<DatedTable> {
    read_table(path, opts)
}

#[derive(Debug, Clone)]
pub struct AlignOptions {
    pub factor_names: Vec<String>,
    /// Subtract the factor table's `RF` column from every return.
    pub subtract_rf: bool,
}

impl Default for AlignOptions {
    fn default() -> Self {
        Self {
            factor_names: FACTOR_COLUMNS.iter().map(|s| s.to_string()).collect(),
            subtract_rf: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Aligned {
    pub factors: FactorPanel,
    pub returns: ReturnPanel,
    pub asset_names: Vec<String>,
    pub dates: Vec<u32>,
    pub dropped_factor_dates: usize,
    pub dropped_return_dates: usize,
}

pub fn align_and_excess(factors: &DatedTable, returns: &DatedTable) -> Result<Aligned> {
    align_and_excess_with(factors, returns, &AlignOptions::default())
}

/// Inner join on dates, then `X` from the factor columns and `Y` from the
/// return columns, minus `RF` if requested.
pub fn align_and_excess_with(factors: &DatedTable, returns: &DatedTable, opts: &AlignOptions) -> Result<Aligned> {
    let factor_cols: Vec<&[f64]> = opts
        .factor_names
        .iter()
        .map(|n| factors.require(n))
        .collect::<Result<_>>()?;
    let rf = if opts.subtract_rf { Some(factors.require(RISK_FREE)?) } else { None };

    let ret_index: BTreeMap<u32, usize> = returns.dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let pairs: Vec<(usize, usize)> = factors
        .dates
        .iter()
        .enumerate()
        .filter_map(|(fi, d)| ret_index.get(d).map(|&ri| (fi, ri)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let n = pairs.len();
    let k = factor_cols.len();
    let p = returns.columns.len();
    let x = DMatrix::from_fn(k, n, |i, t| factor_cols[i][pairs[t].0]);
    let y = DMatrix::from_fn(p, n, |i, t| {
        let (fi, ri) = pairs[t];
        returns.columns[i][ri] - rf.map_or(0.0, |r| r[fi])
    });
    let dates: Vec<u32> = pairs.iter().map(|&(fi, _)| factors.dates[fi]).collect();
    Ok(Aligned {
        factors: FactorPanel::with_labels(x, dates.clone())?,
        returns: ReturnPanel::with_labels(y, dates.clone())?,
        asset_names: returns.names.clone(),
        dates,
        dropped_factor_dates: factors.len() - n,
        dropped_return_dates: returns.len() - n,
    })
}

/// Writes `# rows=R cols=C` followed by one comma-separated line per row.
/// Values use the shortest text that parses back to the same `f64`.
pub fn write_matrix_csv(m: &DMatrix<f64>, path: &Path) -> Result<()> {
    let mut s = format!("# rows={} cols={}\n", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let line = row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "{line}");
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn parse_dims(path: &Path, line: &str) -> Result<Option<(usize, usize)>> {
    let Some(rest) = line.trim().strip_prefix('#') else {
        return Ok(None);
    };
    let mut rows = None;
    let mut cols = None;
    for tok in rest.split_whitespace() {
        let parse = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| Error::parse(path, 1, format!("bad dimension {v:?}")))
        };
        if let Some(v) = tok.strip_prefix("rows=") {
            rows = Some(parse(v)?);
        } else if let Some(v) = tok.strip_prefix("cols=") {
            cols = Some(parse(v)?);
        }
    }
    Ok(rows.zip(cols))
}

/// Reads a matrix written by [`write_matrix_csv`]. The dimension comment is
/// optional; when present it is checked against the data.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut dims = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if line.trim_start().starts_with('#') {
            if dims.is_none() {
                dims = parse_dims(path, line)?;
            }
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| {
                let f = f.trim();
                f.parse::<f64>()
                    .map_err(|_| Error::parse(path, lineno, format!("bad number {f:?}")))
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("ragged row: {} values, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    let found = (rows.len(), rows.first().map_or(0, Vec::len));
    let (r, c) = match dims {
        Some((r, c)) if r == 0 || c == 0 => {
            if !rows.is_empty() {
                return Err(Error::parse(path, 1, format!("header says {r}x{c} but data rows follow")));
            }
            (r, c)
        }
        Some(d) if d != found => {
            return Err(Error::parse(
                path,
                1,
                format!("header says {}x{}, data is {}x{}", d.0, d.1, found.0, found.1),
            ))
        }
        _ => found,
    };
    Ok(DMatrix::from_row_iterator(r, c, rows.into_iter().flatten()))
}
