//! CSV ingestion and canonical CSV emission for prices and fund-flows.
//!
//! Files are UTF-8, comma separated, with a header row and ISO-8601 dates.
//! Row numbers in errors count the header as row 1. Writers print floats with
//! their shortest round-trip representation, so a file written here parses
//! and re-serializes to the same bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FlowSeries, PriceSeries};

struct Table {
    columns: Vec<usize>,
    rows: Vec<(usize, csv::StringRecord)>,
}

/// Reads `path` and locates `wanted` columns by header name.
fn read_table(path: &Path, wanted: &[&str]) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let parse_err = |row: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        message,
    };
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let columns = wanted
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| parse_err(1, format!("missing column `{name}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| parse_err(row, e.to_string()))?;
        rows.push((row, record));
    }
    Ok(Table { columns, rows })
}

fn field<'r>(
    path: &Path,
    row: usize,
    rec: &'r csv::StringRecord,
    col: usize,
    name: &str,
) -> Result<&'r str> {
    rec.get(col).ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        row,
        message: format!("missing value for `{name}`"),
    })
}

fn parse_date(path: &Path, row: usize, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        row,
        message: format!("bad date `{s}`: {e}"),
    })
}

fn parse_number(path: &Path, row: usize, s: &str, name: &str) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            path: path.to_path_buf(),
            row,
            message: format!("bad number `{s}` in `{name}`"),
        }),
    }
}

fn check_order(path: &Path, row: usize, prev: Option<NaiveDate>, date: NaiveDate) -> Result<()> {
    match prev {
        Some(p) if date <= p => Err(Error::NonMonotoneDates {
            path: path.to_path_buf(),
            row,
            date: date.to_string(),
        }),
        _ => Ok(()),
    }
}

fn empty_check(path: &Path, rows: usize) -> Result<()> {
    if rows == 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row: 1,
            message: "no data rows".into(),
        });
    }
    Ok(())
}

/// Loads a `date,close` file. Non-trading days are simply absent.
pub fn load_prices(path: &Path) -> Result<PriceSeries> {
    let table = read_table(path, &["date", "close"])?;
    empty_check(path, table.rows.len())?;
    let (cd, cc) = (table.columns[0], table.columns[1]);
    let mut dates = Vec::with_capacity(table.rows.len());
    let mut values = Vec::with_capacity(table.rows.len());
    for (row, rec) in &table.rows {
        let date = parse_date(path, *row, field(path, *row, rec, cd, "date")?)?;
        check_order(path, *row, dates.last().copied(), date)?;
        let close = parse_number(path, *row, field(path, *row, rec, cc, "close")?, "close")?;
        if close <= 0.0 {
            return Err(Error::NonPositivePrice {
                path: path.to_path_buf(),
                row: *row,
                value: close,
            });
        }
        dates.push(date);
        values.push(close);
    }
    PriceSeries::new(dates, values)
}

/// Institutional flows as recorded per day.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTable {
    pub dates: Vec<NaiveDate>,
    pub fii_net: Vec<f64>,
    pub dii_net: Vec<f64>,
}

impl FlowTable {
    /// Combined net flow, normalized over the whole file.
    pub fn to_series(&self) -> Result<FlowSeries> {
        let raw = self
            .fii_net
            .iter()
            .zip(&self.dii_net)
            .map(|(f, d)| f + d)
            .collect();
        FlowSeries::from_raw(self.dates.clone(), raw)
    }
}

/// Loads a `date,fii_net,dii_net` file.
pub fn load_flow_table(path: &Path) -> Result<FlowTable> {
    let names = ["date", "fii_net", "dii_net"];
    let table = read_table(path, &names)?;
    empty_check(path, table.rows.len())?;
    let mut out = FlowTable {
        dates: Vec::with_capacity(table.rows.len()),
        fii_net: Vec::with_capacity(table.rows.len()),
        dii_net: Vec::with_capacity(table.rows.len()),
    };
    for (row, rec) in &table.rows {
        let date = parse_date(
            path,
            *row,
            field(path, *row, rec, table.columns[0], names[0])?,
        )?;
        check_order(path, *row, out.dates.last().copied(), date)?;
        let fii = field(path, *row, rec, table.columns[1], names[1])?;
        let dii = field(path, *row, rec, table.columns[2], names[2])?;
        out.dates.push(date);
        out.fii_net.push(parse_number(path, *row, fii, names[1])?);
        out.dii_net.push(parse_number(path, *row, dii, names[2])?);
    }
    Ok(out)
}

/// Loads a flow file and normalizes the combined net flow.
pub fn load_flows(path: &Path) -> Result<FlowSeries> {
    load_flow_table(path)?.to_series()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cadence {
    Monthly,
    Fortnightly,
}

impl Cadence {
    pub fn as_str(self) -> &'static str {
        match self {
            Cadence::Monthly => "monthly",
            Cadence::Fortnightly => "fortnightly",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "monthly" => Some(Cadence::Monthly),
            "fortnightly" => Some(Cadence::Fortnightly),
            _ => None,
        }
    }
}

/// Sectors carried by sector-flow files, in column order.
pub const SECTORS: [&str; 4] = ["bank", "finance", "realty", "it"];

/// Period-end mutual-fund flows per sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorFlows {
    pub cadence: Cadence,
    pub dates: Vec<NaiveDate>,
    /// One column per entry of [`SECTORS`].
    pub values: [Vec<f64>; 4],
}

impl SectorFlows {
    pub fn sector(&self, name: &str) -> Option<&[f64]> {
        SECTORS
            .iter()
            .position(|s| *s == name)
            .map(|i| self.values[i].as_slice())
    }
}

/// Loads a `date,cadence,bank,finance,realty,it` file.
pub fn load_sector_flows(path: &Path) -> Result<SectorFlows> {
    let names = [
        "date", "cadence", SECTORS[0], SECTORS[1], SECTORS[2], SECTORS[3],
    ];
    let table = read_table(path, &names)?;
    empty_check(path, table.rows.len())?;
    let mut cadence = None;
    let mut dates = Vec::with_capacity(table.rows.len());
    let mut values: [Vec<f64>; 4] = Default::default();
    for (row, rec) in &table.rows {
        let date = parse_date(
            path,
            *row,
            field(path, *row, rec, table.columns[0], "date")?,
        )?;
        check_order(path, *row, dates.last().copied(), date)?;
        let tag = field(path, *row, rec, table.columns[1], "cadence")?;
        let c = Cadence::parse(tag).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            row: *row,
            message: format!("unknown cadence `{tag}`"),
        })?;
        match cadence {
            Some(prev) if prev != c => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: *row,
                    message: format!("cadence `{tag}` differs from `{}`", Cadence::as_str(prev)),
                })
            }
            _ => cadence = Some(c),
        }
        for (k, col) in values.iter_mut().enumerate() {
            let s = field(path, *row, rec, table.columns[k + 2], names[k + 2])?;
            col.push(parse_number(path, *row, s, names[k + 2])?);
        }
        dates.push(date);
    }
    Ok(SectorFlows {
        cadence: cadence.expect("at least one row"),
        dates,
        values,
    })
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn prices_csv(series: &PriceSeries) -> String {
    let mut s = String::from("date,close\n");
    for (d, v) in series.dates().iter().zip(series.values()) {
        let _ = writeln!(s, "{d},{v}");
    }
    s
}

pub fn flows_csv(table: &FlowTable) -> String {
    let mut s = String::from("date,fii_net,dii_net\n");
    for ((d, f), i) in table.dates.iter().zip(&table.fii_net).zip(&table.dii_net) {
        let _ = writeln!(s, "{d},{f},{i}");
    }
    s
}

pub fn sector_flows_csv(flows: &SectorFlows) -> String {
    let mut s = String::from("date,cadence,bank,finance,realty,it\n");
    for (i, d) in flows.dates.iter().enumerate() {
        let _ = write!(s, "{d},{}", flows.cadence.as_str());
        for col in &flows.values {
            let _ = write!(s, ",{}", col[i]);
        }
        s.push('\n');
    }
    s
}

pub fn write_prices(path: &Path, series: &PriceSeries) -> Result<()> {
    write_file(path, &prices_csv(series))
}

pub fn write_flows(path: &Path, table: &FlowTable) -> Result<()> {
    write_file(path, &flows_csv(table))
}

pub fn write_sector_flows(path: &Path, flows: &SectorFlows) -> Result<()> {
    write_file(path, &sector_flows_csv(flows))
}
