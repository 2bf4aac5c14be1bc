//! CSV ingestion for day-ahead prices and wind production.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::renewable::{fit_hourly_gaussian, FittedModel};

pub const HOURS: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayPrices {
    pub date: Option<NaiveDate>,
    pub lambda: Vec<f64>,
}

fn data_err(line: u64, msg: impl std::fmt::Display) -> Error {
    Error::Data(format!("line {line}: {msg}"))
}

fn parse_f64(s: &str, line: u64, what: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| data_err(line, format!("{what} '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(data_err(line, format!("{what} is not finite")));
    }
    Ok(v)
}

/// Reads `hour,price_usd_per_mwh` rows, optionally preceded by a `date`
/// column (YYYY-MM-DD) for files holding several days. Every day must list
/// hours 0–23 exactly once.
pub fn read_prices<R: Read>(reader: R) -> Result<Vec<DayPrices>> {
    read_prices_with_slots(reader, HOURS)
}

/// As [`read_prices`] with `slots` slots per day instead of 24.
pub fn read_prices_with_slots<R: Read>(reader: R, slots: usize) -> Result<Vec<DayPrices>> {
    if slots == 0 {
        return Err(Error::Argument("slots per day must be positive".into()));
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.to_string()).collect();
    let dated = match headers.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["hour", "price_usd_per_mwh"] => false,
        ["date", "hour", "price_usd_per_mwh"] => true,
        other => {
            return Err(Error::Data(format!(
                "line 1: expected header 'hour,price_usd_per_mwh' (optionally led by 'date'), got '{}'",
                other.join(",")
            )))
        }
    };
    let mut days: BTreeMap<Option<NaiveDate>, Vec<Option<f64>>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let off = usize::from(dated);
        if rec.len() != 2 + off {
            return Err(data_err(line, format!("expected {} fields, got {}", 2 + off, rec.len())));
        }
        let date = if dated {
            Some(
                NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
                    .map_err(|_| data_err(line, format!("bad date '{}'", &rec[0])))?,
            )
        } else {
            None
        };
        let hour: usize = rec[off]
            .parse()
            .map_err(|_| data_err(line, format!("hour '{}' is not an integer", &rec[off])))?;
        if hour >= slots {
            return Err(data_err(line, format!("hour {hour} outside 0-{}", slots - 1)));
        }
        let price = parse_f64(&rec[off + 1], line, "price")?;
        let slot = &mut days.entry(date).or_insert_with(|| vec![None; slots])[hour];
        if slot.is_some() {
            return Err(data_err(line, format!("hour {hour} repeated")));
        }
        *slot = Some(price);
    }
    if days.is_empty() {
        return Err(Error::Data("price file has no rows".into()));
    }
    days.into_iter()
        .map(|(date, hours)| {
            let missing: Vec<String> = (0..slots)
                .filter(|&h| hours[h].is_none())
                .map(|h| h.to_string())
                .collect();
            if !missing.is_empty() {
                let day = date.map_or_else(String::new, |d| format!("{d}: "));
                return Err(Error::Data(format!("{day}missing hour {}", missing.join(", "))));
            }
            Ok(DayPrices {
                date,
                lambda: hours.iter().map(|v| v.unwrap()).collect(),
            })
        })
        .collect()
}

pub fn read_prices_file(path: &Path, slots: usize) -> Result<Vec<DayPrices>> {
    read_prices_with_slots(open(path)?, slots)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindData {
    pub records: Vec<(NaiveDateTime, f64)>,
    /// (line, reason) for rows dropped with a warning.
    pub rejected: Vec<(u64, String)>,
}

impl WindData {
    pub fn warnings(&self) -> usize {
        self.rejected.len()
    }
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.naive_utc());
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

/// Reads `timestamp,power_mw` rows. Negative readings are dropped and
/// reported as warnings; anything unparseable is an error.
pub fn read_wind<R: Read>(reader: R) -> Result<WindData> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.to_string()).collect();
    if headers != ["timestamp", "power_mw"] {
        return Err(Error::Data(format!(
            "line 1: expected header 'timestamp,power_mw', got '{}'",
            headers.join(",")
        )));
    }
    let mut out = WindData {
        records: Vec::new(),
        rejected: Vec::new(),
    };
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(data_err(line, format!("expected 2 fields, got {}", rec.len())));
        }
        let ts = parse_timestamp(&rec[0])
            .ok_or_else(|| data_err(line, format!("bad timestamp '{}'", &rec[0])))?;
        let p = parse_f64(&rec[1], line, "power")?;
        if p < 0.0 {
            out.rejected.push((line, format!("negative power {p}")));
            continue;
        }
        out.records.push((ts, p));
    }
    Ok(out)
}

pub fn read_wind_file(path: &Path) -> Result<WindData> {
    read_wind(open(path)?)
}

/// Observations grouped by calendar month (1–12) and hour of day.
pub fn group_by_month_hour(data: &WindData) -> BTreeMap<u32, Vec<Vec<f64>>> {
    let mut out: BTreeMap<u32, Vec<Vec<f64>>> = BTreeMap::new();
    for (ts, p) in &data.records {
        out.entry(ts.month()).or_insert_with(|| vec![Vec::new(); HOURS])[ts.hour() as usize]
            .push(*p);
    }
    out
}

/// Fits one hourly Gaussian model per month present in the data.
pub fn fit_monthly(data: &WindData, capacity: Option<f64>) -> Result<BTreeMap<u32, FittedModel>> {
    let groups = group_by_month_hour(data);
    if groups.is_empty() {
        return Err(Error::Data("wind file has no usable rows".into()));
    }
    let cap = capacity.or_else(|| {
        data.records
            .iter()
            .map(|r| r.1)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    });
    groups
        .into_iter()
        .map(|(month, slots)| {
            let fitted = fit_hourly_gaussian(&slots, cap)
                .map_err(|e| Error::Data(format!("month {month}: {e}")))?;
            Ok((month, fitted))
        })
        .collect()
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))
}
