//! CSV trace ingestion.
//!
//! Every file has a header row and two columns, `timestamp,value`. A
//! timestamp is either an integer slot index or an ISO-8601 date-time;
//! consecutive rows must be exactly one slot apart and all files must share
//! the same timestamps.

use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime, Timelike};
use num_traits::Zero;
use peakdispatch::rational::{ceil_to_u64, parse_decimal, positive_part};
use peakdispatch::{DemandTrace, PriceModel, Rational};

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timestamp {
    Slot(i64),
    Time(NaiveDateTime),
}

impl Timestamp {
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Ok(i) = text.parse::<i64>() {
            return Some(Timestamp::Slot(i));
        }
        if let Ok(t) = DateTime::parse_from_rfc3339(text) {
            return Some(Timestamp::Time(t.naive_local()));
        }
        ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"]
            .iter()
            .find_map(|f| NaiveDateTime::parse_from_str(text, f).ok())
            .map(Timestamp::Time)
    }

    /// Minutes after midnight at which the slot starts.
    pub fn minute_of_day(&self, slot_minutes: u32) -> u32 {
        match *self {
            Timestamp::Slot(i) => (i.rem_euclid(1440 / slot_minutes as i64) as u32) * slot_minutes,
            Timestamp::Time(t) => t.hour() * 60 + t.minute(),
        }
    }

    fn follows(&self, prev: &Timestamp, slot_minutes: u32) -> bool {
        match (prev, self) {
            (Timestamp::Slot(a), Timestamp::Slot(b)) => *b == a + 1,
            (Timestamp::Time(a), Timestamp::Time(b)) => {
                (*b - *a).num_seconds() == slot_minutes as i64 * 60
            }
            _ => false,
        }
    }
}

/// One parsed CSV column.
#[derive(Debug, Clone)]
pub struct Series {
    pub path: PathBuf,
    pub timestamps: Vec<Timestamp>,
    pub raw_timestamps: Vec<String>,
    pub values: Vec<Rational>,
}

pub fn read_series(path: &Path) -> Result<Series> {
    let file = std::fs::File::open(path).map_err(|e| BenchError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let parse_err = |line: usize, message: String| BenchError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if headers.len() != 2 {
        return Err(parse_err(1, format!("expected 2 columns, found {}", headers.len())));
    }
    let mut series = Series {
        path: path.to_path_buf(),
        timestamps: Vec::new(),
        raw_timestamps: Vec::new(),
        values: Vec::new(),
    };
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let ts = Timestamp::parse(&record[0])
            .ok_or_else(|| parse_err(line, format!("bad timestamp {:?}", &record[0])))?;
        let value = parse_decimal(&record[1])
            .map_err(|e| parse_err(line, format!("bad value {:?}: {e}", &record[1])))?;
        if value < Rational::zero() {
            return Err(parse_err(line, format!("negative value {}", &record[1])));
        }
        series.timestamps.push(ts);
        series.raw_timestamps.push(record[0].to_string());
        series.values.push(value);
    }
    if series.values.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    Ok(series)
}

fn check_spacing(series: &Series, slot_minutes: u32) -> Result<()> {
    for i in 1..series.timestamps.len() {
        if !series.timestamps[i].follows(&series.timestamps[i - 1], slot_minutes) {
            return Err(BenchError::Alignment {
                timestamp: series.raw_timestamps[i].clone(),
                message: format!(
                    "{}: expected one slot ({slot_minutes} min) after {}",
                    series.path.display(),
                    series.raw_timestamps[i - 1]
                ),
            });
        }
    }
    Ok(())
}

fn check_aligned(reference: &Series, other: &Series) -> Result<()> {
    let n = reference.timestamps.len().max(other.timestamps.len());
    for i in 0..n {
        let (a, b) = (reference.timestamps.get(i), other.timestamps.get(i));
        if a != b {
            let timestamp = reference
                .raw_timestamps
                .get(i)
                .or(other.raw_timestamps.get(i))
                .cloned()
                .unwrap_or_default();
            let message = match (a, b) {
                (Some(_), None) => format!("missing in {}", other.path.display()),
                (None, Some(_)) => format!("missing in {}", reference.path.display()),
                _ => format!(
                    "{} has {:?}",
                    other.path.display(),
                    other.raw_timestamps[i]
                ),
            };
            return Err(BenchError::Alignment { timestamp, message });
        }
    }
    Ok(())
}

/// `ceil(max(kwh, 0) / quantum)`.
pub fn quantize(kwh: Rational, quantum: Rational) -> Result<u64> {
    Ok(ceil_to_u64(&(positive_part(kwh) / quantum))?)
}

/// Price model from a per-slot spot series in $/kWh.
pub fn build_prices(spot_kwh: &[Rational], config: &ExperimentConfig) -> Result<PriceModel> {
    let spot: Vec<Rational> = spot_kwh.iter().map(|p| config.per_unit(*p)).collect();
    let floor = match config.prices.floor {
        Some(f) => config.per_unit(f.0),
        None => spot.iter().min().copied().unwrap_or_else(Rational::zero),
    };
    let local = config.per_unit(config.prices.local.0);
    PriceModel::new(
        spot,
        local,
        config.peak_per_unit()?,
        floor,
        config.slot_hours(),
    )
    .map_err(|e| BenchError::Config(format!("price model: {e}")))
}

/// Spot series from the configured tariff for slots starting at the given
/// timestamps.
pub fn tariff_series(timestamps: &[Timestamp], config: &ExperimentConfig) -> Result<Vec<Rational>> {
    timestamps
        .iter()
        .map(|t| config.prices.spot_at_minute(t.minute_of_day(config.prices.slot_minutes)))
        .collect()
}

/// Net demand `max(demand - renewable, 0)` quantized up to whole units, and
/// the matching price model. Without a price file the configured tariff is
/// used.
pub fn load_traces(
    demand_csv: &Path,
    renewable_csv: Option<&Path>,
    price_csv: Option<&Path>,
    config: &ExperimentConfig,
) -> Result<(DemandTrace, PriceModel)> {
    let slot_minutes = config.prices.slot_minutes;
    let demand = read_series(demand_csv)?;
    check_spacing(&demand, slot_minutes)?;
    let renewable = renewable_csv.map(read_series).transpose()?;
    if let Some(r) = &renewable {
        check_aligned(&demand, r)?;
    }
    let quantum = config.quantum.0;
    let units = demand
        .values
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let w = renewable.as_ref().map_or_else(Rational::zero, |r| r.values[i]);
            quantize(*d - w, quantum)
        })
        .collect::<Result<Vec<_>>>()?;
    let spot = match price_csv {
        Some(p) => {
            let prices = read_series(p)?;
            check_aligned(&demand, &prices)?;
            prices.values
        }
        None => tariff_series(&demand.timestamps, config)?,
    };
    Ok((DemandTrace::new(units)?, build_prices(&spot, config)?))
}

/// Writes a `timestamp,value` file.
pub fn write_series(path: &Path, timestamps: &[String], values: &[Rational]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(["timestamp", "value"]).map_err(|e| csv_io(path, e))?;
    for (t, v) in timestamps.iter().zip(values) {
        w.write_record([t.as_str(), &decimal_string(v)])
            .map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

pub(crate) fn csv_io(path: &Path, e: csv::Error) -> BenchError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => BenchError::io(path, io),
        other => BenchError::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

/// Finite decimal rendering of a rational with a power-of-ten denominator
/// (up to 1e-6); other values fall back to 6 decimals.
fn decimal_string(v: &Rational) -> String {
    let scaled = *v * Rational::from_integer(1_000_000);
    if scaled.is_integer() {
        let n = scaled.to_integer();
        let sign = if n < 0 { "-" } else { "" };
        let n = n.abs();
        let frac = format!("{:06}", n % 1_000_000);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            format!("{sign}{}", n / 1_000_000)
        } else {
            format!("{sign}{}.{frac}", n / 1_000_000)
        }
    } else {
        format!("{:.6}", peakdispatch::rational::to_f64(v))
    }
}
