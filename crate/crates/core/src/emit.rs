//! CSV and versioned JSON output.
//!
//! CSV carries a header row in fixed column order; floats are written in
//! shortest round-trip form. JSON wraps the payload in a document with a
//! schema name and version.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::counting::CountRecord;
use crate::noise::PhaseNoisePsd;
use crate::numerics::log_grid;
use crate::sweep::{SweepResult, SweepRow};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::Scenario(format!(
                "unknown output format `{s}`; expected csv or json"
            ))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

/// Versioned JSON envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub schema: String,
    pub schema_version: u32,
    pub data: T,
}

impl<T> Document<T> {
    pub fn new(schema: &str, data: T) -> Self {
        Self {
            schema: schema.to_string(),
            schema_version: SCHEMA_VERSION,
            data,
        }
    }
}

/// One row of a tabulated spectrum; column names match
/// [`PhaseNoisePsd::load_csv`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdRow {
    pub freq_hz: f64,
    pub amp_rad_per_sqrthz: f64,
}

/// Samples `psd` on a log grid of `points` frequencies.
pub fn psd_table(psd: &PhaseNoisePsd, f_lo: f64, f_hi: f64, points: usize) -> Result<Vec<PsdRow>> {
    log_grid(f_lo, f_hi, points)
        .into_iter()
        .map(|f| {
            Ok(PsdRow {
                freq_hz: f,
                amp_rad_per_sqrthz: psd.amplitude(f)?,
            })
        })
        .collect()
}

fn write_csv_rows<T: Serialize, W: Write>(rows: &[T], headers: &[&str], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(headers)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize, W: Write>(schema: &str, data: &T, mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, &Document::new(schema, data))?;
    writeln!(writer)?;
    Ok(())
}

pub const SWEEP_SCHEMA: &str = "gravmzi.sweep";
pub const PSD_SCHEMA: &str = "gravmzi.psd";
pub const COUNTS_SCHEMA: &str = "gravmzi.counts";

pub const SWEEP_COLUMNS: [&str; 22] = [
    "theta",
    "dphi_g_12",
    "dphi_g_13",
    "dphi_c_linear",
    "dphi_c_oscillating",
    "dphi_c_secular",
    "dphi_c_total",
    "dphi_c_aligned",
    "dphi_c_drift",
    "visibility_12",
    "visibility_13",
    "p_arm2_d1",
    "p_arm2_d2",
    "p_arm2_d3",
    "p_arm3_d1",
    "p_arm3_d2",
    "p_arm3_d3",
    "t_int_d1",
    "t_int_max",
    "noise_rms",
    "noise_margin",
    "noise_margin_pass",
];

pub fn write_sweep<W: Write>(result: &SweepResult, format: Format, writer: W) -> Result<()> {
    match format {
        Format::Csv => write_csv_rows(&result.rows, &SWEEP_COLUMNS, writer),
        Format::Json => write_json(SWEEP_SCHEMA, result, writer),
    }
}

pub fn write_psd<W: Write>(rows: &[PsdRow], format: Format, writer: W) -> Result<()> {
    match format {
        Format::Csv => write_csv_rows(rows, &["freq_hz", "amp_rad_per_sqrthz"], writer),
        Format::Json => write_json(PSD_SCHEMA, &rows, writer),
    }
}

pub fn write_counts<W: Write>(records: &[CountRecord], format: Format, writer: W) -> Result<()> {
    match format {
        Format::Csv => crate::counting::write_counts_csv(records, writer),
        Format::Json => write_json(COUNTS_SCHEMA, &records, writer),
    }
}

/// Generic table: CSV with a header derived from the field names of `T`
/// (omitted when `rows` is empty), or a JSON document under `schema`.
pub fn write_records<T: Serialize, W: Write>(
    schema: &str,
    rows: &[T],
    format: Format,
    writer: W,
) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(writer);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
            Ok(())
        }
        Format::Json => write_json(schema, &rows, writer),
    }
}

/// Writes through `emit` into `path`, or to stdout when `path` is `None`.
pub fn to_path_or_stdout<F>(path: Option<&Path>, emit: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            emit(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            emit(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Reads a JSON document, checking schema name and version.
pub fn read_json<T: DeserializeOwned, R: Read>(schema: &str, reader: R) -> Result<T> {
    let doc: Document<T> = serde_json::from_reader(reader)?;
    if doc.schema != schema || doc.schema_version != SCHEMA_VERSION {
        return Err(Error::Scenario(format!(
            "expected schema {schema} v{SCHEMA_VERSION}, found {} v{}",
            doc.schema, doc.schema_version
        )));
    }
    Ok(doc.data)
}

pub fn read_sweep_json<R: Read>(reader: R) -> Result<SweepResult> {
    read_json(SWEEP_SCHEMA, reader)
}

pub fn read_sweep_csv<R: Read>(reader: R) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    Ok(rdr
        .deserialize()
        .collect::<std::result::Result<Vec<SweepRow>, _>>()?)
}
