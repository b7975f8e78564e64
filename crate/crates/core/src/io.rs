//! CSV data input and JSON report output.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{DataSet, Tolerances};

pub const SCHEMA_VERSION: u64 = 1;

/// Reads one point per row. A first row with any non-numeric field is
/// treated as a header and skipped. Row numbers in errors are 1-based file
/// lines.
pub fn read_dataset(path: &Path, tol: Tolerances) -> Result<DataSet> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    parse_dataset(&text, tol)
}

pub fn parse_dataset(text: &str, tol: Tolerances) -> Result<DataSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map_or(idx + 1, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if idx == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    row: line,
                    reason: format!("non-numeric field: {e}"),
                })
            }
        };
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: line,
                reason: "non-finite value".into(),
            });
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    row: line,
                    reason: format!("expected {w} fields, found {}", row.len()),
                })
            }
            Some(_) => {}
        }
        points.push(row);
    }
    if points.is_empty() {
        return Err(Error::Parse {
            row: 0,
            reason: "no data rows".into(),
        });
    }
    DataSet::with_tolerances(points, tol)
}

/// Emits floats with 17 significant digits, enough to round-trip.
struct RoundTripFormatter;

impl Formatter for RoundTripFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

/// `{"schema_version": 1, "command": ..., "report": ...}` with object keys
/// sorted, followed by a newline.
pub fn render_report<T: Serialize>(command: &str, report: &T) -> Result<String> {
    let mut doc = serde_json::Map::new();
    doc.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    doc.insert("command".into(), Value::from(command));
    doc.insert("report".into(), serde_json::to_value(report)?);
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, RoundTripFormatter);
    Value::Object(doc).serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

/// Writes the rendered report to `path`, or standard output when `None`.
pub fn write_report<T: Serialize>(command: &str, report: &T, path: Option<&Path>) -> Result<()> {
    let text = render_report(command, report)?;
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
