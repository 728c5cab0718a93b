//! CSV input and output.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{BsarmaError, Result};
use crate::model::SeriesData;

fn io_err(e: impl std::fmt::Display) -> BsarmaError {
    BsarmaError::Input(e.to_string())
}

/// Reads a series from a CSV file with header `y` or `date,y`.
pub fn read_series(path: impl AsRef<Path>) -> Result<SeriesData> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| io_err(format!("{}: {e}", path.display())))?;
    parse_series(file)
}

/// Row numbers in errors count data rows from 1, not including the header.
pub fn parse_series<R: Read>(reader: R) -> Result<SeriesData> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(io_err)?.clone();
    let names: Vec<&str> = headers.iter().collect();
    let (date_col, y_col) = match names.as_slice() {
        ["y"] => (None, 0),
        ["date", "y"] => (Some(0), 1),
        _ => {
            return Err(BsarmaError::Input(format!(
                "expected header `y` or `date,y`, found `{}`",
                names.join(",")
            )))
        }
    };
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| io_err(format!("row {row}: {e}")))?;
        let field = record.get(y_col).unwrap_or("");
        let value: f64 = field
            .parse()
            .map_err(|_| BsarmaError::Input(format!("row {row}: cannot parse {field:?} as a number")))?;
        if !(value > 0.0 && value < 1.0) {
            return Err(BsarmaError::BoundaryValue { row, value });
        }
        values.push(value);
        if let Some(c) = date_col {
            labels.push(record.get(c).unwrap_or("").to_string());
        }
    }
    if values.is_empty() {
        return Err(BsarmaError::Input("series file has no observations".into()));
    }
    if date_col.is_some() {
        SeriesData::with_labels(values, labels)
    } else {
        SeriesData::new(values)
    }
}

/// Writes a series with the same header convention [`read_series`] accepts.
pub fn write_series<W: Write>(writer: W, series: &SeriesData) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    match series.labels() {
        Some(labels) => {
            w.write_record(["date", "y"]).map_err(io_err)?;
            for (l, v) in labels.iter().zip(series.values()) {
                w.write_record([l.as_str(), &format_full(*v)]).map_err(io_err)?;
            }
        }
        None => {
            w.write_record(["y"]).map_err(io_err)?;
            for v in series.values() {
                w.write_record([format_full(*v)]).map_err(io_err)?;
            }
        }
    }
    w.flush().map_err(io_err)
}

/// Writes a table of named columns.
pub fn write_table<W: Write>(writer: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(r).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Shortest representation that parses back to the same value.
pub fn format_full(v: f64) -> String {
    format!("{v:?}")
}
