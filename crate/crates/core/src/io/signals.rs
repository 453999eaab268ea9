//! Time series as CSV: header line, one row per frame, `.` decimal point, LF endings.
//!
//! Values are written with the shortest representation that parses back to
//! the same `f64`, so a save/load cycle is bit-exact.

use std::path::Path;

use crate::error::{Error, Result};
use crate::pulse::PulseSignal;

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err(path))
}

/// Header `frame,value`.
pub fn save_signal_csv(signal: &PulseSignal, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(["frame", "value"]).map_err(&err)?;
    for (t, v) in signal.values().iter().enumerate() {
        w.write_record([t.to_string(), v.to_string()])
            .map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One column per named signal, header `frame,<name>...`. All signals must share a length.
pub fn save_signals_csv(
    names: &[String],
    signals: &[PulseSignal],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    if names.len() != signals.len() {
        return Err(Error::InvalidParameter(format!(
            "{} column names for {} signals",
            names.len(),
            signals.len()
        )));
    }
    let frames = signals.first().map_or(0, |s| s.len());
    if let Some(bad) = signals.iter().find(|s| s.len() != frames) {
        return Err(Error::LengthMismatch {
            expected: frames,
            found: bad.len(),
        });
    }
    let mut w = writer(path)?;
    let err = csv_err(path);
    let mut header = vec!["frame".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(&err)?;
    for t in 0..frames {
        let mut row = vec![t.to_string()];
        row.extend(signals.iter().map(|s| s.values()[t].to_string()));
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a `frame,value` file. Frame indices must run 0, 1, 2, ...
pub fn load_signal_csv(path: impl AsRef<Path>) -> Result<PulseSignal> {
    let path = path.as_ref();
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(csv_err(path))?;
    let headers = r.headers().map_err(csv_err(path))?.clone();
    if headers.len() != 2 || &headers[0] != "frame" || &headers[1] != "value" {
        return Err(Error::Format(format!(
            "{}: expected header `frame,value`",
            path.display()
        )));
    }
    let mut values = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        let bad = || Error::Format(format!("{}: bad row {}", path.display(), i + 2));
        let frame: usize = record[0].parse().map_err(|_| bad())?;
        if frame != i {
            return Err(bad());
        }
        let value: f64 = record[1].parse().map_err(|_| bad())?;
        values.push(value);
    }
    Ok(PulseSignal::raw(values))
}
