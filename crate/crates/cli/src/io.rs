//! CSV and JSON files. Floats are written in Rust's shortest round-trip form.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, Result};

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

/// Writes `time,<names...>` and one row per sample.
pub fn write_columns(path: &Path, header: &[String], times: &[f64], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut head = vec!["time".to_string()];
    head.extend(header.iter().cloned());
    w.write_record(&head).map_err(|e| csv_err(path, e))?;
    for (t, row) in times.iter().zip(rows) {
        let mut rec = vec![fmt(*t)];
        rec.extend(row.iter().map(|v| fmt(*v)));
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Columns of a file written by [`write_columns`].
#[derive(Clone, Debug, PartialEq)]
pub struct Columns {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_columns(path: &Path) -> Result<Columns> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.get(0) != Some("time") {
        return Err(CliError::Schema(format!("{}: first column must be `time`", path.display())));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let mut vals = Vec::with_capacity(rec.len());
        for field in rec.iter() {
            vals.push(field.trim().parse::<f64>().map_err(|_| {
                CliError::Schema(format!("{}: row {}: `{field}` is not a number", path.display(), line + 2))
            })?);
        }
        if vals.len() != names.len() + 1 {
            return Err(CliError::Schema(format!("{}: row {} has {} fields", path.display(), line + 2, vals.len())));
        }
        times.push(vals[0]);
        rows.push(vals[1..].to_vec());
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::Schema(format!("{}: times are not strictly increasing", path.display())));
    }
    Ok(Columns { names, times, rows })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            _ => unreachable!(),
        }
    } else {
        CliError::Schema(format!("{}: {e}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(vals in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 1..40)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("t.csv");
            let times: Vec<f64> = (0..vals.len()).map(|k| k as f64 * 0.1).collect();
            let rows: Vec<Vec<f64>> = vals.iter().map(|v| vec![*v, -v]).collect();
            write_columns(&path, &["a_1".into(), "a_2".into()], &times, &rows).unwrap();
            let back = read_columns(&path).unwrap();
            prop_assert_eq!(back.times, times);
            for (r, v) in back.rows.iter().zip(&vals) {
                prop_assert_eq!(r[0].to_bits(), v.to_bits());
            }
        }
    }

    #[test]
    fn malformed_files_are_schema_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "t,a\n0,1\n").unwrap();
        assert_eq!(read_columns(&path).unwrap_err().exit_code(), 2);
        fs::write(&path, "time,a\n0,x\n").unwrap();
        assert_eq!(read_columns(&path).unwrap_err().exit_code(), 2);
        fs::write(&path, "time,a\n1,1\n0,1\n").unwrap();
        assert_eq!(read_columns(&path).unwrap_err().exit_code(), 2);
        assert_eq!(read_columns(&dir.path().join("missing.csv")).unwrap_err().exit_code(), 4);
    }
}
