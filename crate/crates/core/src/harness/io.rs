//! CSV files for matrices (row-major, no header) and traces (header row).
//!
//! Floats are written with 17 significant digits, which is enough for every
//! `f64` to parse back to the identical value.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{FaError, Result};
use crate::trace::{SolveTrace, TraceRow};

pub const TRACE_HEADER: [&str; 10] = [
    "outer_iter",
    "tau",
    "inner_iter",
    "objective_h_tau",
    "objective_f",
    "residual_normalized",
    "support_size",
    "step_alpha",
    "direction_kind",
    "wall_time_ns",
];

/// `x` with 17 significant digits in scientific notation.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn parse_f64(field: &str, path: &Path, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| FaError::Parse {
        path: path.to_path_buf(),
        reason: format!("line {line}: `{field}` is not a number"),
    })
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| FaError::io(dir, e))?;
        }
    }
    File::create(path).map_err(|e| FaError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> FaError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => FaError::io(path, io),
        other => FaError::Parse {
            path: path.to_path_buf(),
            reason: format!("{other:?}"),
        },
    }
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(create(path)?);
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_f64(m[(i, j)])).collect();
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| FaError::io(path, e))
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let file = File::open(path).map_err(|e| FaError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut data = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if ncols.is_some_and(|n| n != rec.len()) {
            return Err(FaError::Parse {
                path: path.to_path_buf(),
                reason: format!("line {}: ragged row", line + 1),
            });
        }
        ncols = Some(rec.len());
        for field in rec.iter() {
            data.push(parse_f64(field, path, line + 1)?);
        }
        nrows += 1;
    }
    let ncols = ncols.ok_or_else(|| FaError::Parse {
        path: path.to_path_buf(),
        reason: "empty matrix file".into(),
    })?;
    Ok(DMatrix::from_row_slice(nrows, ncols, &data))
}

pub fn write_trace_csv(path: &Path, trace: &SolveTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(TRACE_HEADER).map_err(|e| csv_error(path, e))?;
    for row in &trace.rows {
        w.write_record([
            row.outer_iter.to_string(),
            format_f64(row.tau),
            row.inner_iter.to_string(),
            format_f64(row.objective_h_tau),
            format_f64(row.objective_f),
            format_f64(row.residual_normalized),
            row.support_size.to_string(),
            format_f64(row.step_alpha),
            row.direction_kind.to_string(),
            row.wall_time_ns.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| FaError::io(path, e))
}

pub fn read_trace_csv(path: &Path) -> Result<SolveTrace> {
    let file = File::open(path).map_err(|e| FaError::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let headers = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(FaError::Parse {
            path: path.to_path_buf(),
            reason: format!("unexpected trace header `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let bad = |line: usize, what: &str| FaError::Parse {
        path: path.to_path_buf(),
        reason: format!("line {line}: bad {what}"),
    };
    let mut trace = SolveTrace::new();
    for (k, rec) in r.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let int = |i: usize, what: &str| rec[i].parse::<usize>().map_err(|_| bad(line, what));
        trace.rows.push(TraceRow {
            outer_iter: int(0, "outer_iter")?,
            tau: parse_f64(&rec[1], path, line)?,
            inner_iter: int(2, "inner_iter")?,
            objective_h_tau: parse_f64(&rec[3], path, line)?,
            objective_f: parse_f64(&rec[4], path, line)?,
            residual_normalized: parse_f64(&rec[5], path, line)?,
            support_size: int(6, "support_size")?,
            step_alpha: parse_f64(&rec[7], path, line)?,
            direction_kind: rec[8].parse().map_err(|_| bad(line, "direction_kind"))?,
            wall_time_ns: rec[9].parse::<u128>().map_err(|_| bad(line, "wall_time_ns"))?,
        });
    }
    Ok(trace)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| FaError::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.write_all(b"\n"))
        .map_err(|e| FaError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::DirectionKind;
    use proptest::prelude::*;

    #[test]
    fn format_has_seventeen_digits() {
        assert_eq!(format_f64(1.0), "1.0000000000000000e0");
        assert_eq!(format_f64(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(format_f64(f64::INFINITY).parse::<f64>().unwrap(), f64::INFINITY);
    }

    proptest! {
        #[test]
        fn any_finite_float_round_trips(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            prop_assert_eq!(format_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = DMatrix::from_fn(3, 4, |i, j| (i as f64 + 0.1) / (j as f64 + 3.0) * 1e-7);
        write_matrix_csv(&path, &m).unwrap();
        assert_eq!(read_matrix_csv(&path).unwrap(), m);
    }

    #[test]
    fn trace_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let row = TraceRow {
            outer_iter: 2,
            tau: 0.125,
            inner_iter: 3,
            objective_h_tau: -1.0 / 3.0,
            objective_f: 2.0f64.sqrt(),
            residual_normalized: 1e-5,
            support_size: 17,
            step_alpha: 0.5,
            direction_kind: DirectionKind::GradientFallback,
            wall_time_ns: 123_456_789,
        };
        let mut last = row.clone();
        last.step_alpha = 0.0;
        last.direction_kind = DirectionKind::None;
        let trace = SolveTrace { rows: vec![row, last] };
        write_trace_csv(&path, &trace).unwrap();
        assert_eq!(read_trace_csv(&path).unwrap(), trace);
    }

    #[test]
    fn malformed_files_are_parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "1,2\n3\n").unwrap();
        assert!(matches!(read_matrix_csv(&path), Err(FaError::Parse { .. })));
        std::fs::write(&path, "1,x\n").unwrap();
        assert!(matches!(read_matrix_csv(&path), Err(FaError::Parse { .. })));
        std::fs::write(&path, "a,b\n").unwrap();
        assert!(matches!(read_trace_csv(&path), Err(FaError::Parse { .. })));
        let missing = dir.path().join("nope.csv");
        assert!(matches!(read_matrix_csv(&missing), Err(FaError::Io { .. })));
    }
}
