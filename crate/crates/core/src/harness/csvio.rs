//! CSV writers. Reals are written with Rust's shortest round-trip
//! formatting, so reading a file back yields the same `f64` values.

use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use super::{ReplicateRecord, SummaryRow};
use crate::diagram::DiagramTable;
use crate::error::{Error, Result};
use crate::seqpath::PathTrace;

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!("checked is_io_error"),
        }
    } else {
        Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn write_rows<W: Write>(
    out: W,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let label = PathBuf::from("<output>");
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(|e| csv_error(&label, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(&label, e))?;
    }
    w.flush()?;
    Ok(())
}

fn to_string(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}

fn to_file(path: &Path, f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> Result<()>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Columns: step, event, variable, knot, active_size.
pub fn write_trace_csv<W: Write>(trace: &PathTrace, out: W) -> Result<()> {
    let sizes = trace.active_sizes();
    write_rows(
        out,
        &["step", "event", "variable", "knot", "active_size"],
        trace.events.iter().zip(sizes).map(|(e, size)| {
            vec![
                e.step.to_string(),
                e.kind.name().to_string(),
                e.variable.to_string(),
                e.knot.to_string(),
                size.to_string(),
            ]
        }),
    )
}

pub fn trace_csv_string(trace: &PathTrace) -> Result<String> {
    to_string(|b| write_trace_csv(trace, b))
}

/// Headerless numeric matrix, one row per line.
pub fn write_matrix_csv<W: Write>(x: &DMatrix<f64>, out: W) -> Result<()> {
    let label = PathBuf::from("<output>");
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in x.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| csv_error(&label, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_matrix_csv(x: &DMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    to_file(path.as_ref(), |w| write_matrix_csv(x, w))
}

/// A vector as a single headerless column.
pub fn save_vector_csv(v: &DVector<f64>, path: impl AsRef<Path>) -> Result<()> {
    save_matrix_csv(&DMatrix::from_column_slice(v.len(), 1, v.as_slice()), path)
}

/// Columns: variable, h_rank (empty when absent), v_rank, t_stat, is_signal.
pub fn write_diagram_csv<W: Write>(table: &DiagramTable, out: W) -> Result<()> {
    write_rows(
        out,
        &["variable", "h_rank", "v_rank", "t_stat", "is_signal"],
        table.rows.iter().map(|r| {
            vec![
                r.variable.to_string(),
                opt(r.h_rank),
                r.v_rank.to_string(),
                r.t_stat.to_string(),
                r.is_signal.to_string(),
            ]
        }),
    )
}

pub fn diagram_csv_string(table: &DiagramTable) -> Result<String> {
    to_string(|b| write_diagram_csv(table, b))
}

/// Columns: method, sweep_value, replicate, T, signals_before,
/// drops_before_first_noise. `T` is empty when no noise variable entered.
pub fn write_ranks_csv<W: Write>(records: &[ReplicateRecord], out: W) -> Result<()> {
    write_rows(
        out,
        &["method", "sweep_value", "replicate", "T", "signals_before", "drops_before_first_noise"],
        records.iter().map(|r| {
            vec![
                r.method.name().to_string(),
                r.sweep_value.to_string(),
                r.replicate.to_string(),
                opt(r.rank),
                r.signals_before.to_string(),
                r.drops_before_first_noise.to_string(),
            ]
        }),
    )
}

/// Columns: method, sweep_value, mean_T, sd_T, predicted_T,
/// replicates_with_T. `sd_T` is the across-replicate standard deviation.
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    write_rows(
        out,
        &["method", "sweep_value", "mean_T", "sd_T", "predicted_T", "replicates_with_T"],
        rows.iter().map(|r| {
            vec![
                r.method.name().to_string(),
                r.sweep_value.to_string(),
                opt(r.mean_t),
                opt(r.sd_t),
                opt(r.predicted_t),
                r.replicates_with_t.to_string(),
            ]
        }),
    )
}

pub(crate) fn save_with(path: &Path, f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> Result<()>) -> Result<()> {
    to_file(path, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::load_design_csv;
    use crate::seqpath::{lasso_lars_path, EventKind, Method, PathEvent, Termination};

    #[test]
    fn trace_columns() {
        let trace = PathTrace {
            method: Method::Lasso,
            events: vec![
                PathEvent { step: 1, kind: EventKind::Enter, variable: 2, knot: 3.5 },
                PathEvent { step: 2, kind: EventKind::Enter, variable: 0, knot: 1.25 },
                PathEvent { step: 3, kind: EventKind::Drop, variable: 2, knot: 0.5 },
            ],
            knot_coefficients: vec![DVector::zeros(3); 3],
            termination: Termination::StepLimit,
        };
        let s = trace_csv_string(&trace).unwrap();
        assert_eq!(
            s,
            "step,event,variable,knot,active_size\n1,enter,2,3.5,1\n2,enter,0,1.25,2\n3,drop,2,0.5,1\n"
        );
    }

    #[test]
    fn matrix_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let x = DMatrix::from_row_slice(
            2,
            3,
            &[0.1, -1e-300, 1.0 / 3.0, f64::MAX, 5e-324, -2.5e17],
        );
        save_matrix_csv(&x, &path).unwrap();
        let back = load_design_csv(&path, false).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn trace_of_real_path() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.2, 0.0, 1.0, 0.5, 0.1]);
        let y = DVector::from_vec(vec![1.0, 2.0, 0.0]);
        let t = lasso_lars_path(&x, &y, 10).unwrap();
        let s = trace_csv_string(&t).unwrap();
        assert_eq!(s.lines().count(), t.events.len() + 1);
    }
}
