//! Report documents and plot-ready CSV tables.
//!
//! Every file is written to a temporary sibling first and then renamed into
//! place, so an interrupted run never leaves a half-written report behind.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::analysis::{self, ArgTolerance, ValueTable};
use crate::error::{Error, Result};
use crate::fixedpoint::SolutionSweep;
use crate::mesh::{self, Grid1D, Space};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize");
    bytes.push(b'\n');
    bytes
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &to_json(value))
}

/// Renders a CSV document from a header and string rows.
pub fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    write_atomic(path, &to_csv(header, rows))
}

/// One row per parameter value: column minimum and argmin component count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceRow {
    pub lambda_index: usize,
    pub lambda: f64,
    pub column_min: f64,
    pub argmin_component_count: usize,
}

pub fn slice_rows(table: &ValueTable, space: &Space, grid: &Grid1D, tol: ArgTolerance) -> Vec<SliceRow> {
    crate::par::map_indices(table.cols(), |j| {
        let set = analysis::argmin_set(table, j, tol);
        SliceRow {
            lambda_index: j,
            lambda: grid.value(j),
            column_min: set.level,
            argmin_component_count: mesh::components(space, &set.flags(table.rows())).component_count,
        }
    })
}

pub const SLICE_HEADER: [&str; 4] = ["lambda_index", "lambda", "column_min", "argmin_component_count"];

pub fn slice_csv(rows: &[SliceRow]) -> Vec<u8> {
    to_csv(
        &SLICE_HEADER,
        rows.iter().map(|r| {
            vec![
                r.lambda_index.to_string(),
                r.lambda.to_string(),
                r.column_min.to_string(),
                r.argmin_component_count.to_string(),
            ]
        }),
    )
}

pub const SWEEP_HEADER: [&str; 5] = ["lambda_index", "lambda", "solution_count", "component_count", "min_residual"];

pub fn sweep_csv(sweep: &SolutionSweep) -> Vec<u8> {
    to_csv(
        &SWEEP_HEADER,
        sweep.slices.iter().map(|s| {
            vec![
                s.lambda_index.to_string(),
                s.lambda.to_string(),
                s.solution_count.to_string(),
                s.component_count.to_string(),
                s.min_residual.to_string(),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested").join("r.json");
        write_json(&p, &vec![1, 2]).unwrap();
        write_json(&p, &vec![3]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "[\n  3\n]\n");
        // No temporary files are left behind.
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let bytes = to_csv(&["a", "b"], vec![vec!["1".into(), "0.5".into()]]);
        assert_eq!(String::from_utf8(bytes).unwrap(), "a,b\n1,0.5\n");
    }
}
