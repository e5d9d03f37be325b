// SPDX-License-Identifier: Apache-2.0

//! CSV tables and JSON summaries. Numbers are written with 17 significant
//! digits so that identical runs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Column-major numeric table; `None` cells are left empty.
pub struct Table<'a> {
    pub header: &'a [&'a str],
    pub columns: Vec<Vec<Option<f64>>>,
}

impl<'a> Table<'a> {
    pub fn dense(header: &'a [&'a str], columns: &[&[f64]]) -> Self {
        Self {
            header,
            columns: columns.iter().map(|c| c.iter().copied().map(Some).collect()).collect(),
        }
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_csv(path: &Path, table: &Table) -> Result<(), CliError> {
    assert_eq!(table.header.len(), table.columns.len());
    let rows = table.columns.first().map_or(0, Vec::len);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err(path))?;
    w.write_record(table.header).map_err(csv_err(path))?;
    for i in 0..rows {
        w.write_record(table.columns.iter().map(|c| c[i].map(fmt_num).unwrap_or_default()))
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("summary types serialize");
    text.push('\n');
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(dir.to_path_buf())
}

/// Reads the named numeric columns of a CSV file with a header row.
pub fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let input = |message: String| CliError::Input {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            header
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| input(format!("missing column `{n}`")))
        })
        .collect::<Result<_, _>>()?;
    let mut out = vec![Vec::new(); names.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        for (col, &i) in out.iter_mut().zip(&idx) {
            let field = rec.get(i).unwrap_or("");
            let v: f64 = field
                .parse()
                .map_err(|_| input(format!("row {}: `{field}` is not a number", line + 2)))?;
            col.push(v);
        }
    }
    Ok(out)
}
