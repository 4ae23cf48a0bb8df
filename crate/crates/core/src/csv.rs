//! Comma-separated tables with a header row.

use std::fmt::Display;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

fn csv_error(path: &Path, e: ::csv::Error) -> Error {
    match e.into_kind() {
        ::csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            what: "csv table",
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

/// Writes `header` and `rows` to `path`, creating parent directories.
pub fn write_table<R, I>(path: impl AsRef<Path>, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: Display,
{
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut out = ::csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    out.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        let fields: Vec<String> = row.into_iter().map(|f| f.to_string()).collect();
        out.write_record(&fields).map_err(|e| csv_error(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// A parsed table with its header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            what: "csv table",
            line: 1,
            message: format!("missing column {name:?}"),
        })
    }

    /// Parses field `col` of every row.
    pub fn parse_column<T: std::str::FromStr>(&self, col: usize) -> Result<Vec<T>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r[col].parse().map_err(|_| Error::Parse {
                    what: "csv table",
                    line: i + 2,
                    message: format!("cannot parse {:?} in column {:?}", r[col], self.header[col]),
                })
            })
            .collect()
    }
}

pub fn parse_table(text: &str) -> Result<Table> {
    let mut reader = ::csv::ReaderBuilder::new()
        .trim(::csv::Trim::All)
        .from_reader(text.as_bytes());
    let parse_error = |e: ::csv::Error| {
        let line = e.position().map_or(0, |p| p.line() as usize);
        Error::Parse {
            what: "csv table",
            line,
            message: e.to_string(),
        }
    };
    let header: Vec<String> = reader.headers().map_err(parse_error)?.iter().map(str::to_string).collect();
    if header.is_empty() {
        return Err(Error::Parse {
            what: "csv table",
            line: 1,
            message: "empty file".into(),
        });
    }
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()).map_err(parse_error))
        .collect::<Result<Vec<Vec<String>>>>()?;
    Ok(Table { header, rows })
}

pub fn read_table(path: impl AsRef<Path>) -> Result<Table> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table(&text)
}
