use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, ModalityStack};

/// Shortest form that still round-trips: 17 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_err(path: &Path, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

/// Parse CSV text; `path` only labels error messages.
pub fn parse_matrix_csv(text: &str, path: &Path) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(index + 1, |p| p.line() as usize);
            parse_err(path, line, 0, e.to_string())
        })?;
        let line = record.position().map_or(index + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, usize>> = record
            .iter()
            .enumerate()
            .map(|(c, cell)| cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or(c))
            .collect();
        if index == 0 && rows.is_empty() && parsed.iter().any(|p| p.is_err()) {
            // a non-numeric first line is a header
            continue;
        }
        let mut row = Vec::with_capacity(parsed.len());
        for p in parsed {
            match p {
                Ok(v) => row.push(v),
                Err(c) => {
                    return Err(parse_err(
                        path,
                        line,
                        c + 1,
                        format!("`{}` is not a finite number", &record[c]),
                    ));
                }
            }
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(parse_err(
                    path,
                    line,
                    row.len().min(w) + 1,
                    format!("expected {w} values, found {}", row.len()),
                ));
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, 1, "no data rows"));
    }
    // rows are observations; the library works with observations as columns
    Matrix::from_columns(&rows)
}

pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    parse_matrix_csv(&text, path)
}

/// Write `m` with one row per column of `m` (one line per observation).
pub fn save_matrix_csv(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    let io_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    for j in 0..m.cols() {
        writer
            .write_record((0..m.rows()).map(|i| format_value(m[(i, j)])))
            .map_err(io_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Load one CSV per modality; all must describe the same observations.
pub fn load_stack<P: AsRef<Path>>(paths: &[P]) -> Result<ModalityStack> {
    let layers = paths.iter().map(load_matrix_csv).collect::<Result<Vec<_>>>()?;
    ModalityStack::new(layers)
}

pub fn save_stack(stack: &ModalityStack, paths: &[impl AsRef<Path>]) -> Result<()> {
    if paths.len() != stack.len() {
        return Err(Error::shape("output paths", stack.len(), paths.len()));
    }
    stack.iter().zip(paths).try_for_each(|(m, p)| save_matrix_csv(m, p))
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let labels = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<usize>()
                .map_err(|_| parse_err(path, i + 1, 1, format!("`{}` is not a nonnegative integer", l.trim())))
        })
        .collect::<Result<Vec<_>>>()?;
    if labels.is_empty() {
        return Err(parse_err(path, 1, 1, "no labels"));
    }
    Ok(labels)
}

pub fn save_labels(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    labels
        .iter()
        .try_for_each(|l| writeln!(out, "{l}"))
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}
