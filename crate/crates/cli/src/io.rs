//! CSV ingestion and output-sink plumbing.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ccte::fit::{log_returns, ReturnsPanel};
use ccte::Error;

use crate::InputKind;

/// Parses a multi-series CSV: first row holds series names, one column per
/// series, decimal point, comma delimiter. A first column named "date"
/// (case-insensitive) is ignored.
pub fn read_panel_csv(path: &Path, kind: InputKind) -> Result<ReturnsPanel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Ingestion {
            row: 1,
            what: format!("malformed header: {e}"),
        })?
        .clone();
    let mut names: Vec<String> = headers.iter().map(str::to_string).collect();
    let skip_first = names
        .first()
        .map(|h| h.eq_ignore_ascii_case("date"))
        .unwrap_or(false);
    if skip_first {
        names.remove(0);
    }
    if names.is_empty() {
        anyhow::bail!(Error::Ingestion {
            row: 1,
            what: "no series columns found".into()
        });
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 2; // header is row 1
        let record = record.map_err(|e| Error::Ingestion {
            row: row_no,
            what: format!("malformed CSV: {e}"),
        })?;
        let cells: Vec<&str> = record.iter().skip(usize::from(skip_first)).collect();
        if cells.len() != names.len() {
            anyhow::bail!(Error::Ingestion {
                row: row_no,
                what: format!("expected {} values, found {}", names.len(), cells.len()),
            });
        }
        let mut row = Vec::with_capacity(cells.len());
        for (j, cell) in cells.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::Ingestion {
                row: row_no,
                what: format!("series {}: cannot parse '{cell}' as a number", names[j]),
            })?;
            row.push(value);
        }
        rows.push(row);
    }

    match kind {
        InputKind::Prices => Ok(log_returns(names, &rows)?),
        InputKind::Returns => Ok(ReturnsPanel::new(names, rows)?),
    }
}

/// Reads a margin sample file: one observation per line, blank lines
/// skipped.
pub fn read_margin_file(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot open margin file {}", path.display()))?;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: f64 = line.parse().map_err(|_| Error::Ingestion {
            row: i + 1,
            what: format!("cannot parse '{line}' as a number"),
        })?;
        samples.push(value);
    }
    Ok(samples)
}

/// Writes rendered output to `--out` or stdout.
pub fn emit(out: &Option<PathBuf>, body: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, body).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            Ok(())
        }
    }
}
