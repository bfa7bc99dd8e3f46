//! File output helpers. Failures to create or write map to exit 73.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::exit::CliError;

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::cant_create(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(contents))
        .map_err(|e| CliError::cant_create(format!("cannot write {}: {e}", path.display())))
}

/// Writes rows of string cells as CSV.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut push = |record: &[String]| {
        wtr.write_record(record)
            .map_err(|e| CliError::software(e.to_string()))
    };
    push(header)?;
    for row in rows {
        push(row)?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| CliError::software(e.to_string()))?;
    write_file(path, &bytes)
}

/// Square matrix indexed by `keys` on both axes: header row of keys, then one
/// row per key led by the key.
pub fn write_matrix(path: &Path, corner: &str, keys: &[String], m: &Array2<f64>) -> Result<(), CliError> {
    let mut header = vec![corner.to_string()];
    header.extend(keys.iter().cloned());
    let rows: Vec<Vec<String>> = keys
        .iter()
        .zip(m.outer_iter())
        .map(|(k, row)| {
            std::iter::once(k.clone())
                .chain(row.iter().map(|v| v.to_string()))
                .collect()
        })
        .collect();
    write_csv(path, &header, &rows)
}
