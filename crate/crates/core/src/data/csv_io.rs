//! CSV persistence: header `f0,...,f{n-1},label`, one row per sample, empty
//! label cell for unlabelled rows. Values are written with 17 significant
//! digits so a save/load round trip is bit-exact.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::LabeledDataset;
use crate::error::{Error, Result};

/// What a CSV file is expected to contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvSchema {
    pub n_features: usize,
    pub n_classes: usize,
}

fn header(n_features: usize) -> Vec<String> {
    (0..n_features)
        .map(|j| format!("f{j}"))
        .chain(std::iter::once("label".to_string()))
        .collect()
}

pub fn write_csv<W: Write>(dataset: &LabeledDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header(dataset.n_features()))?;
    let mut record = Vec::with_capacity(dataset.n_features() + 1);
    for (row, label) in dataset.rows().zip(dataset.labels()) {
        record.clear();
        record.extend(row.iter().map(|v| format!("{v:.16e}")));
        record.push(label.map(|l| l.to_string()).unwrap_or_default());
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Writes `dataset` to `path` through a temporary file and a rename.
pub fn save_csv(dataset: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_csv(dataset, &mut buf)?;
    crate::write_atomic(path, &buf)
}

pub fn read_csv<R: Read>(reader: R, schema: CsvSchema) -> Result<LabeledDataset> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = r.records();
    let expected = header(schema.n_features);
    let head = records
        .next()
        .ok_or_else(|| Error::Parse {
            row: 1,
            message: "missing header".into(),
        })??;
    if head.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Parse {
            row: 1,
            message: format!(
                "header has {} columns, expected f0..f{},label",
                head.len(),
                schema.n_features - 1
            ),
        });
    }

    let mut data = Vec::new();
    let mut labels = Vec::new();
    for record in records {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != schema.n_features + 1 {
            return Err(Error::Parse {
                row,
                message: format!(
                    "{} columns, expected {} features plus label",
                    record.len(),
                    schema.n_features
                ),
            });
        }
        for (j, cell) in record.iter().take(schema.n_features).enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row,
                message: format!("column f{j}: '{cell}' is not a number"),
            })?;
            data.push(v);
        }
        let cell = record[schema.n_features].trim();
        let label = if cell.is_empty() {
            None
        } else {
            let l: usize = cell.parse().map_err(|_| Error::Parse {
                row,
                message: format!("label '{cell}' is not a class index"),
            })?;
            if l >= schema.n_classes {
                return Err(Error::Validation(format!(
                    "row {row}: label {l} outside [0, {})",
                    schema.n_classes
                )));
            }
            Some(l)
        };
        labels.push(label);
    }
    let features =
        Array2::from_shape_vec((labels.len(), schema.n_features), data).expect("shape");
    LabeledDataset::new(features, labels, schema.n_classes)
}

pub fn load_csv(path: impl AsRef<Path>, schema: CsvSchema) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file), schema)
}
