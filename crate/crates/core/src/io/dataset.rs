//! Feature CSV files: header `f0,…,f{d-1},label`, one instance per row, the
//! label cell holding a class name or `?` for an unlabeled instance.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::DataError;

pub const UNLABELED: &str = "?";
pub const LABEL_COLUMN: &str = "label";

/// Class names used when a file does not say otherwise; index 0 is the
/// positive class.
pub fn default_class_names() -> Vec<String> {
    vec!["positive".to_string(), "negative".to_string()]
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    d_in: usize,
    features: Vec<Vec<f64>>,
    labels: Vec<Option<usize>>,
    class_names: Vec<String>,
}

impl FeatureDataset {
    pub fn new(d_in: usize, class_names: Vec<String>) -> Self {
        Self {
            d_in,
            features: Vec::new(),
            labels: Vec::new(),
            class_names,
        }
    }

    pub fn push(&mut self, row: Vec<f64>, label: Option<usize>) -> Result<(), DataError> {
        let index = self.len() + 1;
        if row.len() != self.d_in {
            return Err(DataError::RaggedRow {
                row: index,
                expected: self.d_in,
                got: row.len(),
            });
        }
        if let Some(column) = row.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFiniteFeature { row: index, column });
        }
        if let Some(l) = label {
            if l >= self.class_names.len() {
                return Err(DataError::UnknownLabel {
                    row: index,
                    label: l.to_string(),
                });
            }
        }
        self.features.push(row);
        self.labels.push(label);
        Ok(())
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn label(&self, i: usize) -> Option<usize> {
        self.labels[i]
    }

    /// 1-based number of the first unlabeled row, if any.
    pub fn first_unlabeled_row(&self) -> Option<usize> {
        self.labels.iter().position(Option::is_none).map(|i| i + 1)
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    /// Labels of a fully labeled dataset.
    pub fn dense_labels(&self) -> Result<Vec<usize>, DataError> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, l)| l.ok_or(DataError::UnlabeledRow { row: i + 1 }))
            .collect()
    }
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<FeatureDataset, DataError> {
    load_csv_with_classes(path, &default_class_names())
}

pub fn load_csv_with_classes(path: impl AsRef<Path>, class_names: &[String]) -> Result<FeatureDataset, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    read_csv(file, class_names)
}

pub fn read_csv<R: Read>(reader: R, class_names: &[String]) -> Result<FeatureDataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = reader.records();

    let header = match records.next() {
        None => return Err(DataError::EmptyFile),
        Some(rec) => rec.map_err(|e| DataError::Csv { row: 0, message: e.to_string() })?,
    };
    let fields: Vec<&str> = header.iter().collect();
    let well_formed = fields.len() >= 2
        && fields.last() == Some(&LABEL_COLUMN)
        && fields[..fields.len() - 1]
            .iter()
            .enumerate()
            .all(|(i, name)| *name == format!("f{i}"));
    if !well_formed {
        return Err(DataError::MissingHeader);
    }
    let d_in = fields.len() - 1;

    let mut dataset = FeatureDataset::new(d_in, class_names.to_vec());
    for (i, rec) in records.enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| DataError::Csv { row, message: e.to_string() })?;
        if rec.len() != d_in + 1 {
            return Err(DataError::RaggedRow {
                row,
                expected: d_in + 1,
                got: rec.len(),
            });
        }
        let mut values = Vec::with_capacity(d_in);
        for (column, cell) in rec.iter().take(d_in).enumerate() {
            let v: f64 = cell.parse().map_err(|_| DataError::NonNumericFeature {
                row,
                column,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(DataError::NonFiniteFeature { row, column });
            }
            values.push(v);
        }
        let label_cell = &rec[d_in];
        let label = if label_cell == UNLABELED {
            None
        } else {
            Some(
                class_names
                    .iter()
                    .position(|c| c == label_cell)
                    .ok_or_else(|| DataError::UnknownLabel {
                        row,
                        label: label_cell.to_string(),
                    })?,
            )
        };
        dataset.push(values, label)?;
    }
    Ok(dataset)
}

pub fn write_csv(dataset: &FeatureDataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| DataError::io(path, e))?;
    write_csv_to(dataset, file).map_err(|e| match e {
        DataError::WriteFailure(msg) => DataError::WriteFailure(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_csv_to<W: Write>(dataset: &FeatureDataset, writer: W) -> Result<(), DataError> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    let mut header: Vec<String> = (0..dataset.d_in()).map(|i| format!("f{i}")).collect();
    header.push(LABEL_COLUMN.to_string());
    out.write_record(&header).map_err(DataError::write)?;
    for (row, label) in dataset.features().iter().zip(dataset.labels()) {
        let mut cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        cells.push(match label {
            Some(l) => dataset.class_names()[*l].clone(),
            None => UNLABELED.to_string(),
        });
        out.write_record(&cells).map_err(DataError::write)?;
    }
    out.flush().map_err(DataError::write)?;
    Ok(())
}
