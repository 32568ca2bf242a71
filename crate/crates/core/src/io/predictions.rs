use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{DataError, FeatureDataset};
use crate::enn::EvidentialModel;

pub const PREDICTION_HEADER: &str = "row,m_pos,m_neg,m_omega,pl_pos,pl_neg,decision";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionSummary {
    pub rows: usize,
    /// Number of rows assigned to each class.
    pub decisions: Vec<usize>,
}

/// Fixed 12-decimal rendering with trailing zeros removed (`0.5`, `1`, `0`).
pub fn format_real(v: f64) -> String {
    let s = format!("{v:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    match s {
        "-0" | "" => "0".to_string(),
        other => other.to_string(),
    }
}

pub fn write_predictions<W: Write>(
    model: &EvidentialModel,
    dataset: &FeatureDataset,
    mut out: W,
) -> Result<PredictionSummary, DataError> {
    let k = model.config().k;
    if k != 2 {
        return Err(DataError::DimensionMismatch(format!(
            "prediction export needs a two-class model, got {k} classes"
        )));
    }
    if dataset.d_in() != model.config().d_in {
        return Err(DataError::DimensionMismatch(format!(
            "model expects {} features, data has {}",
            model.config().d_in,
            dataset.d_in()
        )));
    }
    let names = model.frame().labels();
    let mut decisions = vec![0; k];
    writeln!(out, "{PREDICTION_HEADER}").map_err(DataError::write)?;
    for (i, x) in dataset.features().iter().enumerate() {
        let o = model
            .forward(x)
            .map_err(|e| DataError::DimensionMismatch(format!("row {}: {e}", i + 1)))?;
        let decision = o.decide();
        decisions[decision] += 1;
        writeln!(
            out,
            "{i},{},{},{},{},{},{}",
            format_real(o.singleton(0)),
            format_real(o.singleton(1)),
            format_real(o.omega()),
            format_real(o.pl()[0]),
            format_real(o.pl()[1]),
            names[decision]
        )
        .map_err(DataError::write)?;
    }
    out.flush().map_err(DataError::write)?;
    Ok(PredictionSummary {
        rows: dataset.len(),
        decisions,
    })
}

pub fn export_predictions(
    model: &EvidentialModel,
    dataset: &FeatureDataset,
    path: impl AsRef<Path>,
) -> Result<PredictionSummary, DataError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| DataError::WriteFailure(format!("{}: {e}", path.display())))?;
    write_predictions(model, dataset, BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::belief::Frame;
    use crate::enn::{ModelConfig, Prototype};
    use crate::io::default_class_names;

    fn model(xi: f64, u: [f64; 2]) -> EvidentialModel {
        let frame = Arc::new(Frame::new(["positive", "negative"]).unwrap());
        let cfg = ModelConfig::new(2, 2, 1, 2).unwrap();
        let p = Prototype {
            center: vec![0.5, 0.5],
            beta: u.iter().map(|v| v.sqrt()).collect(),
            xi,
            eta: 1.0,
        };
        EvidentialModel::from_parts(frame, cfg, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0], vec![p]).unwrap()
    }

    fn export(m: &EvidentialModel, ds: &FeatureDataset) -> (String, PredictionSummary) {
        let mut buf = Vec::new();
        let summary = write_predictions(m, ds, &mut buf).unwrap();
        (String::from_utf8(buf).unwrap(), summary)
    }

    #[test]
    fn real_formatting() {
        assert_eq!(format_real(0.30000000000000004), "0.3");
        assert_eq!(format_real(1.0), "1");
        assert_eq!(format_real(0.0), "0");
        assert_eq!(format_real(-1e-15), "0");
        assert_eq!(format_real(0.125), "0.125");
    }

    #[test]
    fn vacuous_rows() {
        let mut ds = FeatureDataset::new(2, default_class_names());
        ds.push(vec![0.5, 0.5], None).unwrap();
        ds.push(vec![3.0, -1.0], Some(1)).unwrap();
        let (text, summary) = export(&model(-40.0, [0.6, 0.4]), &ds);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], PREDICTION_HEADER);
        assert_eq!(lines[1], "0,0,0,1,1,1,positive");
        assert_eq!(lines[2], "1,0,0,1,1,1,positive");
        assert_eq!(summary.rows, 2);
    }

    #[test]
    fn worked_example_row() {
        let mut ds = FeatureDataset::new(2, default_class_names());
        ds.push(vec![0.5, 0.5], None).unwrap();
        let (text, _) = export(&model(0.0, [0.6, 0.4]), &ds);
        assert_eq!(text.lines().nth(1), Some("0,0.3,0.2,0.5,0.8,0.7,positive"));
    }

    #[test]
    fn empty_dataset_and_mismatch() {
        let ds = FeatureDataset::new(2, default_class_names());
        let (text, summary) = export(&model(0.0, [0.6, 0.4]), &ds);
        assert_eq!(text, format!("{PREDICTION_HEADER}\n"));
        assert_eq!(summary.rows, 0);
        let wrong = FeatureDataset::new(3, default_class_names());
        assert!(matches!(
            write_predictions(&model(0.0, [0.6, 0.4]), &wrong, Vec::new()),
            Err(DataError::DimensionMismatch(_))
        ));
    }
}
