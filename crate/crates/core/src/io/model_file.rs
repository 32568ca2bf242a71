//! JSON model documents. Reals are written with 17 significant digits so a
//! save/load cycle reproduces every parameter bit for bit.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::ser::Error as _;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use super::DataError;
use crate::belief::Frame;
use crate::enn::{EnnError, EvidentialModel, ModelConfig, Prototype};
use crate::training::TrainConfig;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u64,
    pub config: ArtifactConfig,
    pub class_names: Vec<String>,
    /// Row-major `h × d_in`.
    #[serde(serialize_with = "reals")]
    pub w: Vec<f64>,
    #[serde(serialize_with = "reals")]
    pub b: Vec<f64>,
    pub prototypes: Vec<PrototypeRecord>,
    #[serde(default)]
    pub training_meta: Option<TrainingMeta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactConfig {
    pub d_in: usize,
    pub h: usize,
    pub r: usize,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeRecord {
    #[serde(serialize_with = "reals")]
    pub center: Vec<f64>,
    #[serde(serialize_with = "reals")]
    pub beta: Vec<f64>,
    #[serde(serialize_with = "real")]
    pub xi: f64,
    #[serde(serialize_with = "real")]
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub config: TrainConfig,
    #[serde(serialize_with = "real")]
    pub best_val_accuracy: f64,
}

fn raw_real(v: f64) -> Result<Box<RawValue>, String> {
    if !v.is_finite() {
        return Err(format!("cannot serialize non-finite value {v}"));
    }
    RawValue::from_string(format!("{v:.16e}")).map_err(|e| e.to_string())
}

fn real<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    raw_real(*v).map_err(S::Error::custom)?.serialize(s)
}

fn reals<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let raw = v.iter().map(|x| raw_real(*x)).collect::<Result<Vec<_>, _>>().map_err(S::Error::custom)?;
    s.collect_seq(raw)
}

pub fn to_artifact(model: &EvidentialModel, training_meta: Option<TrainingMeta>) -> ModelArtifact {
    let c = model.config();
    ModelArtifact {
        format_version: FORMAT_VERSION,
        config: ArtifactConfig {
            d_in: c.d_in,
            h: c.h,
            r: c.r,
            k: c.k,
        },
        class_names: model.frame().labels().to_vec(),
        w: model.weights().to_vec(),
        b: model.bias().to_vec(),
        prototypes: model
            .prototypes()
            .iter()
            .map(|p| PrototypeRecord {
                center: p.center.clone(),
                beta: p.beta.clone(),
                xi: p.xi,
                eta: p.eta,
            })
            .collect(),
        training_meta,
    }
}

pub fn from_artifact(artifact: &ModelArtifact) -> Result<EvidentialModel, DataError> {
    if artifact.format_version != FORMAT_VERSION {
        return Err(DataError::UnsupportedVersion(artifact.format_version));
    }
    let c = artifact.config;
    let config = ModelConfig::new(c.d_in, c.h, c.r, c.k).map_err(|e| DataError::CorruptField(format!("config: {e}")))?;
    let frame = Frame::new(artifact.class_names.iter().cloned())
        .map_err(|e| DataError::CorruptField(format!("class_names: {e}")))?;
    // field-level shape checks give more useful messages than from_parts
    let expect = |field: String, expected: usize, got: usize| {
        if expected == got {
            Ok(())
        } else {
            Err(DataError::DimensionMismatch(format!("{field}: expected {expected}, got {got}")))
        }
    };
    expect("class_names".into(), c.k, frame.len())?;
    expect("w".into(), c.h * c.d_in, artifact.w.len())?;
    expect("b".into(), c.h, artifact.b.len())?;
    expect("prototypes".into(), c.r, artifact.prototypes.len())?;
    for (i, p) in artifact.prototypes.iter().enumerate() {
        expect(format!("prototypes[{i}].center"), c.h, p.center.len())?;
        expect(format!("prototypes[{i}].beta"), c.k, p.beta.len())?;
    }
    let prototypes = artifact
        .prototypes
        .iter()
        .map(|p| Prototype {
            center: p.center.clone(),
            beta: p.beta.clone(),
            xi: p.xi,
            eta: p.eta,
        })
        .collect();
    EvidentialModel::from_parts(Arc::new(frame), config, artifact.w.clone(), artifact.b.clone(), prototypes).map_err(
        |e| match e {
            EnnError::DimensionMismatch { .. } => DataError::DimensionMismatch(e.to_string()),
            other => DataError::CorruptField(other.to_string()),
        },
    )
}

pub fn write_model<W: Write>(artifact: &ModelArtifact, mut writer: W) -> Result<(), DataError> {
    let mut text = serde_json::to_string_pretty(artifact).map_err(DataError::write)?;
    text.push('\n');
    writer.write_all(text.as_bytes()).map_err(DataError::write)
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u64,
}

pub fn read_model<R: Read>(mut reader: R) -> Result<ModelArtifact, DataError> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| DataError::CorruptField(e.to_string()))?;
    let probe: VersionProbe =
        serde_json::from_str(&text).map_err(|e| DataError::CorruptField(format!("format_version: {e}")))?;
    if probe.format_version != FORMAT_VERSION {
        return Err(DataError::UnsupportedVersion(probe.format_version));
    }
    serde_json::from_str(&text).map_err(|e| DataError::CorruptField(e.to_string()))
}

pub fn save_model(
    model: &EvidentialModel,
    training_meta: Option<TrainingMeta>,
    path: impl AsRef<Path>,
) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_model(&to_artifact(model, training_meta), &mut buf)?;
    fs::write(path, buf).map_err(|e| DataError::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(EvidentialModel, Option<TrainingMeta>), DataError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    let artifact = read_model(file)?;
    Ok((from_artifact(&artifact)?, artifact.training_meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_model() -> EvidentialModel {
        let frame = Arc::new(Frame::new(["positive", "negative"]).unwrap());
        let cfg = ModelConfig::new(3, 2, 2, 2).unwrap();
        let w = vec![0.1, -1.0 / 3.0, 2.5e-300, f64::MIN_POSITIVE, -0.0, 1e300];
        let protos = vec![
            Prototype {
                center: vec![std::f64::consts::PI, -7.25],
                beta: vec![0.3, 0.9],
                xi: -40.0,
                eta: 1.0 / 7.0,
            },
            Prototype {
                center: vec![0.0, 1e-17],
                beta: vec![1.0, 0.0],
                xi: 0.1 + 0.2,
                eta: 3.0,
            },
        ];
        EvidentialModel::from_parts(frame, cfg, w, vec![0.5, -0.5], protos).unwrap()
    }

    fn to_text(artifact: &ModelArtifact) -> String {
        let mut buf = Vec::new();
        write_model(artifact, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let model = sample_model();
        let text = to_text(&to_artifact(&model, None));
        let back = from_artifact(&read_model(text.as_bytes()).unwrap()).unwrap();
        let bits = |m: &EvidentialModel| m.parameters().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&model));
        assert_eq!(back.frame(), model.frame());
        assert!(text.contains("\"format_version\": 1"));
        assert!(text.contains("3.1415926535897931e0"));
    }

    #[test]
    fn unsupported_version() {
        let text = to_text(&to_artifact(&sample_model(), None)).replace("\"format_version\": 1", "\"format_version\": 999");
        assert!(matches!(read_model(text.as_bytes()), Err(DataError::UnsupportedVersion(999))));
    }

    #[test]
    fn center_length_mismatch() {
        let mut artifact = to_artifact(&sample_model(), None);
        artifact.prototypes[1].center.push(1.0);
        let text = to_text(&artifact);
        let parsed = read_model(text.as_bytes()).unwrap();
        assert!(matches!(from_artifact(&parsed), Err(DataError::DimensionMismatch(_))));
    }

    #[test]
    fn corrupt_documents() {
        assert!(matches!(read_model("not json".as_bytes()), Err(DataError::CorruptField(_))));
        assert!(matches!(
            read_model("{\"format_version\": 1, \"w\": \"oops\"}".as_bytes()),
            Err(DataError::CorruptField(_))
        ));
    }

    #[test]
    fn non_finite_parameters_refuse_to_serialize() {
        let mut artifact = to_artifact(&sample_model(), None);
        artifact.b[0] = f64::NAN;
        assert!(write_model(&artifact, Vec::new()).is_err());
    }
}
