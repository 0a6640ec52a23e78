//! Model bundles: trained weights plus everything needed to score a raw
//! record, stored as a single JSON document (`*.lmnet.json`).
//!
//! Top-level keys: `format_version` (1), `schema`, `encoding_maps`,
//! `scaling`, `arch`, `w`, `class_weights`, `training_summary`. Weights and
//! scaling statistics are decimal strings with 17 significant digits.

use std::fmt;
use std::fs;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnEncoding, ColumnKind, FeatureEncoder, ScalingParams, Schema};
use crate::error::{DataError, ModelIoError};
use crate::loss::ClassWeights;
use crate::network::{Architecture, Network};
use crate::trainer::StoppingReason;

pub const FORMAT_VERSION: i64 = 1;
pub const FILE_EXTENSION: &str = "lmnet.json";

/// Serde adapter writing an `f64` as a 17-significant-digit string, which
/// round-trips every finite double exactly.
pub mod exact_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn format(v: f64) -> String {
        format!("{v:.16e}")
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Number(f64),
        }
        match Repr::deserialize(d)? {
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
            Repr::Number(n) => Ok(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub final_loss: f64,
    pub stopping_reason: StoppingReason,
    pub optimal_order: usize,
    /// Seed of the training/selection/testing partition.
    pub split_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub schema: Schema,
    pub encoding_maps: Vec<ColumnEncoding>,
    pub scaling: ScalingParams,
    pub arch: Architecture,
    pub w: DVector<f64>,
    pub class_weights: ClassWeights,
    pub training_summary: TrainingSummary,
}

#[derive(Serialize, Deserialize)]
struct BundleFile {
    format_version: i64,
    schema: Schema,
    encoding_maps: Vec<ColumnEncoding>,
    scaling: ScalingParams,
    arch: ArchFile,
    w: Vec<String>,
    class_weights: ClassWeights,
    training_summary: TrainingSummary,
}

#[derive(Serialize, Deserialize)]
struct ArchFile {
    n_inputs: usize,
    order: usize,
    n_outputs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Prediction {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO")]
    No,
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Prediction::Yes => "YES",
            Prediction::No => "NO",
        })
    }
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

impl ModelBundle {
    pub fn new(
        encoder: &FeatureEncoder,
        net: &Network,
        class_weights: ClassWeights,
        training_summary: TrainingSummary,
    ) -> Result<Self, ModelIoError> {
        let bundle = Self {
            schema: encoder.schema.clone(),
            encoding_maps: encoder.columns.clone(),
            scaling: encoder.scaling(),
            arch: net.arch(),
            w: net.weights().clone(),
            class_weights,
            training_summary,
        };
        bundle.check()?;
        Ok(bundle)
    }

    fn check(&self) -> Result<(), ModelIoError> {
        if self.w.len() != self.arch.n_params() {
            return Err(ModelIoError::WeightCount {
                expected: self.arch.n_params(),
                found: self.w.len(),
            });
        }
        if self.encoding_maps.len() != self.schema.len() {
            return Err(ModelIoError::Inconsistent(format!(
                "{} encoding maps for {} schema columns",
                self.encoding_maps.len(),
                self.schema.len()
            )));
        }
        for (col, enc) in self.schema.columns().iter().zip(&self.encoding_maps) {
            let ok = matches!(
                (col.kind, enc),
                (
                    ColumnKind::BinaryScore | ColumnKind::BinaryFlag,
                    ColumnEncoding::Binary { .. }
                ) | (ColumnKind::Numeric, ColumnEncoding::Numeric { .. })
                    | (ColumnKind::Categorical, ColumnEncoding::Categorical { .. })
                    | (ColumnKind::Target, ColumnEncoding::Target { .. })
                    | (ColumnKind::Ignored, ColumnEncoding::Ignored)
            );
            if !ok {
                return Err(ModelIoError::Inconsistent(format!(
                    "column `{}` has no matching encoding map",
                    col.name
                )));
            }
        }
        if self.encoder().n_features() != self.arch.n_inputs {
            return Err(ModelIoError::Inconsistent(format!(
                "encoding yields {} features, network expects {}",
                self.encoder().n_features(),
                self.arch.n_inputs
            )));
        }
        if self.encoder().scaling() != self.scaling {
            return Err(ModelIoError::Inconsistent(
                "scaling block disagrees with encoding maps".into(),
            ));
        }
        Ok(())
    }

    pub fn encoder(&self) -> FeatureEncoder {
        FeatureEncoder {
            schema: self.schema.clone(),
            columns: self.encoding_maps.clone(),
        }
    }

    pub fn network(&self) -> Network {
        Network::from_weights(self.arch, self.w.clone()).expect("bundle weights are validated")
    }

    pub fn to_json(&self) -> Result<String, ModelIoError> {
        let file = BundleFile {
            format_version: FORMAT_VERSION,
            schema: self.schema.clone(),
            encoding_maps: self.encoding_maps.clone(),
            scaling: self.scaling.clone(),
            arch: ArchFile {
                n_inputs: self.arch.n_inputs,
                order: self.arch.order,
                n_outputs: Architecture::N_OUTPUTS,
            },
            w: self.w.iter().map(|&v| exact_f64::format(v)).collect(),
            class_weights: self.class_weights,
            training_summary: self.training_summary.clone(),
        };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelIoError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value
            .get("format_version")
            .ok_or(ModelIoError::MissingVersion)?
            .as_i64()
            .ok_or(ModelIoError::MissingVersion)?;
        if version != FORMAT_VERSION {
            return Err(ModelIoError::Version {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        let file: BundleFile = serde_json::from_value(value)?;
        if file.arch.n_outputs != Architecture::N_OUTPUTS {
            return Err(ModelIoError::Inconsistent(format!(
                "{} outputs declared, only single-output networks are supported",
                file.arch.n_outputs
            )));
        }
        let arch = Architecture::new(file.arch.n_inputs, file.arch.order)
            .map_err(|e| ModelIoError::Inconsistent(e.to_string()))?;
        if file.w.len() != arch.n_params() {
            return Err(ModelIoError::WeightCount {
                expected: arch.n_params(),
                found: file.w.len(),
            });
        }
        let w = file
            .w
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ModelIoError::BadWeight(t.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let bundle = Self {
            schema: file.schema,
            encoding_maps: file.encoding_maps,
            scaling: file.scaling,
            arch,
            w: DVector::from_vec(w),
            class_weights: file.class_weights,
            training_summary: file.training_summary,
        };
        bundle.check()?;
        Ok(bundle)
    }

    /// Prepares the bundle for scoring many records.
    pub fn scorer(&self) -> Scorer {
        Scorer {
            encoder: self.encoder(),
            net: self.network(),
        }
    }
}

pub fn save(bundle: &ModelBundle, path: impl AsRef<Path>) -> Result<(), ModelIoError> {
    let path = path.as_ref();
    fs::write(path, bundle.to_json()?).map_err(|source| ModelIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load(path: impl AsRef<Path>) -> Result<ModelBundle, ModelIoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ModelIoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ModelBundle::from_json(&text)
}

/// Encoder and network of a loaded bundle.
#[derive(Debug, Clone)]
pub struct Scorer {
    encoder: FeatureEncoder,
    net: Network,
}

impl Scorer {
    /// Probability of the positive class and the decision at `threshold`.
    /// Records with a missing predictor value are refused.
    pub fn score(
        &self,
        record: &[Option<String>],
        threshold: f64,
    ) -> Result<(f64, Prediction), DataError> {
        let features = self.encoder.encode_record(record)?;
        let (p, _) = self
            .net
            .forward(&features)
            .map_err(|e| DataError::Schema(format!("cannot evaluate record: {e}")))?;
        let predicted = if p >= threshold {
            Prediction::Yes
        } else {
            Prediction::No
        };
        Ok((p, predicted))
    }
}

/// Scores one raw record at the default 0.5 threshold.
pub fn score_record(
    bundle: &ModelBundle,
    raw_row: &[Option<String>],
) -> Result<(f64, Prediction), DataError> {
    bundle.scorer().score(raw_row, DEFAULT_THRESHOLD)
}
