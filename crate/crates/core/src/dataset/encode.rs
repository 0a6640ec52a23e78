use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::raw::RawTable;
use super::schema::{ColumnKind, Schema};
use super::split::Subset;
use crate::error::DataError;

/// Token map shared by every binary column: `{no, 0, f, NO} -> 0` and
/// `{yes, 1, m, YES} -> 1`.
pub fn default_binary_tokens() -> BTreeMap<String, u8> {
    [
        ("no", 0),
        ("0", 0),
        ("f", 0),
        ("NO", 0),
        ("yes", 1),
        ("1", 1),
        ("m", 1),
        ("YES", 1),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Per-column conversion from text to features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ColumnEncoding {
    Binary {
        tokens: BTreeMap<String, u8>,
    },
    /// `(x - mean) / std_dev`, or 0 when `std_dev == 0`.
    Numeric {
        #[serde(with = "crate::model_io::exact_f64")]
        mean: f64,
        #[serde(with = "crate::model_io::exact_f64")]
        std_dev: f64,
    },
    /// Categories in lexicographic order. One category gives a constant-0
    /// feature, two give a single 0/1 feature, three or more are one-hot.
    Categorical {
        categories: Vec<String>,
    },
    Target {
        tokens: BTreeMap<String, u8>,
    },
    Ignored,
}

impl ColumnEncoding {
    pub fn width(&self) -> usize {
        match self {
            ColumnEncoding::Binary { .. } | ColumnEncoding::Numeric { .. } => 1,
            ColumnEncoding::Categorical { categories } => {
                if categories.len() <= 2 {
                    1
                } else {
                    categories.len()
                }
            }
            ColumnEncoding::Target { .. } | ColumnEncoding::Ignored => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericScaling {
    pub column: String,
    #[serde(with = "crate::model_io::exact_f64")]
    pub mean: f64,
    #[serde(with = "crate::model_io::exact_f64")]
    pub std_dev: f64,
}

/// Standardization statistics of every numeric column, fit on training rows.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScalingParams {
    pub columns: Vec<NumericScaling>,
}

impl ScalingParams {
    pub fn apply(mean: f64, std_dev: f64, x: f64) -> f64 {
        if std_dev == 0.0 {
            0.0
        } else {
            (x - mean) / std_dev
        }
    }
}

/// The fitted text-to-vector pipeline for one schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub schema: Schema,
    pub columns: Vec<ColumnEncoding>,
}

impl FeatureEncoder {
    pub fn n_features(&self) -> usize {
        self.columns.iter().map(ColumnEncoding::width).sum()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_features());
        for (col, enc) in self.schema.columns().iter().zip(&self.columns) {
            match enc {
                ColumnEncoding::Binary { .. } | ColumnEncoding::Numeric { .. } => {
                    names.push(col.name.clone())
                }
                ColumnEncoding::Categorical { categories } => match categories.len() {
                    0 => {}
                    1 => names.push(format!("{}={}", col.name, categories[0])),
                    2 => names.push(format!("{}={}", col.name, categories[1])),
                    _ => names.extend(categories.iter().map(|c| format!("{}={c}", col.name))),
                },
                ColumnEncoding::Target { .. } | ColumnEncoding::Ignored => {}
            }
        }
        names
    }

    pub fn scaling(&self) -> ScalingParams {
        let columns = self
            .schema
            .columns()
            .iter()
            .zip(&self.columns)
            .filter_map(|(col, enc)| match enc {
                ColumnEncoding::Numeric { mean, std_dev } => Some(NumericScaling {
                    column: col.name.clone(),
                    mean: *mean,
                    std_dev: *std_dev,
                }),
                _ => None,
            })
            .collect();
        ScalingParams { columns }
    }

    /// Encodes the predictor cells of one record. Fails on a missing predictor
    /// cell, an unknown binary token, a non-numeric number or an unseen
    /// category.
    pub fn encode_record(&self, cells: &[Option<String>]) -> Result<Vec<f64>, DataError> {
        self.encode_cells(cells, None)
    }

    /// Decodes the target cell of one record.
    pub fn encode_target(&self, cells: &[Option<String>], row: usize) -> Result<f64, DataError> {
        let t = self.schema.target_index();
        let col = &self.schema.columns()[t];
        let ColumnEncoding::Target { tokens } = &self.columns[t] else {
            unreachable!("target column always has a target encoding")
        };
        let token = cells[t].as_deref().ok_or_else(|| DataError::MissingValue {
            column: col.name.clone(),
        })?;
        tokens
            .get(token)
            .map(|&v| f64::from(v))
            .ok_or_else(|| DataError::UnknownToken {
                column: col.name.clone(),
                row,
                token: token.to_string(),
            })
    }

    fn encode_cells(
        &self,
        cells: &[Option<String>],
        row: Option<usize>,
    ) -> Result<Vec<f64>, DataError> {
        if cells.len() != self.schema.len() {
            return Err(DataError::Arity {
                expected: self.schema.len(),
                found: cells.len(),
            });
        }
        let mut out = Vec::with_capacity(self.n_features());
        for ((col, enc), cell) in self.schema.columns().iter().zip(&self.columns).zip(cells) {
            if !col.kind.is_predictor() {
                continue;
            }
            let token = cell.as_deref().ok_or_else(|| DataError::MissingValue {
                column: col.name.clone(),
            })?;
            match enc {
                ColumnEncoding::Binary { tokens } => {
                    let v = tokens.get(token).ok_or_else(|| DataError::UnknownToken {
                        column: col.name.clone(),
                        row: row.unwrap_or(0),
                        token: token.to_string(),
                    })?;
                    out.push(f64::from(*v));
                }
                ColumnEncoding::Numeric { mean, std_dev } => {
                    let x = parse_number(token, &col.name, row.unwrap_or(0))?;
                    out.push(ScalingParams::apply(*mean, *std_dev, x));
                }
                ColumnEncoding::Categorical { categories } => {
                    let idx = categories
                        .binary_search_by(|c| c.as_str().cmp(token))
                        .map_err(|_| DataError::UnseenCategory {
                            column: col.name.clone(),
                            token: token.to_string(),
                        })?;
                    match categories.len() {
                        1 => out.push(0.0),
                        2 => out.push(idx as f64),
                        k => out.extend((0..k).map(|i| if i == idx { 1.0 } else { 0.0 })),
                    }
                }
                ColumnEncoding::Target { .. } | ColumnEncoding::Ignored => {}
            }
        }
        Ok(out)
    }
}

fn parse_number(token: &str, column: &str, row: usize) -> Result<f64, DataError> {
    token
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| DataError::NotNumeric {
            column: column.to_string(),
            row,
            token: token.to_string(),
        })
}

/// Numeric design matrix with labels and subset membership.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    /// `n_instances x n_features`; rows of unused instances are zero.
    pub x: DMatrix<f64>,
    /// 0.0 or 1.0 per instance.
    pub y: Vec<f64>,
    pub subset: Vec<Subset>,
    pub feature_names: Vec<String>,
    /// `None` for datasets assembled directly from matrices.
    pub encoder: Option<FeatureEncoder>,
    /// `(row, original subset)` for every row dropped for missing values.
    pub dropped: Vec<(usize, Subset)>,
    pub warnings: Vec<String>,
}

impl EncodedDataset {
    /// Wraps an already numeric problem. Targets must be 0 or 1.
    pub fn from_matrix(
        x: DMatrix<f64>,
        y: Vec<f64>,
        subset: Vec<Subset>,
    ) -> Result<Self, DataError> {
        if x.nrows() != y.len() || y.len() != subset.len() {
            return Err(DataError::AssignmentLength {
                assignment: subset.len(),
                rows: x.nrows(),
            });
        }
        if let Some(bad) = y.iter().find(|&&t| t != 0.0 && t != 1.0) {
            return Err(DataError::Schema(format!("target {bad} is not 0 or 1")));
        }
        let feature_names = (0..x.ncols()).map(|j| format!("x{j}")).collect();
        Ok(Self {
            x,
            y,
            subset,
            feature_names,
            encoder: None,
            dropped: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn n_instances(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn rows(&self, subset: Subset) -> Vec<usize> {
        (0..self.n_instances())
            .filter(|&i| self.subset[i] == subset)
            .collect()
    }

    /// Copies the rows of one subset into a fresh matrix and target vector.
    pub fn subset_view(&self, subset: Subset) -> (DMatrix<f64>, Vec<f64>) {
        let rows = self.rows(subset);
        let x = self.x.select_rows(rows.iter());
        let y = rows.iter().map(|&i| self.y[i]).collect();
        (x, y)
    }

    /// `(n_negative, n_positive)` in one subset.
    pub fn class_counts(&self, subset: Subset) -> (usize, usize) {
        self.y
            .iter()
            .zip(&self.subset)
            .filter(|(_, &s)| s == subset)
            .fold((0, 0), |(neg, pos), (&t, _)| {
                if t > 0.5 {
                    (neg, pos + 1)
                } else {
                    (neg + 1, pos)
                }
            })
    }

    pub fn scaling(&self) -> ScalingParams {
        self.encoder
            .as_ref()
            .map(FeatureEncoder::scaling)
            .unwrap_or_default()
    }
}

/// Turns a raw table into a numeric dataset.
///
/// Rows with any missing cell become [`Subset::Unused`]. Categories are
/// collected over the full table; numeric statistics use complete training
/// rows only.
pub fn encode(
    raw: &RawTable,
    schema: &Schema,
    assignment: &[Subset],
) -> Result<EncodedDataset, DataError> {
    if assignment.len() != raw.len() {
        return Err(DataError::AssignmentLength {
            assignment: assignment.len(),
            rows: raw.len(),
        });
    }
    if raw.header.len() != schema.len() {
        return Err(DataError::Arity {
            expected: schema.len(),
            found: raw.header.len(),
        });
    }

    let mut subset = assignment.to_vec();
    let mut dropped = Vec::new();
    for (i, s) in subset.iter_mut().enumerate() {
        if raw.row_has_missing(i) {
            dropped.push((i, *s));
            *s = Subset::Unused;
        }
    }

    let mut warnings = Vec::new();
    let mut columns = Vec::with_capacity(schema.len());
    for (ci, col) in schema.columns().iter().enumerate() {
        let cells = raw.rows.iter().map(|r| r[ci].as_deref());
        let enc = match col.kind {
            ColumnKind::BinaryScore | ColumnKind::BinaryFlag => ColumnEncoding::Binary {
                tokens: default_binary_tokens(),
            },
            ColumnKind::Target => ColumnEncoding::Target {
                tokens: default_binary_tokens(),
            },
            ColumnKind::Ignored => ColumnEncoding::Ignored,
            ColumnKind::Categorical => {
                let categories: Vec<String> = cells
                    .flatten()
                    .map(str::to_string)
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                if categories.len() <= 1 {
                    let msg = format!(
                        "column `{}` has {} observed categor{}; encoded as a constant 0 feature",
                        col.name,
                        categories.len(),
                        if categories.len() == 1 { "y" } else { "ies" }
                    );
                    warn!("{msg}");
                    warnings.push(msg);
                }
                ColumnEncoding::Categorical { categories }
            }
            ColumnKind::Numeric => {
                let mut values = Vec::new();
                for (row, cell) in cells.enumerate() {
                    if subset[row] == Subset::Training {
                        let token = cell.expect("complete rows have every cell");
                        values.push(parse_number(token, &col.name, row)?);
                    }
                }
                let (mean, std_dev) = mean_std(&values);
                ColumnEncoding::Numeric { mean, std_dev }
            }
        };
        columns.push(enc);
    }
    let encoder = FeatureEncoder {
        schema: schema.clone(),
        columns,
    };
    let mut ds = encode_rows(encoder, raw, subset)?;
    ds.dropped = dropped;
    ds.warnings = warnings;
    Ok(ds)
}

/// Encodes a raw table with an existing encoder, e.g. one restored from a
/// model file. Rows with any missing cell become [`Subset::Unused`].
pub fn encode_with(
    encoder: &FeatureEncoder,
    raw: &RawTable,
    assignment: &[Subset],
) -> Result<EncodedDataset, DataError> {
    if assignment.len() != raw.len() {
        return Err(DataError::AssignmentLength {
            assignment: assignment.len(),
            rows: raw.len(),
        });
    }
    let mut subset = assignment.to_vec();
    let mut dropped = Vec::new();
    for (i, s) in subset.iter_mut().enumerate() {
        if raw.row_has_missing(i) {
            dropped.push((i, *s));
            *s = Subset::Unused;
        }
    }
    let mut ds = encode_rows(encoder.clone(), raw, subset)?;
    ds.dropped = dropped;
    Ok(ds)
}

fn encode_rows(
    encoder: FeatureEncoder,
    raw: &RawTable,
    subset: Vec<Subset>,
) -> Result<EncodedDataset, DataError> {
    let n = raw.len();
    let d = encoder.n_features();
    let mut x = DMatrix::zeros(n, d);
    let mut y = vec![0.0; n];
    for (i, cells) in raw.rows.iter().enumerate() {
        if subset[i] == Subset::Unused {
            continue;
        }
        let features = encoder.encode_cells(cells, Some(i))?;
        for (j, v) in features.into_iter().enumerate() {
            x[(i, j)] = v;
        }
        y[i] = encoder.encode_target(cells, i)?;
    }

    Ok(EncodedDataset {
        x,
        y,
        subset,
        feature_names: encoder.feature_names(),
        encoder: Some(encoder),
        dropped: Vec::new(),
        warnings: Vec::new(),
    })
}

/// Population mean and standard deviation; `(0, 0)` for an empty slice.
fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
