//! Error measures for binary outputs and the class weights behind the
//! weighted squared error loss index.

use serde::{Deserialize, Serialize};

use crate::error::NumericError;

pub const DEFAULT_MINKOWSKI_EXPONENT: f64 = 1.5;
const CROSS_ENTROPY_CLAMP: f64 = 1e-12;

/// Per-class weights; the negative class always weighs 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub positive: f64,
    pub negative: f64,
}

impl ClassWeights {
    pub const BALANCED: ClassWeights = ClassWeights {
        positive: 1.0,
        negative: 1.0,
    };

    pub fn weight(&self, target: f64) -> f64 {
        if target > 0.5 {
            self.positive
        } else {
            self.negative
        }
    }

    /// Per-instance weights for a target vector.
    pub fn instance_weights(&self, targets: &[f64]) -> Vec<f64> {
        targets.iter().map(|&t| self.weight(t)).collect()
    }
}

/// `positive = #negatives / #positives` over the training targets.
pub fn class_weights(y_train: &[f64]) -> Result<ClassWeights, NumericError> {
    let positives = y_train.iter().filter(|&&t| t > 0.5).count();
    let negatives = y_train.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(NumericError::SingleClass);
    }
    Ok(ClassWeights {
        positive: negatives as f64 / positives as f64,
        negative: 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub sse: f64,
    pub mse: f64,
    pub rmse: f64,
    pub nse: f64,
    pub cross_entropy: f64,
    pub minkowski: f64,
    pub weighted_squared: f64,
}

impl ErrorReport {
    pub const NAMES: [&'static str; 7] = [
        "Sum squared error",
        "Mean squared error",
        "Root mean squared error",
        "Normalized squared error",
        "Cross-entropy error",
        "Minkowski error",
        "Weighted squared error",
    ];

    pub fn values(&self) -> [f64; 7] {
        [
            self.sse,
            self.mse,
            self.rmse,
            self.nse,
            self.cross_entropy,
            self.minkowski,
            self.weighted_squared,
        ]
    }
}

fn check_lengths(outputs: &[f64], targets: &[f64]) -> Result<(), NumericError> {
    if outputs.len() != targets.len() {
        return Err(NumericError::Dimension(format!(
            "{} outputs for {} targets",
            outputs.len(),
            targets.len()
        )));
    }
    if outputs.is_empty() {
        return Err(NumericError::Empty);
    }
    Ok(())
}

/// `sum w(t) (o - t)^2 / sum w(t)`.
pub fn weighted_squared_error(
    outputs: &[f64],
    targets: &[f64],
    weights: ClassWeights,
) -> Result<f64, NumericError> {
    check_lengths(outputs, targets)?;
    let (num, den) = outputs
        .iter()
        .zip(targets)
        .fold((0.0, 0.0), |(num, den), (o, &t)| {
            let w = weights.weight(t);
            (num + w * (o - t) * (o - t), den + w)
        });
    Ok(num / den)
}

pub fn error_report(
    outputs: &[f64],
    targets: &[f64],
    weights: ClassWeights,
) -> Result<ErrorReport, NumericError> {
    error_report_with_exponent(outputs, targets, weights, DEFAULT_MINKOWSKI_EXPONENT)
}

pub fn error_report_with_exponent(
    outputs: &[f64],
    targets: &[f64],
    weights: ClassWeights,
    minkowski_exponent: f64,
) -> Result<ErrorReport, NumericError> {
    check_lengths(outputs, targets)?;
    let n = outputs.len() as f64;
    let mean_target = targets.iter().sum::<f64>() / n;
    let target_ss: f64 = targets.iter().map(|t| (t - mean_target).powi(2)).sum();
    if target_ss == 0.0 {
        return Err(NumericError::ConstantTargets);
    }

    let sse: f64 = outputs
        .iter()
        .zip(targets)
        .map(|(o, t)| (o - t).powi(2))
        .sum();
    let mse = sse / n;
    let cross_entropy = -outputs
        .iter()
        .zip(targets)
        .map(|(&o, &t)| {
            let o = o.clamp(CROSS_ENTROPY_CLAMP, 1.0 - CROSS_ENTROPY_CLAMP);
            t * o.ln() + (1.0 - t) * (1.0 - o).ln()
        })
        .sum::<f64>()
        / n;
    let minkowski = outputs
        .iter()
        .zip(targets)
        .map(|(o, t)| (o - t).abs().powf(minkowski_exponent))
        .sum::<f64>()
        / n;

    Ok(ErrorReport {
        sse,
        mse,
        rmse: mse.sqrt(),
        nse: sse / target_ss,
        cross_entropy,
        minkowski,
        weighted_squared: weighted_squared_error(outputs, targets, weights)?,
    })
}
