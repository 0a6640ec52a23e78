//! Binary classifier evaluation: confusion table, ROC with AUC, cumulative
//! gain and lift.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::NumericError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionTable {
    #[serde(flatten)]
    pub counts: ConfusionCounts,
    pub threshold: f64,
}

impl ConfusionTable {
    pub fn total(&self) -> usize {
        let c = self.counts;
        c.tp + c.fn_ + c.fp + c.tn
    }
}

fn check(outputs: &[f64], targets: &[f64]) -> Result<(), NumericError> {
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

fn check_both_classes(outputs: &[f64], targets: &[f64]) -> Result<(usize, usize), NumericError> {
    check(outputs, targets)?;
    let pos = targets.iter().filter(|&&t| t > 0.5).count();
    let neg = targets.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(NumericError::SingleClass);
    }
    Ok((pos, neg))
}

/// Tallies predictions against targets; an output equal to the threshold is
/// predicted positive.
pub fn confusion(
    outputs: &[f64],
    targets: &[f64],
    threshold: f64,
) -> Result<ConfusionTable, NumericError> {
    check(outputs, targets)?;
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(NumericError::InvalidArgument(format!(
            "threshold {threshold} outside (0, 1)"
        )));
    }
    let mut c = ConfusionCounts {
        tp: 0,
        fn_: 0,
        fp: 0,
        tn: 0,
    };
    for (&o, &t) in outputs.iter().zip(targets) {
        match (o >= threshold, t > 0.5) {
            (true, true) => c.tp += 1,
            (false, true) => c.fn_ += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(ConfusionTable {
        counts: c,
        threshold,
    })
}

/// Percentage of correct predictions.
pub fn accuracy(table: &ConfusionTable) -> Result<f64, NumericError> {
    let total = table.total();
    if total == 0 {
        return Err(NumericError::Empty);
    }
    Ok(100.0 * (table.counts.tp + table.counts.tn) as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// Rule used to pick the operating point on the ROC curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdRule {
    /// Closest point to the perfect-classifier corner (0, 1).
    #[default]
    CornerDistance,
    /// Largest `tpr - fpr`.
    Youden,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub optimal_threshold: f64,
}

impl RocCurve {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "fpr,tpr,threshold")?;
        for p in &self.points {
            writeln!(out, "{},{},{}", p.fpr, p.tpr, p.threshold)?;
        }
        Ok(())
    }
}

pub fn roc(outputs: &[f64], targets: &[f64]) -> Result<RocCurve, NumericError> {
    roc_with_rule(outputs, targets, ThresholdRule::CornerDistance)
}

/// ROC curve swept over the distinct outputs, from a threshold above every
/// output (point `(0, 0)`) down to 0 (point `(1, 1)`).
pub fn roc_with_rule(
    outputs: &[f64],
    targets: &[f64],
    rule: ThresholdRule,
) -> Result<RocCurve, NumericError> {
    let (pos, neg) = check_both_classes(outputs, targets)?;
    if outputs.iter().any(|o| !o.is_finite()) {
        return Err(NumericError::NonFinite("outputs"));
    }
    let mut order: Vec<usize> = (0..outputs.len()).collect();
    order.sort_by(|&a, &b| outputs[b].total_cmp(&outputs[a]));

    let max = outputs[order[0]];
    let above = if max < 1.0 { 1.0 } else { max.next_up() };
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: above,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = outputs[order[i]];
        while i < order.len() && outputs[order[i]] == threshold {
            if targets[order[i]] > 0.5 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold,
        });
    }
    let min = outputs[order[order.len() - 1]];
    let below = if min > 0.0 { 0.0 } else { min.next_down() };
    points.push(RocPoint {
        fpr: 1.0,
        tpr: 1.0,
        threshold: below,
    });

    let auc = points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum();

    // points run from high to low threshold; `<` keeps the first (higher) on ties
    let score = |p: &RocPoint| match rule {
        ThresholdRule::CornerDistance => (p.fpr * p.fpr + (1.0 - p.tpr) * (1.0 - p.tpr)).sqrt(),
        ThresholdRule::Youden => -(p.tpr - p.fpr),
    };
    let best = points
        .iter()
        .skip(1)
        .take(points.len() - 2)
        .fold(None::<&RocPoint>, |acc, p| match acc {
            Some(a) if score(a) <= score(p) => Some(a),
            _ => Some(p),
        })
        .expect("at least one interior point");

    Ok(RocCurve {
        optimal_threshold: best.threshold,
        points,
        auc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainPoint {
    pub ratio: f64,
    pub positive_gain: f64,
    pub negative_gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftPoint {
    pub ratio: f64,
    pub lift: f64,
}

/// Cumulative gain for both classes and the lift of the positive class, one
/// point per rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainLiftCurves {
    pub gain: Vec<GainPoint>,
    pub lift: Vec<LiftPoint>,
    pub max_gain_score: f64,
    pub max_gain_ratio: f64,
}

impl GainLiftCurves {
    /// Values at `ratio = j / points` for `j = 1..=points`, read off the step
    /// function at rank `ceil(ratio * n)`.
    pub fn downsample(&self, points: usize) -> GainLiftCurves {
        let n = self.gain.len();
        let rank = |j: usize| ((j * n).div_ceil(points)).clamp(1, n) - 1;
        let gain = (1..=points)
            .map(|j| GainPoint {
                ratio: j as f64 / points as f64,
                ..self.gain[rank(j)]
            })
            .collect();
        let lift = (1..=points)
            .map(|j| {
                let g = self.gain[rank(j)];
                LiftPoint {
                    ratio: j as f64 / points as f64,
                    lift: g.positive_gain / g.ratio,
                }
            })
            .collect();
        GainLiftCurves {
            gain,
            lift,
            max_gain_score: self.max_gain_score,
            max_gain_ratio: self.max_gain_ratio,
        }
    }

    pub fn write_gain_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "ratio,positive_gain,negative_gain")?;
        for p in &self.gain {
            writeln!(out, "{},{},{}", p.ratio, p.positive_gain, p.negative_gain)?;
        }
        Ok(())
    }

    pub fn write_lift_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "ratio,lift")?;
        for p in &self.lift {
            writeln!(out, "{},{}", p.ratio, p.lift)?;
        }
        Ok(())
    }
}

pub fn gain_lift(outputs: &[f64], targets: &[f64]) -> Result<GainLiftCurves, NumericError> {
    let (pos, neg) = check_both_classes(outputs, targets)?;
    let n = outputs.len();
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps original index order among equal outputs
    order.sort_by(|&a, &b| outputs[b].total_cmp(&outputs[a]));

    let mut gain = Vec::with_capacity(n);
    let mut lift = Vec::with_capacity(n);
    let (mut found_pos, mut found_neg) = (0usize, 0usize);
    let mut max_gain_score = f64::NEG_INFINITY;
    let mut max_gain_ratio = 0.0;
    for (k, &idx) in order.iter().enumerate() {
        if targets[idx] > 0.5 {
            found_pos += 1;
        } else {
            found_neg += 1;
        }
        let ratio = (k + 1) as f64 / n as f64;
        let positive_gain = found_pos as f64 / pos as f64;
        let negative_gain = found_neg as f64 / neg as f64;
        let score = positive_gain - negative_gain;
        if score > max_gain_score {
            max_gain_score = score;
            max_gain_ratio = ratio;
        }
        gain.push(GainPoint {
            ratio,
            positive_gain,
            negative_gain,
        });
        lift.push(LiftPoint {
            ratio,
            lift: positive_gain / ratio,
        });
    }
    Ok(GainLiftCurves {
        gain,
        lift,
        max_gain_score,
        max_gain_ratio,
    })
}
