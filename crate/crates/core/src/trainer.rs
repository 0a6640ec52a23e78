//! Levenberg-Marquardt training of a [`Network`] on the weighted squared
//! error of the training subset.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{EncodedDataset, Subset};
use crate::error::{NumericError, TrainError};
use crate::loss::ClassWeights;
use crate::network::Network;

/// Smallest damping the schedule will decrease to.
const MIN_DAMPING: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    /// Multiplier applied to the damping on rejection, divisor on acceptance.
    pub damping_factor: f64,
    pub initial_damping: f64,
    pub max_damping: f64,
    pub min_increment_norm: f64,
    pub min_loss_decrease: f64,
    pub loss_goal: f64,
    pub gradient_norm_goal: f64,
    pub max_selection_failures: usize,
    pub max_iterations: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            damping_factor: 10.0,
            initial_damping: 1e-3,
            max_damping: 1e10,
            min_increment_norm: 1e-3,
            min_loss_decrease: 1e-12,
            loss_goal: 1e-12,
            gradient_norm_goal: 1e-3,
            max_selection_failures: 100,
            max_iterations: 1000,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let positive = [
            ("initial_damping", self.initial_damping),
            ("max_damping", self.max_damping),
            ("min_increment_norm", self.min_increment_norm),
            ("min_loss_decrease", self.min_loss_decrease),
            ("loss_goal", self.loss_goal),
            ("gradient_norm_goal", self.gradient_norm_goal),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(TrainError::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.damping_factor > 1.0 && self.damping_factor.is_finite()) {
            return Err(TrainError::Config(format!(
                "damping_factor must exceed 1, got {}",
                self.damping_factor
            )));
        }
        if self.max_damping < self.initial_damping {
            return Err(TrainError::Config(
                "max_damping is below initial_damping".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StoppingReason {
    GradientNormGoal,
    LossGoal,
    MinIncrementNorm,
    MinLossDecrease,
    MaxSelectionFailures,
    MaxIterations,
    MaxDamping,
}

impl fmt::Display for StoppingReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StoppingReason::GradientNormGoal => "Gradient norm goal",
            StoppingReason::LossGoal => "Loss goal",
            StoppingReason::MinIncrementNorm => "Minimum parameters increment norm",
            StoppingReason::MinLossDecrease => "Minimum loss decrease",
            StoppingReason::MaxSelectionFailures => "Maximum selection loss increases",
            StoppingReason::MaxIterations => "Maximum number of iterations",
            StoppingReason::MaxDamping => "Maximum damping parameter",
        })
    }
}

/// One proposed step. Rejected proposals share the iteration number of the
/// step that is eventually accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub training_loss: f64,
    pub selection_loss: Option<f64>,
    pub gradient_norm: f64,
    pub damping: f64,
    pub step_norm: f64,
    pub accepted: bool,
}

/// State of the returned parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalState {
    pub parameters_norm: f64,
    pub final_loss: f64,
    pub final_selection_loss: Option<f64>,
    pub final_gradient_norm: f64,
    /// Accepted steps taken.
    pub iterations: usize,
    pub elapsed_seconds: f64,
    pub stopping_reason: StoppingReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub records: Vec<IterationRecord>,
    pub final_state: FinalState,
}

impl TrainingLog {
    /// Writes the per-iteration records as CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "iteration,training_loss,selection_loss,gradient_norm,damping,step_norm,accepted"
        )?;
        for r in &self.records {
            let sel = r
                .selection_loss
                .map(|v| format!("{v:e}"))
                .unwrap_or_default();
            writeln!(
                out,
                "{},{:e},{},{:e},{:e},{:e},{}",
                r.iteration,
                r.training_loss,
                sel,
                r.gradient_norm,
                r.damping,
                r.step_norm,
                r.accepted
            )?;
        }
        Ok(())
    }
}

/// `J^T J` or `J J^T`, whichever is smaller, ready to be shifted by the
/// damping and factorized.
struct NormalEquations {
    gram: DMatrix<f64>,
    /// `J^T e` in the primal form, `e` in the dual form.
    rhs: DVector<f64>,
    dual: Option<DMatrix<f64>>,
}

impl NormalEquations {
    fn new(e: &DVector<f64>, jac: &DMatrix<f64>) -> Result<Self, NumericError> {
        if jac.nrows() != e.len() {
            return Err(NumericError::Dimension(format!(
                "Jacobian has {} rows for {} residuals",
                jac.nrows(),
                e.len()
            )));
        }
        if jac.iter().chain(e.iter()).any(|v| !v.is_finite()) {
            return Err(NumericError::NonFinite("Jacobian or residuals"));
        }
        let jt = jac.transpose();
        if jac.ncols() <= jac.nrows() {
            Ok(Self {
                gram: &jt * jac,
                rhs: &jt * e,
                dual: None,
            })
        } else {
            // (J^T J + mu I)^-1 J^T = J^T (J J^T + mu I)^-1
            Ok(Self {
                gram: jac * &jt,
                rhs: e.clone(),
                dual: Some(jt),
            })
        }
    }

    fn solve(&self, mu: f64) -> Result<DVector<f64>, NumericError> {
        let mut a = self.gram.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += mu;
        }
        let chol = Cholesky::new(a).ok_or_else(|| {
            NumericError::Solve(format!("matrix not positive definite at damping {mu:e}"))
        })?;
        let z = chol.solve(&self.rhs);
        let step = match &self.dual {
            None => -z,
            Some(jt) => -(jt * z),
        };
        if step.iter().any(|v| !v.is_finite()) {
            return Err(NumericError::Solve("non-finite step".into()));
        }
        Ok(step)
    }
}

/// The damped Gauss-Newton increment `-(J^T J + mu I)^-1 J^T e`.
pub fn lm_step(
    e: &DVector<f64>,
    jac: &DMatrix<f64>,
    mu: f64,
) -> Result<DVector<f64>, NumericError> {
    if mu.is_nan() || mu <= 0.0 {
        return Err(NumericError::InvalidArgument(format!(
            "damping must be positive, got {mu}"
        )));
    }
    NormalEquations::new(e, jac)?.solve(mu)
}

struct Snapshot {
    w: DVector<f64>,
    loss: f64,
    selection_loss: Option<f64>,
    gradient_norm: f64,
}

struct SubsetProblem {
    x: DMatrix<f64>,
    y: Vec<f64>,
    weights: Vec<f64>,
}

impl SubsetProblem {
    fn new(data: &EncodedDataset, subset: Subset, cw: ClassWeights) -> Self {
        let (x, y) = data.subset_view(subset);
        let weights = cw.instance_weights(&y);
        Self { x, y, weights }
    }

    fn loss(&self, net: &Network) -> Result<Option<f64>, NumericError> {
        if self.y.is_empty() {
            return Ok(None);
        }
        Ok(Some(
            net.residuals(&self.x, &self.y, &self.weights)?
                .norm_squared(),
        ))
    }
}

/// Trains a copy of `net` and returns the parameters with the lowest
/// selection loss seen (the last accepted iterate when there is no selection
/// subset).
pub fn train(
    net: &Network,
    data: &EncodedDataset,
    weights: ClassWeights,
    cfg: &TrainingConfig,
) -> Result<(Network, TrainingLog), TrainError> {
    cfg.validate()?;
    let started = Instant::now();
    let training = SubsetProblem::new(data, Subset::Training, weights);
    if training.y.is_empty() {
        return Err(TrainError::EmptyTraining);
    }
    let positives = training.y.iter().filter(|&&t| t > 0.5).count();
    if positives == 0 || positives == training.y.len() {
        return Err(TrainError::SingleClass);
    }
    let selection = SubsetProblem::new(data, Subset::Selection, weights);

    let mut net = net.clone();
    let (mut e, mut jac) = net.residual_jacobian(&training.x, &training.y, &training.weights)?;
    let mut loss = e.norm_squared();
    let mut gradient_norm = 2.0 * (jac.tr_mul(&e)).norm();
    let mut selection_loss = selection.loss(&net)?;
    let mut mu = cfg.initial_damping;
    let mut records = vec![IterationRecord {
        iteration: 0,
        training_loss: loss,
        selection_loss,
        gradient_norm,
        damping: mu,
        step_norm: 0.0,
        accepted: true,
    }];
    let mut best = Snapshot {
        w: net.weights().clone(),
        loss,
        selection_loss,
        gradient_norm,
    };
    let mut iterations = 0;
    let mut selection_failures = 0;

    let diverged =
        |iteration: usize, records: &[IterationRecord], best: &Snapshot| TrainError::Diverged {
            iteration,
            log: Box::new(TrainingLog {
                records: records.to_vec(),
                final_state: FinalState {
                    parameters_norm: best.w.norm(),
                    final_loss: best.loss,
                    final_selection_loss: best.selection_loss,
                    final_gradient_norm: best.gradient_norm,
                    iterations: iteration,
                    elapsed_seconds: started.elapsed().as_secs_f64(),
                    stopping_reason: StoppingReason::MaxIterations,
                },
            }),
        };
    if !loss.is_finite() {
        return Err(diverged(0, &records, &best));
    }

    let reason = loop {
        if loss <= cfg.loss_goal {
            break StoppingReason::LossGoal;
        }
        if gradient_norm <= cfg.gradient_norm_goal {
            break StoppingReason::GradientNormGoal;
        }
        if iterations >= cfg.max_iterations {
            break StoppingReason::MaxIterations;
        }

        let normal = NormalEquations::new(&e, &jac)?;
        let mut accepted = None;
        while mu <= cfg.max_damping {
            if let Ok(step) = normal.solve(mu) {
                let candidate = net.weights() + &step;
                let trial = Network::from_weights(net.arch(), candidate.clone())
                    .and_then(|n| n.residuals(&training.x, &training.y, &training.weights));
                let step_norm = step.norm();
                match trial {
                    Ok(r) if r.norm_squared() < loss => {
                        accepted = Some((candidate, step_norm));
                        break;
                    }
                    Ok(r) => records.push(IterationRecord {
                        iteration: iterations + 1,
                        training_loss: r.norm_squared(),
                        selection_loss: None,
                        gradient_norm,
                        damping: mu,
                        step_norm,
                        accepted: false,
                    }),
                    Err(_) => {}
                }
            }
            mu *= cfg.damping_factor;
        }
        let Some((w_new, step_norm)) = accepted else {
            break StoppingReason::MaxDamping;
        };
        let damping_used = mu;
        mu = (mu / cfg.damping_factor).max(MIN_DAMPING);
        iterations += 1;

        net.set_weights(w_new);
        (e, jac) = net.residual_jacobian(&training.x, &training.y, &training.weights)?;
        let new_loss = e.norm_squared();
        if !new_loss.is_finite() {
            return Err(diverged(iterations, &records, &best));
        }
        let decrease = loss - new_loss;
        loss = new_loss;
        gradient_norm = 2.0 * (jac.tr_mul(&e)).norm();
        selection_loss = selection.loss(&net)?;

        records.push(IterationRecord {
            iteration: iterations,
            training_loss: loss,
            selection_loss,
            gradient_norm,
            damping: damping_used,
            step_norm,
            accepted: true,
        });

        let improved = match (selection_loss, best.selection_loss) {
            (Some(s), Some(b)) => {
                if s > b {
                    selection_failures += 1;
                }
                s < b
            }
            _ => true,
        };
        if improved {
            best = Snapshot {
                w: net.weights().clone(),
                loss,
                selection_loss,
                gradient_norm,
            };
        }

        if step_norm < cfg.min_increment_norm {
            break StoppingReason::MinIncrementNorm;
        }
        if decrease < cfg.min_loss_decrease {
            break StoppingReason::MinLossDecrease;
        }
        if selection_failures >= cfg.max_selection_failures {
            break StoppingReason::MaxSelectionFailures;
        }
    };

    let elapsed = (started.elapsed().as_secs_f64() * 1000.0).round() / 1000.0;
    net.set_weights(best.w.clone());
    let log = TrainingLog {
        records,
        final_state: FinalState {
            parameters_norm: best.w.norm(),
            final_loss: best.loss,
            final_selection_loss: best.selection_loss,
            final_gradient_norm: best.gradient_norm,
            iterations,
            elapsed_seconds: elapsed,
            stopping_reason: reason,
        },
    };
    Ok((net, log))
}
