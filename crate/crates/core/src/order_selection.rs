//! Incremental order selection: train networks of growing hidden-layer size
//! and keep the one with the lowest selection loss.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::EncodedDataset;
use crate::error::TrainError;
use crate::loss::ClassWeights;
use crate::network::{Architecture, Network};
use crate::trainer::{train, TrainingConfig, TrainingLog};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSelectionConfig {
    pub min_order: usize,
    pub max_order: usize,
    pub trials_per_order: usize,
    pub trainer: TrainingConfig,
    pub seed: u64,
    /// Worker threads for candidate trainings; 0 uses the available parallelism.
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for OrderSelectionConfig {
    fn default() -> Self {
        Self {
            min_order: 1,
            max_order: 10,
            trials_per_order: 3,
            trainer: TrainingConfig::default(),
            seed: 1,
            jobs: 0,
        }
    }
}

impl OrderSelectionConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.min_order < 1 {
            return Err(TrainError::Config("min_order must be at least 1".into()));
        }
        if self.max_order < self.min_order {
            return Err(TrainError::Config(format!(
                "max_order {} is below min_order {}",
                self.max_order, self.min_order
            )));
        }
        if self.trials_per_order < 1 {
            return Err(TrainError::Config(
                "trials_per_order must be at least 1".into(),
            ));
        }
        self.trainer.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRecord {
    pub order: usize,
    /// Training loss of the kept trial.
    pub best_training_loss: f64,
    /// Selection loss of the kept trial (the lowest over trials).
    pub best_selection_loss: f64,
    /// Accepted iterations summed over the trials of this order.
    pub iterations_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSelectionResult {
    pub records: Vec<OrderRecord>,
    pub optimal_order: usize,
    pub optimum_training_loss: f64,
    pub optimum_selection_loss: f64,
    pub total_iterations: usize,
    /// Training log of the selected network.
    #[serde(skip)]
    pub selected_log: Option<TrainingLog>,
}

impl OrderSelectionResult {
    /// Writes `order,training_loss,selection_loss` rows.
    pub fn write_history_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "order,training_loss,selection_loss")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{:e},{:e}",
                r.order, r.best_training_loss, r.best_selection_loss
            )?;
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Initialization seed of one candidate network.
pub fn trial_seed(seed: u64, order: usize, trial: usize) -> u64 {
    splitmix64(seed ^ splitmix64(((order as u64) << 32) | trial as u64))
}

struct Candidate {
    order: usize,
    trial: usize,
    net: Network,
    log: TrainingLog,
}

impl Candidate {
    /// Selection loss, or training loss when there is no selection subset.
    fn score(&self) -> f64 {
        let f = &self.log.final_state;
        f.final_selection_loss.unwrap_or(f.final_loss)
    }
}

/// Sweeps every order in `[min_order, max_order]`. Ties go to the smaller
/// order, and within an order to the earlier trial.
pub fn select_order(
    data: &EncodedDataset,
    weights: ClassWeights,
    cfg: &OrderSelectionConfig,
) -> Result<(Network, OrderSelectionResult), TrainError> {
    cfg.validate()?;
    let n_inputs = data.n_features();
    let jobs: Vec<(usize, usize)> = (cfg.min_order..=cfg.max_order)
        .flat_map(|order| (0..cfg.trials_per_order).map(move |trial| (order, trial)))
        .collect();

    let run = |&(order, trial): &(usize, usize)| -> Result<Candidate, TrainError> {
        let annotate = |e: TrainError| TrainError::Candidate {
            order,
            trial,
            source: Box::new(e),
        };
        let arch = Architecture::new(n_inputs, order).map_err(|e| annotate(e.into()))?;
        let init = Network::init(arch, trial_seed(cfg.seed, order, trial));
        let (net, log) = train(&init, data, weights, &cfg.trainer).map_err(annotate)?;
        Ok(Candidate {
            order,
            trial,
            net,
            log,
        })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| TrainError::Config(format!("cannot start worker pool: {e}")))?;
    let candidates: Vec<Candidate> =
        pool.install(|| jobs.par_iter().map(run).collect::<Result<_, _>>())?;

    let mut records = Vec::new();
    let mut kept: Vec<&Candidate> = Vec::new();
    for order in cfg.min_order..=cfg.max_order {
        let trials: Vec<&Candidate> = candidates.iter().filter(|c| c.order == order).collect();
        let best = trials
            .iter()
            .copied()
            .reduce(|a, b| if b.score() < a.score() { b } else { a })
            .expect("at least one trial per order");
        debug_assert!(trials
            .iter()
            .all(|c| c.trial >= best.trial || c.score() > best.score()));
        records.push(OrderRecord {
            order,
            best_training_loss: best.log.final_state.final_loss,
            best_selection_loss: best.score(),
            iterations_used: trials.iter().map(|c| c.log.final_state.iterations).sum(),
        });
        kept.push(best);
    }
    let winner = kept
        .iter()
        .copied()
        .reduce(|a, b| if b.score() < a.score() { b } else { a })
        .expect("at least one order");

    let result = OrderSelectionResult {
        optimal_order: winner.order,
        optimum_training_loss: winner.log.final_state.final_loss,
        optimum_selection_loss: winner.score(),
        total_iterations: candidates
            .iter()
            .map(|c| c.log.final_state.iterations)
            .sum(),
        selected_log: Some(winner.log.clone()),
        records,
    };
    Ok((winner.net.clone(), result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Subset;
    use nalgebra::DMatrix;

    fn tiny(seed: u64) -> EncodedDataset {
        let x = DMatrix::from_fn(30, 2, |i, j| {
            ((i * 13 + j * 7 + seed as usize) % 11) as f64 / 5.0 - 1.0
        });
        let y = (0..30)
            .map(|i| f64::from(u8::from(x[(i, 0)] + 0.3 * x[(i, 1)] > 0.0)))
            .collect();
        let subset = (0..30)
            .map(|i| {
                if i % 3 == 0 {
                    Subset::Selection
                } else {
                    Subset::Training
                }
            })
            .collect();
        EncodedDataset::from_matrix(x, y, subset).unwrap()
    }

    #[test]
    fn single_candidate_order() {
        let cfg = OrderSelectionConfig {
            min_order: 1,
            max_order: 1,
            trials_per_order: 2,
            ..Default::default()
        };
        let (net, res) = select_order(&tiny(0), ClassWeights::BALANCED, &cfg).unwrap();
        assert_eq!(res.optimal_order, 1);
        assert_eq!(net.arch().order, 1);
        assert_eq!(res.records.len(), 1);
    }

    #[test]
    fn seeds_differ_per_candidate() {
        let mut seen = std::collections::HashSet::new();
        for order in 1..=10 {
            for trial in 0..3 {
                assert!(seen.insert(trial_seed(1, order, trial)));
            }
        }
    }

    #[test]
    fn selected_is_minimum_and_deterministic() {
        let cfg = OrderSelectionConfig {
            max_order: 3,
            trials_per_order: 2,
            seed: 5,
            ..Default::default()
        };
        let data = tiny(3);
        let (net_a, a) = select_order(&data, ClassWeights::BALANCED, &cfg).unwrap();
        let (net_b, b) = select_order(&data, ClassWeights::BALANCED, &cfg).unwrap();
        assert_eq!(net_a, net_b);
        assert_eq!(a.records, b.records);
        let min = a
            .records
            .iter()
            .map(|r| r.best_selection_loss)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(a.optimum_selection_loss, min);
        let first_min = a
            .records
            .iter()
            .find(|r| r.best_selection_loss == min)
            .unwrap();
        assert_eq!(first_min.order, a.optimal_order);
    }

    #[test]
    fn invalid_configs() {
        let data = tiny(0);
        for cfg in [
            OrderSelectionConfig {
                min_order: 0,
                ..Default::default()
            },
            OrderSelectionConfig {
                min_order: 3,
                max_order: 2,
                ..Default::default()
            },
            OrderSelectionConfig {
                trials_per_order: 0,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                select_order(&data, ClassWeights::BALANCED, &cfg),
                Err(TrainError::Config(_))
            ));
        }
    }

    #[test]
    fn trainer_errors_are_annotated() {
        let x = DMatrix::from_element(6, 1, 1.0);
        let data = EncodedDataset::from_matrix(x, vec![1.0; 6], vec![Subset::Training; 6]).unwrap();
        let cfg = OrderSelectionConfig {
            max_order: 1,
            ..Default::default()
        };
        match select_order(&data, ClassWeights::BALANCED, &cfg) {
            Err(TrainError::Candidate {
                order: 1, trial: 0, ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
