//! Trains a one-unit network on a separable two-feature problem and prints the
//! iteration log.

use lmnet::dataset::{EncodedDataset, Subset};
use lmnet::loss::ClassWeights;
use lmnet::network::{Architecture, Network};
use lmnet::trainer::{train, TrainingConfig};
use nalgebra::DMatrix;

fn main() -> anyhow::Result<()> {
    let n = 20;
    let x = DMatrix::from_fn(n, 2, |i, j| {
        let side = if i % 2 == 0 { -1.5 } else { 1.5 };
        side + 0.1 * ((i * 7 + j * 3) % 5) as f64
    });
    let y = (0..n).map(|i| (i % 2) as f64).collect();
    let subset = (0..n)
        .map(|i| {
            if i < 16 {
                Subset::Training
            } else {
                Subset::Selection
            }
        })
        .collect();
    let data = EncodedDataset::from_matrix(x, y, subset)?;

    let net = Network::init(Architecture::new(2, 1)?, 1);
    let (_, log) = train(
        &net,
        &data,
        ClassWeights::BALANCED,
        &TrainingConfig::default(),
    )?;
    log.write_csv(std::io::stdout().lock())?;
    let f = &log.final_state;
    eprintln!(
        "{} iterations, loss {:.3e}, gradient norm {:.3e}, stopped by {}",
        f.iterations, f.final_loss, f.final_gradient_norm, f.stopping_reason
    );
    Ok(())
}
