//! Sweeps hidden-layer sizes on an XOR problem, which one hidden unit cannot
//! represent.

use lmnet::dataset::{EncodedDataset, Subset};
use lmnet::loss::ClassWeights;
use lmnet::order_selection::{select_order, OrderSelectionConfig};
use nalgebra::DMatrix;

fn main() -> anyhow::Result<()> {
    let corners = [
        (0.0, 0.0, 0.0),
        (0.0, 1.0, 1.0),
        (1.0, 0.0, 1.0),
        (1.0, 1.0, 0.0),
    ];
    let n = 100;
    let x = DMatrix::from_fn(n, 2, |i, j| {
        let (a, b, _) = corners[i % 4];
        let jitter = 0.02 * ((i * 31 + j * 17) % 5) as f64 - 0.04;
        if j == 0 {
            a + jitter
        } else {
            b + jitter
        }
    });
    let y = (0..n).map(|i| corners[i % 4].2).collect();
    let subset = (0..n)
        .map(|i| {
            if (i / 4) % 5 == 0 {
                Subset::Selection
            } else {
                Subset::Training
            }
        })
        .collect();
    let data = EncodedDataset::from_matrix(x, y, subset)?;

    let cfg = OrderSelectionConfig {
        max_order: 5,
        ..Default::default()
    };
    let (net, result) = select_order(&data, ClassWeights::BALANCED, &cfg)?;
    result.write_history_csv(std::io::stdout().lock())?;
    eprintln!(
        "optimal order {} ({} parameters), selection loss {:.3e}",
        result.optimal_order,
        net.n_params(),
        result.optimum_selection_loss
    );
    Ok(())
}
