//! Compares the analytic residual Jacobian with central finite differences.

use lmnet::network::{Architecture, Network};
use nalgebra::DMatrix;

fn main() -> anyhow::Result<()> {
    let net = Network::init(Architecture::new(3, 2)?, 7);
    let x = DMatrix::from_row_slice(
        4,
        3,
        &[
            0.5, -1.0, 2.0, 1.5, 0.2, -0.3, -2.0, 1.0, 0.0, 0.1, 0.1, 0.9,
        ],
    );
    let y = [1.0, 0.0, 1.0, 0.0];
    let w = [2.0, 1.0, 2.0, 1.0];
    let (_, jac) = net.residual_jacobian(&x, &y, &w)?;

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for p in 0..net.n_params() {
        let mut plus = net.weights().clone();
        let mut minus = net.weights().clone();
        plus[p] += h;
        minus[p] -= h;
        let ep = Network::from_weights(net.arch(), plus)?.residuals(&x, &y, &w)?;
        let em = Network::from_weights(net.arch(), minus)?.residuals(&x, &y, &w)?;
        for i in 0..y.len() {
            worst = worst.max(((ep[i] - em[i]) / (2.0 * h) - jac[(i, p)]).abs());
        }
    }
    println!(
        "{} parameters, max |analytic - finite difference| = {worst:.2e}",
        net.n_params()
    );
    Ok(())
}
