//! Single-hidden-layer network with tanh hidden units and a logistic output.
//!
//! Parameters live in one flat vector. For `order` hidden neurons and `d`
//! inputs the layout is
//!
//! ```text
//! [w_0,0 .. w_0,d-1, b_0,  w_1,0 .. b_1,  ...,  v_0 .. v_order-1, c]
//! ```
//!
//! i.e. each hidden neuron's input weights followed by its bias, then the
//! output weights followed by the output bias.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::NumericError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub n_inputs: usize,
    /// Number of hidden neurons.
    pub order: usize,
}

impl Architecture {
    pub const N_OUTPUTS: usize = 1;

    pub fn new(n_inputs: usize, order: usize) -> Result<Self, NumericError> {
        if n_inputs == 0 || order == 0 {
            return Err(NumericError::InvalidArgument(format!(
                "architecture needs at least one input and one hidden neuron (got {n_inputs} inputs, order {order})"
            )));
        }
        Ok(Self { n_inputs, order })
    }

    pub fn n_params(&self) -> usize {
        self.order * (self.n_inputs + 1) + self.order + 1
    }

    fn output_offset(&self) -> usize {
        self.order * (self.n_inputs + 1)
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub hidden_pre: Vec<f64>,
    pub hidden_act: Vec<f64>,
    pub output_pre: f64,
    pub output: f64,
}

const OUTPUT_MIN: f64 = f64::MIN_POSITIVE;
const OUTPUT_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

/// Logistic function, kept inside the open unit interval even when the
/// argument saturates.
pub fn logistic(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(OUTPUT_MIN, OUTPUT_MAX)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    arch: Architecture,
    w: DVector<f64>,
}

impl Network {
    /// Uniform Glorot initialization, `[-L, L]` with `L = sqrt(6 / (fan_in + fan_out))`
    /// per layer; biases are drawn from the same range as their layer.
    pub fn init(arch: Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hidden_limit = (6.0 / (arch.n_inputs + arch.order) as f64).sqrt();
        let output_limit = (6.0 / (arch.order + Architecture::N_OUTPUTS) as f64).sqrt();
        let split = arch.output_offset();
        let w = DVector::from_iterator(
            arch.n_params(),
            (0..arch.n_params()).map(|j| {
                let limit = if j < split {
                    hidden_limit
                } else {
                    output_limit
                };
                rng.random_range(-limit..=limit)
            }),
        );
        Self { arch, w }
    }

    pub fn from_weights(arch: Architecture, w: DVector<f64>) -> Result<Self, NumericError> {
        if w.len() != arch.n_params() {
            return Err(NumericError::Dimension(format!(
                "{} weights for an architecture with {} parameters",
                w.len(),
                arch.n_params()
            )));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(NumericError::NonFinite("weights"));
        }
        Ok(Self { arch, w })
    }

    pub fn arch(&self) -> Architecture {
        self.arch
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.w
    }

    pub fn n_params(&self) -> usize {
        self.w.len()
    }

    pub(crate) fn set_weights(&mut self, w: DVector<f64>) {
        debug_assert_eq!(w.len(), self.w.len());
        self.w = w;
    }

    fn hidden_row(&self, h: usize) -> &[f64] {
        let stride = self.arch.n_inputs + 1;
        &self.w.as_slice()[h * stride..(h + 1) * stride]
    }

    fn output_weights(&self) -> &[f64] {
        &self.w.as_slice()[self.arch.output_offset()..]
    }

    /// Hidden activations into `act`, returns `(output_pre, output)`.
    fn forward_into(&self, x: &[f64], hidden_pre: &mut [f64], act: &mut [f64]) -> (f64, f64) {
        let d = self.arch.n_inputs;
        for h in 0..self.arch.order {
            let row = self.hidden_row(h);
            let z = row[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + row[d];
            hidden_pre[h] = z;
            act[h] = z.tanh();
        }
        let v = self.output_weights();
        let output_pre = act.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() + v[self.arch.order];
        (output_pre, logistic(output_pre))
    }

    pub fn forward(&self, x: &[f64]) -> Result<(f64, ForwardCache), NumericError> {
        let d = self.arch.n_inputs;
        if x.len() != d {
            return Err(NumericError::Dimension(format!(
                "input has {} features, network expects {d}",
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(NumericError::NonFinite("input"));
        }
        let mut hidden_pre = vec![0.0; self.arch.order];
        let mut hidden_act = vec![0.0; self.arch.order];
        let (output_pre, output) = self.forward_into(x, &mut hidden_pre, &mut hidden_act);
        Ok((
            output,
            ForwardCache {
                hidden_pre,
                hidden_act,
                output_pre,
                output,
            },
        ))
    }

    /// Hidden activations (`n x order`) and outputs for every row of `x`,
    /// bit-identical to calling [`Network::forward`] row by row.
    fn batch_forward(&self, x: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>), NumericError> {
        let d = self.arch.n_inputs;
        if x.ncols() != d {
            return Err(NumericError::Dimension(format!(
                "input has {} features, network expects {d}",
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(NumericError::NonFinite("X"));
        }
        let order = self.arch.order;
        let n = x.nrows();
        let mut act = DMatrix::zeros(n, order);
        let mut out = Vec::with_capacity(n);
        let mut row = vec![0.0; d];
        let mut pre = vec![0.0; order];
        let mut a = vec![0.0; order];
        for i in 0..n {
            for (k, r) in row.iter_mut().enumerate() {
                *r = x[(i, k)];
            }
            let (_, o) = self.forward_into(&row, &mut pre, &mut a);
            for h in 0..order {
                act[(i, h)] = a[h];
            }
            out.push(o);
        }
        Ok((act, out))
    }

    /// Network outputs for every row of `x`.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>, NumericError> {
        Ok(self.batch_forward(x)?.1)
    }

    /// Weighted residuals `e_i = s_i (o_i - y_i)` with `s_i = sqrt(weight_i / sum(weight))`.
    /// Their sum of squares is the weighted squared error.
    pub fn residuals(
        &self,
        x: &DMatrix<f64>,
        y: &[f64],
        weights: &[f64],
    ) -> Result<DVector<f64>, NumericError> {
        let scale = residual_scale(x.nrows(), y, weights)?;
        let out = self.predict(x)?;
        Ok(DVector::from_iterator(
            y.len(),
            out.iter().zip(y).zip(&scale).map(|((o, t), s)| s * (o - t)),
        ))
    }

    /// Residual vector and its analytic Jacobian (`n x n_params`).
    pub fn residual_jacobian(
        &self,
        x: &DMatrix<f64>,
        y: &[f64],
        weights: &[f64],
    ) -> Result<(DVector<f64>, DMatrix<f64>), NumericError> {
        let scale = residual_scale(x.nrows(), y, weights)?;
        let (act, out) = self.batch_forward(x)?;
        let n = x.nrows();
        let d = self.arch.n_inputs;
        let order = self.arch.order;
        let v = self.output_weights();

        let e = DVector::from_iterator(
            n,
            out.iter().zip(y).zip(&scale).map(|((o, t), s)| s * (o - t)),
        );
        // de_i / d(output_pre_i)
        let g: Vec<f64> = out
            .iter()
            .zip(&scale)
            .map(|(o, s)| s * o * (1.0 - o))
            .collect();

        let mut jac = DMatrix::zeros(n, self.arch.n_params());
        let mut delta = vec![0.0; n];
        for (h, &vh) in v.iter().enumerate().take(order) {
            let a = act.column(h);
            for ((di, gi), ai) in delta.iter_mut().zip(&g).zip(a.iter()) {
                *di = gi * vh * (1.0 - ai * ai);
            }
            let base = h * (d + 1);
            for k in 0..d {
                let xk = x.column(k);
                let mut col = jac.column_mut(base + k);
                for i in 0..n {
                    col[i] = delta[i] * xk[i];
                }
            }
            jac.column_mut(base + d).copy_from_slice(&delta);
        }
        let off = self.arch.output_offset();
        for h in 0..order {
            let a = act.column(h);
            let mut col = jac.column_mut(off + h);
            for i in 0..n {
                col[i] = g[i] * a[i];
            }
        }
        jac.column_mut(off + order).copy_from_slice(&g);
        Ok((e, jac))
    }
}

fn residual_scale(n: usize, y: &[f64], weights: &[f64]) -> Result<Vec<f64>, NumericError> {
    if y.len() != n || weights.len() != n {
        return Err(NumericError::Dimension(format!(
            "{n} rows, {} targets, {} weights",
            y.len(),
            weights.len()
        )));
    }
    if n == 0 {
        return Err(NumericError::Empty);
    }
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(NumericError::InvalidArgument(
            "instance weights must be positive".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    Ok(weights.iter().map(|w| (w / total).sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_problem(
        seed: u64,
        d: usize,
        order: usize,
        n: usize,
    ) -> (Network, DMatrix<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
        let net = Network::init(Architecture::new(d, order).unwrap(), seed);
        let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-2.0..2.0));
        let y = (0..n)
            .map(|_| f64::from(u8::from(rng.random_bool(0.5))))
            .collect();
        (net, x, y)
    }

    /// Central differences of the residual vector, column by column.
    fn finite_difference_jacobian(
        net: &Network,
        x: &DMatrix<f64>,
        y: &[f64],
        wts: &[f64],
        step: f64,
    ) -> DMatrix<f64> {
        let p = net.n_params();
        let mut jac = DMatrix::zeros(x.nrows(), p);
        for j in 0..p {
            let mut plus = net.clone();
            let mut minus = net.clone();
            plus.w[j] += step;
            minus.w[j] -= step;
            let ep = plus.residuals(x, y, wts).unwrap();
            let em = minus.residuals(x, y, wts).unwrap();
            jac.set_column(j, &((ep - em) / (2.0 * step)));
        }
        jac
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(Architecture::new(20, 1).unwrap().n_params(), 23);
        assert_eq!(Architecture::new(2, 3).unwrap().n_params(), 13);
        assert!(Architecture::new(0, 1).is_err());
        assert!(Architecture::new(2, 0).is_err());
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let arch = Architecture::new(20, 4).unwrap();
        let a = Network::init(arch, 9);
        assert_eq!(a, Network::init(arch, 9));
        assert_ne!(a, Network::init(arch, 10));
        let hidden_limit = (6.0f64 / 24.0).sqrt();
        assert!(a.w.iter().take(4 * 21).all(|v| v.abs() <= hidden_limit));
        let out_limit = (6.0f64 / 5.0).sqrt();
        assert!(a.w.iter().skip(4 * 21).all(|v| v.abs() <= out_limit));
    }

    #[test]
    fn zero_weights_give_half() {
        let arch = Architecture::new(3, 2).unwrap();
        let net = Network::from_weights(arch, DVector::zeros(arch.n_params())).unwrap();
        assert_eq!(net.forward(&[1.0, -4.0, 7.0]).unwrap().0, 0.5);
    }

    #[test]
    fn output_bias_only() {
        let arch = Architecture::new(2, 1).unwrap();
        let mut w = DVector::zeros(arch.n_params());
        w[4] = 3f64.ln();
        let net = Network::from_weights(arch, w).unwrap();
        let (out, cache) = net.forward(&[0.3, -0.8]).unwrap();
        assert!((out - 0.75).abs() < 1e-15);
        assert_eq!(cache.hidden_act, [0.0]);
    }

    #[test]
    fn saturation_stays_finite() {
        let arch = Architecture::new(1, 2).unwrap();
        // hidden_pre = +50 and -50, output weights large
        let w = DVector::from_vec(vec![50.0, 0.0, -50.0, 0.0, 400.0, -400.0, 0.0]);
        let net = Network::from_weights(arch, w).unwrap();
        let (out, cache) = net.forward(&[1.0]).unwrap();
        assert_eq!(cache.hidden_pre, [50.0, -50.0]);
        assert!(out.is_finite() && out > 0.0 && out < 1.0);
        let neg = Network::from_weights(
            arch,
            DVector::from_vec(vec![50.0, 0.0, -50.0, 0.0, -400.0, 400.0, 0.0]),
        )
        .unwrap();
        let (out, _) = neg.forward(&[1.0]).unwrap();
        assert!(out > 0.0 && out < 1.0);
    }

    #[test]
    fn dimension_and_finiteness_errors() {
        let net = Network::init(Architecture::new(2, 1).unwrap(), 0);
        assert!(matches!(
            net.forward(&[1.0]),
            Err(NumericError::Dimension(_))
        ));
        assert!(matches!(
            net.forward(&[1.0, f64::NAN]),
            Err(NumericError::NonFinite(_))
        ));
        let x = DMatrix::from_element(3, 2, 1.0);
        assert!(net.residual_jacobian(&x, &[0.0, 1.0], &[1.0; 3]).is_err());
        let mut bad = x.clone();
        bad[(1, 1)] = f64::INFINITY;
        assert!(matches!(
            net.residual_jacobian(&bad, &[0.0, 1.0, 0.0], &[1.0; 3]),
            Err(NumericError::NonFinite("X"))
        ));
        assert!(net
            .residual_jacobian(&x, &[0.0, 1.0, 0.0], &[1.0, 0.0, 1.0])
            .is_err());
    }

    #[test]
    fn zero_residual_when_targets_are_outputs() {
        let (net, x, _) = random_problem(4, 3, 2, 6);
        let y = net.predict(&x).unwrap();
        let (e, _) = net.residual_jacobian(&x, &y, &[1.0; 6]).unwrap();
        assert!(e.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn jacobian_matches_finite_differences_small_case() {
        let (net, x, y) = random_problem(11, 2, 2, 5);
        let wts = vec![1.0; 5];
        let (_, jac) = net.residual_jacobian(&x, &y, &wts).unwrap();
        let fd = finite_difference_jacobian(&net, &x, &y, &wts, 1e-6);
        assert!((jac - fd).amax() < 1e-6);
    }

    #[test]
    fn jacobian_with_class_weights() {
        let (net, x, y) = random_problem(5, 3, 3, 8);
        let wts: Vec<f64> = y.iter().map(|&t| if t > 0.5 { 2.7 } else { 1.0 }).collect();
        let (_, jac) = net.residual_jacobian(&x, &y, &wts).unwrap();
        let fd = finite_difference_jacobian(&net, &x, &y, &wts, 1e-6);
        assert!((jac - fd).amax() < 1e-6);
    }

    #[test]
    fn unit_weight_loss_is_mse() {
        let (net, x, y) = random_problem(8, 4, 2, 9);
        let e = net.residuals(&x, &y, &[1.0; 9]).unwrap();
        let out = net.predict(&x).unwrap();
        let mse = out
            .iter()
            .zip(&y)
            .map(|(o, t)| (o - t).powi(2))
            .sum::<f64>()
            / 9.0;
        assert!((e.norm_squared() - mse).abs() < 1e-12);
    }

    #[test]
    fn batch_and_single_forward_agree() {
        let (net, x, _) = random_problem(21, 3, 3, 4);
        let batch = net.predict(&x).unwrap();
        for (i, b) in batch.iter().enumerate() {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            let (single, _) = net.forward(&row).unwrap();
            assert_eq!(single.to_bits(), b.to_bits());
        }
    }

    proptest! {
        #[test]
        fn output_bounded_and_pure(
            w in proptest::collection::vec(-30.0f64..30.0, 13),
            x in proptest::collection::vec(-1e3f64..1e3, 2),
        ) {
            let net = Network::from_weights(Architecture::new(2, 3).unwrap(), DVector::from_vec(w)).unwrap();
            let (o1, c1) = net.forward(&x).unwrap();
            let (o2, c2) = net.forward(&x).unwrap();
            prop_assert!(o1 > 0.0 && o1 < 1.0);
            prop_assert_eq!(o1.to_bits(), o2.to_bits());
            prop_assert_eq!(&c1, &c2);
            prop_assert!(c1.hidden_pre.iter().chain(&c1.hidden_act).all(|v| v.is_finite()));
            prop_assert!(c1.output_pre.is_finite());
        }
    }
}
