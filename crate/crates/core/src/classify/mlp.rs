//! One-hidden-layer perceptron with a two-way softmax output.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{Activation, AdamConfig, DenseGrad, Stack};
use crate::random;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden_units: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub l2_alpha: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden_units: 100,
            max_epochs: 400,
            learning_rate: 0.1,
            l2_alpha: 1e-4,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl MlpParams {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_units == 0 || self.batch_size == 0 {
            return Err(Error::Parameter(
                "MLP hidden units and batch size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) || !(self.l2_alpha >= 0.0)
        {
            return Err(Error::Parameter(
                "MLP learning rate must be positive and alpha non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Mlp<T: Scalar> {
    network: Stack<T>,
    l2_alpha: T,
    /// Mean training loss per epoch.
    pub loss_history: Vec<T>,
}

impl<T: Scalar> Mlp<T> {
    /// Untrained network with seeded Glorot-uniform weights.
    pub fn init(inputs: usize, params: &MlpParams) -> Result<Self> {
        params.validate()?;
        let mut rng = random::rng(params.seed);
        Ok(Self {
            network: Stack::new(
                &[inputs, params.hidden_units, 2],
                Activation::Relu,
                &mut rng,
            ),
            l2_alpha: T::of(params.l2_alpha),
            loss_history: Vec::new(),
        })
    }

    /// Softmax class probabilities, one row per input row.
    pub fn probabilities(&self, x: &Matrix<T>) -> Matrix<T> {
        let mut out = self.network.predict(x);
        crate::nn::softmax_block(&mut out, 0..2);
        out
    }

    /// Presence probability per row.
    pub fn scores(&self, x: &Matrix<T>) -> Vec<T> {
        self.probabilities(x).column(1)
    }

    fn l2(&self) -> T {
        self.network
            .layers
            .iter()
            .flat_map(|l| l.weights.as_slice())
            .fold(T::zero(), |a, &w| a + w * w)
    }

    /// Batch loss (mean cross-entropy plus `alpha / (2 n) * sum W^2`) and its
    /// gradient for every layer.
    pub fn loss_and_gradients(&self, x: &Matrix<T>, y: &[u8]) -> (T, Vec<DenseGrad<T>>) {
        let n = T::of_usize(x.rows());
        let (mut out, trace) = self.network.forward(x);
        crate::nn::softmax_block(&mut out, 0..2);
        let mut ce = T::zero();
        for (i, &label) in y.iter().enumerate() {
            let p = out[(i, label as usize)].max(T::min_positive_value());
            ce = ce - p.ln();
            out[(i, label as usize)] = out[(i, label as usize)] - T::one();
        }
        for v in out.as_mut_slice() {
            *v = *v / n;
        }
        let (mut grads, _) = self.network.backward(&trace, out, false);
        for (g, layer) in grads.iter_mut().zip(&self.network.layers) {
            for (gw, &w) in g
                .weights
                .as_mut_slice()
                .iter_mut()
                .zip(layer.weights.as_slice())
            {
                *gw = *gw + self.l2_alpha * w / n;
            }
        }
        let loss = ce / n + self.l2_alpha * self.l2() / (T::of(2.0) * n);
        (loss, grads)
    }

    /// All weights and biases, layer by layer (weights first).
    pub fn parameters(&self) -> Vec<T> {
        self.network
            .layers
            .iter()
            .flat_map(|l| l.weights.as_slice().iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_parameters(&mut self, values: &[T]) {
        let mut it = values.iter().copied();
        for l in &mut self.network.layers {
            for v in l.weights.as_mut_slice().iter_mut().chain(l.bias.iter_mut()) {
                *v = it.next().expect("parameter vector too short");
            }
        }
    }

    /// Flattened gradient in [`Mlp::parameters`] order.
    pub fn flat_gradient(grads: &[DenseGrad<T>]) -> Vec<T> {
        grads
            .iter()
            .flat_map(|g| g.weights.as_slice().iter().chain(&g.bias).copied())
            .collect()
    }
}

pub fn fit_mlp<T: Scalar>(x: &Matrix<T>, y: &[u8], params: &MlpParams) -> Result<Mlp<T>> {
    let mut mlp = Mlp::init(x.cols(), params)?;
    let n = x.rows();
    let mut opt = mlp
        .network
        .optimizers(AdamConfig::new(params.learning_rate));
    let mut rng = random::rng(random::derive_seed(params.seed, 1));
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..params.max_epochs {
        order.shuffle(&mut rng);
        let mut total = T::zero();
        for chunk in order.chunks(params.batch_size) {
            let xb = x.select_rows(chunk);
            let yb: Vec<u8> = chunk.iter().map(|&i| y[i]).collect();
            let (loss, grads) = mlp.loss_and_gradients(&xb, &yb);
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch: epoch + 1,
                    message: format!("MLP loss became {loss}"),
                });
            }
            total = total + loss * T::of_usize(chunk.len());
            mlp.network.apply(&mut opt, &grads);
        }
        mlp.loss_history.push(total / T::of_usize(n));
    }
    Ok(mlp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn xor() -> (Matrix<f64>, Vec<u8>) {
        let x = Matrix::from_vec(4, 2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        (x, vec![0, 1, 1, 0])
    }

    #[test]
    fn learns_xor() {
        let (x, y) = xor();
        let mlp = fit_mlp(&x, &y, &MlpParams::default()).unwrap();
        let s = mlp.scores(&x);
        for (p, &l) in s.iter().zip(&y) {
            assert_eq!(u8::from(*p >= 0.5), l, "{s:?}");
        }
        assert_eq!(mlp.loss_history.len(), 400);
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = random::rng(5);
        let x = Matrix::from_vec(
            10,
            3,
            (0..30).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )
        .unwrap();
        let y: Vec<u8> = (0..10).map(|i| (i % 3 == 0) as u8).collect();
        let params = MlpParams {
            hidden_units: 6,
            l2_alpha: 0.01,
            ..MlpParams::default()
        };
        let mut mlp = Mlp::<f64>::init(3, &params).unwrap();
        let (_, grads) = mlp.loss_and_gradients(&x, &y);
        let analytic = Mlp::flat_gradient(&grads);
        let theta = mlp.parameters();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..theta.len() {
            let mut t = theta.clone();
            t[k] += h;
            mlp.set_parameters(&t);
            let up = mlp.loss_and_gradients(&x, &y).0;
            t[k] -= 2.0 * h;
            mlp.set_parameters(&t);
            let down = mlp.loss_and_gradients(&x, &y).0;
            let numeric = (up - down) / (2.0 * h);
            let rel =
                (analytic[k] - numeric).abs() / analytic[k].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn zero_epochs_is_initialisation() {
        let (x, y) = xor();
        let p = MlpParams {
            max_epochs: 0,
            seed: 3,
            ..MlpParams::default()
        };
        let a = fit_mlp(&x, &y, &p).unwrap();
        assert_eq!(a, Mlp::init(2, &p).unwrap());
        let probs = a.probabilities(&x);
        for r in probs.iter_rows() {
            assert!((r[0] + r[1] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let (x, y) = xor();
        let p = MlpParams {
            learning_rate: 1e300,
            max_epochs: 10,
            ..MlpParams::default()
        };
        assert!(matches!(fit_mlp(&x, &y, &p), Err(Error::Divergence { .. })));
    }
}
