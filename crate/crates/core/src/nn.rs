//! Small dense-network building blocks shared by the MLP classifier and the
//! tabular GAN.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::random::Rng;
use crate::scalar::Scalar;

/// Fully connected layer `y = x W + b`, with `W` stored as `inputs x outputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Dense<T: Scalar> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct DenseGrad<T: Scalar> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    /// Glorot-uniform weights, zero bias.
    pub fn glorot(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let data = (0..inputs * outputs)
            .map(|_| T::of(rng.random_range(-limit..limit)))
            .collect();
        Self {
            weights: Matrix::from_vec(inputs, outputs, data).expect("shape matches"),
            bias: vec![T::zero(); outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn forward(&self, x: &Matrix<T>) -> Matrix<T> {
        let (n, out) = (x.rows(), self.outputs());
        let mut y = Matrix::<T>::zeros(n, out);
        for i in 0..n {
            let xi = x.row(i);
            let yi = y.row_mut(i);
            yi.copy_from_slice(&self.bias);
            for (k, &xk) in xi.iter().enumerate() {
                if xk == T::zero() {
                    continue;
                }
                for (yj, &w) in yi.iter_mut().zip(self.weights.row(k)) {
                    *yj = *yj + xk * w;
                }
            }
        }
        y
    }

    /// Returns parameter gradients and, if requested, the gradient w.r.t. `x`.
    pub fn backward(
        &self,
        x: &Matrix<T>,
        grad_out: &Matrix<T>,
        want_input: bool,
    ) -> (DenseGrad<T>, Option<Matrix<T>>) {
        let (inp, out) = (self.inputs(), self.outputs());
        let mut gw = Matrix::<T>::zeros(inp, out);
        let mut gb = vec![T::zero(); out];
        for i in 0..x.rows() {
            let g = grad_out.row(i);
            for (b, &gj) in gb.iter_mut().zip(g) {
                *b = *b + gj;
            }
            for (k, &xk) in x.row(i).iter().enumerate() {
                if xk == T::zero() {
                    continue;
                }
                for (w, &gj) in gw.row_mut(k).iter_mut().zip(g) {
                    *w = *w + xk * gj;
                }
            }
        }
        let gx = want_input.then(|| {
            let mut gx = Matrix::<T>::zeros(x.rows(), inp);
            for i in 0..x.rows() {
                let g = grad_out.row(i);
                for (k, v) in gx.row_mut(i).iter_mut().enumerate() {
                    *v = self
                        .weights
                        .row(k)
                        .iter()
                        .zip(g)
                        .fold(T::zero(), |acc, (&w, &gj)| acc + w * gj);
                }
            }
            gx
        });
        (
            DenseGrad {
                weights: gw,
                bias: gb,
            },
            gx,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Relu,
    /// Leaky ReLU with slope 0.2 for negative inputs.
    LeakyRelu,
}

const LEAK: f64 = 0.2;

impl Activation {
    pub fn apply<T: Scalar>(self, m: &mut Matrix<T>) {
        let leak = T::of(LEAK);
        for v in m.as_mut_slice() {
            *v = match self {
                Activation::Identity => *v,
                Activation::Relu => v.max(T::zero()),
                Activation::LeakyRelu => {
                    if *v > T::zero() {
                        *v
                    } else {
                        *v * leak
                    }
                }
            };
        }
    }

    /// Multiplies `grad` in place by the derivative at pre-activation `z`.
    pub fn backprop<T: Scalar>(self, z: &Matrix<T>, grad: &mut Matrix<T>) {
        let leak = T::of(LEAK);
        for (g, &zi) in grad.as_mut_slice().iter_mut().zip(z.as_slice()) {
            match self {
                Activation::Identity => {}
                Activation::Relu => {
                    if zi <= T::zero() {
                        *g = T::zero();
                    }
                }
                Activation::LeakyRelu => {
                    if zi <= T::zero() {
                        *g = *g * leak;
                    }
                }
            }
        }
    }
}

/// Row-wise softmax over the column range `cols`.
pub fn softmax_block<T: Scalar>(m: &mut Matrix<T>, cols: std::ops::Range<usize>) {
    for i in 0..m.rows() {
        let block = &mut m.row_mut(i)[cols.clone()];
        let top = block.iter().cloned().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in block.iter_mut() {
            *v = (*v - top).exp();
            sum = sum + *v;
        }
        for v in block.iter_mut() {
            *v = *v / sum;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam optimiser state for one dense layer.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    config: AdamConfig,
    step: i32,
    m_w: Vec<T>,
    v_w: Vec<T>,
    m_b: Vec<T>,
    v_b: Vec<T>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig, layer: &Dense<T>) -> Self {
        let nw = layer.weights.as_slice().len();
        let nb = layer.bias.len();
        Self {
            config,
            step: 0,
            m_w: vec![T::zero(); nw],
            v_w: vec![T::zero(); nw],
            m_b: vec![T::zero(); nb],
            v_b: vec![T::zero(); nb],
        }
    }

    pub fn update(&mut self, layer: &mut Dense<T>, grad: &DenseGrad<T>) {
        self.step += 1;
        let c = self.config;
        let lr = c.learning_rate * (1.0 - c.beta2.powi(self.step)).sqrt()
            / (1.0 - c.beta1.powi(self.step));
        let (lr, b1, b2, eps) = (T::of(lr), T::of(c.beta1), T::of(c.beta2), T::of(c.epsilon));
        let rule = |p: &mut [T], g: &[T], m: &mut [T], v: &mut [T]| {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (T::one() - b1) * g[i];
                v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
                p[i] = p[i] - lr * m[i] / (v[i].sqrt() + eps);
            }
        };
        rule(
            layer.weights.as_mut_slice(),
            grad.weights.as_slice(),
            &mut self.m_w,
            &mut self.v_w,
        );
        rule(&mut layer.bias, &grad.bias, &mut self.m_b, &mut self.v_b);
    }
}

/// Feed-forward stack: `hidden` after every layer but the last, whose
/// pre-activations are returned as-is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Stack<T: Scalar> {
    pub layers: Vec<Dense<T>>,
    pub hidden: Activation,
}

/// Per-layer inputs and pre-activations recorded by [`Stack::forward`].
#[derive(Debug, Clone)]
pub struct Trace<T: Scalar> {
    inputs: Vec<Matrix<T>>,
    pre: Vec<Matrix<T>>,
}

impl<T: Scalar> Stack<T> {
    /// Glorot-initialised stack with layer widths `sizes[0] -> ... -> sizes[last]`.
    pub fn new(sizes: &[usize], hidden: Activation, rng: &mut Rng) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| Dense::glorot(w[0], w[1], rng))
            .collect();
        Self { layers, hidden }
    }

    pub fn predict(&self, x: &Matrix<T>) -> Matrix<T> {
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            h = layer.forward(&h);
            if l < last {
                self.hidden.apply(&mut h);
            }
        }
        h
    }

    pub fn forward(&self, x: &Matrix<T>) -> (Matrix<T>, Trace<T>) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&h);
            inputs.push(h);
            h = z.clone();
            if l < last {
                self.hidden.apply(&mut h);
            }
            pre.push(z);
        }
        (h, Trace { inputs, pre })
    }

    /// Gradients of every layer given the gradient at the output pre-activations.
    pub fn backward(
        &self,
        trace: &Trace<T>,
        grad_out: Matrix<T>,
        want_input: bool,
    ) -> (Vec<DenseGrad<T>>, Option<Matrix<T>>) {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = grad_out;
        let mut gx = None;
        for l in (0..self.layers.len()).rev() {
            let need = l > 0 || want_input;
            let (gl, below) = self.layers[l].backward(&trace.inputs[l], &g, need);
            grads.push(gl);
            match below {
                Some(mut b) if l > 0 => {
                    self.hidden.backprop(&trace.pre[l - 1], &mut b);
                    g = b;
                }
                other => gx = other,
            }
        }
        grads.reverse();
        (grads, gx)
    }

    pub fn optimizers(&self, config: AdamConfig) -> Vec<Adam<T>> {
        self.layers.iter().map(|l| Adam::new(config, l)).collect()
    }

    pub fn apply(&mut self, optimizers: &mut [Adam<T>], grads: &[DenseGrad<T>]) {
        for ((layer, opt), g) in self.layers.iter_mut().zip(optimizers).zip(grads) {
            opt.update(layer, g);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    #[test]
    fn dense_gradients_match_finite_differences() {
        let mut rng = random::rng(1);
        let layer = Dense::<f64>::glorot(3, 2, &mut rng);
        let x = Matrix::from_vec(2, 3, vec![0.5, -1.0, 2.0, 1.5, 0.3, -0.7]).unwrap();
        // loss = sum(y^2) / 2, so dL/dy = y
        let loss = |l: &Dense<f64>| {
            l.forward(&x)
                .as_slice()
                .iter()
                .map(|v| v * v / 2.0)
                .sum::<f64>()
        };
        let y = layer.forward(&x);
        let (g, gx) = layer.backward(&x, &y, true);
        let h = 1e-6;
        for idx in 0..6 {
            let mut p = layer.clone();
            p.weights.as_mut_slice()[idx] += h;
            let mut q = layer.clone();
            q.weights.as_mut_slice()[idx] -= h;
            let num = (loss(&p) - loss(&q)) / (2.0 * h);
            assert!((num - g.weights.as_slice()[idx]).abs() < 1e-6);
        }
        let gx = gx.unwrap();
        for idx in 0..6 {
            let mut xp = x.clone();
            xp.as_mut_slice()[idx] += h;
            let mut xq = x.clone();
            xq.as_mut_slice()[idx] -= h;
            let f = |m: &Matrix<f64>| {
                layer
                    .forward(m)
                    .as_slice()
                    .iter()
                    .map(|v| v * v / 2.0)
                    .sum::<f64>()
            };
            let num = (f(&xp) - f(&xq)) / (2.0 * h);
            assert!((num - gx.as_slice()[idx]).abs() < 1e-6);
        }
    }

    #[test]
    fn stack_gradients_match_finite_differences() {
        let mut rng = random::rng(3);
        let stack = Stack::<f64>::new(&[3, 4, 2], Activation::LeakyRelu, &mut rng);
        let x = Matrix::from_vec(2, 3, vec![0.5, -1.0, 2.0, 1.5, 0.3, -0.7]).unwrap();
        let loss = |s: &Stack<f64>, x: &Matrix<f64>| {
            s.predict(x)
                .as_slice()
                .iter()
                .map(|v| v * v / 2.0)
                .sum::<f64>()
        };
        let (y, trace) = stack.forward(&x);
        let (grads, gx) = stack.backward(&trace, y, true);
        let h = 1e-6;
        for l in 0..2 {
            for idx in 0..stack.layers[l].weights.as_slice().len() {
                let mut p = stack.clone();
                p.layers[l].weights.as_mut_slice()[idx] += h;
                let mut q = stack.clone();
                q.layers[l].weights.as_mut_slice()[idx] -= h;
                let num = (loss(&p, &x) - loss(&q, &x)) / (2.0 * h);
                assert!((num - grads[l].weights.as_slice()[idx]).abs() < 1e-5);
            }
        }
        let gx = gx.unwrap();
        let mut xp = x.clone();
        xp.as_mut_slice()[4] += h;
        let mut xq = x.clone();
        xq.as_mut_slice()[4] -= h;
        let num = (loss(&stack, &xp) - loss(&stack, &xq)) / (2.0 * h);
        assert!((num - gx.as_slice()[4]).abs() < 1e-5);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut m = Matrix::from_vec(1, 4, vec![9.0, 1.0, 2.0, 3.0]).unwrap();
        softmax_block(&mut m, 1..4);
        assert_eq!(m[(0, 0)], 9.0);
        let s: f64 = m.row(0)[1..].iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adam_minimises_a_quadratic() {
        let mut rng = random::rng(2);
        let mut layer = Dense::<f64>::glorot(1, 1, &mut rng);
        let mut opt = Adam::new(AdamConfig::new(0.05), &layer);
        for _ in 0..2000 {
            let w = layer.weights[(0, 0)];
            let b = layer.bias[0];
            let grad = DenseGrad {
                weights: Matrix::from_vec(1, 1, vec![2.0 * (w - 3.0)]).unwrap(),
                bias: vec![2.0 * (b + 1.0)],
            };
            opt.update(&mut layer, &grad);
        }
        assert!((layer.weights[(0, 0)] - 3.0).abs() < 1e-3);
        assert!((layer.bias[0] + 1.0).abs() < 1e-3);
    }
}
