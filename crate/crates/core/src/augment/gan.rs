//! Small conditional tabular GAN for the absence class.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{Activation, AdamConfig, Stack};
use crate::random::{self, Rng};
use crate::scalar::Scalar;
use crate::schema::{wrap_degrees, Dataset, FeatureKind, FeatureSchema};
use crate::stats::{mean, population_sd, sigmoid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GanParams {
    pub latent_dim: usize,
    pub generator_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for GanParams {
    fn default() -> Self {
        Self {
            latent_dim: 16,
            generator_hidden: vec![64, 64],
            discriminator_hidden: vec![64, 64],
            epochs: 300,
            batch_size: 64,
            learning_rate: 2e-4,
            seed: 0,
        }
    }
}

impl GanParams {
    pub fn validate(&self) -> Result<()> {
        let counts = [self.latent_dim, self.epochs, self.batch_size];
        if counts.contains(&0)
            || self.generator_hidden.contains(&0)
            || self.discriminator_hidden.contains(&0)
        {
            return Err(Error::Parameter(
                "GAN sizes, epochs and batch size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Parameter(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Column layout of one feature inside the generator output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
enum Block<T: Scalar> {
    Continuous {
        feature: usize,
        col: usize,
        mean: T,
        sd: T,
        min: T,
        max: T,
    },
    Circular {
        feature: usize,
        col: usize,
    },
    Discrete {
        feature: usize,
        col: usize,
        /// Cell value of each one-hot slot.
        values: Vec<T>,
        /// Offset of this feature inside the condition vector.
        cond: usize,
        frequencies: Vec<T>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TabularGan<T: Scalar> {
    schema: FeatureSchema,
    blocks: Vec<Block<T>>,
    latent_dim: usize,
    data_dim: usize,
    cond_dim: usize,
    generator: Stack<T>,
    discriminator: Stack<T>,
    /// Mean generator and discriminator loss per epoch.
    pub loss_history: Vec<(T, T)>,
}

const MIN_RECOMMENDED_ROWS: usize = 100;

fn softplus<T: Scalar>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

fn build_blocks<T: Scalar>(data: &Dataset<T>) -> (Vec<Block<T>>, usize, usize) {
    let (mut col, mut cond) = (0, 0);
    let mut blocks = Vec::new();
    for (j, spec) in data.schema().features().iter().enumerate() {
        let column = data.column(j);
        match spec.kind {
            FeatureKind::Continuous => {
                let sd = population_sd(&column);
                let (min, max) = column
                    .iter()
                    .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
                        (lo.min(v), hi.max(v))
                    });
                blocks.push(Block::Continuous {
                    feature: j,
                    col,
                    mean: mean(&column),
                    sd: if sd > T::zero() { sd } else { T::one() },
                    min,
                    max,
                });
                col += 1;
            }
            FeatureKind::CircularDegrees => {
                blocks.push(Block::Circular { feature: j, col });
                col += 2;
            }
            FeatureKind::Categorical | FeatureKind::Month => {
                let values: Vec<T> = if spec.kind == FeatureKind::Month {
                    (1..=12).map(T::of_usize).collect()
                } else {
                    (0..spec.cardinality()).map(T::of_usize).collect()
                };
                let mut counts = vec![0usize; values.len()];
                for v in &column {
                    if let Some(k) = values.iter().position(|x| x == v) {
                        counts[k] += 1;
                    }
                }
                let n = T::of_usize(column.len());
                let frequencies = counts.iter().map(|&c| T::of_usize(c) / n).collect();
                let width = values.len();
                blocks.push(Block::Discrete {
                    feature: j,
                    col,
                    values,
                    cond,
                    frequencies,
                });
                col += width;
                cond += width;
            }
        }
    }
    (blocks, col, cond)
}

impl<T: Scalar> TabularGan<T> {
    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    fn encode_row(&self, row: &[T], out: &mut [T]) {
        for b in &self.blocks {
            match b {
                Block::Continuous {
                    feature,
                    col,
                    mean,
                    sd,
                    ..
                } => out[*col] = (row[*feature] - *mean) / *sd,
                Block::Circular { feature, col } => {
                    let (s, c) = row[*feature].to_radians().sin_cos();
                    out[*col] = s;
                    out[*col + 1] = c;
                }
                Block::Discrete {
                    feature,
                    col,
                    values,
                    ..
                } => {
                    for (k, v) in values.iter().enumerate() {
                        out[*col + k] = if *v == row[*feature] {
                            T::one()
                        } else {
                            T::zero()
                        };
                    }
                }
            }
        }
    }

    fn decode_row(&self, x: &[T]) -> Vec<T> {
        let mut row = vec![T::zero(); self.schema.len()];
        for b in &self.blocks {
            match b {
                Block::Continuous {
                    feature,
                    col,
                    mean,
                    sd,
                    min,
                    max,
                } => {
                    row[*feature] = (x[*col] * *sd + *mean).max(*min).min(*max);
                }
                Block::Circular { feature, col } => {
                    row[*feature] = wrap_degrees(x[*col].atan2(x[*col + 1]).to_degrees());
                }
                Block::Discrete {
                    feature,
                    col,
                    values,
                    ..
                } => {
                    let block = &x[*col..*col + values.len()];
                    let best =
                        (0..block.len())
                            .fold(0, |best, k| if block[k] > block[best] { k } else { best });
                    row[*feature] = values[best];
                }
            }
        }
        row
    }

    /// Softmax over every discrete block of raw generator output.
    fn activate(&self, raw: &mut Matrix<T>) {
        for b in &self.blocks {
            if let Block::Discrete { col, values, .. } = b {
                crate::nn::softmax_block(raw, *col..*col + values.len());
            }
        }
    }

    fn discrete_blocks(&self) -> impl Iterator<Item = (usize, usize, &[T])> + '_ {
        self.blocks.iter().filter_map(|b| match b {
            Block::Discrete {
                col,
                cond,
                frequencies,
                ..
            } => Some((*col, *cond, frequencies.as_slice())),
            _ => None,
        })
    }

    fn generator_input(&self, cond: &Matrix<T>, rng: &mut Rng) -> Matrix<T> {
        let n = cond.rows();
        let mut x = Matrix::<T>::zeros(n, self.latent_dim + self.cond_dim);
        for i in 0..n {
            let row = x.row_mut(i);
            for v in row.iter_mut().take(self.latent_dim) {
                *v = T::of(rng.sample::<f64, _>(StandardNormal));
            }
            row[self.latent_dim..].copy_from_slice(cond.row(i));
        }
        x
    }

    fn with_cond(data: &Matrix<T>, cond: &Matrix<T>) -> Matrix<T> {
        let mut x = Matrix::<T>::zeros(data.rows(), data.cols() + cond.cols());
        for i in 0..data.rows() {
            let row = x.row_mut(i);
            row[..data.cols()].copy_from_slice(data.row(i));
            row[data.cols()..].copy_from_slice(cond.row(i));
        }
        x
    }

    /// Generates `n` rows; each row's condition is drawn from the empirical
    /// frequencies of a uniformly chosen discrete feature.
    pub fn generate(&self, n: usize, seed: u64) -> Vec<Vec<T>> {
        let mut rng = random::rng(seed);
        let discrete: Vec<_> = self.discrete_blocks().collect();
        let mut cond = Matrix::<T>::zeros(n, self.cond_dim);
        if !discrete.is_empty() {
            for i in 0..n {
                let (_, offset, freq) = discrete[rng.random_range(0..discrete.len())];
                let k = draw_weighted(freq, &mut rng);
                cond[(i, offset + k)] = T::one();
            }
        }
        let input = self.generator_input(&cond, &mut rng);
        let mut out = self.generator.predict(&input);
        self.activate(&mut out);
        out.iter_rows().map(|r| self.decode_row(r)).collect()
    }
}

fn draw_weighted<T: Scalar>(weights: &[T], rng: &mut Rng) -> usize {
    let total = weights.iter().fold(T::zero(), |a, &w| a + w);
    let mut u = T::of(rng.random::<f64>()) * total;
    for (k, &w) in weights.iter().enumerate() {
        if u < w {
            return k;
        }
        u = u - w;
    }
    weights.iter().rposition(|&w| w > T::zero()).unwrap_or(0)
}

/// Trains the GAN on every row of `negatives`.
pub fn train_tabular_gan<T: Scalar>(
    negatives: &Dataset<T>,
    params: &GanParams,
) -> Result<TabularGan<T>> {
    params.validate()?;
    if negatives.is_empty() {
        return Err(Error::Data("cannot train a GAN on an empty dataset".into()));
    }
    if negatives.len() < MIN_RECOMMENDED_ROWS {
        log::warn!(
            "training a GAN on {} rows; at least {MIN_RECOMMENDED_ROWS} are recommended",
            negatives.len()
        );
    }
    let mut rng = random::rng(params.seed);
    let (blocks, data_dim, cond_dim) = build_blocks(negatives);
    let mut g_sizes = vec![params.latent_dim + cond_dim];
    g_sizes.extend(&params.generator_hidden);
    g_sizes.push(data_dim);
    let mut d_sizes = vec![data_dim + cond_dim];
    d_sizes.extend(&params.discriminator_hidden);
    d_sizes.push(1);
    let mut gan = TabularGan {
        schema: negatives.schema().clone(),
        blocks,
        latent_dim: params.latent_dim,
        data_dim,
        cond_dim,
        generator: Stack::new(&g_sizes, Activation::Relu, &mut rng),
        discriminator: Stack::new(&d_sizes, Activation::LeakyRelu, &mut rng),
        loss_history: Vec::with_capacity(params.epochs),
    };

    let n = negatives.len();
    let mut real = Matrix::<T>::zeros(n, data_dim);
    for (i, row) in negatives.rows().iter().enumerate() {
        gan.encode_row(row, real.row_mut(i));
    }
    // rows holding each level of each discrete feature, for conditional sampling
    let discrete: Vec<(usize, usize, Vec<T>)> = gan
        .discrete_blocks()
        .map(|(c, o, f)| (c, o, f.to_vec()))
        .collect();
    let members: Vec<Vec<Vec<usize>>> = discrete
        .iter()
        .map(|(col, _, freq)| {
            (0..freq.len())
                .map(|k| (0..n).filter(|&i| real[(i, col + k)] == T::one()).collect())
                .collect()
        })
        .collect();
    let log_freq: Vec<Vec<T>> = discrete
        .iter()
        .map(|(_, _, freq)| {
            freq.iter()
                .map(|&f| (T::one() + f * T::of_usize(n)).ln())
                .collect()
        })
        .collect();

    let config = AdamConfig {
        learning_rate: params.learning_rate,
        beta1: 0.5,
        beta2: 0.9,
        epsilon: 1e-8,
    };
    let mut g_opt = gan.generator.optimizers(config);
    let mut d_opt = gan.discriminator.optimizers(config);
    let batch = params.batch_size.min(n);
    let steps = n.div_ceil(batch);
    let bt = T::of_usize(batch);
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 0..params.epochs {
        let (mut g_sum, mut d_sum) = (T::zero(), T::zero());
        order.shuffle(&mut rng);
        for step in 0..steps {
            // condition vectors and matching real rows
            let mut cond = Matrix::<T>::zeros(batch, cond_dim);
            let mut chosen: Vec<Option<(usize, usize)>> = vec![None; batch];
            let mut real_idx = Vec::with_capacity(batch);
            for i in 0..batch {
                if discrete.is_empty() {
                    real_idx.push(order[(step * batch + i) % n]);
                    continue;
                }
                let f = rng.random_range(0..discrete.len());
                let k = draw_weighted(&log_freq[f], &mut rng);
                cond[(i, discrete[f].1 + k)] = T::one();
                chosen[i] = Some((discrete[f].0, k));
                let pool = &members[f][k];
                real_idx.push(pool[rng.random_range(0..pool.len())]);
            }
            let real_batch = real.select_rows(&real_idx);

            // discriminator step
            let g_in = gan.generator_input(&cond, &mut rng);
            let mut fake = gan.generator.predict(&g_in);
            gan.activate(&mut fake);
            let (d_real, real_trace) = gan
                .discriminator
                .forward(&TabularGan::with_cond(&real_batch, &cond));
            let (d_fake, fake_trace) = gan
                .discriminator
                .forward(&TabularGan::with_cond(&fake, &cond));
            let mut d_loss = T::zero();
            let mut g_real = Matrix::<T>::zeros(batch, 1);
            let mut g_fake = Matrix::<T>::zeros(batch, 1);
            for i in 0..batch {
                let (lr, lf) = (d_real[(i, 0)], d_fake[(i, 0)]);
                d_loss = d_loss + softplus(-lr) + softplus(lf);
                g_real[(i, 0)] = -(T::one() - sigmoid(lr)) / bt;
                g_fake[(i, 0)] = sigmoid(lf) / bt;
            }
            d_loss = d_loss / bt;
            let (mut grads, _) = gan.discriminator.backward(&real_trace, g_real, false);
            let (grads_fake, _) = gan.discriminator.backward(&fake_trace, g_fake, false);
            for (a, b) in grads.iter_mut().zip(&grads_fake) {
                for (x, y) in a
                    .weights
                    .as_mut_slice()
                    .iter_mut()
                    .zip(b.weights.as_slice())
                {
                    *x = *x + *y;
                }
                for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                    *x = *x + *y;
                }
            }
            gan.discriminator.apply(&mut d_opt, &grads);

            // generator step: non-saturating loss plus condition cross-entropy
            let g_in = gan.generator_input(&cond, &mut rng);
            let (raw, g_trace) = gan.generator.forward(&g_in);
            let mut fake = raw;
            gan.activate(&mut fake);
            let (d_out, d_trace) = gan
                .discriminator
                .forward(&TabularGan::with_cond(&fake, &cond));
            let mut g_loss = T::zero();
            let mut g_logit = Matrix::<T>::zeros(batch, 1);
            for i in 0..batch {
                let l = d_out[(i, 0)];
                g_loss = g_loss + softplus(-l);
                g_logit[(i, 0)] = -(T::one() - sigmoid(l)) / bt;
            }
            let (_, d_input) = gan.discriminator.backward(&d_trace, g_logit, true);
            let d_input = d_input.expect("input gradient requested");
            let mut g_out = Matrix::<T>::zeros(batch, data_dim);
            for i in 0..batch {
                g_out
                    .row_mut(i)
                    .copy_from_slice(&d_input.row(i)[..data_dim]);
            }
            for b in &gan.blocks {
                if let Block::Discrete { col, values, .. } = b {
                    for i in 0..batch {
                        let s = &fake.row(i)[*col..*col + values.len()];
                        let g = &mut g_out.row_mut(i)[*col..*col + values.len()];
                        let dot = s
                            .iter()
                            .zip(g.iter())
                            .fold(T::zero(), |a, (&si, &gi)| a + si * gi);
                        for (gi, &si) in g.iter_mut().zip(s) {
                            *gi = si * (*gi - dot);
                        }
                    }
                }
            }
            for (i, c) in chosen.iter().enumerate() {
                if let Some((col, k)) = *c {
                    let width = discrete
                        .iter()
                        .find(|d| d.0 == col)
                        .map_or(0, |d| d.2.len());
                    g_loss = g_loss - fake[(i, col + k)].max(T::min_positive_value()).ln();
                    for m in 0..width {
                        let target = if m == k { T::one() } else { T::zero() };
                        g_out[(i, col + m)] =
                            g_out[(i, col + m)] + (fake[(i, col + m)] - target) / bt;
                    }
                }
            }
            g_loss = g_loss / bt;
            if !g_loss.is_finite() || !d_loss.is_finite() {
                return Err(Error::Divergence {
                    epoch: epoch + 1,
                    message: format!("generator loss {g_loss}, discriminator loss {d_loss}"),
                });
            }
            let (grads, _) = gan.generator.backward(&g_trace, g_out, false);
            gan.generator.apply(&mut g_opt, &grads);
            g_sum = g_sum + g_loss;
            d_sum = d_sum + d_loss;
        }
        let st = T::of_usize(steps);
        gan.loss_history.push((g_sum / st, d_sum / st));
    }
    Ok(gan)
}
