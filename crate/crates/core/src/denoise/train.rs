use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::SliceRandom;

use super::lstm::{LstmDenoiser, DEFAULT_HIDDEN, DEFAULT_LAYERS};
use crate::dsp::window_starts;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signalio::Signal;
use crate::rng::stream;

pub const DEFAULT_WINDOW: usize = 60;
pub const DEFAULT_OVERLAP: f64 = 0.5;
const INIT_STREAM: u32 = 10;
const SHUFFLE_STREAM: u32 = 11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub window: usize,
    pub overlap: f64,
    pub layers: usize,
    pub hidden: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            window: DEFAULT_WINDOW,
            overlap: DEFAULT_OVERLAP,
            layers: DEFAULT_LAYERS,
            hidden: DEFAULT_HIDDEN,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.window == 0 {
            return Err(Error::invalid("epochs, batch size and window must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate {} must be positive", self.learning_rate)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::invalid(format!("{name} = {b} outside (0, 1)")));
            }
        }
        if !(self.epsilon > 0.0) || !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::invalid("epsilon must be positive and overlap in [0, 1)"));
        }
        Ok(())
    }
}

/// One training pair: features `L × input_dim` and the target sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample<T> {
    pub features: Array2<T>,
    pub target: Array1<T>,
}

/// Cut aligned feature and target signals into training windows.
pub fn training_windows<T: Real>(
    features: &Signal<T>,
    target: &Signal<T>,
    window: usize,
    overlap: f64,
) -> Result<Vec<TrainSample<T>>> {
    if features.len() != target.len() || target.num_channels() != 1 {
        return Err(Error::dims("target must be one channel with the feature length"));
    }
    Ok(window_starts(features.len(), window, overlap)?
        .into_iter()
        .map(|s| TrainSample {
            features: features.samples().slice(ndarray::s![s..s + window, ..]).to_owned(),
            target: target.channel(0).slice(ndarray::s![s..s + window]).to_owned(),
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct TrainOutput<T> {
    pub model: LstmDenoiser<T>,
    /// Mean training loss of every epoch.
    pub loss_trace: Vec<f64>,
}

struct Adam<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    step: i32,
}

impl<T: Real> Adam<T> {
    fn new(model: &LstmDenoiser<T>) -> Self {
        let zeros: Vec<Vec<T>> = model.blocks().iter().map(|b| vec![T::zero(); b.len()]).collect();
        Self { m: zeros.clone(), v: zeros, step: 0 }
    }

    fn update(&mut self, model: &mut LstmDenoiser<T>, grad: &LstmDenoiser<T>, c: &TrainConfig) {
        self.step += 1;
        let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
        let lr = T::lit(c.learning_rate);
        let eps = T::lit(c.epsilon);
        let bc1 = T::one() - b1.powi(self.step);
        let bc2 = T::one() - b2.powi(self.step);
        for (((p, g), m), v) in model
            .blocks_mut()
            .into_iter()
            .zip(grad.blocks())
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (T::one() - b1) * g[k];
                v[k] = b2 * v[k] + (T::one() - b2) * g[k] * g[k];
                let mh = m[k] / bc1;
                let vh = v[k] / bc2;
                p[k] -= lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}

/// Train a fresh model with Adam on the mean squared error.
///
/// Initialisation and the per-epoch shuffles come from fixed random streams
/// derived from `config.seed`, so results are reproducible.
pub fn lstm_train<T: Real>(dataset: &[TrainSample<T>], config: &TrainConfig) -> Result<TrainOutput<T>> {
    config.validate()?;
    let first = dataset.first().ok_or_else(|| Error::invalid("empty training set"))?;
    let input_dim = first.features.ncols();
    for s in dataset {
        if s.features.nrows() != config.window || s.target.len() != config.window {
            return Err(Error::dims(format!("every window must have {} timesteps", config.window)));
        }
        if s.features.ncols() != input_dim {
            return Err(Error::dims("inconsistent feature dimensions in the training set"));
        }
    }
    let model = LstmDenoiser::init_uniform(
        config.layers,
        config.hidden,
        input_dim,
        &mut stream(config.seed, INIT_STREAM, 0),
    )?;
    train_from(model, dataset, config)
}

/// Continue training an existing model.
pub fn train_from<T: Real>(
    mut model: LstmDenoiser<T>,
    dataset: &[TrainSample<T>],
    config: &TrainConfig,
) -> Result<TrainOutput<T>> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    let mut adam = Adam::new(&model);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut shuffle = stream(config.seed, SHUFFLE_STREAM, 0);
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let windows: Vec<ArrayView2<'_, T>> = batch.iter().map(|&i| dataset[i].features.view()).collect();
            let targets: Vec<Array1<T>> = batch.iter().map(|&i| dataset[i].target.clone()).collect();
            let (loss, grad) = model.loss_and_gradient(&windows, &targets)?;
            let loss = loss.as_f64();
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss, learning_rate: config.learning_rate });
            }
            total += loss * batch.len() as f64;
            adam.update(&mut model, &grad, config);
        }
        loss_trace.push(total / dataset.len() as f64);
    }
    if !model.is_finite() {
        let loss = loss_trace.last().copied().unwrap_or(f64::NAN);
        return Err(Error::Diverged { epoch: config.epochs - 1, loss, learning_rate: config.learning_rate });
    }
    Ok(TrainOutput { model, loss_trace })
}
