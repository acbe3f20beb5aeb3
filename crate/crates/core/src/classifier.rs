//! Sigmoid multilayer perceptron with a mean-squared-error loss over 14
//! one-hot outputs, trained by seeded mini-batch gradient descent with
//! validation early stopping.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::evaluation::{mse_and_percent_error, SplitMetrics};
use crate::{Error, Result};

pub const NUM_CLASSES: usize = 14;

/// One of the 14 coin faces, in the order head/tail × coin type per
/// denomination: 0–3 → ₹1, 4–7 → ₹2, 8–11 → ₹5, 12–13 → ₹10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassLabel(u8);

impl ClassLabel {
    pub fn new(index: usize) -> Result<Self> {
        if index >= NUM_CLASSES {
            return Err(Error::BadLabel(index));
        }
        Ok(Self(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = ClassLabel> {
        (0..NUM_CLASSES as u8).map(ClassLabel)
    }

    /// One-hot target vector.
    pub fn one_hot(self) -> [f64; NUM_CLASSES] {
        let mut t = [0.0; NUM_CLASSES];
        t[self.index()] = 1.0;
        t
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Denomination {
    One,
    Two,
    Five,
    Ten,
}

impl Denomination {
    pub const ALL: [Denomination; 4] = [
        Denomination::One,
        Denomination::Two,
        Denomination::Five,
        Denomination::Ten,
    ];

    /// Face value in rupees.
    pub fn value(self) -> u8 {
        match self {
            Denomination::One => 1,
            Denomination::Two => 2,
            Denomination::Five => 5,
            Denomination::Ten => 10,
        }
    }

    pub fn from_value(value: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.value() == value)
    }

    pub fn ordinal(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Denomination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "₹{}", self.value())
    }
}

pub fn denomination_of(label: ClassLabel) -> Denomination {
    match label.index() {
        0..=3 => Denomination::One,
        4..=7 => Denomination::Two,
        8..=11 => Denomination::Five,
        _ => Denomination::Ten,
    }
}

#[inline]
fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Fully connected layer; `weights` is `fan_out × fan_in`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            fan_in,
            fan_out,
            weights: vec![0.0; fan_in * fan_out],
            biases: vec![0.0; fan_out],
        }
    }

    fn forward_into(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.fan_in)
                .zip(&self.biases)
                .map(|(row, b)| sigmoid(row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>() + b)),
        );
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Layer>,
}

/// Per-parameter gradients, shaped like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(model: &MlpModel) -> Self {
        Self {
            weights: model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: model.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    fn clear(&mut self) {
        self.weights.iter_mut().chain(self.biases.iter_mut()).for_each(|g| g.fill(0.0));
    }

    pub fn scale(&mut self, k: f64) {
        self.weights
            .iter_mut()
            .chain(self.biases.iter_mut())
            .flat_map(|g| g.iter_mut())
            .for_each(|g| *g *= k);
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    /// All gradient entries, weights before biases, layer by layer.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

/// Reusable activation and delta buffers for backpropagation.
#[derive(Debug, Default)]
struct Scratch {
    activations: Vec<Vec<f64>>,
    delta: Vec<f64>,
    prev_delta: Vec<f64>,
}

impl MlpModel {
    /// Uniform weights in `±1/√fan_in` from a seeded ChaCha stream; zero
    /// biases. Requires 14 outputs and at least one hidden layer.
    pub fn init(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        if layer_sizes.len() < 3 {
            return Err(Error::BadTopology(format!(
                "need input, at least one hidden and an output layer, got {layer_sizes:?}"
            )));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::BadTopology(format!("zero-width layer in {layer_sizes:?}")));
        }
        if *layer_sizes.last().unwrap() != NUM_CLASSES {
            return Err(Error::BadTopology(format!(
                "output layer must have {NUM_CLASSES} units, got {layer_sizes:?}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_sizes
            .windows(2)
            .map(|pair| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let weights = (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..=bound)).collect();
                Layer {
                    fan_in,
                    fan_out,
                    weights,
                    biases: vec![0.0; fan_out],
                }
            })
            .collect();
        Ok(Self { layers })
    }

    /// Builds a model from explicit layers, checking that shapes chain.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::BadTopology("need at least one hidden layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.fan_in == 0 || l.fan_out == 0 {
                return Err(Error::BadTopology(format!("layer {i} has a zero dimension")));
            }
            if l.weights.len() != l.fan_in * l.fan_out || l.biases.len() != l.fan_out {
                return Err(Error::BadTopology(format!("layer {i} parameter shapes are inconsistent")));
            }
            if l.weights.iter().chain(&l.biases).any(|p| !p.is_finite()) {
                return Err(Error::BadTopology(format!("layer {i} has non-finite parameters")));
            }
        }
        for pair in layers.windows(2) {
            if pair[0].fan_out != pair[1].fan_in {
                return Err(Error::BadTopology("consecutive layer sizes do not chain".into()));
            }
        }
        if layers.last().unwrap().fan_out != NUM_CLASSES {
            return Err(Error::BadTopology(format!("output layer must have {NUM_CLASSES} units")));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.fan_out))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Mutable access to one parameter in [`Gradients::flatten`] order.
    pub fn parameter_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            if index < l.weights.len() {
                return &mut l.weights[index];
            }
            index -= l.weights.len();
            if index < l.biases.len() {
                return &mut l.biases[index];
            }
            index -= l.biases.len();
        }
        panic!("parameter index out of range");
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn forward_trace(&self, x: &[f64], scratch: &mut Scratch) {
        scratch.activations.resize_with(self.layers.len(), Vec::new);
        for (i, layer) in self.layers.iter().enumerate() {
            let (done, rest) = scratch.activations.split_at_mut(i);
            let input = if i == 0 { x } else { &done[i - 1] };
            layer.forward_into(input, &mut rest[0]);
        }
    }

    /// Output activations, each in (0, 1).
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.forward_into(&a, &mut next);
            std::mem::swap(&mut a, &mut next);
        }
        Ok(a)
    }

    /// `(1/14)·Σ_k (target_k − out_k)²` for one sample.
    pub fn loss(&self, x: &[f64], target: &[f64]) -> Result<f64> {
        let out = self.forward(x)?;
        check_target(target)?;
        Ok(squared_error(&out, target) / NUM_CLASSES as f64)
    }

    /// Exact gradient of [`MlpModel::loss`] with respect to every parameter.
    pub fn backprop_gradients(&self, x: &[f64], target: &[f64]) -> Result<Gradients> {
        self.check_input(x)?;
        check_target(target)?;
        let mut grads = Gradients::zeros_like(self);
        let mut scratch = Scratch::default();
        self.accumulate_gradients(x, target, &mut grads, &mut scratch);
        Ok(grads)
    }

    /// Adds this sample's gradient into `grads`.
    fn accumulate_gradients(&self, x: &[f64], target: &[f64], grads: &mut Gradients, s: &mut Scratch) {
        self.forward_trace(x, s);
        let out = s.activations.last().unwrap();
        let k = 2.0 / NUM_CLASSES as f64;
        s.delta.clear();
        s.delta
            .extend(out.iter().zip(target).map(|(&o, &t)| k * (o - t) * o * (1.0 - o)));

        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input = if i == 0 { x } else { &s.activations[i - 1] };
            let gw = &mut grads.weights[i];
            for (row, &d) in gw.chunks_exact_mut(layer.fan_in).zip(&s.delta) {
                if d != 0.0 {
                    row.iter_mut().zip(input).for_each(|(g, a)| *g += d * a);
                }
            }
            grads.biases[i].iter_mut().zip(&s.delta).for_each(|(g, d)| *g += d);

            if i > 0 {
                s.prev_delta.clear();
                s.prev_delta.resize(layer.fan_in, 0.0);
                for (row, &d) in layer.weights.chunks_exact(layer.fan_in).zip(&s.delta) {
                    s.prev_delta.iter_mut().zip(row).for_each(|(p, w)| *p += w * d);
                }
                s.prev_delta
                    .iter_mut()
                    .zip(input)
                    .for_each(|(p, &a)| *p *= a * (1.0 - a));
                std::mem::swap(&mut s.delta, &mut s.prev_delta);
            }
        }
    }

    /// Subtracts `rate · grads` from the parameters.
    pub fn apply_gradients(&mut self, grads: &Gradients, rate: f64) {
        for (l, (gw, gb)) in self.layers.iter_mut().zip(grads.weights.iter().zip(&grads.biases)) {
            l.weights.iter_mut().zip(gw).for_each(|(w, g)| *w -= rate * g);
            l.biases.iter_mut().zip(gb).for_each(|(b, g)| *b -= rate * g);
        }
    }

    /// Argmax of the outputs (ties to the lowest index) and its value.
    pub fn classify(&self, x: &[f64]) -> Result<(ClassLabel, f64)> {
        let out = self.forward(x)?;
        let (idx, conf) = argmax(&out);
        Ok((ClassLabel(idx as u8), conf))
    }
}

fn check_target(target: &[f64]) -> Result<()> {
    if target.len() != NUM_CLASSES {
        return Err(Error::DimensionMismatch {
            expected: NUM_CLASSES,
            actual: target.len(),
        });
    }
    Ok(())
}

pub(crate) fn squared_error(out: &[f64], target: &[f64]) -> f64 {
    out.iter().zip(target).map(|(o, t)| (t - o) * (t - o)).sum()
}

/// Index and value of the first maximum.
pub fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

pub fn init_model(layer_sizes: &[usize], seed: u64) -> Result<MlpModel> {
    MlpModel::init(layer_sizes, seed)
}

/// A feature vector with its class.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: ClassLabel,
}

impl Example {
    pub fn new(features: Vec<f64>, label: ClassLabel) -> Self {
        Self { features, label }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 500,
            learning_rate: 0.5,
            batch_size: 32,
            patience: 6,
            seed: 42,
        }
    }
}

impl TrainConfig {
    fn validate(&self, train_len: usize) -> Result<()> {
        if self.max_epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return Err(Error::BadConfig("max_epochs, batch_size and patience must be positive".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::BadConfig(format!("learning rate {} is invalid", self.learning_rate)));
        }
        if self.batch_size > train_len {
            return Err(Error::BadConfig(format!(
                "batch size {} exceeds the {train_len} training samples",
                self.batch_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub train_mse: Vec<f64>,
    pub validation_mse: Vec<f64>,
    pub train: SplitMetrics,
    pub validation: SplitMetrics,
    pub test: Option<SplitMetrics>,
}

/// Mini-batch gradient descent with per-epoch seeded shuffling. After every
/// epoch the validation MSE is measured; training stops after `max_epochs`
/// or `patience` epochs without strict improvement, and the parameters from
/// the best validation epoch are returned. The final metrics are measured
/// on that snapshot; `test` may be empty.
pub fn train(
    model: &MlpModel,
    train_set: &[Example],
    val_set: &[Example],
    test_set: &[Example],
    config: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    config.validate(train_set.len())?;
    for ex in train_set.iter().chain(val_set).chain(test_set) {
        model.check_input(&ex.features)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut current = model.clone();
    let mut best = model.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut train_mse = Vec::new();
    let mut validation_mse = Vec::new();

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut grads = Gradients::zeros_like(model);
    let mut scratch = Scratch::default();

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grads.clear();
            for &i in batch {
                let ex = &train_set[i];
                current.accumulate_gradients(&ex.features, &ex.label.one_hot(), &mut grads, &mut scratch);
            }
            current.apply_gradients(&grads, config.learning_rate / batch.len() as f64);
        }

        train_mse.push(mse_and_percent_error(&current, train_set)?.0);
        let val = mse_and_percent_error(&current, val_set)?.0;
        validation_mse.push(val);

        if val < best_val {
            best_val = val;
            best_epoch = epoch;
            best.clone_from(&current);
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }

    let report = TrainReport {
        epochs_run: train_mse.len(),
        best_epoch,
        train_mse,
        validation_mse,
        train: SplitMetrics::measure(&best, train_set)?,
        validation: SplitMetrics::measure(&best, val_set)?,
        test: if test_set.is_empty() {
            None
        } else {
            Some(SplitMetrics::measure(&best, test_set)?)
        },
    };
    Ok((best, report))
}
