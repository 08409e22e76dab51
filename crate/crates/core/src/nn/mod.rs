//! Feedforward network with one embedding table per categorical feature.
//!
//! Each categorical feature is looked up in its own table, passed through
//! the activation and concatenated with the numerical inputs. Hidden layers
//! apply affine -> batch-norm (optional) -> activation -> dropout (train
//! mode only, inverted scaling). The head is a plain affine map with one
//! output (regression) or one logit per class.

mod config;
mod params;
mod train;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbdt::EarlyStopping;
use crate::preprocess::EncodedTable;
use crate::task::{softmax_in_place, Predictions, Task};

pub use config::{ladder_widths, EmbeddingChoice, EmbeddingSize, NnConfig, WIDTH_LADDER};
pub use params::{DenseLayer, Linear, MlpParams, NormParams, ParamKind};
pub use train::{fit_mlp, loss_and_gradients};

pub const LEAKY_SLOPE: f64 = 0.01;
pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Relu,
    LeakyRelu,
}

impl Activation {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-v).exp()),
            Activation::Relu => v.max(0.0),
            Activation::LeakyRelu => {
                if v > 0.0 {
                    v
                } else {
                    LEAKY_SLOPE * v
                }
            }
        }
    }

    /// Derivative at pre-activation `v` with output `a`.
    pub fn derivative(self, v: f64, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Relu => {
                if v > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu => {
                if v > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingConfig {
    /// Feature enters the first dense layer one-hot.
    Off,
    Dim(usize),
}

impl EmbeddingConfig {
    /// `max(1, ceil(10% of categories))`.
    pub fn ten_percent(cardinality: usize) -> Self {
        EmbeddingConfig::Dim(cardinality.div_ceil(10).max(1))
    }

    pub fn width(self, cardinality: usize) -> usize {
        match self {
            EmbeddingConfig::Off => cardinality,
            EmbeddingConfig::Dim(d) => d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputLayout {
    pub n_numeric: usize,
    /// Category count of each categorical input (layout length).
    pub cardinalities: Vec<usize>,
}

impl InputLayout {
    pub fn of(enc: &EncodedTable) -> Self {
        InputLayout {
            n_numeric: enc.numeric.ncols(),
            cardinalities: enc.cardinalities(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input: InputLayout,
    pub task: Task,
    pub embeddings: Vec<EmbeddingConfig>,
    pub hidden_widths: Vec<usize>,
    pub activation: Activation,
    pub dropout: f64,
    pub batch_norm: bool,
    pub l2_rate: f64,
    pub l1_rate: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub early_stopping: EarlyStopping,
}

impl MlpSpec {
    /// Six hidden layers `[2000, 1200, 500, 250, 100, 50]`, leaky ReLU,
    /// dropout 0.3, batch-norm, 10%-of-categories embeddings.
    pub fn tuned(input: InputLayout, task: Task) -> Self {
        let embeddings = input
            .cardinalities
            .iter()
            .map(|&c| EmbeddingConfig::ten_percent(c))
            .collect();
        MlpSpec {
            input,
            task,
            embeddings,
            hidden_widths: vec![2000, 1200, 500, 250, 100, 50],
            activation: Activation::LeakyRelu,
            dropout: 0.3,
            batch_norm: true,
            l2_rate: 0.01,
            l1_rate: 0.0,
            learning_rate: 1e-3,
            max_epochs: 1000,
            batch_size: 256,
            early_stopping: EarlyStopping::Patience(50),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("invalid network spec: {msg}")));
        if self.embeddings.len() != self.input.cardinalities.len() {
            return bad(format!(
                "{} embedding configs for {} categorical inputs",
                self.embeddings.len(),
                self.input.cardinalities.len()
            ));
        }
        if self.hidden_widths.contains(&0) {
            return bad("hidden widths must be >= 1".into());
        }
        if self.input.cardinalities.contains(&0) {
            return bad("categorical inputs need at least one category".into());
        }
        if self.embeddings.contains(&EmbeddingConfig::Dim(0)) {
            return bad("embedding dimension must be >= 1".into());
        }
        if !(self.dropout >= 0.0 && self.dropout < 1.0) {
            return bad(format!("dropout {} not in [0, 1)", self.dropout));
        }
        if !(self.l2_rate >= 0.0 && self.l1_rate >= 0.0 && self.learning_rate >= 0.0) {
            return bad("rates must be >= 0".into());
        }
        if self.batch_size == 0 {
            return bad("batch size must be >= 1".into());
        }
        if self.task.n_outputs() == 0 {
            return bad("classification needs at least one class".into());
        }
        if matches!(self.early_stopping, EarlyStopping::Patience(0)) {
            return bad("patience must be >= 1".into());
        }
        Ok(())
    }

    /// Width of the concatenated input fed to the first dense layer.
    pub fn input_width(&self) -> usize {
        self.input.n_numeric
            + self
                .embeddings
                .iter()
                .zip(&self.input.cardinalities)
                .map(|(e, &c)| e.width(c))
                .sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub mean: Array1<f64>,
    pub var: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub spec: MlpSpec,
    pub params: MlpParams,
    /// Per hidden layer, present when batch-norm is on.
    pub running: Vec<Option<RunningStats>>,
    /// Regression outputs are `target_shift + target_scale * head`.
    pub target_shift: f64,
    pub target_scale: f64,
    pub best_epoch: Option<usize>,
    /// Validation loss after every completed epoch.
    pub validation_history: Vec<f64>,
}

/// Network inputs: standardized numerics and per-feature category indices.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpInput {
    pub numeric: Array2<f64>,
    /// `categories[feature][row]`.
    pub categories: Vec<Vec<usize>>,
}

impl MlpInput {
    pub fn from_encoded(enc: &EncodedTable) -> Self {
        MlpInput {
            numeric: enc.numeric.clone(),
            categories: enc.category_indices(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.numeric.nrows()
    }

    pub fn select(&self, rows: &[usize]) -> MlpInput {
        MlpInput {
            numeric: self.numeric.select(Axis(0), rows),
            categories: self
                .categories
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
        }
    }
}

fn glorot(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-limit..=limit))
}

/// Glorot-uniform weights, zero biases, unit batch-norm scale.
pub fn init_mlp(spec: &MlpSpec, seed: u64) -> Result<MlpModel> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let embeddings = spec
        .embeddings
        .iter()
        .zip(&spec.input.cardinalities)
        .map(|(e, &card)| match e {
            EmbeddingConfig::Off => None,
            EmbeddingConfig::Dim(d) => Some(glorot(&mut rng, card, *d)),
        })
        .collect();
    let mut fan_in = spec.input_width();
    let mut hidden = Vec::with_capacity(spec.hidden_widths.len());
    let mut running = Vec::with_capacity(spec.hidden_widths.len());
    for &width in &spec.hidden_widths {
        hidden.push(DenseLayer {
            linear: Linear {
                weight: glorot(&mut rng, fan_in, width),
                bias: Array1::zeros(width),
            },
            norm: spec.batch_norm.then(|| NormParams {
                gamma: Array1::ones(width),
                beta: Array1::zeros(width),
            }),
        });
        running.push(spec.batch_norm.then(|| RunningStats {
            mean: Array1::zeros(width),
            var: Array1::ones(width),
        }));
        fan_in = width;
    }
    let n_out = spec.task.n_outputs();
    let head = Linear {
        weight: glorot(&mut rng, fan_in, n_out),
        bias: Array1::zeros(n_out),
    };
    Ok(MlpModel {
        spec: spec.clone(),
        params: MlpParams {
            embeddings,
            hidden,
            head,
        },
        running,
        target_shift: 0.0,
        target_scale: 1.0,
        best_epoch: None,
        validation_history: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Intermediate values kept for backpropagation.
pub(crate) struct LayerCache {
    pub input: Array2<f64>,
    /// Pre-activation after batch-norm (or the affine output without it).
    pub pre: Array2<f64>,
    pub act: Array2<f64>,
    pub normalized: Option<Array2<f64>>,
    pub inv_std: Option<Array1<f64>>,
    pub dropout_mask: Option<Array2<f64>>,
}

pub(crate) struct ForwardCache {
    /// Per embedded feature: looked-up rows before the activation.
    pub embed_pre: Vec<Option<Array2<f64>>>,
    pub embed_act: Vec<Option<Array2<f64>>>,
    pub layers: Vec<LayerCache>,
    pub head_input: Array2<f64>,
}

/// Batch statistics observed in train mode, for the running averages.
pub(crate) type BatchStats = Vec<Option<(Array1<f64>, Array1<f64>)>>;

impl MlpModel {
    fn check_layout(&self, input: &MlpInput) -> Result<()> {
        let layout = &self.spec.input;
        if input.numeric.ncols() != layout.n_numeric || input.categories.len() != layout.cardinalities.len() {
            return Err(Error::Predict(format!(
                "input has {} numeric / {} categorical columns, network expects {} / {}",
                input.numeric.ncols(),
                input.categories.len(),
                layout.n_numeric,
                layout.cardinalities.len()
            )));
        }
        for (f, (col, &card)) in input.categories.iter().zip(&layout.cardinalities).enumerate() {
            if col.len() != input.n_rows() {
                return Err(Error::Predict(format!("categorical input {f} has wrong length")));
            }
            if let Some(&bad) = col.iter().find(|&&c| c >= card) {
                return Err(Error::Predict(format!(
                    "category index {bad} out of range for input {f} with {card} categories"
                )));
            }
        }
        Ok(())
    }

    /// Per categorical feature, its contribution to the first-layer input
    /// (activated embedding rows, or one-hot rows when embedding is off).
    pub fn embed(&self, input: &MlpInput) -> Result<Vec<Array2<f64>>> {
        self.check_layout(input)?;
        let (pre, act) = self.embed_unchecked(input);
        Ok(act
            .into_iter()
            .zip(pre)
            .zip(&self.spec.input.cardinalities)
            .zip(&input.categories)
            .map(|(((a, _), &card), idx)| a.unwrap_or_else(|| onehot(idx, card)))
            .collect())
    }

    #[allow(clippy::type_complexity)]
    fn embed_unchecked(&self, input: &MlpInput) -> (Vec<Option<Array2<f64>>>, Vec<Option<Array2<f64>>>) {
        let act = self.spec.activation;
        let mut pre = Vec::new();
        let mut post = Vec::new();
        for (table, idx) in self.params.embeddings.iter().zip(&input.categories) {
            match table {
                Some(t) => {
                    let rows = t.select(Axis(0), idx);
                    post.push(Some(rows.mapv(|v| act.apply(v))));
                    pre.push(Some(rows));
                }
                None => {
                    pre.push(None);
                    post.push(None);
                }
            }
        }
        (pre, post)
    }

    pub(crate) fn forward_cached(
        &self,
        input: &MlpInput,
        mode: Mode,
        rng: Option<&mut ChaCha8Rng>,
    ) -> (Array2<f64>, ForwardCache, BatchStats) {
        let n = input.n_rows();
        let (embed_pre, embed_act) = self.embed_unchecked(input);
        let width = self.spec.input_width();
        let mut x = Array2::<f64>::zeros((n, width));
        x.slice_mut(s![.., ..self.spec.input.n_numeric]).assign(&input.numeric);
        let mut offset = self.spec.input.n_numeric;
        for (f, &card) in self.spec.input.cardinalities.iter().enumerate() {
            match &embed_act[f] {
                Some(a) => {
                    x.slice_mut(s![.., offset..offset + a.ncols()]).assign(a);
                    offset += a.ncols();
                }
                None => {
                    for (r, &c) in input.categories[f].iter().enumerate() {
                        x[[r, offset + c]] = 1.0;
                    }
                    offset += card;
                }
            }
        }

        let act = self.spec.activation;
        let dropout = if mode == Mode::Train { self.spec.dropout } else { 0.0 };
        let mut rng = rng;
        let mut layers = Vec::with_capacity(self.params.hidden.len());
        let mut batch_stats = Vec::with_capacity(self.params.hidden.len());
        for (l, layer) in self.params.hidden.iter().enumerate() {
            let z = x.dot(&layer.linear.weight) + &layer.linear.bias;
            let (pre, normalized, inv_std, stats) = match &layer.norm {
                Some(norm) => {
                    let (mean, var) = match mode {
                        Mode::Train => {
                            let mean = z.mean_axis(Axis(0)).expect("non-empty batch");
                            let var = z.var_axis(Axis(0), 0.0);
                            (mean, var)
                        }
                        Mode::Eval => {
                            let r = self.running[l].as_ref().expect("running stats with batch-norm");
                            (r.mean.clone(), r.var.clone())
                        }
                    };
                    let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
                    let normalized = (&z - &mean) * &inv_std;
                    let pre = &normalized * &norm.gamma + &norm.beta;
                    let stats = (mode == Mode::Train).then_some((mean, var));
                    (pre, Some(normalized), Some(inv_std), stats)
                }
                None => (z, None, None, None),
            };
            batch_stats.push(stats);
            let a = pre.mapv(|v| act.apply(v));
            let (out, mask) =
                if dropout > 0.0 {
                    let rng = rng.as_deref_mut().expect("dropout in train mode needs an rng");
                    let keep = 1.0 / (1.0 - dropout);
                    let mask = Array2::from_shape_simple_fn(a.raw_dim(), || {
                        if rng.random::<f64>() < dropout {
                            0.0
                        } else {
                            keep
                        }
                    });
                    (&a * &mask, Some(mask))
                } else {
                    (a.clone(), None)
                };
            layers.push(LayerCache {
                input: x,
                pre,
                act: a,
                normalized,
                inv_std,
                dropout_mask: mask,
            });
            x = out;
        }
        let out = x.dot(&self.params.head.weight) + &self.params.head.bias;
        (
            out,
            ForwardCache {
                embed_pre,
                embed_act,
                layers,
                head_input: x,
            },
            batch_stats,
        )
    }

    /// Raw head outputs (before target de-standardization or softmax).
    pub fn forward(&self, input: &MlpInput, mode: Mode, rng: Option<&mut ChaCha8Rng>) -> Result<Array2<f64>> {
        self.check_layout(input)?;
        if mode == Mode::Train && self.spec.dropout > 0.0 && rng.is_none() {
            return Err(Error::Config("train-mode dropout needs an rng".into()));
        }
        Ok(self.forward_cached(input, mode, rng).0)
    }

    /// Eval-mode predictions in target units, or class labels with softmax
    /// probabilities.
    pub fn predict(&self, input: &MlpInput) -> Result<Predictions> {
        let mut out = self.forward(input, Mode::Eval, None)?;
        Ok(match self.spec.task {
            Task::Regression => Predictions::Continuous(
                out.column(0)
                    .iter()
                    .map(|v| self.target_shift + self.target_scale * v)
                    .collect(),
            ),
            Task::Classification { .. } => {
                for mut row in out.rows_mut() {
                    softmax_in_place(row.as_slice_mut().expect("row-major"));
                }
                Predictions::from_probabilities(out)
            }
        })
    }

    pub fn predict_encoded(&self, enc: &EncodedTable) -> Result<Predictions> {
        self.predict(&MlpInput::from_encoded(enc))
    }

    pub fn n_parameters(&self) -> usize {
        self.params.len()
    }

    pub fn first_layer_weights(&self) -> ArrayView2<'_, f64> {
        match self.params.hidden.first() {
            Some(l) => l.linear.weight.view(),
            None => self.params.head.weight.view(),
        }
    }
}

fn onehot(indices: &[usize], card: usize) -> Array2<f64> {
    let mut m = Array2::zeros((indices.len(), card));
    for (r, &c) in indices.iter().enumerate() {
        m[[r, c]] = 1.0;
    }
    m
}
