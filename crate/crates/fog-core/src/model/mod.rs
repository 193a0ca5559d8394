//! The two-layer LSTM binary classifier and the Freeze-Index baseline.

mod baseline;
mod lstm;
mod train;

use std::collections::HashMap;
use std::io::{Read, Write};

use ndarray::{Array1, Array2, Array3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub use baseline::{fi_baseline_calibrate, fi_baseline_predict, FiBaseline};
pub use lstm::{backward, bce_loss, forward, ForwardCache, GateParams, LstmLayerParams};
pub use train::{accuracy, predict, train, TrainLog};

/// Training hyperparameters. Everything the underlying approach leaves open
/// is pinned here and sweepable through experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyper {
    /// Windows per input sequence (many-to-one: the label is the final
    /// window's label).
    pub seq_len: usize,
    pub batch_size: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Early stop after this many epochs without training-loss improvement.
    pub patience: usize,
    pub seed: u64,
    /// Global-norm gradient clip.
    pub clip_norm: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            seq_len: 8,
            batch_size: 64,
            hidden1: 64,
            hidden2: 32,
            learning_rate: 1e-3,
            epochs: 100,
            patience: 10,
            seed: 0,
            clip_norm: 5.0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        if self.seq_len == 0
            || self.batch_size == 0
            || self.hidden1 == 0
            || self.hidden2 == 0
            || self.epochs == 0
        {
            return Err(Error::invalid(
                "seq_len, batch_size, hidden sizes and epochs must be positive",
            ));
        }
        if !(self.learning_rate > 0.0 && self.clip_norm > 0.0) {
            return Err(Error::invalid("learning rate and clip norm must be positive"));
        }
        Ok(())
    }
}

/// All trainable tensors; the same shape describes gradients and optimizer
/// moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub layer1: LstmLayerParams,
    pub layer2: LstmLayerParams,
    pub head_w: Array1<f64>,
    pub head_b: f64,
}

impl ModelParams {
    pub fn zeros(features: usize, hidden1: usize, hidden2: usize) -> Self {
        ModelParams {
            layer1: LstmLayerParams::zeros(hidden1, features),
            layer2: LstmLayerParams::zeros(hidden2, hidden1),
            head_w: Array1::zeros(hidden2),
            head_b: 0.0,
        }
    }

    /// Uniform init in [-s, s] with s = 1/sqrt(fan-in) for every weight
    /// matrix and the head; biases start at zero except the forget gate's,
    /// which starts at 1.
    pub fn init(features: usize, hidden1: usize, hidden2: usize, rng: &mut impl Rng) -> Self {
        let mut params = ModelParams::zeros(features, hidden1, hidden2);
        for layer in [&mut params.layer1, &mut params.layer2] {
            let fan_w = layer.input_size() as f64;
            let fan_u = layer.hidden_size() as f64;
            let (sw, su) = (1.0 / fan_w.sqrt(), 1.0 / fan_u.sqrt());
            for gate in layer.gates_mut() {
                gate.w.mapv_inplace(|_| rng.random_range(-sw..sw));
                gate.u.mapv_inplace(|_| rng.random_range(-su..su));
            }
            layer.forget.b.fill(1.0);
        }
        let sh = 1.0 / (hidden2 as f64).sqrt();
        params.head_w.mapv_inplace(|_| rng.random_range(-sh..sh));
        params
    }

    fn flat_len(&self) -> usize {
        let layer = |l: &LstmLayerParams| {
            l.gates()
                .iter()
                .map(|g| g.w.len() + g.u.len() + g.b.len())
                .sum::<usize>()
        };
        layer(&self.layer1) + layer(&self.layer2) + self.head_w.len() + 1
    }

    /// Deterministic flat view: layer 1 then layer 2, gates in input,
    /// forget, output, candidate order, each as w (row-major), u, b; then
    /// head weights and bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        for layer in [&self.layer1, &self.layer2] {
            for gate in layer.gates() {
                out.extend(gate.w.iter());
                out.extend(gate.u.iter());
                out.extend(gate.b.iter());
            }
        }
        out.extend(self.head_w.iter());
        out.push(self.head_b);
        out
    }

    pub fn assign_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.flat_len(), "flat parameter length mismatch");
        let mut it = flat.iter().copied();
        for layer in [&mut self.layer1, &mut self.layer2] {
            for gate in layer.gates_mut() {
                for v in gate.w.iter_mut() {
                    *v = it.next().expect("length checked");
                }
                for v in gate.u.iter_mut() {
                    *v = it.next().expect("length checked");
                }
                for v in gate.b.iter_mut() {
                    *v = it.next().expect("length checked");
                }
            }
        }
        for v in self.head_w.iter_mut() {
            *v = it.next().expect("length checked");
        }
        self.head_b = it.next().expect("length checked");
    }
}

/// Per-column z-scoring fit on training data and reused at prediction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(values: &Array2<f64>) -> Self {
        let (mean, mut std) = crate::features::column_mean_std(values);
        for s in &mut std {
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Standardizer { mean, std }
    }

    pub fn identity(n: usize) -> Self {
        Standardizer {
            mean: vec![0.0; n],
            std: vec![1.0; n],
        }
    }

    pub fn transform(&self, values: &Array2<f64>) -> Array2<f64> {
        let mut out = values.clone();
        for (mut col, (m, s)) in out
            .columns_mut()
            .into_iter()
            .zip(self.mean.iter().zip(&self.std))
        {
            col.mapv_inplace(|v| (v - m) / s);
        }
        out
    }
}

/// The trained classifier: parameters, hyperparameters, the feature scaler
/// and the expected column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    pub params: ModelParams,
    pub hyper: Hyper,
    pub scaler: Standardizer,
    pub feature_names: Vec<String>,
}

impl LstmModel {
    /// Fresh model with seeded initialization and an identity scaler.
    pub fn init(features: usize, hyper: &Hyper) -> Self {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(hyper.seed);
        LstmModel {
            params: ModelParams::init(features, hyper.hidden1, hyper.hidden2, &mut rng),
            hyper: *hyper,
            scaler: Standardizer::identity(features),
            feature_names: Vec::new(),
        }
    }

    pub fn feature_count(&self) -> usize {
        self.params.layer1.input_size()
    }

    pub fn flat_len(&self) -> usize {
        self.params.flat_len()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.params.to_flat()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        self.params.assign_flat(flat);
    }

    /// Serialize to a self-describing JSON checkpoint at full precision.
    pub fn save_checkpoint(&self, writer: impl Write) -> Result<()> {
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.to_string(),
            model: self.clone(),
        };
        serde_json::to_writer(writer, &file)?;
        Ok(())
    }

    pub fn load_checkpoint(reader: impl Read) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_reader(reader)?;
        if file.format != CHECKPOINT_FORMAT {
            return Err(Error::invalid(format!(
                "unsupported checkpoint format {:?}",
                file.format
            )));
        }
        Ok(file.model)
    }
}

const CHECKPOINT_FORMAT: &str = "fog-lstm-v1";

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    model: LstmModel,
}

/// A (batch, steps, features) tensor plus one label per sequence.
#[derive(Debug, Clone)]
pub struct SequenceBatch {
    pub inputs: Array3<f64>,
    pub labels: Array1<f64>,
}

/// For every matrix row, the rows forming its input sequence, oldest first;
/// `None` marks a left-padded zero step.
///
/// History comes from preceding windows of the same patient and contiguous
/// segment; rows with too little history are padded, and SMOTE-synthetic
/// rows (which have no temporal position) always stand alone.
pub fn sequence_indices(matrix: &FeatureMatrix, seq_len: usize) -> Vec<Vec<Option<usize>>> {
    let mut groups: HashMap<(&str, usize), Vec<usize>> = HashMap::new();
    for (idx, meta) in matrix.rows.iter().enumerate() {
        if !meta.synthetic {
            groups
                .entry((meta.patient_id.as_str(), meta.segment))
                .or_default()
                .push(idx);
        }
    }
    let mut sequences = vec![Vec::new(); matrix.n_rows()];
    for rows in groups.values_mut() {
        rows.sort_by_key(|&i| (matrix.rows[i].start_index, i));
        for (pos, &row) in rows.iter().enumerate() {
            let mut seq = Vec::with_capacity(seq_len);
            for back in (0..seq_len).rev() {
                seq.push(pos.checked_sub(back).map(|p| rows[p]));
            }
            sequences[row] = seq;
        }
    }
    for (idx, meta) in matrix.rows.iter().enumerate() {
        if meta.synthetic {
            let mut seq = vec![None; seq_len - 1];
            seq.push(Some(idx));
            sequences[idx] = seq;
        }
    }
    sequences
}

/// Assemble the tensor for the given rows from scaled values.
pub fn gather_batch(
    scaled: &Array2<f64>,
    sequences: &[Vec<Option<usize>>],
    rows: &[usize],
    labels: &[bool],
) -> SequenceBatch {
    let seq_len = sequences.first().map_or(0, Vec::len);
    let features = scaled.ncols();
    let mut inputs = Array3::zeros((rows.len(), seq_len, features));
    for (b, &row) in rows.iter().enumerate() {
        for (t, step) in sequences[row].iter().enumerate() {
            if let Some(src) = step {
                inputs
                    .index_axis_mut(ndarray::Axis(0), b)
                    .row_mut(t)
                    .assign(&scaled.row(*src));
            }
        }
    }
    let labels = rows.iter().map(|&r| f64::from(u8::from(labels[r]))).collect();
    SequenceBatch { inputs, labels }
}
