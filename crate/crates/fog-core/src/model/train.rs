//! Mini-batch training with Adam, global-norm gradient clipping and early
//! stopping, plus per-window prediction.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

use super::lstm::{backward, bce_loss, forward};
use super::{gather_batch, sequence_indices, Hyper, LstmModel, Standardizer};

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    /// Loss of the untrained model on the full training set.
    pub initial_loss: f64,
    /// Mean mini-batch loss per completed epoch.
    pub epoch_losses: Vec<f64>,
    pub early_stopped: bool,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    fn new(len: usize) -> Self {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], hyper: &Hyper) {
        self.t += 1;
        let b1 = hyper.beta1;
        let b2 = hyper.beta2;
        let bias1 = 1.0 - b1.powi(self.t as i32);
        let bias2 = 1.0 - b2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= hyper.learning_rate * m_hat / (v_hat.sqrt() + hyper.adam_eps);
        }
    }
}

fn clip_global_norm(grads: &mut [f64], max_norm: f64) {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= scale;
        }
    }
}

/// Train a fresh model on a (balanced) feature matrix.
///
/// Fully deterministic for a given seed: initialization, epoch shuffles and
/// batch composition all derive from one seeded stream. Training aborts with
/// a diagnostic if the loss turns non-finite.
pub fn train(matrix: &FeatureMatrix, hyper: &Hyper) -> Result<(LstmModel, TrainLog)> {
    hyper.validate()?;
    if matrix.n_rows() == 0 || matrix.n_cols() == 0 {
        return Err(Error::invalid("cannot train on an empty matrix"));
    }

    let scaler = Standardizer::fit(&matrix.values);
    let scaled = scaler.transform(&matrix.values);
    let sequences = sequence_indices(matrix, hyper.seq_len);

    let mut model = LstmModel::init(matrix.n_cols(), hyper);
    model.scaler = scaler;
    model.feature_names = matrix.column_names();

    let n = matrix.n_rows();
    let all_rows: Vec<usize> = (0..n).collect();
    let initial_loss = {
        let mut total = 0.0;
        for chunk in all_rows.chunks(hyper.batch_size) {
            let batch = gather_batch(&scaled, &sequences, chunk, &matrix.labels);
            let cache = forward(&model, &batch.inputs)?;
            total += bce_loss(&cache.probs, &batch.labels) * chunk.len() as f64;
        }
        total / n as f64
    };

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed.wrapping_add(1));
    let mut order = all_rows.clone();
    let mut adam = Adam::new(model.flat_len());
    let mut log = TrainLog {
        initial_loss,
        epoch_losses: Vec::with_capacity(hyper.epochs),
        early_stopped: false,
    };
    let mut best_loss = f64::INFINITY;
    let mut stalled = 0usize;

    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(hyper.batch_size) {
            let batch = gather_batch(&scaled, &sequences, chunk, &matrix.labels);
            let cache = forward(&model, &batch.inputs)?;
            let loss = bce_loss(&cache.probs, &batch.labels);
            if !loss.is_finite() {
                return Err(Error::Diverged(format!(
                    "non-finite loss {loss} in epoch {epoch}"
                )));
            }
            epoch_loss += loss * chunk.len() as f64;

            let grads = backward(&model, &cache, &batch.labels);
            let mut flat_grads = grads.to_flat();
            clip_global_norm(&mut flat_grads, hyper.clip_norm);
            let mut flat_params = model.flat_params();
            adam.step(&mut flat_params, &flat_grads, hyper);
            model.set_flat_params(&flat_params);
        }
        epoch_loss /= n as f64;
        log.epoch_losses.push(epoch_loss);

        if epoch_loss + 1e-6 < best_loss {
            best_loss = epoch_loss;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= hyper.patience {
                log.early_stopped = true;
                break;
            }
        }
    }
    Ok((model, log))
}

/// Score every row of `matrix` with one probability in (0, 1).
///
/// Sequences end at each row; rows with too little in-segment history are
/// left-padded with zero vectors, so every window receives a score.
pub fn predict(model: &LstmModel, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
    let names = matrix.column_names();
    if !model.feature_names.is_empty() && names != model.feature_names {
        return Err(Error::ShapeMismatch(format!(
            "feature columns do not match the training columns ({} vs {})",
            names.len(),
            model.feature_names.len()
        )));
    }
    if matrix.n_cols() != model.feature_count() {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {} columns, model expects {}",
            matrix.n_cols(),
            model.feature_count()
        )));
    }
    let scaled = model.scaler.transform(&matrix.values);
    let sequences = sequence_indices(matrix, model.hyper.seq_len);
    let mut scores = Vec::with_capacity(matrix.n_rows());
    let rows: Vec<usize> = (0..matrix.n_rows()).collect();
    for chunk in rows.chunks(model.hyper.batch_size) {
        let batch = gather_batch(&scaled, &sequences, chunk, &matrix.labels);
        let cache = forward(model, &batch.inputs)?;
        scores.extend(cache.probs.iter().copied());
    }
    Ok(scores)
}

/// Fraction of rows whose thresholded score matches the label.
pub fn accuracy(scores: &[f64], labels: &[bool]) -> f64 {
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(s, l)| (**s >= 0.5) == **l)
        .count();
    correct as f64 / scores.len().max(1) as f64
}
