//! Two-layer stacked LSTM with a sigmoid head: forward pass with cached
//! intermediates and exact backpropagation through time.
//!
//! Standard cell recurrences, per gate weights W (hidden x in), recurrent
//! weights U (hidden x hidden) and bias b:
//!
//! ```text
//! i_t = sigmoid(x_t W_i^T + h_{t-1} U_i^T + b_i)
//! f_t = sigmoid(x_t W_f^T + h_{t-1} U_f^T + b_f)
//! o_t = sigmoid(x_t W_o^T + h_{t-1} U_o^T + b_o)
//! g_t = tanh   (x_t W_g^T + h_{t-1} U_g^T + b_g)
//! c_t = f_t * c_{t-1} + i_t * g_t
//! h_t = o_t * tanh(c_t)
//! ```
//!
//! Layer 2 consumes layer 1's hidden sequence; the head applies
//! sigmoid(w . h_T + b) to layer 2's final hidden state. Initial hidden and
//! cell states are zero.

use ndarray::{Array1, Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{LstmModel, ModelParams};

/// Clamp applied inside the cross-entropy logs.
pub const LOSS_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    /// Input weights, hidden x in.
    pub w: Array2<f64>,
    /// Recurrent weights, hidden x hidden.
    pub u: Array2<f64>,
    /// Bias, hidden.
    pub b: Array1<f64>,
}

impl GateParams {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        GateParams {
            w: Array2::zeros((hidden, input)),
            u: Array2::zeros((hidden, hidden)),
            b: Array1::zeros(hidden),
        }
    }
}

/// Parameters of one LSTM layer, one [`GateParams`] per gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayerParams {
    pub input: GateParams,
    pub forget: GateParams,
    pub output: GateParams,
    pub candidate: GateParams,
}

impl LstmLayerParams {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        LstmLayerParams {
            input: GateParams::zeros(hidden, input),
            forget: GateParams::zeros(hidden, input),
            output: GateParams::zeros(hidden, input),
            candidate: GateParams::zeros(hidden, input),
        }
    }

    pub fn gates(&self) -> [&GateParams; 4] {
        [&self.input, &self.forget, &self.output, &self.candidate]
    }

    pub fn gates_mut(&mut self) -> [&mut GateParams; 4] {
        [
            &mut self.input,
            &mut self.forget,
            &mut self.output,
            &mut self.candidate,
        ]
    }

    pub fn hidden_size(&self) -> usize {
        self.input.w.nrows()
    }

    pub fn input_size(&self) -> usize {
        self.input.w.ncols()
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Cached per-step intermediates of one layer's forward pass.
pub(crate) struct LayerCache {
    xs: Vec<Array2<f64>>,
    i: Vec<Array2<f64>>,
    f: Vec<Array2<f64>>,
    o: Vec<Array2<f64>>,
    g: Vec<Array2<f64>>,
    c: Vec<Array2<f64>>,
    tanh_c: Vec<Array2<f64>>,
    h: Vec<Array2<f64>>,
}

impl LayerCache {
    fn steps(&self) -> usize {
        self.xs.len()
    }

    fn batch(&self) -> usize {
        self.xs.first().map_or(0, Array2::nrows)
    }
}

/// Everything the backward pass needs from one forward pass.
pub struct ForwardCache {
    layer1: LayerCache,
    layer2: LayerCache,
    /// Per-sequence output probabilities, strictly inside (0, 1).
    pub probs: Array1<f64>,
}

fn layer_forward(params: &LstmLayerParams, xs: Vec<Array2<f64>>) -> LayerCache {
    let hidden = params.hidden_size();
    let batch = xs.first().map_or(0, Array2::nrows);
    let steps = xs.len();
    let mut cache = LayerCache {
        xs,
        i: Vec::with_capacity(steps),
        f: Vec::with_capacity(steps),
        o: Vec::with_capacity(steps),
        g: Vec::with_capacity(steps),
        c: Vec::with_capacity(steps),
        tanh_c: Vec::with_capacity(steps),
        h: Vec::with_capacity(steps),
    };
    let mut h_prev = Array2::zeros((batch, hidden));
    let mut c_prev = Array2::zeros((batch, hidden));
    for t in 0..steps {
        let x = &cache.xs[t];
        let pre = |gate: &GateParams| x.dot(&gate.w.t()) + h_prev.dot(&gate.u.t()) + &gate.b;
        let i = pre(&params.input).mapv(sigmoid);
        let f = pre(&params.forget).mapv(sigmoid);
        let o = pre(&params.output).mapv(sigmoid);
        let g = pre(&params.candidate).mapv(f64::tanh);
        let c = &f * &c_prev + &i * &g;
        let tanh_c = c.mapv(f64::tanh);
        let h = &o * &tanh_c;
        h_prev = h.clone();
        c_prev = c.clone();
        cache.i.push(i);
        cache.f.push(f);
        cache.o.push(o);
        cache.g.push(g);
        cache.c.push(c);
        cache.tanh_c.push(tanh_c);
        cache.h.push(h);
    }
    cache
}

/// Run both layers and the head over a (batch, steps, features) tensor.
pub fn forward(model: &LstmModel, inputs: &Array3<f64>) -> Result<ForwardCache> {
    let (batch, steps, features) = inputs.dim();
    if features != model.feature_count() {
        return Err(Error::ShapeMismatch(format!(
            "input has {features} features, model expects {}",
            model.feature_count()
        )));
    }
    if batch == 0 || steps == 0 {
        return Err(Error::ShapeMismatch("empty batch".to_string()));
    }
    let xs: Vec<Array2<f64>> = (0..steps)
        .map(|t| inputs.index_axis(Axis(1), t).to_owned())
        .collect();
    let layer1 = layer_forward(&model.params.layer1, xs);
    let layer2 = layer_forward(&model.params.layer2, layer1.h.clone());
    let h_last = &layer2.h[steps - 1];
    let z = h_last.dot(&model.params.head_w) + model.params.head_b;
    let probs = z.mapv(sigmoid);
    Ok(ForwardCache {
        layer1,
        layer2,
        probs,
    })
}

/// Mean binary cross-entropy, with probabilities clamped away from 0 and 1
/// inside the logs.
pub fn bce_loss(probs: &Array1<f64>, labels: &Array1<f64>) -> f64 {
    assert_eq!(probs.len(), labels.len(), "probs and labels must align");
    let n = probs.len() as f64;
    probs
        .iter()
        .zip(labels.iter())
        .map(|(&p, &y)| {
            let p = p.clamp(LOSS_EPS, 1.0 - LOSS_EPS);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum::<f64>()
        / n
}

fn layer_backward(
    params: &LstmLayerParams,
    cache: &LayerCache,
    upstream: &[Array2<f64>],
) -> (LstmLayerParams, Vec<Array2<f64>>) {
    let steps = cache.steps();
    let batch = cache.batch();
    let hidden = params.hidden_size();
    let input = params.input_size();
    let mut grads = LstmLayerParams::zeros(hidden, input);
    let mut dxs = vec![Array2::zeros((batch, input)); steps];
    let zeros = Array2::zeros((batch, hidden));

    let mut dh_carry = Array2::<f64>::zeros((batch, hidden));
    let mut dc_carry = Array2::<f64>::zeros((batch, hidden));
    for t in (0..steps).rev() {
        let h_prev = if t == 0 { &zeros } else { &cache.h[t - 1] };
        let c_prev = if t == 0 { &zeros } else { &cache.c[t - 1] };
        let (i, f, o, g) = (&cache.i[t], &cache.f[t], &cache.o[t], &cache.g[t]);
        let tanh_c = &cache.tanh_c[t];

        let dh = &upstream[t] + &dh_carry;
        let dz_o = &dh * tanh_c * o * &(1.0 - o);
        let dc = &dc_carry + &(&dh * o * &(1.0 - tanh_c * tanh_c));
        let dz_i = &dc * g * i * &(1.0 - i);
        let dz_f = &dc * c_prev * f * &(1.0 - f);
        let dz_g = &dc * i * &(1.0 - g * g);
        dc_carry = &dc * f;

        let x = &cache.xs[t];
        let mut dh_next = Array2::zeros((batch, hidden));
        let mut dx = Array2::zeros((batch, input));
        for (gate, dz) in [
            (&params.input, &dz_i),
            (&params.forget, &dz_f),
            (&params.output, &dz_o),
            (&params.candidate, &dz_g),
        ] {
            dh_next += &dz.dot(&gate.u);
            dx += &dz.dot(&gate.w);
        }
        dh_carry = dh_next;
        dxs[t] = dx;

        for (gate_grads, dz) in [
            (&mut grads.input, &dz_i),
            (&mut grads.forget, &dz_f),
            (&mut grads.output, &dz_o),
            (&mut grads.candidate, &dz_g),
        ] {
            gate_grads.w += &dz.t().dot(x);
            gate_grads.u += &dz.t().dot(h_prev);
            gate_grads.b += &dz.sum_axis(Axis(0));
        }
    }
    (grads, dxs)
}

/// Exact gradients of the mean cross-entropy with respect to every
/// parameter, by backpropagation through time over both layers.
pub fn backward(model: &LstmModel, cache: &ForwardCache, labels: &Array1<f64>) -> ModelParams {
    let steps = cache.layer2.steps();
    let batch = cache.layer2.batch();
    let h2 = model.params.layer2.hidden_size();

    // Head: dL/dz = (p - y) / B for the mean BCE through a sigmoid.
    let dz: Array1<f64> = (&cache.probs - labels) / batch as f64;
    let h_last = &cache.layer2.h[steps - 1];
    let head_w_grad = h_last.t().dot(&dz);
    let head_b_grad = dz.sum();

    // Only the final step of layer 2 feeds the head.
    let mut upstream2 = vec![Array2::zeros((batch, h2)); steps];
    upstream2[steps - 1] = dz.insert_axis(Axis(1)) * &model.params.head_w;

    let (layer2_grads, dxs2) = layer_backward(&model.params.layer2, &cache.layer2, &upstream2);
    let (layer1_grads, _) = layer_backward(&model.params.layer1, &cache.layer1, &dxs2);

    ModelParams {
        layer1: layer1_grads,
        layer2: layer2_grads,
        head_w: head_w_grad,
        head_b: head_b_grad,
    }
}
