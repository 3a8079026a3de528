//! Minimal dense Q-network: forward pass, backprop, Adam/SGD updates,
//! layer freezing, and a portable JSON weight document.
//!
//! The engine supports exactly the topology the agent needs: fully connected
//! layers with rectified-linear hidden activations and a linear output. The
//! loss is mean squared error over the Q-value of the taken action only;
//! gradients do not flow through the two unchosen action outputs.
//!
//! Weights are stored input-major (`w_t[i*out + o]`) so the batched forward
//! and backward loops stream contiguously; the serialized document uses
//! conventional row-major (`w[o*in + i]`) order.

use std::collections::BTreeMap;
use std::path::Path;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Hidden-layer activation; the output layer is always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
}

/// Layer widths from input to output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
}

impl NetworkSpec {
    pub fn new(layer_sizes: Vec<usize>) -> Self {
        Self {
            layer_sizes,
            activation: Activation::Relu,
        }
    }

    /// The 13-input, three-hidden-layer, 3-action default.
    pub fn default_q(hidden: &[usize]) -> Self {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(crate::env::STATE_DIM);
        sizes.extend_from_slice(hidden);
        sizes.push(3);
        Self::new(sizes)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::Shape(format!(
                "network needs at least input and output layers, got {:?}",
                self.layer_sizes
            )));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::Shape(format!(
                "zero-width layer in {:?}",
                self.layer_sizes
            )));
        }
        Ok(())
    }

    /// Number of weight layers (= number of bias vectors).
    pub fn weight_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }
}

/// Per-layer trainable flags; `false` freezes a layer bit-exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreezeMask {
    pub trainable: Vec<bool>,
}

impl FreezeMask {
    pub fn all_trainable(weight_layers: usize) -> Self {
        Self {
            trainable: vec![true; weight_layers],
        }
    }

    /// Freezes the first `k` weight layers, leaving the rest trainable.
    pub fn freeze_first(k: usize, weight_layers: usize) -> Self {
        Self {
            trainable: (0..weight_layers).map(|l| l >= k).collect(),
        }
    }
}

/// Dense network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    spec: NetworkSpec,
    /// Input-major weights per layer: `w_t[l][i * out + o]`.
    pub(crate) w_t: Vec<Vec<f64>>,
    pub(crate) b: Vec<Vec<f64>>,
}

/// Loss plus per-layer gradients `(loss, grad_w_t, grad_b)`, with the
/// gradients in the same layout as [`QNetwork`] parameters.
pub type LossAndGrads = (f64, Vec<Vec<f64>>, Vec<Vec<f64>>);

/// He-style initialization: zero-mean normal weights with variance
/// `2 / fan_in`, zero biases. Deterministic for a fixed seed; draws follow
/// canonical row-major parameter order.
pub fn init(spec: &NetworkSpec, seed: u64) -> Result<QNetwork> {
    spec.validate()?;
    let mut rng = seed::rng_from(seed);
    let mut w_t = Vec::new();
    let mut b = Vec::new();
    for l in 0..spec.weight_layers() {
        let fan_in = spec.layer_sizes[l];
        let fan_out = spec.layer_sizes[l + 1];
        let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt())
            .expect("std is positive and finite");
        let mut w = vec![0.0; fan_in * fan_out];
        for o in 0..fan_out {
            for i in 0..fan_in {
                w[i * fan_out + o] = normal.sample(&mut rng);
            }
        }
        w_t.push(w);
        b.push(vec![0.0; fan_out]);
    }
    Ok(QNetwork {
        spec: spec.clone(),
        w_t,
        b,
    })
}

impl QNetwork {
    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.spec.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.spec.layer_sizes.last().expect("validated spec")
    }

    /// Deep, independent copy of the parameters (target-network sync).
    pub fn copy_weights(&self) -> Self {
        self.clone()
    }

    /// Total parameter count.
    pub fn param_count(&self) -> usize {
        self.w_t.iter().map(Vec::len).sum::<usize>() + self.b.iter().map(Vec::len).sum::<usize>()
    }

    /// All parameters flattened in canonical order: per layer, row-major
    /// weights then biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in 0..self.spec.weight_layers() {
            let (fan_in, fan_out) = (self.spec.layer_sizes[l], self.spec.layer_sizes[l + 1]);
            for o in 0..fan_out {
                for i in 0..fan_in {
                    out.push(self.w_t[l][i * fan_out + o]);
                }
            }
            out.extend_from_slice(&self.b[l]);
        }
        out
    }

    /// FNV-1a fingerprint of the exact parameter bits; equal fingerprints on
    /// every sync step is how tests assert bit-identity cheaply.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: f64| {
            for byte in v.to_bits().to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for l in 0..self.w_t.len() {
            self.w_t[l].iter().copied().for_each(&mut eat);
            self.b[l].iter().copied().for_each(&mut eat);
        }
        h
    }

    /// Single-input forward pass; returns one value per output unit.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "forward: input length {} != network input {}",
                input.len(),
                self.input_dim()
            )));
        }
        let acts = self.forward_batch_full(input, 1);
        Ok(acts.into_iter().last().expect("at least one layer"))
    }

    /// Batched forward pass over `batch` rows; returns `batch * output_dim`
    /// values, row per sample.
    pub fn forward_batch(&self, inputs: &[f64], batch: usize) -> Result<Vec<f64>> {
        if inputs.len() != batch * self.input_dim() {
            return Err(Error::Shape(format!(
                "forward_batch: got {} values for batch {} x input {}",
                inputs.len(),
                batch,
                self.input_dim()
            )));
        }
        let acts = self.forward_batch_full(inputs, batch);
        Ok(acts.into_iter().last().expect("at least one layer"))
    }

    /// Post-activation values for every layer, batch-row-major.
    fn forward_batch_full(&self, inputs: &[f64], batch: usize) -> Vec<Vec<f64>> {
        let layers = self.spec.weight_layers();
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers);
        let mut prev: &[f64] = inputs;
        for l in 0..layers {
            let fan_in = self.spec.layer_sizes[l];
            let fan_out = self.spec.layer_sizes[l + 1];
            let w = &self.w_t[l];
            let mut z = vec![0.0; batch * fan_out];
            for bi in 0..batch {
                let row = &prev[bi * fan_in..(bi + 1) * fan_in];
                let zrow = &mut z[bi * fan_out..(bi + 1) * fan_out];
                zrow.copy_from_slice(&self.b[l]);
                for (i, &x) in row.iter().enumerate() {
                    let wrow = &w[i * fan_out..(i + 1) * fan_out];
                    for (zo, &wv) in zrow.iter_mut().zip(wrow) {
                        *zo = x.mul_add(wv, *zo);
                    }
                }
            }
            if l + 1 < layers {
                for v in &mut z {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            acts.push(z);
            prev = acts.last().expect("just pushed");
        }
        acts
    }

    /// Mean-squared-error loss over the selected-action outputs and its
    /// gradients, without applying any update.
    ///
    /// Returns `(loss, grad_w_t, grad_b)` with gradients in the same layout
    /// as the parameters. Gradients of layers below the deepest trainable
    /// layer are left at zero when `mask` proves they are never needed.
    pub fn gradients(
        &self,
        inputs: &[f64],
        targets: &[f64],
        actions: &[usize],
        batch: usize,
        mask: &FreezeMask,
    ) -> Result<LossAndGrads> {
        let layers = self.spec.weight_layers();
        if mask.trainable.len() != layers {
            return Err(Error::Shape(format!(
                "freeze mask has {} entries for {} layers",
                mask.trainable.len(),
                layers
            )));
        }
        if batch == 0 {
            return Err(Error::Shape("empty batch".into()));
        }
        if targets.len() != batch || actions.len() != batch {
            return Err(Error::Shape(format!(
                "batch {} vs {} targets / {} actions",
                batch,
                targets.len(),
                actions.len()
            )));
        }
        if inputs.len() != batch * self.input_dim() {
            return Err(Error::Shape("input block size mismatch".into()));
        }
        let out_dim = self.output_dim();
        if actions.iter().any(|&a| a >= out_dim) {
            return Err(Error::Shape("action index out of range".into()));
        }

        let acts = self.forward_batch_full(inputs, batch);
        let q = acts.last().expect("at least one layer");
        let inv_b = 1.0 / batch as f64;
        let mut loss = 0.0;
        let mut delta = vec![0.0; batch * out_dim];
        for bi in 0..batch {
            let err = q[bi * out_dim + actions[bi]] - targets[bi];
            loss += err * err * inv_b;
            delta[bi * out_dim + actions[bi]] = 2.0 * inv_b * err;
        }
        if !loss.is_finite() {
            return Err(Error::Divergence(format!("non-finite loss {loss}")));
        }

        let lowest_trainable = mask.trainable.iter().position(|&t| t).unwrap_or(layers);
        let mut gw: Vec<Vec<f64>> = self.w_t.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut gb: Vec<Vec<f64>> = self.b.iter().map(|b| vec![0.0; b.len()]).collect();
        for l in (lowest_trainable..layers).rev() {
            let fan_in = self.spec.layer_sizes[l];
            let fan_out = self.spec.layer_sizes[l + 1];
            let below: &[f64] = if l == 0 {
                inputs
            } else {
                &acts[l - 1]
            };
            if mask.trainable[l] {
                let gwl = &mut gw[l];
                let gbl = &mut gb[l];
                for bi in 0..batch {
                    let drow = &delta[bi * fan_out..(bi + 1) * fan_out];
                    let arow = &below[bi * fan_in..(bi + 1) * fan_in];
                    for (i, &a) in arow.iter().enumerate() {
                        if a != 0.0 {
                            let grow = &mut gwl[i * fan_out..(i + 1) * fan_out];
                            for (g, &d) in grow.iter_mut().zip(drow) {
                                *g = a.mul_add(d, *g);
                            }
                        }
                    }
                    for (g, &d) in gbl.iter_mut().zip(drow) {
                        *g += d;
                    }
                }
            }
            if l > lowest_trainable {
                // delta for the layer below, through the linear map and relu.
                let w = &self.w_t[l];
                let mut next = vec![0.0; batch * fan_in];
                for bi in 0..batch {
                    let drow = &delta[bi * fan_out..(bi + 1) * fan_out];
                    let arow = &below[bi * fan_in..(bi + 1) * fan_in];
                    let nrow = &mut next[bi * fan_in..(bi + 1) * fan_in];
                    for i in 0..fan_in {
                        if arow[i] > 0.0 {
                            let wrow = &w[i * fan_out..(i + 1) * fan_out];
                            // Four accumulators break the FMA latency chain.
                            let mut acc = [0.0f64; 4];
                            let mut chunks = drow.chunks_exact(4).zip(wrow.chunks_exact(4));
                            for (dc, wc) in &mut chunks {
                                for k in 0..4 {
                                    acc[k] = dc[k].mul_add(wc[k], acc[k]);
                                }
                            }
                            let mut tail = 0.0;
                            for (d, wv) in drow
                                .chunks_exact(4)
                                .remainder()
                                .iter()
                                .zip(wrow.chunks_exact(4).remainder())
                            {
                                tail = d.mul_add(*wv, tail);
                            }
                            nrow[i] = (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail;
                        }
                    }
                }
                delta = next;
            }
        }
        Ok((loss, gw, gb))
    }
}

/// Optimizer choice for the gradient step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

/// Adaptive-moment (or plain SGD) state mirroring the network layout.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub grad_clip_norm: Option<f64>,
    step: u64,
    m_w: Vec<Vec<f64>>,
    v_w: Vec<Vec<f64>>,
    m_b: Vec<Vec<f64>>,
    v_b: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(net: &QNetwork, kind: OptimizerKind, lr: f64, grad_clip_norm: Option<f64>) -> Self {
        Self {
            kind,
            lr,
            grad_clip_norm,
            step: 0,
            m_w: net.w_t.iter().map(|w| vec![0.0; w.len()]).collect(),
            v_w: net.w_t.iter().map(|w| vec![0.0; w.len()]).collect(),
            m_b: net.b.iter().map(|b| vec![0.0; b.len()]).collect(),
            v_b: net.b.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }
}

/// One gradient step on a minibatch: computes the masked MSE loss, applies
/// the optimizer to trainable layers, and returns the pre-update loss.
/// Frozen layers (and their moments) are untouched.
pub fn train_step(
    net: &mut QNetwork,
    opt: &mut OptimizerState,
    mask: &FreezeMask,
    inputs: &[f64],
    targets: &[f64],
    actions: &[usize],
) -> Result<f64> {
    let batch = targets.len();
    let (loss, mut gw, mut gb) = net.gradients(inputs, targets, actions, batch, mask)?;

    if let Some(clip) = opt.grad_clip_norm {
        let mut sq = 0.0;
        for l in 0..gw.len() {
            if mask.trainable[l] {
                sq += gw[l].iter().map(|g| g * g).sum::<f64>();
                sq += gb[l].iter().map(|g| g * g).sum::<f64>();
            }
        }
        let norm = sq.sqrt();
        if norm > clip {
            let scale = clip / norm;
            for l in 0..gw.len() {
                if mask.trainable[l] {
                    gw[l].iter_mut().for_each(|g| *g *= scale);
                    gb[l].iter_mut().for_each(|g| *g *= scale);
                }
            }
        }
    }

    opt.step += 1;
    match opt.kind {
        OptimizerKind::Sgd => {
            for l in 0..net.w_t.len() {
                if !mask.trainable[l] {
                    continue;
                }
                for (w, g) in net.w_t[l].iter_mut().zip(&gw[l]) {
                    *w -= opt.lr * g;
                }
                for (b, g) in net.b[l].iter_mut().zip(&gb[l]) {
                    *b -= opt.lr * g;
                }
            }
        }
        OptimizerKind::Adam => {
            let bc1 = 1.0 - ADAM_BETA1.powi(opt.step as i32);
            let bc2 = 1.0 - ADAM_BETA2.powi(opt.step as i32);
            let adam = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
                for k in 0..p.len() {
                    m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * g[k];
                    v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * g[k] * g[k];
                    let mh = m[k] / bc1;
                    let vh = v[k] / bc2;
                    p[k] -= opt.lr * mh / (vh.sqrt() + ADAM_EPS);
                }
            };
            for l in 0..net.w_t.len() {
                if !mask.trainable[l] {
                    continue;
                }
                adam(&mut net.w_t[l], &gw[l], &mut opt.m_w[l], &mut opt.v_w[l]);
                adam(&mut net.b[l], &gb[l], &mut opt.m_b[l], &mut opt.v_b[l]);
            }
        }
    }
    Ok(loss)
}

/// Portable weight document; `weights` are row-major (`w[o*in + i]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightDoc {
    pub format_version: u32,
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub metadata: BTreeMap<String, String>,
}

pub const WEIGHT_FORMAT_VERSION: u32 = 1;

/// Network parameters to a portable document.
pub fn serialize(net: &QNetwork, metadata: BTreeMap<String, String>) -> WeightDoc {
    let mut weights = Vec::new();
    for l in 0..net.spec.weight_layers() {
        let (fan_in, fan_out) = (net.spec.layer_sizes[l], net.spec.layer_sizes[l + 1]);
        let mut w = vec![0.0; fan_in * fan_out];
        for o in 0..fan_out {
            for i in 0..fan_in {
                w[o * fan_in + i] = net.w_t[l][i * fan_out + o];
            }
        }
        weights.push(w);
    }
    WeightDoc {
        format_version: WEIGHT_FORMAT_VERSION,
        layer_sizes: net.spec.layer_sizes.clone(),
        activation: net.spec.activation,
        weights,
        biases: net.b.clone(),
        metadata,
    }
}

/// Document back to a network; validates version, shapes, and finiteness.
pub fn deserialize(doc: &WeightDoc) -> Result<QNetwork> {
    if doc.format_version != WEIGHT_FORMAT_VERSION {
        return Err(Error::WeightDoc(format!(
            "unsupported format_version {} (expected {WEIGHT_FORMAT_VERSION})",
            doc.format_version
        )));
    }
    let spec = NetworkSpec {
        layer_sizes: doc.layer_sizes.clone(),
        activation: doc.activation,
    };
    spec.validate()
        .map_err(|e| Error::WeightDoc(format!("bad layer_sizes: {e}")))?;
    let layers = spec.weight_layers();
    if doc.weights.len() != layers || doc.biases.len() != layers {
        return Err(Error::WeightDoc(format!(
            "expected {layers} weight/bias arrays, got {}/{}",
            doc.weights.len(),
            doc.biases.len()
        )));
    }
    let mut w_t = Vec::with_capacity(layers);
    for l in 0..layers {
        let (fan_in, fan_out) = (spec.layer_sizes[l], spec.layer_sizes[l + 1]);
        if doc.weights[l].len() != fan_in * fan_out {
            return Err(Error::WeightDoc(format!(
                "layer {l}: {} weights, expected {}x{}",
                doc.weights[l].len(),
                fan_out,
                fan_in
            )));
        }
        if doc.biases[l].len() != fan_out {
            return Err(Error::WeightDoc(format!(
                "layer {l}: {} biases, expected {fan_out}",
                doc.biases[l].len()
            )));
        }
        if doc.weights[l].iter().chain(&doc.biases[l]).any(|v| !v.is_finite()) {
            return Err(Error::WeightDoc(format!("layer {l}: non-finite parameter")));
        }
        let mut w = vec![0.0; fan_in * fan_out];
        for o in 0..fan_out {
            for i in 0..fan_in {
                w[i * fan_out + o] = doc.weights[l][o * fan_in + i];
            }
        }
        w_t.push(w);
    }
    Ok(QNetwork {
        spec,
        w_t,
        b: doc.biases.clone(),
    })
}

/// Canonical single-line JSON rendering; equal parameters and metadata give
/// byte-identical output.
pub fn doc_to_json(doc: &WeightDoc) -> String {
    let mut s = serde_json::to_string(doc).expect("weight doc serializes");
    s.push('\n');
    s
}

pub fn doc_from_json(text: &str) -> Result<WeightDoc> {
    serde_json::from_str(text).map_err(|e| Error::WeightDoc(format!("JSON parse: {e}")))
}

pub fn write_weights_file(
    path: &Path,
    net: &QNetwork,
    metadata: BTreeMap<String, String>,
) -> Result<()> {
    std::fs::write(path, doc_to_json(&serialize(net, metadata)))?;
    Ok(())
}

pub fn read_weights_file(path: &Path) -> Result<(QNetwork, WeightDoc)> {
    let text = std::fs::read_to_string(path)?;
    let doc = doc_from_json(&text)?;
    let net = deserialize(&doc)?;
    Ok((net, doc))
}

/// Uniform action selection aside, this is the exploitation path: argmax
/// with ties to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn tiny_doc() -> WeightDoc {
        WeightDoc {
            format_version: 1,
            layer_sizes: vec![2, 2, 1],
            activation: Activation::Relu,
            weights: vec![vec![1.0, 2.0, 3.0, 4.0], vec![2.0, -1.0]],
            biases: vec![vec![0.5, -1.0], vec![0.25]],
            metadata: BTreeMap::new(),
        }
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let spec = NetworkSpec::default_q(&[128, 128, 128]);
        let a = init(&spec, 42).unwrap();
        let b = init(&spec, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, init(&spec, 43).unwrap());
        for layer in &a.b {
            assert!(layer.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn init_variance_tracks_fan_in() {
        let spec = NetworkSpec::new(vec![128, 128]);
        let net = init(&spec, 7).unwrap();
        let w = &net.w_t[0];
        let mean: f64 = w.iter().sum::<f64>() / w.len() as f64;
        let var: f64 = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / w.len() as f64;
        let want = 2.0 / 128.0;
        assert!(
            (var - want).abs() < 0.2 * want,
            "var {var} not within 20% of {want}"
        );
    }

    #[test]
    fn forward_matches_hand_computation() {
        // z1 = [1*1 + 2*(-0.5) + 0.5, 3*1 + 4*(-0.5) - 1] = [0.5, 0]
        // y  = 2*0.5 - 1*0 + 0.25 = 1.25
        let net = deserialize(&tiny_doc()).unwrap();
        let y = net.forward(&[1.0, -0.5]).unwrap();
        assert!((y[0] - 1.25).abs() < 1e-12);
    }

    #[test]
    fn forward_identity_and_zero_cases() {
        let doc = WeightDoc {
            format_version: 1,
            layer_sizes: vec![1, 1],
            activation: Activation::Relu,
            weights: vec![vec![1.0]],
            biases: vec![vec![0.0]],
            metadata: BTreeMap::new(),
        };
        let net = deserialize(&doc).unwrap();
        for x in [-2.5, 0.0, 3.75] {
            assert_eq!(net.forward(&[x]).unwrap()[0], x);
        }

        let spec = NetworkSpec::new(vec![4, 3, 2]);
        let mut zero = init(&spec, 1).unwrap();
        for w in &mut zero.w_t {
            w.iter_mut().for_each(|v| *v = 0.0);
        }
        let y = zero.forward(&[1.0, -1.0, 2.0, 0.5]).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
    }

    #[test]
    fn forward_rejects_bad_shapes() {
        let net = deserialize(&tiny_doc()).unwrap();
        assert!(net.forward(&[1.0]).is_err());
        assert!(net.forward_batch(&[1.0, 2.0, 3.0], 2).is_err());
    }

    #[test]
    fn batch_forward_agrees_with_single() {
        let spec = NetworkSpec::new(vec![5, 8, 3]);
        let net = init(&spec, 3).unwrap();
        let mut rng = crate::seed::rng_from(9);
        let batch = 7;
        let xs: Vec<f64> = (0..batch * 5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ys = net.forward_batch(&xs, batch).unwrap();
        for bi in 0..batch {
            let single = net.forward(&xs[bi * 5..(bi + 1) * 5]).unwrap();
            for o in 0..3 {
                assert!((ys[bi * 3 + o] - single[o]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn copy_is_independent() {
        let spec = NetworkSpec::new(vec![3, 4, 2]);
        let mut src = init(&spec, 5).unwrap();
        let copy = src.copy_weights();
        assert_eq!(src, copy);
        let x = [0.3, -0.2, 0.9];
        let before = copy.forward(&x).unwrap();
        src.w_t[0][0] += 1.0;
        assert_ne!(src, copy);
        assert_eq!(copy.forward(&x).unwrap(), before);
    }

    fn random_batch(
        net: &QNetwork,
        batch: usize,
        seed: u64,
    ) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
        let mut rng = crate::seed::rng_from(seed);
        let xs: Vec<f64> = (0..batch * net.input_dim())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let ys: Vec<f64> = (0..batch).map(|_| rng.random_range(-2.0..2.0)).collect();
        let acts: Vec<usize> = (0..batch)
            .map(|_| rng.random_range(0..net.output_dim()))
            .collect();
        (xs, ys, acts)
    }

    #[test]
    // Perturbation by parameter index; an iterator over `gw` would alias the
    // mutable borrow of the network being perturbed.
    #[allow(clippy::needless_range_loop)]
    fn gradients_match_finite_differences() {
        // Central differences over every parameter of random 4-8-3 nets.
        for seed in 0..10u64 {
            let spec = NetworkSpec::new(vec![4, 8, 3]);
            let mut net = init(&spec, seed).unwrap();
            let mask = FreezeMask::all_trainable(2);
            let (xs, ys, acts) = random_batch(&net, 16, seed + 100);
            let (_, gw, gb) = net.gradients(&xs, &ys, &acts, 16, &mask).unwrap();
            let h = 1e-5;
            let mut worst: f64 = 0.0;
            for l in 0..2 {
                for k in 0..net.w_t[l].len() {
                    let orig = net.w_t[l][k];
                    net.w_t[l][k] = orig + h;
                    let up = net.gradients(&xs, &ys, &acts, 16, &mask).unwrap().0;
                    net.w_t[l][k] = orig - h;
                    let dn = net.gradients(&xs, &ys, &acts, 16, &mask).unwrap().0;
                    net.w_t[l][k] = orig;
                    let fd = (up - dn) / (2.0 * h);
                    let g = gw[l][k];
                    let denom = g.abs().max(fd.abs()).max(1e-6);
                    worst = worst.max((g - fd).abs() / denom);
                }
                for k in 0..net.b[l].len() {
                    let orig = net.b[l][k];
                    net.b[l][k] = orig + h;
                    let up = net.gradients(&xs, &ys, &acts, 16, &mask).unwrap().0;
                    net.b[l][k] = orig - h;
                    let dn = net.gradients(&xs, &ys, &acts, 16, &mask).unwrap().0;
                    net.b[l][k] = orig;
                    let fd = (up - dn) / (2.0 * h);
                    let g = gb[l][k];
                    let denom = g.abs().max(fd.abs()).max(1e-6);
                    worst = worst.max((g - fd).abs() / denom);
                }
            }
            assert!(worst < 1e-4, "seed {seed}: max relative error {worst}");
        }
    }

    #[test]
    fn zero_gradient_when_targets_match_predictions() {
        let spec = NetworkSpec::new(vec![3, 5, 2]);
        let mut net = init(&spec, 11).unwrap();
        let mask = FreezeMask::all_trainable(2);
        let (xs, _, acts) = random_batch(&net, 8, 12);
        let q = net.forward_batch(&xs, 8).unwrap();
        let ys: Vec<f64> = (0..8).map(|bi| q[bi * 2 + acts[bi]]).collect();
        let before = net.clone();
        let mut opt = OptimizerState::new(&net, OptimizerKind::Adam, 0.01, None);
        let loss = train_step(&mut net, &mut opt, &mask, &xs, &ys, &acts).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(net, before);
    }

    #[test]
    fn frozen_layers_stay_bit_identical() {
        let spec = NetworkSpec::new(vec![4, 6, 6, 3]);
        let mut net = init(&spec, 21).unwrap();
        let frozen_w = net.w_t[0].clone();
        let frozen_b = net.b[0].clone();
        let mask = FreezeMask::freeze_first(1, 3);
        let mut opt = OptimizerState::new(&net, OptimizerKind::Adam, 0.01, None);
        for step in 0..50u64 {
            let (xs, ys, acts) = random_batch(&net, 8, 300 + step);
            train_step(&mut net, &mut opt, &mask, &xs, &ys, &acts).unwrap();
        }
        assert!(net.w_t[0].iter().zip(&frozen_w).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(net.b[0].iter().zip(&frozen_b).all(|(a, b)| a.to_bits() == b.to_bits()));

        let all_frozen = FreezeMask::freeze_first(3, 3);
        let before = net.clone();
        let (xs, ys, acts) = random_batch(&net, 8, 999);
        train_step(&mut net, &mut opt, &all_frozen, &xs, &ys, &acts).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn repeated_steps_reduce_loss_on_fixed_batch() {
        let spec = NetworkSpec::new(vec![4, 8, 3]);
        let mut net = init(&spec, 31).unwrap();
        let mask = FreezeMask::all_trainable(2);
        let (xs, ys, acts) = random_batch(&net, 16, 32);
        let mut opt = OptimizerState::new(&net, OptimizerKind::Adam, 0.005, None);
        let first = train_step(&mut net, &mut opt, &mask, &xs, &ys, &acts).unwrap();
        let mut last = first;
        for _ in 0..49 {
            last = train_step(&mut net, &mut opt, &mask, &xs, &ys, &acts).unwrap();
        }
        assert!(last < first, "loss did not decrease: {first} -> {last}");
    }

    #[test]
    fn sgd_single_parameter_descends_quadratic() {
        // 1-1 linear net with zero bias on input 1.0: Q = w, loss = (w - y)^2.
        let doc = WeightDoc {
            format_version: 1,
            layer_sizes: vec![1, 1],
            activation: Activation::Relu,
            weights: vec![vec![0.0]],
            biases: vec![vec![0.0]],
            metadata: BTreeMap::new(),
        };
        let mut net = deserialize(&doc).unwrap();
        // Freeze the bias? There is only one layer; SGD with small lr moves w
        // toward the target geometrically: w' = w - 2*lr*(w - y).
        let mask = FreezeMask::all_trainable(1);
        let mut opt = OptimizerState::new(&net, OptimizerKind::Sgd, 0.1, None);
        for _ in 0..100 {
            train_step(&mut net, &mut opt, &mask, &[1.0], &[3.0], &[0]).unwrap();
        }
        // Bias learns too; w + b converges to the target.
        let q = net.forward(&[1.0]).unwrap()[0];
        assert!((q - 3.0).abs() < 1e-6);
    }

    #[test]
    fn adam_first_step_magnitude() {
        // Bias-corrected Adam's first update is lr * g / (|g| + eps).
        let doc = WeightDoc {
            format_version: 1,
            layer_sizes: vec![1, 1],
            activation: Activation::Relu,
            weights: vec![vec![2.0]],
            biases: vec![vec![0.0]],
            metadata: BTreeMap::new(),
        };
        let mut net = deserialize(&doc).unwrap();
        let mask = FreezeMask {
            trainable: vec![true],
        };
        let mut opt = OptimizerState::new(&net, OptimizerKind::Adam, 0.001, None);
        // Input 1, target 0, q = 2: dL/dw = 2*(q - y)*x = 4, and the
        // bias-corrected first step is lr * g / (|g| + eps).
        train_step(&mut net, &mut opt, &mask, &[1.0], &[0.0], &[0]).unwrap();
        assert_eq!(net.w_t[0][0], 2.0 - 0.001 * 4.0 / (4.0 + 1e-8));
    }

    #[test]
    fn grad_clip_bounds_update_norm() {
        let spec = NetworkSpec::new(vec![4, 8, 3]);
        let mut net = init(&spec, 77).unwrap();
        let mask = FreezeMask::all_trainable(2);
        let (xs, _, acts) = random_batch(&net, 8, 78);
        let ys = vec![1e6; 8]; // enormous targets -> enormous raw gradient
        let mut opt = OptimizerState::new(&net, OptimizerKind::Sgd, 1.0, Some(1.0));
        let before = net.flatten();
        train_step(&mut net, &mut opt, &mask, &xs, &ys, &acts).unwrap();
        let after = net.flatten();
        let norm: f64 = before
            .iter()
            .zip(&after)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(norm <= 1.0 + 1e-9, "update norm {norm} exceeds clip");
    }

    #[test]
    fn divergent_targets_error_out() {
        let spec = NetworkSpec::new(vec![2, 3, 2]);
        let mut net = init(&spec, 5).unwrap();
        let mask = FreezeMask::all_trainable(2);
        let mut opt = OptimizerState::new(&net, OptimizerKind::Adam, 0.001, None);
        let err = train_step(&mut net, &mut opt, &mask, &[0.1, 0.2], &[f64::NAN], &[0]);
        assert!(matches!(err, Err(Error::Divergence(_))));
    }

    #[test]
    fn serialization_roundtrip_is_bit_exact() {
        let spec = NetworkSpec::default_q(&[16, 16, 16]);
        let net = init(&spec, 55).unwrap();
        let mut meta = BTreeMap::new();
        meta.insert("path_id".into(), "3".into());
        meta.insert("seed".into(), "55".into());
        let doc = serialize(&net, meta.clone());
        let back = deserialize(&doc).unwrap();
        assert_eq!(net, back);
        let x: Vec<f64> = (0..13).map(|i| (i as f64) / 13.0 - 0.5).collect();
        assert_eq!(net.forward(&x).unwrap(), back.forward(&x).unwrap());

        // Canonical bytes: same parameters and metadata, same document.
        let json1 = doc_to_json(&doc);
        let json2 = doc_to_json(&serialize(&back, meta));
        assert_eq!(json1, json2);
        let reparsed = doc_from_json(&json1).unwrap();
        assert_eq!(reparsed, doc);
    }

    #[test]
    fn deserialize_rejects_tampered_docs() {
        let mut doc = tiny_doc();
        doc.layer_sizes = vec![2, 3, 1];
        assert!(matches!(deserialize(&doc), Err(Error::WeightDoc(_))));

        let mut doc = tiny_doc();
        doc.format_version = 2;
        assert!(matches!(deserialize(&doc), Err(Error::WeightDoc(_))));

        let mut doc = tiny_doc();
        doc.weights[0][1] = f64::INFINITY;
        assert!(matches!(deserialize(&doc), Err(Error::WeightDoc(_))));
    }

    #[test]
    fn flatten_uses_canonical_order() {
        let net = deserialize(&tiny_doc()).unwrap();
        assert_eq!(
            net.flatten(),
            vec![1.0, 2.0, 3.0, 4.0, 0.5, -1.0, 2.0, -1.0, 0.25]
        );
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.2, 0.9, 0.9]), 1);
        assert_eq!(argmax(&[1.0, 1.0, 1.0]), 0);
        assert_eq!(argmax(&[-5.0, -1.0, -3.0]), 1);
    }
}
