use rand::{Rng, RngExt};
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::CnnConfig;
use crate::encode::{encode_ids, tokenize, SentenceMatrix, Vocabulary, PAD};
use crate::rng::seeded;
use crate::{Error, Result};

const INIT_STD: f64 = 0.1;
const INIT_BIAS: f64 = 0.1;

/// One convolution width: `maps` filters of shape `width x dim`, one scalar
/// bias per filter broadcast over positions.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub width: usize,
    /// Row-major `maps x width x dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl FilterBank {
    pub fn maps(&self) -> usize {
        self.bias.len()
    }

    fn filter(&self, f: usize) -> &[f64] {
        let len = self.weights.len() / self.maps();
        &self.weights[f * len..(f + 1) * len]
    }
}

/// Softmax output layer over departments.
#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    /// Row-major `pooled_len x P`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Head {
    fn logits(&self, features: &[f64]) -> Vec<f64> {
        let p = self.bias.len();
        let mut z = self.bias.clone();
        for (l, &x) in features.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let row = &self.weights[l * p..(l + 1) * p];
            for (zi, w) in z.iter_mut().zip(row) {
                *zi += x * w;
            }
        }
        z
    }
}

/// Every trainable tensor. Gradients use the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnParams {
    /// Row-major `vocab x dim`; row `PAD` stays zero.
    pub embeddings: Vec<f64>,
    pub dim: usize,
    pub banks: Vec<FilterBank>,
    pub origin: Head,
    pub destination: Head,
}

impl CnnParams {
    pub fn zeros_like(other: &CnnParams) -> Self {
        let mut z = other.clone();
        z.fill(0.0);
        z
    }

    pub fn fill(&mut self, value: f64) {
        for t in self.tensors_mut() {
            t.fill(value);
        }
    }

    /// Tensors in checkpoint order with their names and shapes.
    pub fn named(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let vocab = self.embeddings.len() / self.dim;
        let p = self.origin.bias.len();
        let l = self.origin.weights.len() / p;
        let mut out = vec![("embeddings".to_string(), vec![vocab, self.dim], &self.embeddings[..])];
        for b in &self.banks {
            out.push((format!("conv{}.weight", b.width), vec![b.maps(), b.width, self.dim], &b.weights[..]));
            out.push((format!("conv{}.bias", b.width), vec![b.maps()], &b.bias[..]));
        }
        out.push(("origin.weight".into(), vec![l, p], &self.origin.weights[..]));
        out.push(("origin.bias".into(), vec![p], &self.origin.bias[..]));
        out.push(("destination.weight".into(), vec![l, p], &self.destination.weights[..]));
        out.push(("destination.bias".into(), vec![p], &self.destination.bias[..]));
        out
    }

    /// Same order as [`CnnParams::named`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![&mut self.embeddings];
        for b in &mut self.banks {
            out.push(&mut b.weights);
            out.push(&mut b.bias);
        }
        out.push(&mut self.origin.weights);
        out.push(&mut self.origin.bias);
        out.push(&mut self.destination.weights);
        out.push(&mut self.destination.bias);
        out
    }

    /// Tensors under L2 decay: convolution and head weights. Biases and
    /// embeddings are excluded.
    pub fn decayed(&self) -> impl Iterator<Item = &[f64]> {
        self.banks
            .iter()
            .map(|b| &b.weights[..])
            .chain([&self.origin.weights[..], &self.destination.weights[..]])
    }

    fn decayed_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self.banks.iter_mut().map(|b| &mut b.weights[..]).collect();
        out.push(&mut self.origin.weights);
        out.push(&mut self.destination.weights);
        out
    }

    pub fn l2_penalty(&self, l2: f64) -> f64 {
        l2 * self.decayed().flat_map(|t| t.iter()).map(|w| w * w).sum::<f64>()
    }

    /// `grads += 2 * l2 * w` on every decayed tensor.
    pub fn add_l2_grad(&self, grads: &mut CnnParams, l2: f64) {
        for (g, w) in grads.decayed_mut().into_iter().zip(self.decayed()) {
            for (gi, wi) in g.iter_mut().zip(w) {
                *gi += 2.0 * l2 * wi;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.named().iter().all(|(_, _, t)| t.iter().all(|x| x.is_finite()))
    }
}

/// Draw initial parameters: embeddings and convolution weights from
/// N(0, 0.1^2), head weights Xavier-uniform, every bias 0.1, PAD row zero.
pub fn init_params(config: &CnnConfig, vocab_size: usize, rng: &mut impl Rng) -> CnnParams {
    let dim = config.embedding_dim;
    let normal = Normal::new(0.0, INIT_STD).expect("valid std");
    let mut embeddings: Vec<f64> = (0..vocab_size * dim).map(|_| normal.sample(rng)).collect();
    embeddings[PAD * dim..(PAD + 1) * dim].fill(0.0);

    let banks = config
        .filter_widths
        .iter()
        .map(|&width| FilterBank {
            width,
            weights: (0..config.feature_maps * width * dim).map(|_| normal.sample(rng)).collect(),
            bias: vec![INIT_BIAS; config.feature_maps],
        })
        .collect();

    let l = config.pooled_len();
    let p = config.num_departments;
    let limit = (6.0 / (l + p) as f64).sqrt();
    let origin = xavier_head(l, p, limit, rng);
    let destination = xavier_head(l, p, limit, rng);
    CnnParams {
        embeddings,
        dim,
        banks,
        origin,
        destination,
    }
}

fn xavier_head(l: usize, p: usize, limit: f64, rng: &mut impl Rng) -> Head {
    Head {
        weights: (0..l * p).map(|_| rng.random_range(-limit..limit)).collect(),
        bias: vec![INIT_BIAS; p],
    }
}

pub fn relu(z: f64) -> f64 {
    z.max(0.0)
}

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone)]
pub struct HeadTrace {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub sentence: SentenceMatrix,
    /// Rows taken into account: `max(true_length, widest filter)`.
    pub effective_len: usize,
    /// Per bank, row-major `maps x positions` pre-activations.
    pub pre: Vec<Vec<f64>>,
    pub positions: Vec<usize>,
    pub pooled: Vec<f64>,
    /// Position that produced each pooled value (lowest on ties).
    pub argmax: Vec<usize>,
    /// Inverted-dropout mask: 0 or 1/keep in training, 1 at inference.
    pub mask: Vec<f64>,
    pub origin: HeadTrace,
    pub destination: HeadTrace,
}

impl ForwardTrace {
    /// Post-ReLU feature map of filter `f` in bank `b`.
    pub fn feature_map(&self, b: usize, f: usize) -> Vec<f64> {
        let n = self.positions[b];
        self.pre[b][f * n..(f + 1) * n].iter().map(|&z| relu(z)).collect()
    }
}

impl CnnParams {
    /// Forward pass with a mask drawn for `mode`.
    pub fn forward(&self, sentence: SentenceMatrix, mode: Mode, keep: f64, rng: &mut impl Rng) -> Result<ForwardTrace> {
        let l: usize = self.banks.iter().map(FilterBank::maps).sum();
        let mask = match mode {
            Mode::Infer => vec![1.0; l],
            Mode::Train => (0..l)
                .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                .collect(),
        };
        self.forward_with_mask(sentence, mask)
    }

    pub fn forward_with_mask(&self, sentence: SentenceMatrix, mask: Vec<f64>) -> Result<ForwardTrace> {
        if sentence.true_length == 0 {
            return Err(Error::EmptyQuery);
        }
        let total: usize = self.banks.iter().map(FilterBank::maps).sum();
        if mask.len() != total {
            return Err(Error::InvalidArgument(format!(
                "dropout mask has {} entries, expected {total}",
                mask.len()
            )));
        }
        let dim = self.dim;
        let widest = self.banks.iter().map(|b| b.width).max().unwrap_or(1);
        let effective_len = sentence.true_length.max(widest);
        if effective_len > sentence.max_len || sentence.dim != dim {
            return Err(Error::InvalidArgument(format!(
                "sentence {}x{} cannot hold {effective_len} rows of width {dim}",
                sentence.max_len, sentence.dim
            )));
        }
        let mut pre = Vec::with_capacity(self.banks.len());
        let mut positions = Vec::with_capacity(self.banks.len());
        let mut pooled = Vec::with_capacity(total);
        let mut argmax = Vec::with_capacity(total);
        for bank in &self.banks {
            let n = effective_len - bank.width + 1;
            let span = bank.width * dim;
            let mut z = vec![0.0; bank.maps() * n];
            for f in 0..bank.maps() {
                let w = bank.filter(f);
                let row = &mut z[f * n..(f + 1) * n];
                let mut best = (0, f64::NEG_INFINITY);
                for (m, out) in row.iter_mut().enumerate() {
                    *out = dot(&sentence.data[m * dim..m * dim + span], w) + bank.bias[f];
                    let h = relu(*out);
                    if h > best.1 {
                        best = (m, h);
                    }
                }
                argmax.push(best.0);
                pooled.push(best.1);
            }
            pre.push(z);
            positions.push(n);
        }
        let dropped: Vec<f64> = pooled.iter().zip(&mask).map(|(h, r)| h * r).collect();
        let head = |h: &Head| {
            let logits = h.logits(&dropped);
            let probs = softmax(&logits);
            HeadTrace { logits, probs }
        };
        Ok(ForwardTrace {
            origin: head(&self.origin),
            destination: head(&self.destination),
            sentence,
            effective_len,
            pre,
            positions,
            pooled,
            argmax,
            mask,
        })
    }

    /// Accumulate `scale` times the cross-entropy gradient of both heads into
    /// `grads`. L2 is not included; see [`CnnParams::add_l2_grad`].
    pub fn accumulate_grads(&self, trace: &ForwardTrace, origin: usize, destination: usize, scale: f64, grads: &mut CnnParams) {
        let p = self.origin.bias.len();
        let dim = self.dim;
        let mut dz_o = trace.origin.probs.clone();
        dz_o[origin] -= 1.0;
        let mut dz_d = trace.destination.probs.clone();
        dz_d[destination] -= 1.0;
        for v in dz_o.iter_mut().chain(dz_d.iter_mut()) {
            *v *= scale;
        }

        let l = trace.pooled.len();
        let mut d_pooled = vec![0.0; l];
        for li in 0..l {
            let x = trace.pooled[li] * trace.mask[li];
            let row = li * p..(li + 1) * p;
            let (wo, wd) = (&self.origin.weights[row.clone()], &self.destination.weights[row.clone()]);
            let mut g = 0.0;
            for j in 0..p {
                g += wo[j] * dz_o[j] + wd[j] * dz_d[j];
            }
            d_pooled[li] = g * trace.mask[li];
            if x != 0.0 {
                for (gw, dz) in grads.origin.weights[row.clone()].iter_mut().zip(&dz_o) {
                    *gw += x * dz;
                }
                for (gw, dz) in grads.destination.weights[row].iter_mut().zip(&dz_d) {
                    *gw += x * dz;
                }
            }
        }
        for (g, dz) in grads.origin.bias.iter_mut().zip(&dz_o) {
            *g += dz;
        }
        for (g, dz) in grads.destination.bias.iter_mut().zip(&dz_d) {
            *g += dz;
        }

        // Max-pool routes each unit's gradient to its argmax position only,
        // and only through an active ReLU.
        let mut d_rows = vec![0.0; trace.effective_len * dim];
        let mut li = 0;
        for (b, bank) in self.banks.iter().enumerate() {
            let n = trace.positions[b];
            let span = bank.width * dim;
            let gbank = &mut grads.banks[b];
            for f in 0..bank.maps() {
                let m = trace.argmax[li];
                let g = d_pooled[li];
                li += 1;
                if g == 0.0 || trace.pre[b][f * n + m] <= 0.0 {
                    continue;
                }
                gbank.bias[f] += g;
                let window = &trace.sentence.data[m * dim..m * dim + span];
                for (gw, x) in gbank.weights[f * span..(f + 1) * span].iter_mut().zip(window) {
                    *gw += g * x;
                }
                for (dx, w) in d_rows[m * dim..m * dim + span].iter_mut().zip(bank.filter(f)) {
                    *dx += g * w;
                }
            }
        }

        for (n, &id) in trace.sentence.ids.iter().enumerate() {
            if id == PAD {
                continue;
            }
            let src = &d_rows[n * dim..(n + 1) * dim];
            for (g, d) in grads.embeddings[id * dim..(id + 1) * dim].iter_mut().zip(src) {
                *g += d;
            }
        }
    }

    /// Full gradient of [`loss`] for one example.
    pub fn backward(&self, trace: &ForwardTrace, origin: usize, destination: usize, l2: f64) -> CnnParams {
        let mut grads = CnnParams::zeros_like(self);
        self.accumulate_grads(trace, origin, destination, 1.0, &mut grads);
        self.add_l2_grad(&mut grads, l2);
        grads
    }
}

/// Summed cross-entropy of both heads plus `l2 * sum(w^2)` over decayed
/// weights.
pub fn loss(trace: &ForwardTrace, origin: usize, destination: usize, params: &CnnParams, l2: f64) -> f64 {
    cross_entropy(trace, origin, destination) + params.l2_penalty(l2)
}

pub(crate) fn cross_entropy(trace: &ForwardTrace, origin: usize, destination: usize) -> f64 {
    -trace.origin.probs[origin].ln() - trace.destination.probs[destination].ln()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeadPrediction {
    pub id: usize,
    pub name: String,
    pub prob: f64,
    /// `(department id, probability)`, most probable first.
    pub top_k: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionPair {
    pub origin: HeadPrediction,
    pub destination: HeadPrediction,
}

/// Trained classifier with its vocabulary and department names.
#[derive(Debug, Clone)]
pub struct CnnModel {
    pub config: CnnConfig,
    pub vocab: Vocabulary,
    pub departments: Vec<String>,
    pub params: CnnParams,
}

impl CnnModel {
    pub fn init(config: CnnConfig, vocab: Vocabulary, departments: Vec<String>) -> Result<Self> {
        let mut config = config;
        config.num_departments = departments.len();
        config.validate()?;
        let mut rng = seeded(config.seed);
        let params = init_params(&config, vocab.len(), &mut rng);
        Ok(Self {
            config,
            vocab,
            departments,
            params,
        })
    }

    pub fn sentence(&self, ids: &[usize]) -> Result<SentenceMatrix> {
        SentenceMatrix::from_ids(ids, &self.params.embeddings, self.params.dim, self.config.max_len)
    }

    pub fn encode(&self, text: &str) -> Result<SentenceMatrix> {
        let tokens = tokenize(text).tokens;
        if tokens.is_empty() {
            return Err(Error::EmptyQuery);
        }
        self.sentence(&encode_ids(&tokens, &self.vocab, self.config.max_len))
    }

    /// Inference-mode forward pass on an already encoded sentence.
    pub fn infer(&self, sentence: SentenceMatrix) -> Result<ForwardTrace> {
        let mask = vec![1.0; self.config.pooled_len()];
        self.params.forward_with_mask(sentence, mask)
    }

    pub fn predict(&self, text: &str) -> Result<PredictionPair> {
        let trace = self.infer(self.encode(text)?)?;
        Ok(PredictionPair {
            origin: self.head_prediction(&trace.origin.probs),
            destination: self.head_prediction(&trace.destination.probs),
        })
    }

    fn head_prediction(&self, probs: &[f64]) -> HeadPrediction {
        let mut order: Vec<usize> = (0..probs.len()).collect();
        // stable sort keeps the lowest id first among equal probabilities
        order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
        let id = order[0];
        HeadPrediction {
            id,
            name: self.departments[id].clone(),
            prob: probs[id],
            top_k: order
                .iter()
                .take(self.config.top_k.max(1))
                .map(|&i| (i, probs[i]))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(dim: usize, widths: &[usize], maps: usize, p: usize) -> CnnConfig {
        CnnConfig {
            embedding_dim: dim,
            filter_widths: widths.to_vec(),
            feature_maps: maps,
            num_departments: p,
            max_len: 12,
            ..Default::default()
        }
    }

    fn matrix(rows: &[&[f64]], max_len: usize) -> SentenceMatrix {
        let dim = rows[0].len();
        let mut data = vec![0.0; max_len * dim];
        for (n, r) in rows.iter().enumerate() {
            data[n * dim..(n + 1) * dim].copy_from_slice(r);
        }
        SentenceMatrix {
            data,
            dim,
            max_len,
            true_length: rows.len(),
            ids: (2..2 + rows.len()).collect(),
        }
    }

    #[test]
    fn hand_computed_feature_map() {
        let cfg = tiny(1, &[2], 1, 2);
        let mut params = init_params(&cfg, 5, &mut seeded(0));
        params.banks[0].weights = vec![1.0, 1.0];
        params.banks[0].bias = vec![0.0];
        let trace = params
            .forward(matrix(&[&[1.0], &[2.0], &[-3.0]], 4), Mode::Infer, 1.0, &mut seeded(0))
            .unwrap();
        assert_eq!(trace.pre[0], vec![3.0, -1.0]);
        assert_eq!(trace.feature_map(0, 0), vec![3.0, 0.0]);
        assert_eq!(trace.pooled, vec![3.0]);
        assert_eq!(trace.argmax, vec![0]);
        assert_eq!((relu(-3.0), relu(2.0)), (0.0, 2.0));
    }

    #[test]
    fn zero_model_is_uniform() {
        let cfg = tiny(4, &[2, 3], 3, 7);
        let mut params = init_params(&cfg, 5, &mut seeded(0));
        params.fill(0.0);
        let trace = params
            .forward(matrix(&[&[0.0; 4], &[0.0; 4]], 6), Mode::Infer, 1.0, &mut seeded(0))
            .unwrap();
        for y in trace.origin.probs.iter().chain(&trace.destination.probs) {
            assert!((y - 1.0 / 7.0).abs() < 1e-15);
        }
        let uniform = loss(&trace, 0, 3, &params, 0.0);
        assert!((uniform - 2.0 * 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn feature_map_length() {
        let cfg = tiny(2, &[5], 1, 2);
        let mut cfg = cfg;
        cfg.max_len = 24;
        let params = init_params(&cfg, 3, &mut seeded(1));
        let rows: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, 1.0]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| &r[..]).collect();
        let trace = params.forward(matrix(&refs, 24), Mode::Infer, 1.0, &mut seeded(0)).unwrap();
        assert_eq!(trace.positions, vec![16]);
        assert_eq!(trace.feature_map(0, 0).len(), 16);
    }

    #[test]
    fn short_sentences_are_padded_to_widest_filter() {
        let cfg = tiny(2, &[3, 5], 2, 3);
        let params = init_params(&cfg, 4, &mut seeded(2));
        let trace = params.forward(matrix(&[&[1.0, 0.5]], 12), Mode::Infer, 1.0, &mut seeded(0)).unwrap();
        assert_eq!(trace.effective_len, 5);
        assert_eq!(trace.positions, vec![3, 1]);
    }

    #[test]
    fn empty_sentence_rejected() {
        let cfg = tiny(2, &[2], 1, 2);
        let params = init_params(&cfg, 4, &mut seeded(0));
        let mut s = matrix(&[&[1.0, 1.0]], 4);
        s.true_length = 0;
        assert!(matches!(params.forward(s, Mode::Infer, 1.0, &mut seeded(0)), Err(Error::EmptyQuery)));
    }

    #[test]
    fn init_statistics() {
        let cfg = CnnConfig { num_departments: 79, embedding_dim: 10, ..Default::default() };
        let a = init_params(&cfg, 30, &mut seeded(9));
        assert_eq!(a, init_params(&cfg, 30, &mut seeded(9)));
        assert!(a.banks.iter().all(|b| b.bias.iter().all(|&x| x == 0.1)));
        assert!(a.origin.bias.iter().chain(&a.destination.bias).all(|&x| x == 0.1));
        assert!(a.embeddings[..10].iter().all(|&x| x == 0.0));
        let w: Vec<f64> = a.banks.iter().flat_map(|b| b.weights.iter().copied()).take(10_000).collect();
        assert_eq!(w.len(), 10_000);
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let std = (w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / w.len() as f64).sqrt();
        assert!((std - 0.1).abs() < 0.005, "std {std}");
        let limit = (6.0 / (300.0 + 79.0f64)).sqrt();
        assert!(a.origin.weights.iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn l2_term_arithmetic() {
        let cfg = tiny(1, &[1], 1, 2);
        let mut params = init_params(&cfg, 3, &mut seeded(0));
        params.fill(0.0);
        params.origin.weights[0] = 2.0;
        params.origin.bias[0] = 5.0;
        assert!((params.l2_penalty(1e-4) - 4e-4).abs() < 1e-18);
    }

    #[test]
    fn confident_correct_prediction_has_zero_gradient() {
        let cfg = tiny(2, &[2], 2, 3);
        let mut params = init_params(&cfg, 4, &mut seeded(0));
        // Saturate both heads on label 1 through the biases alone.
        params.origin.weights.fill(0.0);
        params.destination.weights.fill(0.0);
        params.origin.bias = vec![-800.0, 800.0, -800.0];
        params.destination.bias = vec![-800.0, 800.0, -800.0];
        let trace = params.forward(matrix(&[&[1.0, 2.0], &[0.5, -1.0]], 4), Mode::Train, 0.5, &mut seeded(3)).unwrap();
        assert!(loss(&trace, 1, 1, &params, 0.0) < 1e-12);
        let g = params.backward(&trace, 1, 1, 0.0);
        assert!(g.named().iter().all(|(_, _, t)| t.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn unselected_positions_get_no_gradient() {
        let cfg = tiny(1, &[1], 1, 2);
        let mut params = init_params(&cfg, 6, &mut seeded(0));
        params.banks[0].weights = vec![1.0];
        params.banks[0].bias = vec![0.0];
        let s = matrix(&[&[0.5], &[2.0], &[1.0]], 4);
        let trace = params.forward(s, Mode::Infer, 1.0, &mut seeded(0)).unwrap();
        assert_eq!(trace.argmax, vec![1]);
        let g = params.backward(&trace, 0, 1, 0.0);
        // ids are 2, 3, 4 for positions 0, 1, 2
        assert_eq!(g.embeddings[2], 0.0);
        assert_ne!(g.embeddings[3], 0.0);
        assert_eq!(g.embeddings[4], 0.0);
    }
}
