//! Hashed n-gram baseline: two independent multinomial logistic regressions
//! (origin, destination) over the hashing-trick features of a query.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cnn::{softmax, HeadPrediction, PredictionPair};
use crate::corpus::{Department, LabeledQuery};
use crate::encode::{extract_ngrams, hash_features, tokenize, DEFAULT_BUCKETS};
use crate::rng::{seeded, shuffle};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearConfig {
    pub n_max: usize,
    pub buckets: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self {
            n_max: 3,
            buckets: DEFAULT_BUCKETS,
            epochs: 5,
            lr: 0.1,
            batch_size: 8,
            seed: crate::rng::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub config: LinearConfig,
    pub departments: Vec<String>,
    /// Row-major `buckets x P`.
    pub origin_weights: Vec<f64>,
    pub origin_bias: Vec<f64>,
    pub destination_weights: Vec<f64>,
    pub destination_bias: Vec<f64>,
}

type Sparse = Vec<(usize, f64)>;

impl LinearModel {
    fn zeros(config: LinearConfig, departments: Vec<String>) -> Self {
        let p = departments.len();
        let b = config.buckets;
        Self {
            origin_weights: vec![0.0; b * p],
            origin_bias: vec![0.0; p],
            destination_weights: vec![0.0; b * p],
            destination_bias: vec![0.0; p],
            config,
            departments,
        }
    }

    pub fn features(&self, text: &str) -> Sparse {
        featurize(text, self.config.n_max, self.config.buckets)
    }

    fn logits(weights: &[f64], bias: &[f64], x: &Sparse) -> Vec<f64> {
        let p = bias.len();
        let mut z = bias.to_vec();
        for &(j, v) in x {
            for (zi, w) in z.iter_mut().zip(&weights[j * p..(j + 1) * p]) {
                *zi += v * w;
            }
        }
        z
    }

    pub fn probabilities(&self, text: &str) -> (Vec<f64>, Vec<f64>) {
        let x = self.features(text);
        (
            softmax(&Self::logits(&self.origin_weights, &self.origin_bias, &x)),
            softmax(&Self::logits(&self.destination_weights, &self.destination_bias, &x)),
        )
    }

    /// Per-head argmax; ties go to the lowest department id. An empty query
    /// has no features and falls back to the biases.
    pub fn predict(&self, text: &str) -> PredictionPair {
        let (po, pd) = self.probabilities(text);
        PredictionPair {
            origin: self.head(&po),
            destination: self.head(&pd),
        }
    }

    fn head(&self, probs: &[f64]) -> HeadPrediction {
        let mut order: Vec<usize> = (0..probs.len()).collect();
        order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
        HeadPrediction {
            id: order[0],
            name: self.departments[order[0]].clone(),
            prob: probs[order[0]],
            top_k: order.iter().take(5).map(|&i| (i, probs[i])).collect(),
        }
    }
}

fn featurize(text: &str, n_max: usize, buckets: usize) -> Sparse {
    let grams = extract_ngrams(&tokenize(text).tokens, n_max);
    hash_features(&grams, buckets)
        .expect("bucket count validated at construction")
        .buckets
        .into_iter()
        .map(|(j, c)| (j, f64::from(c)))
        .collect()
}

/// Mini-batch gradient descent on the summed cross-entropy of both heads,
/// starting from all-zero weights.
pub fn train_linear(config: &LinearConfig, departments: &[Department], data: &[LabeledQuery]) -> Result<LinearModel> {
    if !(1..=3).contains(&config.n_max) {
        return Err(Error::InvalidArgument(format!("n_max {} not in 1..=3", config.n_max)));
    }
    if !config.buckets.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("bucket count {} is not a power of two", config.buckets)));
    }
    if data.is_empty() {
        return Err(Error::InvalidArgument("training split is empty".into()));
    }
    let names: Vec<String> = departments.iter().map(|d| d.name.clone()).collect();
    let p = names.len();
    if let Some(q) = data.iter().find(|q| q.origin_id >= p || q.destination_id >= p) {
        return Err(Error::UnknownDepartment(q.origin_id.max(q.destination_id)));
    }
    let mut model = LinearModel::zeros(config.clone(), names);
    let features: Vec<Sparse> = data.iter().map(|q| model.features(&q.text)).collect();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = seeded(config.seed);

    for _ in 0..config.epochs {
        shuffle(&mut order, &mut rng);
        for batch in order.chunks(config.batch_size.max(1)) {
            let scale = config.lr / batch.len() as f64;
            // bucket -> per-department gradient, kept ordered for reproducibility
            let mut go: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            let mut gd: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            let mut gbo = vec![0.0; p];
            let mut gbd = vec![0.0; p];
            for &i in batch {
                let x = &features[i];
                let q = &data[i];
                let heads = [
                    (&model.origin_weights, &model.origin_bias, q.origin_id, &mut go, &mut gbo),
                    (&model.destination_weights, &model.destination_bias, q.destination_id, &mut gd, &mut gbd),
                ];
                for (w, b, label, gw, gb) in heads {
                    let mut dz = softmax(&LinearModel::logits(w, b, x));
                    dz[label] -= 1.0;
                    for (g, d) in gb.iter_mut().zip(&dz) {
                        *g += d;
                    }
                    for &(j, v) in x {
                        let row = gw.entry(j).or_insert_with(|| vec![0.0; p]);
                        for (g, d) in row.iter_mut().zip(&dz) {
                            *g += v * d;
                        }
                    }
                }
            }
            let updates = [
                (&mut model.origin_weights, &mut model.origin_bias, go, gbo),
                (&mut model.destination_weights, &mut model.destination_bias, gd, gbd),
            ];
            for (w, b, gw, gb) in updates {
                for (j, row) in gw {
                    for (wi, g) in w[j * p..(j + 1) * p].iter_mut().zip(row) {
                        *wi -= scale * g;
                    }
                }
                for (bi, g) in b.iter_mut().zip(gb) {
                    *bi -= scale * g;
                }
            }
        }
    }
    Ok(model)
}
