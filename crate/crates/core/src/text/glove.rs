use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{prepare, EmbeddingConfig, Method, Model, TextEmbedder, TrainOutcome};
use crate::corpus::{Corpus, Vocabulary};
use crate::error::Result;

/// Symmetric windowed co-occurrence counts. A pair at distance `k` adds
/// `1/k`, the usual harmonic weighting.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoocMatrix {
    entries: BTreeMap<(u32, u32), f64>,
}

impl CoocMatrix {
    fn from_docs(docs: &[Vec<u32>], window: usize) -> Self {
        let mut entries = BTreeMap::new();
        for doc in docs {
            for (i, &a) in doc.iter().enumerate() {
                for k in 1..=window {
                    let Some(&b) = doc.get(i + k) else { break };
                    let w = 1.0 / k as f64;
                    *entries.entry((a, b)).or_insert(0.0) += w;
                    *entries.entry((b, a)).or_insert(0.0) += w;
                }
            }
        }
        CoocMatrix { entries }
    }

    pub fn get(&self, i: u32, j: u32) -> f64 {
        self.entries.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &x)| (i, j, x))
    }
}

/// Co-occurrence counts of the corpus' train split over `vocab`.
pub fn cooccurrence_counts(corpus: &Corpus, vocab: &Vocabulary, window: usize) -> CoocMatrix {
    let docs: Vec<Vec<u32>> = corpus.train().map(|d| vocab.encode(&d.tokens())).collect();
    CoocMatrix::from_docs(&docs, window)
}

struct Params {
    dim: usize,
    w: Vec<f64>,
    wc: Vec<f64>,
    b: Vec<f64>,
    bc: Vec<f64>,
    gw: Vec<f64>,
    gwc: Vec<f64>,
    gb: Vec<f64>,
    gbc: Vec<f64>,
}

impl Params {
    fn residual(&self, i: usize, j: usize, x: f64) -> f64 {
        let d = self.dim;
        let dot: f64 = self.w[i * d..(i + 1) * d]
            .iter()
            .zip(&self.wc[j * d..(j + 1) * d])
            .map(|(a, b)| a * b)
            .sum();
        dot + self.b[i] + self.bc[j] - x.ln()
    }
}

fn weight(x: f64, x_max: f64, power: f64) -> f64 {
    if x < x_max {
        (x / x_max).powf(power)
    } else {
        1.0
    }
}

/// GloVe: AdaGrad on `Σ f(X_ij) (w_i·w̃_j + b_i + b̃_j − ln X_ij)²`.
///
/// `epoch_losses` holds `½ · mean f·residual²` over all non-zero entries,
/// evaluated after each epoch. The emitted vector of a word is `w + w̃`.
pub fn train_glove(corpus: &Corpus, config: &EmbeddingConfig) -> Result<TrainOutcome> {
    let prepared = prepare(corpus, config, Method::Glove)?;
    let cooc = CoocMatrix::from_docs(&prepared.docs, config.window);
    let v = prepared.vocab.len();
    let d = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut init = |n: usize| -> Vec<f64> { (0..n).map(|_| (rng.random::<f64>() - 0.5) / d as f64).collect() };
    let mut p = Params {
        dim: d,
        w: init(v * d),
        wc: init(v * d),
        b: vec![0.0; v],
        bc: vec![0.0; v],
        gw: vec![1.0; v * d],
        gwc: vec![1.0; v * d],
        gb: vec![1.0; v],
        gbc: vec![1.0; v],
    };
    let entries: Vec<(u32, u32, f64)> = cooc.iter().collect();
    let mut order: Vec<usize> = (0..entries.len()).collect();
    let lr = config.learning_rate();
    let objective = |p: &Params| -> f64 {
        if entries.is_empty() {
            return 0.0;
        }
        let sum: f64 = entries
            .iter()
            .map(|&(i, j, x)| weight(x, config.x_max, config.glove_power) * p.residual(i as usize, j as usize, x).powi(2))
            .sum();
        0.5 * sum / entries.len() as f64
    };

    let mut epoch_losses = Vec::with_capacity(config.epochs());
    let mut gi = vec![0.0; d];
    let mut gj = vec![0.0; d];
    for _ in 0..config.epochs() {
        order.shuffle(&mut rng);
        for &e in &order {
            let (i, j, x) = entries[e];
            let (i, j) = (i as usize, j as usize);
            let fdiff = weight(x, config.x_max, config.glove_power) * p.residual(i, j, x);
            for k in 0..d {
                gi[k] = fdiff * p.wc[j * d + k];
                gj[k] = fdiff * p.w[i * d + k];
            }
            for k in 0..d {
                p.w[i * d + k] -= lr * gi[k] / p.gw[i * d + k].sqrt();
                p.wc[j * d + k] -= lr * gj[k] / p.gwc[j * d + k].sqrt();
                p.gw[i * d + k] += gi[k] * gi[k];
                p.gwc[j * d + k] += gj[k] * gj[k];
            }
            p.b[i] -= lr * fdiff / p.gb[i].sqrt();
            p.bc[j] -= lr * fdiff / p.gbc[j].sqrt();
            p.gb[i] += fdiff * fdiff;
            p.gbc[j] += fdiff * fdiff;
        }
        epoch_losses.push(objective(&p));
    }

    let vectors = p
        .w
        .iter()
        .zip(&p.wc)
        .map(|(a, b)| (a + b) as f32)
        .collect();
    Ok(TrainOutcome {
        embedder: TextEmbedder {
            method: Method::Glove,
            dim: d,
            vocab: prepared.vocab,
            model: Model::WordTable { vectors },
        },
        epoch_losses,
        warnings: Vec::new(),
    })
}
