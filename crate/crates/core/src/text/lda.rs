use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{prepare, token_hash, EmbeddingConfig, Method, Model, TextEmbedder, TrainOutcome};
use crate::corpus::Corpus;
use crate::error::Result;

/// Draws an index from unnormalized weights.
fn draw(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            return k;
        }
    }
    weights.len() - 1
}

/// Latent Dirichlet allocation by collapsed Gibbs sampling with `dim`
/// topics.
pub fn train_lda(corpus: &Corpus, config: &EmbeddingConfig) -> Result<TrainOutcome> {
    let prepared = prepare(corpus, config, Method::Lda)?;
    let k = config.dim;
    let v = prepared.vocab.len();
    let alpha = config.alpha();
    let beta = config.beta;
    let v_beta = v as f64 * beta;
    let docs = &prepared.docs;

    let mut warnings = Vec::new();
    if docs.len() < k {
        warnings.push(format!(
            "only {} training documents for {} topics",
            docs.len(),
            k
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut doc_topic = vec![0u32; docs.len() * k];
    let mut word_topic = vec![0u32; v * k];
    let mut topic_totals = vec![0u64; k];
    let mut assignments: Vec<Vec<u32>> = docs
        .iter()
        .enumerate()
        .map(|(d, doc)| {
            doc.iter()
                .map(|&w| {
                    let t = rng.random_range(0..k);
                    doc_topic[d * k + t] += 1;
                    word_topic[w as usize * k + t] += 1;
                    topic_totals[t] += 1;
                    t as u32
                })
                .collect()
        })
        .collect();

    let mut weights = vec![0.0f64; k];
    for _ in 0..config.epochs() {
        for (d, doc) in docs.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let w = w as usize;
                let old = assignments[d][i] as usize;
                doc_topic[d * k + old] -= 1;
                word_topic[w * k + old] -= 1;
                topic_totals[old] -= 1;
                for (t, wt) in weights.iter_mut().enumerate() {
                    *wt = (doc_topic[d * k + t] as f64 + alpha)
                        * (word_topic[w * k + t] as f64 + beta)
                        / (topic_totals[t] as f64 + v_beta);
                }
                let new = draw(&weights, &mut rng);
                doc_topic[d * k + new] += 1;
                word_topic[w * k + new] += 1;
                topic_totals[new] += 1;
                assignments[d][i] = new as u32;
            }
        }
    }

    Ok(TrainOutcome {
        embedder: TextEmbedder {
            method: Method::Lda,
            dim: k,
            vocab: prepared.vocab,
            model: Model::Lda {
                alpha,
                beta,
                infer_sweeps: config.infer_steps(),
                seed: config.seed,
                word_topic,
                topic_totals,
            },
        },
        epoch_losses: Vec::new(),
        warnings,
    })
}

/// `(n_wk + β) / (n_w + Kβ)`: the word's smoothed topic-assignment
/// distribution.
pub(crate) fn word_distribution(e: &TextEmbedder, id: u32) -> Option<Vec<f64>> {
    let Model::Lda {
        beta, word_topic, ..
    } = &e.model
    else {
        return None;
    };
    let k = e.dim;
    let counts = &word_topic[id as usize * k..(id as usize + 1) * k];
    let n_w: f64 = counts.iter().map(|&c| c as f64).sum();
    let denom = n_w + k as f64 * beta;
    Some(counts.iter().map(|&c| (c as f64 + beta) / denom).collect())
}

/// Topic posterior of an unseen document: Gibbs sweeps over its tokens with
/// the topic-word distributions held fixed, averaging the smoothed
/// proportions over the second half of the sweeps.
pub(crate) fn infer<S: AsRef<str>>(e: &TextEmbedder, tokens: &[S]) -> Vec<f64> {
    let Model::Lda {
        alpha,
        beta,
        infer_sweeps,
        seed,
        word_topic,
        topic_totals,
    } = &e.model
    else {
        unreachable!("lda::infer on a non-LDA model");
    };
    let k = e.dim;
    let v_beta = e.vocab.len() as f64 * beta;
    let ids = e.vocab.encode(tokens);
    let n = ids.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ token_hash(tokens));

    let phi = |w: u32, t: usize| -> f64 {
        (word_topic[w as usize * k + t] as f64 + beta) / (topic_totals[t] as f64 + v_beta)
    };
    let mut counts = vec![0u32; k];
    let mut z: Vec<usize> = ids
        .iter()
        .map(|_| {
            let t = rng.random_range(0..k);
            counts[t] += 1;
            t
        })
        .collect();

    let theta = |counts: &[u32]| -> Vec<f64> {
        counts
            .iter()
            .map(|&c| (c as f64 + alpha) / (n + k as f64 * alpha))
            .collect()
    };
    let sweeps = *infer_sweeps;
    if sweeps == 0 {
        return theta(&counts);
    }
    let burn_in = sweeps / 2;
    let mut acc = vec![0.0f64; k];
    let mut kept = 0usize;
    let mut weights = vec![0.0f64; k];
    for sweep in 0..sweeps {
        for (i, &w) in ids.iter().enumerate() {
            counts[z[i]] -= 1;
            for (t, wt) in weights.iter_mut().enumerate() {
                *wt = (counts[t] as f64 + alpha) * phi(w, t);
            }
            z[i] = draw(&weights, &mut rng);
            counts[z[i]] += 1;
        }
        if sweep >= burn_in {
            for (a, t) in acc.iter_mut().zip(theta(&counts)) {
                *a += t;
            }
            kept += 1;
        }
    }
    acc.iter_mut().for_each(|a| *a /= kept as f64);
    acc
}
