use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sgns::{decayed_lr, train_pair, NegativeSampler, Table};
use super::{prepare, EmbeddingConfig, Method, Model, TextEmbedder, TrainOutcome};
use crate::corpus::Corpus;
use crate::error::Result;

/// How a center word becomes the hidden vector of the skip-gram model.
pub(crate) trait InputRows: Sync {
    fn compose(&self, word: u32, h: &mut [f32]);
    fn apply(&self, word: u32, grad: &[f32]);
}

impl InputRows for Table {
    fn compose(&self, word: u32, h: &mut [f32]) {
        self.read_row(word as usize, h);
    }

    fn apply(&self, word: u32, grad: &[f32]) {
        self.add_to_row(word as usize, grad);
    }
}

/// Runs skip-gram epochs over encoded documents and returns the mean pair
/// loss of each epoch.
///
/// Input vectors are those of the center word; every word within a
/// randomly shrunk window is a positive target.
pub(crate) fn run_skipgram(
    docs: &[Vec<u32>],
    config: &EmbeddingConfig,
    sampler: &NegativeSampler,
    input: &impl InputRows,
    output: &Table,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let epochs = config.epochs();
    let n_tokens: u64 = docs.iter().map(|d| d.len() as u64).sum();
    let total = n_tokens * epochs as u64;
    let processed = AtomicU64::new(0);
    let mut rngs: Vec<ChaCha8Rng> = (0..config.workers)
        .map(|_| ChaCha8Rng::seed_from_u64(rng.random()))
        .collect();

    let mut losses = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        let (loss, pairs) = if config.workers == 1 {
            skipgram_pass(docs.iter(), config, sampler, input, output, &processed, total, &mut rngs[0])
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = rngs
                    .iter_mut()
                    .enumerate()
                    .map(|(w, worker_rng)| {
                        let processed = &processed;
                        s.spawn(move || {
                            let share = docs.iter().skip(w).step_by(config.workers);
                            skipgram_pass(share, config, sampler, input, output, processed, total, worker_rng)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("skip-gram worker panicked"))
                    .fold((0.0, 0u64), |a, b| (a.0 + b.0, a.1 + b.1))
            })
        };
        losses.push(if pairs == 0 { 0.0 } else { loss / pairs as f64 });
    }
    losses
}

#[allow(clippy::too_many_arguments)]
fn skipgram_pass<'a>(
    docs: impl Iterator<Item = &'a Vec<u32>>,
    config: &EmbeddingConfig,
    sampler: &NegativeSampler,
    input: &impl InputRows,
    output: &Table,
    processed: &AtomicU64,
    total: u64,
    rng: &mut ChaCha8Rng,
) -> (f64, u64) {
    let dim = config.dim;
    let lr0 = config.learning_rate();
    let mut h = vec![0.0f32; dim];
    let mut grad = vec![0.0f32; dim];
    let mut loss = 0.0;
    let mut pairs = 0u64;
    for doc in docs {
        for (i, &center) in doc.iter().enumerate() {
            let lr = decayed_lr(lr0, processed.fetch_add(1, Ordering::Relaxed), total);
            let span = config.window - rng.random_range(0..config.window);
            let lo = i.saturating_sub(span);
            let hi = (i + span).min(doc.len() - 1);
            for j in (lo..=hi).filter(|&j| j != i) {
                input.compose(center, &mut h);
                grad.fill(0.0);
                loss += train_pair(&h, doc[j], config.negative, sampler, output, lr, &mut grad, rng);
                input.apply(center, &grad);
                pairs += 1;
            }
        }
    }
    (loss, pairs)
}

/// Skip-gram with negative sampling.
///
/// Input vectors start uniform in `(-0.5/dim, 0.5/dim)`, drawn row by row
/// from a ChaCha8 stream seeded with `config.seed`; output vectors start at
/// zero. The learning rate decays linearly over all epochs.
pub fn train_word2vec(corpus: &Corpus, config: &EmbeddingConfig) -> Result<TrainOutcome> {
    let prepared = prepare(corpus, config, Method::Word2vec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let input = Table::uniform(prepared.vocab.len(), config.dim, &mut rng);
    let output = Table::zeros(prepared.vocab.len(), config.dim);
    let sampler = NegativeSampler::new(&prepared.vocab);

    let epoch_losses = run_skipgram(&prepared.docs, config, &sampler, &input, &output, &mut rng);
    Ok(TrainOutcome {
        embedder: TextEmbedder {
            method: Method::Word2vec,
            dim: config.dim,
            vocab: prepared.vocab,
            model: Model::WordTable {
                vectors: input.into_vec(),
            },
        },
        epoch_losses,
        warnings: Vec::new(),
    })
}

