use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sgns::{decayed_lr, train_pair, Frozen, NegativeSampler, Table};
use super::{prepare, token_hash, EmbeddingConfig, Method, Model, TextEmbedder, TrainOutcome};
use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Distributed bag-of-words paragraph vectors (PV-DBOW).
///
/// Each train document owns a vector trained to predict its own tokens
/// against negative samples. Unseen documents get a fresh vector fitted
/// with the output vectors frozen (see [`infer`]).
pub fn train_doc2vec(corpus: &Corpus, config: &EmbeddingConfig) -> Result<TrainOutcome> {
    let prepared = prepare(corpus, config, Method::Doc2vec)?;
    let dim = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let docs_table = Table::uniform(prepared.docs.len(), dim, &mut rng);
    let output = Table::zeros(prepared.vocab.len(), dim);
    let sampler = NegativeSampler::new(&prepared.vocab);

    let epochs = config.epochs();
    let total = prepared.docs.iter().map(|d| d.len() as u64).sum::<u64>() * epochs as u64;
    let processed = AtomicU64::new(0);
    let mut rngs: Vec<ChaCha8Rng> = (0..config.workers)
        .map(|_| ChaCha8Rng::seed_from_u64(rng.random()))
        .collect();

    let pass = |worker: usize, rng: &mut ChaCha8Rng| -> (f64, u64) {
        let mut h = vec![0.0f32; dim];
        let mut grad = vec![0.0f32; dim];
        let (mut loss, mut pairs) = (0.0, 0u64);
        for (d, doc) in prepared
            .docs
            .iter()
            .enumerate()
            .skip(worker)
            .step_by(config.workers)
        {
            for &t in doc {
                let lr = decayed_lr(config.learning_rate(), processed.fetch_add(1, Ordering::Relaxed), total);
                docs_table.read_row(d, &mut h);
                grad.fill(0.0);
                loss += train_pair(&h, t, config.negative, &sampler, &output, lr, &mut grad, rng);
                docs_table.add_to_row(d, &grad);
                pairs += 1;
            }
        }
        (loss, pairs)
    };

    let mut epoch_losses = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        let (loss, pairs) = if config.workers == 1 {
            pass(0, &mut rngs[0])
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = rngs
                    .iter_mut()
                    .enumerate()
                    .map(|(w, r)| {
                        let pass = &pass;
                        s.spawn(move || pass(w, r))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("doc2vec worker panicked"))
                    .fold((0.0, 0u64), |a, b| (a.0 + b.0, a.1 + b.1))
            })
        };
        epoch_losses.push(if pairs == 0 { 0.0 } else { loss / pairs as f64 });
    }

    Ok(TrainOutcome {
        embedder: TextEmbedder {
            method: Method::Doc2vec,
            dim,
            model: Model::Doc2Vec {
                output: output.into_vec(),
                docs: docs_table.into_vec(),
                negative: config.negative,
                learning_rate: config.learning_rate(),
                infer_steps: config.infer_steps(),
                seed: config.seed,
                sampler,
            },
            vocab: prepared.vocab,
        },
        epoch_losses,
        warnings: Vec::new(),
    })
}

/// Fits a paragraph vector for `tokens` with the output vectors frozen.
///
/// The starting vector and noise words come from a generator seeded with
/// the model seed and a hash of the tokens, so the result is a pure
/// function of the model and the text.
pub(crate) fn infer<S: AsRef<str>>(e: &TextEmbedder, tokens: &[S]) -> Result<Vec<f64>> {
    let Model::Doc2Vec {
        output,
        negative,
        learning_rate,
        infer_steps,
        seed,
        sampler,
        ..
    } = &e.model
    else {
        return Err(Error::Invalid("not a doc2vec model".into()));
    };
    let ids = e.vocab.encode(tokens);
    if ids.is_empty() {
        return Err(Error::Unembeddable(
            tokens.iter().map(|t| t.as_ref().to_owned()).collect(),
        ));
    }
    let dim = e.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ token_hash(tokens));
    let scale = 1.0 / dim as f32;
    let mut h: Vec<f32> = (0..dim).map(|_| (rng.random::<f32>() - 0.5) * scale).collect();
    let frozen = Frozen { data: output, dim };
    let mut grad = vec![0.0f32; dim];
    let steps = *infer_steps as u64;
    for step in 0..steps {
        let lr = decayed_lr(*learning_rate, step, steps);
        for &t in &ids {
            grad.fill(0.0);
            train_pair(&h, t, *negative, sampler, &frozen, lr, &mut grad, &mut rng);
            for (a, g) in h.iter_mut().zip(&grad) {
                *a += g;
            }
        }
    }
    Ok(h.into_iter().map(f64::from).collect())
}
