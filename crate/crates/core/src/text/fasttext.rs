use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sgns::{NegativeSampler, Table};
use super::word2vec::{run_skipgram, InputRows};
use super::{prepare, row, EmbeddingConfig, Method, Model, TextEmbedder, TrainOutcome};
use crate::corpus::Corpus;
use crate::error::Result;

/// Character n-grams of `<word>` for every `n` in `min_n..=max_n`, in order
/// of length then position. Duplicates are kept.
pub fn char_ngrams(word: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let wrapped: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut out = Vec::new();
    for n in min_n..=max_n.min(wrapped.len()) {
        for start in 0..=wrapped.len() - n {
            out.push(wrapped[start..start + n].iter().collect());
        }
    }
    out
}

struct NgramInput {
    table: Table,
    word_ngrams: Vec<Vec<u32>>,
    dim: usize,
}

impl InputRows for NgramInput {
    fn compose(&self, word: u32, h: &mut [f32]) {
        h.fill(0.0);
        let mut buf = vec![0.0f32; self.dim];
        for &g in &self.word_ngrams[word as usize] {
            self.table.read_row(g as usize, &mut buf);
            for (a, b) in h.iter_mut().zip(&buf) {
                *a += b;
            }
        }
    }

    fn apply(&self, word: u32, grad: &[f32]) {
        for &g in &self.word_ngrams[word as usize] {
            self.table.add_to_row(g as usize, grad);
        }
    }
}

/// Skip-gram where each word's input vector is the sum of its character
/// n-gram vectors. N-grams are kept in an exact dictionary built from the
/// training vocabulary, so unseen n-grams of out-of-vocabulary words are
/// skipped at embedding time.
pub fn train_fasttext(corpus: &Corpus, config: &EmbeddingConfig) -> Result<TrainOutcome> {
    let prepared = prepare(corpus, config, Method::Fasttext)?;
    let mut ngrams: Vec<String> = Vec::new();
    let mut index: HashMap<String, u32> = HashMap::new();
    let word_ngrams: Vec<Vec<u32>> = prepared
        .vocab
        .tokens()
        .iter()
        .map(|w| {
            char_ngrams(w, config.min_n, config.max_n)
                .into_iter()
                .map(|g| {
                    *index.entry(g.clone()).or_insert_with(|| {
                        ngrams.push(g);
                        (ngrams.len() - 1) as u32
                    })
                })
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let input = NgramInput {
        table: Table::uniform(ngrams.len(), config.dim, &mut rng),
        word_ngrams,
        dim: config.dim,
    };
    let output = Table::zeros(prepared.vocab.len(), config.dim);
    let sampler = NegativeSampler::new(&prepared.vocab);
    let epoch_losses = run_skipgram(&prepared.docs, config, &sampler, &input, &output, &mut rng);

    Ok(TrainOutcome {
        embedder: TextEmbedder {
            method: Method::Fasttext,
            dim: config.dim,
            vocab: prepared.vocab,
            model: Model::FastText {
                min_n: config.min_n,
                max_n: config.max_n,
                ngrams,
                index,
                vectors: input.table.into_vec(),
            },
        },
        epoch_losses,
        warnings: Vec::new(),
    })
}

/// Ids of the known n-grams of `word`.
pub(crate) fn ngram_ids<'a>(e: &'a TextEmbedder, word: &str) -> impl Iterator<Item = u32> + 'a {
    let (grams, index) = match &e.model {
        Model::FastText {
            min_n, max_n, index, ..
        } => (char_ngrams(word, *min_n, *max_n), Some(index)),
        _ => (Vec::new(), None),
    };
    grams
        .into_iter()
        .filter_map(move |g| index.and_then(|ix| ix.get(&g).copied()))
}

pub(crate) fn compose(e: &TextEmbedder, word: &str) -> Option<Vec<f64>> {
    let Model::FastText { vectors, .. } = &e.model else {
        return None;
    };
    let mut out = vec![0.0f64; e.dim];
    let mut any = false;
    for g in ngram_ids(e, word) {
        any = true;
        for (o, x) in out.iter_mut().zip(row(vectors, e.dim, g as usize)) {
            *o += *x as f64;
        }
    }
    any.then_some(out)
}
