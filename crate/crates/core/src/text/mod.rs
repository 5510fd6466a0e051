//! Text embeddings trained from scratch on a caption corpus.
//!
//! Five methods share one [`TextEmbedder`] type: word2vec (skip-gram with
//! negative sampling), fastText (skip-gram over summed character n-grams),
//! doc2vec (PV-DBOW), GloVe (AdaGrad on the weighted least-squares
//! co-occurrence objective) and LDA (collapsed Gibbs sampling). Document
//! vectors come from [`embed_document`].

mod doc2vec;
mod fasttext;
mod glove;
mod io;
mod lda;
mod sgns;
mod word2vec;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocabulary, Corpus, TfIdfStats, Vocabulary};
use crate::error::{Error, Result};

pub use doc2vec::train_doc2vec;
pub use fasttext::{char_ngrams, train_fasttext};
pub use glove::{cooccurrence_counts, train_glove, CoocMatrix};
pub use io::{export_word_vectors, load_embedder, read_embedder, save_embedder, write_embedder};
pub use lda::train_lda;
pub use word2vec::train_word2vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lda,
    Word2vec,
    Fasttext,
    Doc2vec,
    Glove,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Lda,
        Method::Word2vec,
        Method::Fasttext,
        Method::Doc2vec,
        Method::Glove,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lda => "lda",
            Method::Word2vec => "word2vec",
            Method::Fasttext => "fasttext",
            Method::Doc2vec => "doc2vec",
            Method::Glove => "glove",
        }
    }

    fn tag(self) -> u8 {
        match self {
            Method::Lda => 0,
            Method::Word2vec => 1,
            Method::Fasttext => 2,
            Method::Doc2vec => 3,
            Method::Glove => 4,
        }
    }

    fn from_tag(tag: u8) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.tag() == tag)
    }

    /// Whether documents are embedded by native inference rather than by
    /// aggregating word vectors.
    pub fn native_documents(self) -> bool {
        matches!(self, Method::Lda | Method::Doc2vec)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown embedding method {s:?}")))
    }
}

/// How word vectors are pooled into a document vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    Tfidf,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Aggregation::Mean),
            "tfidf" | "tf-idf" => Ok(Aggregation::Tfidf),
            other => Err(Error::Config(format!("unknown aggregation {other:?}"))),
        }
    }
}

/// Hyperparameters for every method; fields a method does not use are
/// ignored. `None` picks the method's default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub method: Method,
    pub dim: usize,
    /// Passes over the corpus; Gibbs sweeps for LDA.
    pub epochs: Option<usize>,
    pub window: usize,
    pub negative: usize,
    pub min_count: usize,
    pub min_n: usize,
    pub max_n: usize,
    /// Dirichlet prior on document-topic proportions (default 50 / dim).
    pub alpha: Option<f64>,
    /// Dirichlet prior on topic-word distributions.
    pub beta: f64,
    pub learning_rate: Option<f64>,
    /// GloVe weighting cutoff and exponent.
    pub x_max: f64,
    pub glove_power: f64,
    /// Gradient passes (doc2vec) or Gibbs sweeps (LDA) when embedding an
    /// unseen document.
    pub infer_steps: Option<usize>,
    /// More than one worker trains with unsynchronized shared updates and
    /// is not reproducible. Only the skip-gram family honours it.
    pub workers: usize,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            method: Method::Word2vec,
            dim: 400,
            epochs: None,
            window: 5,
            negative: 5,
            min_count: 1,
            min_n: 3,
            max_n: 6,
            alpha: None,
            beta: 0.01,
            learning_rate: None,
            x_max: 100.0,
            glove_power: 0.75,
            infer_steps: None,
            workers: 1,
            seed: 0,
        }
    }
}

impl EmbeddingConfig {
    pub fn new(method: Method, dim: usize) -> Self {
        EmbeddingConfig {
            method,
            dim,
            ..Default::default()
        }
    }

    pub fn epochs(&self) -> usize {
        self.epochs.unwrap_or(match self.method {
            Method::Word2vec | Method::Fasttext => 5,
            Method::Doc2vec => 20,
            Method::Glove => 25,
            Method::Lda => 200,
        })
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate.unwrap_or(match self.method {
            Method::Fasttext | Method::Glove => 0.05,
            _ => 0.025,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.dim as f64)
    }

    pub fn infer_steps(&self) -> usize {
        self.infer_steps.unwrap_or(50)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be positive".into()));
        }
        if self.min_count == 0 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if !(self.learning_rate() > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        match self.method {
            Method::Fasttext if self.min_n == 0 || self.min_n > self.max_n => Err(Error::Config(
                format!("need 1 <= min_n <= max_n, got {}..{}", self.min_n, self.max_n),
            )),
            Method::Lda if !(self.alpha() > 0.0 && self.beta > 0.0) => {
                Err(Error::Config("LDA priors must be positive".into()))
            }
            Method::Glove if !(self.x_max > 0.0) => {
                Err(Error::Config("x_max must be positive".into()))
            }
            Method::Word2vec | Method::Fasttext | Method::Doc2vec if self.window == 0 => {
                Err(Error::Config("window must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Method-specific trained state.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Model {
    /// Row-major `V × dim` word vectors (word2vec, GloVe).
    WordTable { vectors: Vec<f32> },
    FastText {
        min_n: usize,
        max_n: usize,
        ngrams: Vec<String>,
        index: std::collections::HashMap<String, u32>,
        vectors: Vec<f32>,
    },
    Lda {
        alpha: f64,
        beta: f64,
        infer_sweeps: usize,
        seed: u64,
        /// Row-major `V × K` topic assignment counts.
        word_topic: Vec<u32>,
        /// Tokens assigned to each topic.
        topic_totals: Vec<u64>,
    },
    Doc2Vec {
        /// Row-major `V × dim` output (context) vectors.
        output: Vec<f32>,
        /// Row-major `n_train × dim` paragraph vectors learnt in training.
        docs: Vec<f32>,
        negative: usize,
        learning_rate: f64,
        infer_steps: usize,
        seed: u64,
        sampler: sgns::NegativeSampler,
    },
}

/// A trained text embedding model, the map φ from text to `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct TextEmbedder {
    method: Method,
    dim: usize,
    vocab: Vocabulary,
    model: Model,
}

/// A trained embedder together with its training trace.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub embedder: TextEmbedder,
    /// One objective value per epoch (empty for LDA).
    pub epoch_losses: Vec<f64>,
    pub warnings: Vec<String>,
}

impl TextEmbedder {
    pub fn method(&self) -> Method {
        self.method
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Vector of a single token, if the model can represent it.
    ///
    /// LDA returns the token's smoothed topic-assignment distribution;
    /// doc2vec infers a one-token document; fastText composes n-grams and
    /// so also covers out-of-vocabulary tokens.
    pub fn word_vector(&self, token: &str) -> Option<Vec<f64>> {
        match &self.model {
            Model::WordTable { vectors } => {
                let id = self.vocab.id(token)? as usize;
                Some(row(vectors, self.dim, id).iter().map(|&x| x as f64).collect())
            }
            Model::FastText { .. } => fasttext::compose(self, token),
            Model::Lda { .. } => lda::word_distribution(self, self.vocab.id(token)?),
            Model::Doc2Vec { .. } => {
                self.vocab.id(token)?;
                doc2vec::infer(self, &[token]).ok()
            }
        }
    }

    /// The stored vector of one character n-gram (fastText only).
    pub fn ngram_vector(&self, ngram: &str) -> Option<Vec<f64>> {
        match &self.model {
            Model::FastText { index, vectors, .. } => {
                let id = *index.get(ngram)? as usize;
                Some(row(vectors, self.dim, id).iter().map(|&x| x as f64).collect())
            }
            _ => None,
        }
    }

    /// Whether [`TextEmbedder::word_vector`] succeeds for `token`.
    pub fn can_embed(&self, token: &str) -> bool {
        match &self.model {
            Model::FastText { .. } => fasttext::ngram_ids(self, token).next().is_some(),
            _ => self.vocab.id(token).is_some(),
        }
    }
}

pub(crate) fn row(table: &[f32], dim: usize, i: usize) -> &[f32] {
    &table[i * dim..(i + 1) * dim]
}

/// Trains the method named in `config`.
pub fn train_text(corpus: &Corpus, config: &EmbeddingConfig) -> Result<TrainOutcome> {
    match config.method {
        Method::Word2vec => train_word2vec(corpus, config),
        Method::Fasttext => train_fasttext(corpus, config),
        Method::Doc2vec => train_doc2vec(corpus, config),
        Method::Glove => train_glove(corpus, config),
        Method::Lda => train_lda(corpus, config),
    }
}

/// Vocabulary plus the encoded train documents, shared by all trainers.
pub(crate) struct Prepared {
    pub vocab: Vocabulary,
    pub docs: Vec<Vec<u32>>,
}

pub(crate) fn prepare(corpus: &Corpus, config: &EmbeddingConfig, expected: Method) -> Result<Prepared> {
    if config.method != expected {
        return Err(Error::Config(format!(
            "config names {}, trainer is {}",
            config.method, expected
        )));
    }
    config.validate()?;
    if corpus.train().next().is_none() {
        return Err(Error::EmptyTrainSplit);
    }
    let vocab = build_vocabulary(corpus, config.min_count)?;
    let docs = corpus
        .train()
        .map(|d| vocab.encode(&d.tokens()))
        .collect();
    Ok(Prepared { vocab, docs })
}

/// Stable 64-bit FNV-1a over a token sequence, used to seed per-document
/// inference so that embedding the same text twice gives the same vector.
pub(crate) fn token_hash<S: AsRef<str>>(tokens: &[S]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for t in tokens {
        for &b in t.as_ref().as_bytes().iter().chain(std::iter::once(&0xff)) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// A document vector with the tokens that had to be dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct DocEmbedding {
    pub vector: Vec<f64>,
    pub dropped: Vec<String>,
}

/// Embeds a token sequence as φ(x).
///
/// Tokens the model cannot represent are dropped; if none remain the text is
/// un-embeddable. LDA and doc2vec ignore `aggregation` and infer the
/// document directly, except that LDA embeds a single distinct token by its
/// own topic distribution.
pub fn embed_document<S: AsRef<str>>(
    embedder: &TextEmbedder,
    tokens: &[S],
    aggregation: Aggregation,
    stats: Option<&TfIdfStats>,
) -> Result<Vec<f64>> {
    embed_document_detailed(embedder, tokens, aggregation, stats).map(|e| e.vector)
}

pub fn embed_document_detailed<S: AsRef<str>>(
    embedder: &TextEmbedder,
    tokens: &[S],
    aggregation: Aggregation,
    stats: Option<&TfIdfStats>,
) -> Result<DocEmbedding> {
    let (kept, dropped): (Vec<&str>, Vec<&str>) = tokens
        .iter()
        .map(AsRef::as_ref)
        .partition(|t| embedder.can_embed(t));
    let dropped: Vec<String> = dropped.into_iter().map(str::to_owned).collect();
    let unembeddable = || Error::Unembeddable(tokens.iter().map(|t| t.as_ref().to_owned()).collect());
    if kept.is_empty() {
        return Err(unembeddable());
    }

    let vector = match embedder.method {
        Method::Doc2vec => doc2vec::infer(embedder, &kept)?,
        Method::Lda => {
            let first = kept[0];
            if kept.iter().all(|t| *t == first) {
                lda::word_distribution(embedder, embedder.vocab.id(first).unwrap())
                    .ok_or_else(unembeddable)?
            } else {
                lda::infer(embedder, &kept)
            }
        }
        _ => {
            let stats = match aggregation {
                Aggregation::Mean => None,
                Aggregation::Tfidf => Some(stats.ok_or_else(|| {
                    Error::Config("tf-idf aggregation needs tf-idf statistics".into())
                })?),
            };
            let mut acc = vec![0.0f64; embedder.dim];
            let mut total = 0.0f64;
            for t in &kept {
                let weight = match stats {
                    None => 1.0,
                    // Summing idf per occurrence equals tf · idf per token.
                    Some(s) => match s.idf(t) {
                        Some(w) => w,
                        None => continue,
                    },
                };
                let v = embedder.word_vector(t).ok_or_else(unembeddable)?;
                for (a, x) in acc.iter_mut().zip(&v) {
                    *a += weight * x;
                }
                total += weight;
            }
            if total <= 0.0 {
                return Err(unembeddable());
            }
            acc.iter_mut().for_each(|a| *a /= total);
            acc
        }
    };
    Ok(DocEmbedding { vector, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Split};

    /// Two-word table embedder with vec(a) = (1, 0) and vec(b) = (0, 1).
    pub(crate) fn toy_embedder() -> TextEmbedder {
        let vocab =
            Vocabulary::from_parts(vec!["a".into(), "b".into()], vec![2, 1], vec![1, 1], 1).unwrap();
        TextEmbedder {
            method: Method::Word2vec,
            dim: 2,
            vocab,
            model: Model::WordTable {
                vectors: vec![1.0, 0.0, 0.0, 1.0],
            },
        }
    }

    fn stats(pairs: &[(&str, f64)]) -> TfIdfStats {
        TfIdfStats {
            n_docs: 1,
            idf: pairs.iter().map(|(t, w)| (t.to_string(), *w)).collect(),
            term_freqs: Vec::new(),
        }
    }

    #[test]
    fn mean_of_two_words() {
        let e = toy_embedder();
        let v = embed_document(&e, &["a", "b"], Aggregation::Mean, None).unwrap();
        assert_eq!(v, [0.5, 0.5]);
    }

    #[test]
    fn tfidf_weights_by_count_and_idf() {
        let e = toy_embedder();
        let s = stats(&[("a", 1.0), ("b", 2.0)]);
        let v = embed_document(&e, &["a", "a", "b"], Aggregation::Tfidf, Some(&s)).unwrap();
        // (2·1·(1,0) + 1·2·(0,1)) / 4
        assert_eq!(v, [0.5, 0.5]);
        let v = embed_document(&e, &["a", "b", "b"], Aggregation::Tfidf, Some(&s)).unwrap();
        assert!((v[0] - 0.2).abs() < 1e-15 && (v[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn singleton_is_its_word_vector() {
        let e = toy_embedder();
        let s = stats(&[("a", 1.7), ("b", 2.0)]);
        for agg in [Aggregation::Mean, Aggregation::Tfidf] {
            assert_eq!(embed_document(&e, &["b"], agg, Some(&s)).unwrap(), [0.0, 1.0]);
        }
    }

    #[test]
    fn oov_dropped_and_all_oov_rejected() {
        let e = toy_embedder();
        let d = embed_document_detailed(&e, &["zz", "a"], Aggregation::Mean, None).unwrap();
        assert_eq!(d.vector, [1.0, 0.0]);
        assert_eq!(d.dropped, ["zz"]);
        assert!(matches!(
            embed_document(&e, &["zz", "yy"], Aggregation::Mean, None),
            Err(Error::Unembeddable(_))
        ));
        assert!(matches!(
            embed_document::<&str>(&e, &[], Aggregation::Mean, None),
            Err(Error::Unembeddable(_))
        ));
    }

    #[test]
    fn tfidf_requires_stats() {
        let e = toy_embedder();
        assert!(matches!(
            embed_document(&e, &["a"], Aggregation::Tfidf, None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn mean_is_order_invariant_tfidf_counts_multiplicity() {
        let e = toy_embedder();
        let s = stats(&[("a", 1.0), ("b", 3.0)]);
        let v1 = embed_document(&e, &["a", "b", "a"], Aggregation::Mean, None).unwrap();
        let v2 = embed_document(&e, &["b", "a", "a"], Aggregation::Mean, None).unwrap();
        assert_eq!(v1, v2);
        let t1 = embed_document(&e, &["a", "b", "a"], Aggregation::Tfidf, Some(&s)).unwrap();
        let t2 = embed_document(&e, &["a", "a", "b"], Aggregation::Tfidf, Some(&s)).unwrap();
        let t3 = embed_document(&e, &["a", "b"], Aggregation::Tfidf, Some(&s)).unwrap();
        assert_eq!(t1, t2);
        assert_ne!(t1, t3);
    }

    #[test]
    fn trainer_rejects_mismatched_method_and_empty_train() {
        let doc = Document {
            id: "x".into(),
            caption: "a b".into(),
            tags: Default::default(),
            features: None,
            labels: None,
            split: Split::Test,
        };
        let corpus = Corpus::new(vec![doc]).unwrap();
        let cfg = EmbeddingConfig::new(Method::Word2vec, 4);
        assert!(matches!(train_word2vec(&corpus, &cfg), Err(Error::EmptyTrainSplit)));
        assert!(matches!(train_glove(&corpus, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn fasttext_ngram_bounds_validated() {
        let cfg = EmbeddingConfig {
            min_n: 5,
            max_n: 3,
            ..EmbeddingConfig::new(Method::Fasttext, 8)
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn default_dimension_is_400() {
        let cfg = EmbeddingConfig::default();
        assert_eq!(cfg.dim, 400);
        assert!((EmbeddingConfig::new(Method::Lda, 200).alpha() - 0.25).abs() < 1e-15);
    }
}
