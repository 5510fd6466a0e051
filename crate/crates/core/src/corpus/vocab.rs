use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::error::{Error, Result};

/// Token ↔ id tables with corpus and document frequencies.
///
/// Ids are dense, ordered by descending frequency with ties broken by the
/// token's lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    freq: Vec<u64>,
    doc_freq: Vec<u64>,
    n_docs: u64,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from already-ordered parallel tables.
    pub fn from_parts(
        tokens: Vec<String>,
        freq: Vec<u64>,
        doc_freq: Vec<u64>,
        n_docs: u64,
    ) -> Result<Self> {
        if tokens.len() != freq.len() || tokens.len() != doc_freq.len() {
            return Err(Error::Invalid("vocabulary tables differ in length".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::Invalid(format!("token {t:?} repeated")));
            }
        }
        Ok(Vocabulary {
            tokens,
            index,
            freq,
            doc_freq,
            n_docs,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn freq(&self, id: u32) -> u64 {
        self.freq[id as usize]
    }

    pub fn freqs(&self) -> &[u64] {
        &self.freq
    }

    pub fn doc_freq(&self, id: u32) -> u64 {
        self.doc_freq[id as usize]
    }

    pub fn doc_freqs(&self) -> &[u64] {
        &self.doc_freq
    }

    /// Number of documents the statistics were counted over.
    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    /// Maps tokens to ids, dropping the unknown ones.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens.iter().filter_map(|t| self.id(t.as_ref())).collect()
    }

    /// Tokens starting with `prefix`, in id order.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.tokens
            .iter()
            .map(String::as_str)
            .filter(move |t| t.starts_with(prefix))
    }
}

/// Counts tokens over the train split and keeps those seen `min_count` times.
pub fn build_vocabulary(corpus: &Corpus, min_count: usize) -> Result<Vocabulary> {
    if min_count == 0 {
        return Err(Error::Config("min_count must be at least 1".into()));
    }
    let mut freq: HashMap<String, (u64, u64)> = HashMap::new();
    let mut n_docs = 0u64;
    for doc in corpus.train() {
        n_docs += 1;
        let tokens = doc.tokens();
        let mut seen = HashSet::new();
        for t in tokens {
            let entry = freq.entry(t.clone()).or_default();
            entry.0 += 1;
            if seen.insert(t) {
                entry.1 += 1;
            }
        }
    }
    let mut kept: Vec<(String, u64, u64)> = freq
        .into_iter()
        .filter(|(_, (f, _))| *f >= min_count as u64)
        .map(|(t, (f, df))| (t, f, df))
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut tokens = Vec::with_capacity(kept.len());
    let mut freqs = Vec::with_capacity(kept.len());
    let mut dfs = Vec::with_capacity(kept.len());
    for (t, f, df) in kept {
        tokens.push(t);
        freqs.push(f);
        dfs.push(df);
    }
    Vocabulary::from_parts(tokens, freqs, dfs, n_docs)
}

/// Inverse document frequencies and per-document term counts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TfIdfStats {
    pub n_docs: u64,
    pub idf: BTreeMap<String, f64>,
    /// Raw term counts of each train document, keyed by token.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub term_freqs: Vec<BTreeMap<String, u32>>,
}

impl TfIdfStats {
    pub fn idf(&self, token: &str) -> Option<f64> {
        self.idf.get(token).copied()
    }

    /// Smoothed idf: `ln(n / (1 + df)) + 1`.
    pub fn idf_formula(n_docs: u64, doc_freq: u64) -> f64 {
        (n_docs as f64 / (1.0 + doc_freq as f64)).ln() + 1.0
    }

    /// Copy without the per-document tables; enough for embedding queries.
    pub fn idf_only(&self) -> TfIdfStats {
        TfIdfStats {
            n_docs: self.n_docs,
            idf: self.idf.clone(),
            term_freqs: Vec::new(),
        }
    }

    pub fn save_json(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(&self.idf_only())
            .map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn compute_tfidf_stats(corpus: &Corpus, vocab: &Vocabulary) -> TfIdfStats {
    let mut df = vec![0u64; vocab.len()];
    let mut term_freqs = Vec::new();
    let mut n_docs = 0u64;
    for doc in corpus.train() {
        n_docs += 1;
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in doc.tokens() {
            if vocab.id(&t).is_some() {
                *tf.entry(t).or_default() += 1;
            }
        }
        for t in tf.keys() {
            df[vocab.id(t).unwrap() as usize] += 1;
        }
        term_freqs.push(tf);
    }
    let idf = vocab
        .tokens()
        .iter()
        .zip(&df)
        .map(|(t, &d)| (t.clone(), TfIdfStats::idf_formula(n_docs, d)))
        .collect();
    TfIdfStats {
        n_docs,
        idf,
        term_freqs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Split};
    use proptest::prelude::*;

    fn corpus_of(captions: &[&str]) -> Corpus {
        Corpus::new(
            captions
                .iter()
                .enumerate()
                .map(|(i, c)| Document {
                    id: format!("d{i}"),
                    caption: c.to_string(),
                    tags: Default::default(),
                    features: None,
                    labels: None,
                    split: Split::Train,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn min_count_threshold() {
        let v = build_vocabulary(&corpus_of(&["a a b"]), 2).unwrap();
        assert_eq!(v.tokens(), ["a"]);
        let v = build_vocabulary(&corpus_of(&["a a b"]), 1).unwrap();
        assert_eq!(v.tokens(), ["a", "b"]);
        assert!(matches!(
            build_vocabulary(&corpus_of(&["a b"]), 2),
            Err(Error::EmptyVocabulary)
        ));
    }

    #[test]
    fn ties_break_lexicographically() {
        let v = build_vocabulary(&corpus_of(&["c b a c", "b a"]), 1).unwrap();
        assert_eq!(v.tokens(), ["a", "b", "c"]);
        assert_eq!(v.doc_freq(v.id("c").unwrap()), 1);
        assert_eq!(v.doc_freq(v.id("a").unwrap()), 2);
    }

    #[test]
    fn idf_single_document() {
        let c = corpus_of(&["a"]);
        let stats = compute_tfidf_stats(&c, &build_vocabulary(&c, 1).unwrap());
        let expected = (0.5f64).ln() + 1.0;
        assert!((stats.idf("a").unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.306_853).abs() < 1e-6);
        assert_eq!(stats.idf("zzz"), None);
    }

    #[test]
    fn idf_two_documents() {
        let c = corpus_of(&["a b", "a"]);
        let stats = compute_tfidf_stats(&c, &build_vocabulary(&c, 1).unwrap());
        assert!((stats.idf("a").unwrap() - ((2.0f64 / 3.0).ln() + 1.0)).abs() < 1e-15);
        assert!((stats.idf("b").unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(stats.term_freqs[0]["a"], 1);
        assert!(stats.idf.values().all(|&v| v > 0.0));
    }

    proptest! {
        #[test]
        fn retained_set_matches_counting(
            docs in prop::collection::vec(prop::collection::vec(0u8..12, 0..15), 1..10),
            min_count in 1usize..5,
        ) {
            let captions: Vec<String> = docs
                .iter()
                .map(|d| d.iter().map(|w| format!("w{w}")).collect::<Vec<_>>().join(" "))
                .collect();
            let refs: Vec<&str> = captions.iter().map(String::as_str).collect();
            let corpus = corpus_of(&refs);

            let mut counts: HashMap<String, usize> = HashMap::new();
            for c in &captions {
                for w in c.split(' ').filter(|w| !w.is_empty()) {
                    *counts.entry(w.to_string()).or_default() += 1;
                }
            }
            let mut expected: Vec<String> = counts
                .iter()
                .filter(|(_, &n)| n >= min_count)
                .map(|(w, _)| w.clone())
                .collect();
            expected.sort();

            match build_vocabulary(&corpus, min_count) {
                Ok(v) => {
                    let mut got = v.tokens().to_vec();
                    for (i, t) in got.iter().enumerate() {
                        prop_assert_eq!(v.id(t), Some(i as u32));
                        prop_assert!(v.freq(i as u32) as usize >= min_count);
                        prop_assert!(v.doc_freq(i as u32) <= v.n_docs());
                    }
                    got.sort();
                    prop_assert_eq!(got, expected);
                }
                Err(Error::EmptyVocabulary) => prop_assert!(expected.is_empty()),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }
}
