//! Caption corpora: loading, validation, tag filtering and statistics.

mod synthetic;
mod tokenize;
mod vocab;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use synthetic::{concept_name, concept_word, generate_synthetic_corpus, SyntheticSpec};
pub use tokenize::tokenize;
pub use vocab::{build_vocabulary, compute_tfidf_stats, TfIdfStats, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// One image-text pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub caption: String,
    #[serde(default)]
    pub tags: BTreeSet<String>,
    /// Precomputed image feature vector standing in for the image itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f64>>,
    /// Ground-truth annotations used only by evaluation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeSet<String>>,
    pub split: Split,
}

impl Document {
    /// Caption tokens followed by tag tokens.
    pub fn tokens(&self) -> Vec<String> {
        let mut out = tokenize(&self.caption);
        for tag in &self.tags {
            out.extend(tokenize(tag));
        }
        out
    }

    /// Tags, tokenized, in tag order. Used as the query text of a document.
    pub fn tag_tokens(&self) -> Vec<String> {
        self.tags.iter().flat_map(|t| tokenize(t)).collect()
    }

    pub fn has_labels(&self) -> bool {
        self.labels.as_ref().is_some_and(|l| !l.is_empty())
    }
}

/// An ordered, validated collection of documents.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    docs: Vec<Document>,
    feature_dim: Option<usize>,
}

impl Corpus {
    /// Validates id uniqueness and uniform feature length.
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(docs.len());
        let mut feature_dim = None;
        for doc in &docs {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
            if let Some(f) = &doc.features {
                match feature_dim {
                    None => feature_dim = Some(f.len()),
                    Some(expected) if expected != f.len() => {
                        return Err(Error::RaggedFeatures {
                            id: doc.id.clone(),
                            expected,
                            found: f.len(),
                        })
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(Corpus { docs, feature_dim })
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn into_docs(self) -> Vec<Document> {
        self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.feature_dim
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Document> {
        self.docs.iter().filter(move |d| d.split == split)
    }

    pub fn train(&self) -> impl Iterator<Item = &Document> {
        self.split(Split::Train)
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.docs.iter().find(|d| d.id == id)
    }

    /// Id → document lookup table.
    pub fn by_id(&self) -> HashMap<&str, &Document> {
        self.docs.iter().map(|d| (d.id.as_str(), d)).collect()
    }
}

/// Reads a JSON-lines corpus. Blank lines are skipped.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_corpus(reader: impl BufRead) -> Result<Corpus> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<stream>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        docs.push(doc);
    }
    Corpus::new(docs)
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_corpus(corpus, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_corpus(corpus: &Corpus, out: &mut impl Write) -> std::io::Result<()> {
    for doc in corpus.docs() {
        serde_json::to_writer(&mut *out, doc)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Drops rare tags, then documents left without tags or annotations.
///
/// Tag counts are taken over annotated documents only, so that removing
/// unannotated documents cannot push a surviving tag below the threshold.
pub fn filter_low_frequency_tags(corpus: &Corpus, min_tag_count: usize) -> Corpus {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for doc in corpus.docs().iter().filter(|d| d.has_labels()) {
        for tag in &doc.tags {
            *counts.entry(tag.as_str()).or_default() += 1;
        }
    }
    let docs = corpus
        .docs()
        .iter()
        .filter(|d| d.has_labels())
        .filter_map(|doc| {
            let tags: BTreeSet<String> = doc
                .tags
                .iter()
                .filter(|t| counts[t.as_str()] >= min_tag_count)
                .cloned()
                .collect();
            (!tags.is_empty()).then(|| Document {
                tags,
                ..doc.clone()
            })
        })
        .collect();
    Corpus {
        docs,
        feature_dim: corpus.feature_dim,
    }
}

/// Corpus-wide count of documents carrying each tag.
pub fn tag_counts(corpus: &Corpus) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for doc in corpus.docs() {
        for tag in &doc.tags {
            *counts.entry(tag.clone()).or_default() += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, tags: &[&str], labels: Option<&[&str]>) -> Document {
        Document {
            id: id.into(),
            caption: String::new(),
            tags: tags.iter().map(|s| s.to_string()).collect(),
            features: None,
            labels: labels.map(|l| l.iter().map(|s| s.to_string()).collect()),
            split: Split::Train,
        }
    }

    #[test]
    fn parses_three_lines() {
        let text = r#"{"id":"a","caption":"Sunrise #beach","tags":["beach"],"split":"train"}
{"id":"b","caption":"snow","tags":[],"features":[1.0,2.0],"split":"val"}
{"id":"c","caption":"x","tags":["t"],"features":[0.5,0.25],"labels":["t"],"split":"test"}
"#;
        let corpus = read_corpus(text.as_bytes()).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.feature_dim(), Some(2));
        assert_eq!(corpus.docs()[2].split, Split::Test);
        assert_eq!(corpus.docs()[0].tokens(), ["sunrise", "beach", "beach"]);
    }

    #[test]
    fn duplicate_id_is_named() {
        let text = "{\"id\":\"a\",\"caption\":\"\",\"tags\":[],\"split\":\"train\"}\n\
                    {\"id\":\"a\",\"caption\":\"\",\"tags\":[],\"split\":\"train\"}\n";
        match read_corpus(text.as_bytes()) {
            Err(Error::DuplicateId(id)) => assert_eq!(id, "a"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "{\"id\":\"a\",\"caption\":\"\",\"tags\":[],\"split\":\"train\"}\nnot json\n";
        match read_corpus(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let bad_split = "{\"id\":\"a\",\"caption\":\"\",\"tags\":[],\"split\":\"dev\"}\n";
        assert!(matches!(
            read_corpus(bad_split.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn ragged_features_rejected() {
        let mut a = doc("a", &[], None);
        a.features = Some(vec![1.0, 2.0]);
        let mut b = doc("b", &[], None);
        b.features = Some(vec![1.0]);
        assert!(matches!(
            Corpus::new(vec![a, b]),
            Err(Error::RaggedFeatures { found: 1, .. })
        ));
    }

    #[test]
    fn tag_seen_nineteen_times_is_dropped_at_twenty() {
        let mut docs = Vec::new();
        for i in 0..19 {
            docs.push(doc(&format!("x{i}"), &["x", "y"], Some(&["l"])));
        }
        docs.push(doc("y19", &["y"], Some(&["l"])));
        docs.push(doc("only_x", &["x"], Some(&["l"])));
        // 20 occurrences of x, but one sits on an unannotated document.
        docs.pop();
        docs.push(doc("only_x", &["x"], None));
        let corpus = Corpus::new(docs).unwrap();
        let filtered = filter_low_frequency_tags(&corpus, 20);
        assert_eq!(filtered.len(), 20);
        assert!(filtered.docs().iter().all(|d| !d.tags.contains("x")));
        assert!(filtered.docs().iter().all(|d| d.tags.contains("y")));
    }

    #[test]
    fn threshold_one_only_drops_empty_documents() {
        let docs = vec![
            doc("a", &["t"], Some(&["l"])),
            doc("b", &[], Some(&["l"])),
            doc("c", &["t"], Some(&[])),
            doc("d", &["u"], Some(&["l"])),
        ];
        let corpus = Corpus::new(docs).unwrap();
        let filtered = filter_low_frequency_tags(&corpus, 1);
        let ids: Vec<_> = filtered.docs().iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["a", "d"]);
        assert_eq!(filtered.docs()[0], corpus.docs()[0]);
    }
}
