//! Native binary persistence and textual word-vector export.
//!
//! Binary layout (little-endian): magic `WSTE`, `u32` version, `u8` method
//! tag, `u64` dim, the vocabulary (document count, then token, frequency
//! and document frequency per entry), then the method payload. Vector
//! tables are IEEE-754 single precision; LDA stores raw topic counts.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use super::sgns::NegativeSampler;
use super::{Method, Model, TextEmbedder};
use crate::binio::{read_file, ByteReader, ByteWriter};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"WSTE";
const VERSION: u32 = 1;

pub fn write_embedder(e: &TextEmbedder) -> Vec<u8> {
    encode(e).into_bytes()
}

fn encode(e: &TextEmbedder) -> ByteWriter {
    let mut w = ByteWriter::new(MAGIC, VERSION);
    w.u8(e.method.tag());
    w.len(e.dim);
    w.u64(e.vocab.n_docs());
    w.len(e.vocab.len());
    for (i, t) in e.vocab.tokens().iter().enumerate() {
        w.str(t);
        w.u64(e.vocab.freq(i as u32));
        w.u64(e.vocab.doc_freq(i as u32));
    }
    match &e.model {
        Model::WordTable { vectors } => w.f32s(vectors),
        Model::FastText {
            min_n,
            max_n,
            ngrams,
            vectors,
            ..
        } => {
            w.len(*min_n);
            w.len(*max_n);
            w.len(ngrams.len());
            for g in ngrams {
                w.str(g);
            }
            w.f32s(vectors);
        }
        Model::Lda {
            alpha,
            beta,
            infer_sweeps,
            seed,
            word_topic,
            topic_totals,
        } => {
            w.f64(*alpha);
            w.f64(*beta);
            w.len(*infer_sweeps);
            w.u64(*seed);
            w.u32s(word_topic);
            w.len(topic_totals.len());
            for t in topic_totals {
                w.u64(*t);
            }
        }
        Model::Doc2Vec {
            output,
            docs,
            negative,
            learning_rate,
            infer_steps,
            seed,
            ..
        } => {
            w.len(*negative);
            w.f64(*learning_rate);
            w.len(*infer_steps);
            w.u64(*seed);
            w.f32s(output);
            w.f32s(docs);
        }
    }
    w
}

pub fn save_embedder(e: &TextEmbedder, path: impl AsRef<Path>) -> Result<()> {
    encode(e).write_to(path.as_ref())
}

pub fn load_embedder(path: impl AsRef<Path>) -> Result<TextEmbedder> {
    read_embedder(&read_file(path.as_ref())?)
}

fn check_len(what: &str, found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::Format(format!(
            "{what} holds {found} values, expected {expected}"
        )));
    }
    Ok(())
}

pub fn read_embedder(bytes: &[u8]) -> Result<TextEmbedder> {
    let mut r = ByteReader::open(bytes, MAGIC, VERSION)?;
    let tag = r.u8()?;
    let method =
        Method::from_tag(tag).ok_or_else(|| Error::Format(format!("unknown method tag {tag}")))?;
    let dim = r.u64()? as usize;
    if dim == 0 {
        return Err(Error::Format("zero dimension".into()));
    }
    let n_docs = r.u64()?;
    let v = r.len()?;
    let mut tokens = Vec::with_capacity(v);
    let mut freq = Vec::with_capacity(v);
    let mut df = Vec::with_capacity(v);
    for _ in 0..v {
        tokens.push(r.str()?);
        freq.push(r.u64()?);
        df.push(r.u64()?);
    }
    let vocab = Vocabulary::from_parts(tokens, freq, df, n_docs)
        .map_err(|e| Error::Format(e.to_string()))?;
    let table_len = v.checked_mul(dim).ok_or_else(|| Error::Format("size overflow".into()))?;

    let model = match method {
        Method::Word2vec | Method::Glove => {
            let vectors = r.f32s()?;
            check_len("word table", vectors.len(), table_len)?;
            Model::WordTable { vectors }
        }
        Method::Fasttext => {
            let min_n = r.u64()? as usize;
            let max_n = r.u64()? as usize;
            let n = r.len()?;
            let mut ngrams = Vec::with_capacity(n);
            for _ in 0..n {
                ngrams.push(r.str()?);
            }
            let vectors = r.f32s()?;
            check_len("n-gram table", vectors.len(), n * dim)?;
            let index: HashMap<String, u32> = ngrams
                .iter()
                .enumerate()
                .map(|(i, g)| (g.clone(), i as u32))
                .collect();
            Model::FastText {
                min_n,
                max_n,
                ngrams,
                index,
                vectors,
            }
        }
        Method::Lda => {
            let alpha = r.f64()?;
            let beta = r.f64()?;
            let infer_sweeps = r.u64()? as usize;
            let seed = r.u64()?;
            let word_topic = r.u32s()?;
            check_len("word-topic counts", word_topic.len(), table_len)?;
            let k = r.len()?;
            check_len("topic totals", k, dim)?;
            let topic_totals = (0..k).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
            Model::Lda {
                alpha,
                beta,
                infer_sweeps,
                seed,
                word_topic,
                topic_totals,
            }
        }
        Method::Doc2vec => {
            let negative = r.u64()? as usize;
            let learning_rate = r.f64()?;
            let infer_steps = r.u64()? as usize;
            let seed = r.u64()?;
            let output = r.f32s()?;
            check_len("output table", output.len(), table_len)?;
            let docs = r.f32s()?;
            if docs.len() % dim != 0 {
                return Err(Error::Format("ragged paragraph table".into()));
            }
            Model::Doc2Vec {
                sampler: NegativeSampler::new(&vocab),
                output,
                docs,
                negative,
                learning_rate,
                infer_steps,
                seed,
            }
        }
    };
    r.finish()?;
    Ok(TextEmbedder {
        method,
        dim,
        vocab,
        model,
    })
}

/// Writes `count dim`, then one `token v1 … vd` line per vocabulary token.
pub fn export_word_vectors(e: &TextEmbedder, out: &mut impl Write) -> std::io::Result<()> {
    let rows: Vec<(&str, Vec<f64>)> = e
        .vocab
        .tokens()
        .iter()
        .filter_map(|t| e.word_vector(t).map(|v| (t.as_str(), v)))
        .collect();
    writeln!(out, "{} {}", rows.len(), e.dim)?;
    for (t, v) in rows {
        write!(out, "{t}")?;
        for x in v {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
