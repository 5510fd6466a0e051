//! Loaded artifacts that answer queries.

use websem_core::corpus::{filter_low_frequency_tags, load_corpus, Corpus, TfIdfStats};
use websem_core::retrieval::{execute_query, load_index, QueryContext, QueryOutcome, QueryTerm, RetrievalIndex};
use websem_core::text::{load_embedder, Aggregation, TextEmbedder};
use websem_core::Result;

use crate::config::EngineConfig;

/// Corpus, text model and index, immutable once loaded. The server swaps
/// whole engines on reload.
#[derive(Debug)]
pub struct Engine {
    pub corpus: Corpus,
    pub text: TextEmbedder,
    pub stats: Option<TfIdfStats>,
    pub aggregation: Aggregation,
    pub index: RetrievalIndex,
}

/// The corpus as every command sees it, after tag filtering.
pub fn working_corpus(cfg: &EngineConfig) -> Result<Corpus> {
    let corpus = load_corpus(&cfg.paths.corpus)?;
    Ok(match cfg.min_tag_count {
        0 => corpus,
        n => filter_low_frequency_tags(&corpus, n),
    })
}

/// tf-idf statistics when the aggregation needs them.
pub fn load_stats(cfg: &EngineConfig) -> Result<Option<TfIdfStats>> {
    match cfg.aggregation {
        Aggregation::Tfidf => TfIdfStats::load_json(&cfg.paths.tfidf).map(Some),
        Aggregation::Mean => Ok(None),
    }
}

impl Engine {
    pub fn load(cfg: &EngineConfig) -> Result<Engine> {
        Ok(Engine {
            corpus: working_corpus(cfg)?,
            text: load_embedder(&cfg.paths.text_model)?,
            stats: load_stats(cfg)?,
            aggregation: cfg.aggregation,
            index: load_index(&cfg.paths.index)?,
        })
    }

    pub fn context(&self) -> QueryContext<'_> {
        QueryContext {
            text: &self.text,
            aggregation: self.aggregation,
            stats: self.stats.as_ref(),
            index: &self.index,
        }
    }

    pub fn query(&self, terms: &[QueryTerm], k: usize) -> Result<QueryOutcome> {
        execute_query(&self.context(), terms, k)
    }
}
