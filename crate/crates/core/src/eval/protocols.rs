use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    average_precision, mean, precision_at_k, relevance_complex, Complexity, EvalReport, ItemScore,
    QuerySpec,
};
use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::retrieval::{execute_query, QueryContext, QueryTerm, RetrievalIndex};

/// Corpus documents behind every indexed item, in index order.
fn indexed_docs<'a>(corpus: &'a Corpus, index: &RetrievalIndex) -> Result<Vec<&'a Document>> {
    let by_id = corpus.by_id();
    index
        .ids()
        .iter()
        .map(|id| {
            by_id.get(id.as_str()).copied().ok_or_else(|| {
                Error::Protocol(format!("indexed item {id:?} is not in the corpus"))
            })
        })
        .collect()
}

fn labels_of<'a>(docs: &[&'a Document]) -> Result<Vec<&'a BTreeSet<String>>> {
    docs.iter()
        .map(|d| {
            d.labels.as_ref().ok_or_else(|| {
                Error::Protocol(format!("item {:?} has no ground-truth labels", d.id))
            })
        })
        .collect()
}

/// Whether an embedding failure means "score this query 0 and flag it".
fn is_unscorable(e: &Error) -> bool {
    matches!(e, Error::Unembeddable(_) | Error::DegenerateQuery)
}

fn dropped_of(e: &Error) -> Vec<String> {
    match e {
        Error::Unembeddable(t) => t.clone(),
        _ => Vec::new(),
    }
}

/// Positions of `candidates` sorted by descending cosine score against
/// `q`, ties by ascending id.
fn ranking(index: &RetrievalIndex, q: &[f64], candidates: &[usize]) -> Result<Vec<usize>> {
    let scores = index.scores(q)?;
    let mut order = candidates.to_vec();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| index.ids()[a].cmp(&index.ids()[b]))
    });
    Ok(order)
}

/// P@k for each query, with label-based relevance: every query word must
/// be among the item's labels.
pub fn eval_p5_suite(
    corpus: &Corpus,
    ctx: &QueryContext,
    queries: &[QuerySpec],
    k: usize,
) -> Result<EvalReport> {
    let docs = indexed_docs(corpus, ctx.index)?;
    let labels = labels_of(&docs)?;
    let position: std::collections::HashMap<&str, usize> = ctx
        .index
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let mut report = EvalReport::new("p5");
    for q in queries {
        q.validate()?;
        let terms: Vec<QueryTerm> = q.words.iter().map(|w| QueryTerm::text(w, 1.0)).collect();
        let (score, flagged, dropped) = match execute_query(ctx, &terms, k) {
            Ok(out) => {
                let rel: Vec<bool> = out
                    .results
                    .iter()
                    .map(|h| relevance_complex(q, labels[position[h.id.as_str()]]))
                    .collect();
                (precision_at_k(&rel, k)?, false, out.dropped)
            }
            Err(e) if is_unscorable(&e) => (0.0, true, dropped_of(&e)),
            Err(e) => return Err(e),
        };
        report.items.push(ItemScore {
            name: q.name(),
            category: Some(q.category),
            complexity: Some(q.complexity),
            score,
            flagged,
            dropped,
        });
    }

    let group = |c: Option<Complexity>| -> Vec<f64> {
        report
            .items
            .iter()
            .filter(|it| c.is_none() || it.complexity == c)
            .map(|it| it.score)
            .collect()
    };
    let (all, simple, complex) = (
        group(None),
        group(Some(Complexity::Simple)),
        group(Some(Complexity::Complex)),
    );
    report.aggregates.insert("all".into(), mean(&all));
    if !simple.is_empty() {
        report.aggregates.insert("simple".into(), mean(&simple));
    }
    if !complex.is_empty() {
        report.aggregates.insert("complex".into(), mean(&complex));
    }
    report.metadata.insert("k".into(), json!(k));
    report.metadata.insert("index_size".into(), json!(ctx.index.len()));
    report.metadata.insert(
        "relevance".into(),
        json!("item labels contain every query word"),
    );
    Ok(report)
}

/// How indexed documents are divided into queries and retrieval set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TagQuerySplit {
    pub query_fraction: f64,
    pub seed: u64,
}

impl Default for TagQuerySplit {
    fn default() -> Self {
        TagQuerySplit {
            query_fraction: 0.05,
            seed: 0,
        }
    }
}

/// MAP of image retrieval by tag text: each query document's tags are
/// embedded as one text, the retrieval set is ranked in full, and an item
/// is relevant when it shares at least one tag with the query document.
pub fn eval_tag_query_map(
    corpus: &Corpus,
    ctx: &QueryContext,
    split: TagQuerySplit,
) -> Result<EvalReport> {
    if !(split.query_fraction > 0.0 && split.query_fraction < 1.0) {
        return Err(Error::Config(format!(
            "query_fraction {} outside (0, 1)",
            split.query_fraction
        )));
    }
    let docs = indexed_docs(corpus, ctx.index)?;
    let mut tagged: Vec<usize> = (0..docs.len()).filter(|&i| !docs[i].tags.is_empty()).collect();
    if tagged.len() < 2 {
        return Err(Error::Protocol(
            "need at least two tagged indexed documents".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(split.seed);
    tagged.shuffle(&mut rng);
    let n_queries = ((tagged.len() as f64 * split.query_fraction).round() as usize)
        .clamp(1, tagged.len() - 1);
    let (queries, retrieval) = tagged.split_at(n_queries);
    let mut queries = queries.to_vec();
    queries.sort_unstable();

    let mut report = EvalReport::new("tagmap");
    for &qi in &queries {
        let doc = docs[qi];
        let text = doc.tag_tokens().join(" ");
        let (score, flagged, dropped) = match ctx.query_vector(&[QueryTerm::text(text, 1.0)]) {
            Ok((q, dropped)) => {
                let rel: Vec<bool> = ranking(ctx.index, &q, retrieval)?
                    .into_iter()
                    .map(|r| !docs[r].tags.is_disjoint(&doc.tags))
                    .collect();
                (average_precision(&rel), false, dropped)
            }
            Err(e) if is_unscorable(&e) => (0.0, true, dropped_of(&e)),
            Err(e) => return Err(e),
        };
        report.items.push(ItemScore {
            name: doc.id.clone(),
            category: None,
            complexity: None,
            score,
            flagged,
            dropped,
        });
    }
    let aps: Vec<f64> = report.items.iter().map(|i| i.score).collect();
    report.aggregates.insert("map".into(), mean(&aps));
    report.metadata.insert("query_fraction".into(), json!(split.query_fraction));
    report.metadata.insert("seed".into(), json!(split.seed));
    report.metadata.insert("queries".into(), json!(queries.len()));
    report.metadata.insert("retrieval_set".into(), json!(retrieval.len()));
    report.metadata.insert(
        "relevance".into(),
        json!("retrieved item shares at least one tag with the query document"),
    );
    Ok(report)
}

/// AP per concept over the whole index, ranked by similarity to the
/// embedded concept name; relevant items carry the concept as a label.
pub fn eval_concept_ap(
    corpus: &Corpus,
    ctx: &QueryContext,
    concepts: &[String],
) -> Result<EvalReport> {
    let docs = indexed_docs(corpus, ctx.index)?;
    let labels = labels_of(&docs)?;
    let all: Vec<usize> = (0..docs.len()).collect();
    let mut report = EvalReport::new("conceptap");
    for c in concepts {
        let (score, flagged, dropped) = match ctx.query_vector(&[QueryTerm::text(c, 1.0)]) {
            Ok((q, dropped)) => {
                let rel: Vec<bool> = ranking(ctx.index, &q, &all)?
                    .into_iter()
                    .map(|r| labels[r].contains(c))
                    .collect();
                (average_precision(&rel), false, dropped)
            }
            Err(e) if is_unscorable(&e) => (0.0, true, dropped_of(&e)),
            Err(e) => return Err(e),
        };
        report.items.push(ItemScore {
            name: c.clone(),
            category: None,
            complexity: None,
            score,
            flagged,
            dropped,
        });
    }
    let aps: Vec<f64> = report.items.iter().map(|i| i.score).collect();
    report.aggregates.insert("map".into(), mean(&aps));
    report.metadata.insert("retrieval_set".into(), json!(docs.len()));
    report.metadata.insert(
        "relevance".into(),
        json!("retrieved item is labeled with the query concept"),
    );
    Ok(report)
}
