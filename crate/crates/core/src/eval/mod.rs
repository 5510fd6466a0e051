//! Retrieval metrics and the evaluation protocols: P@5 over a fixed query
//! list, MAP with tag-sharing or concept relevance, and the correlation
//! between text and image distances of random document pairs.

mod correlation;
mod protocols;
mod report;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use correlation::{distance_correlation_study, PairPoint, PairSample};
pub use protocols::{eval_concept_ap, eval_p5_suite, eval_tag_query_map, TagQuerySplit};
pub use report::{EvalReport, ItemScore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Urban,
    Weather,
    Food,
    People,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Urban,
        Category::Weather,
        Category::Food,
        Category::People,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Complexity {
    Simple,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub words: Vec<String>,
    pub category: Category,
    pub complexity: Complexity,
}

impl QuerySpec {
    pub fn validate(&self) -> Result<()> {
        let want = match self.complexity {
            Complexity::Simple => 1,
            Complexity::Complex => 2,
        };
        if self.words.len() != want {
            return Err(Error::Invalid(format!(
                "{:?} query {:?} must have {want} word(s)",
                self.complexity, self.words
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        self.words.join("+")
    }
}

const FIXED_QUERIES: &str = include_str!("../../data/queries.json");

/// The 24 fixed queries: twelve single words and twelve word pairs, three
/// of each per category.
pub fn fixed_queries() -> Vec<QuerySpec> {
    parse_queries(FIXED_QUERIES).expect("bundled query fixture is valid")
}

pub fn parse_queries(json: &str) -> Result<Vec<QuerySpec>> {
    let queries: Vec<QuerySpec> =
        serde_json::from_str(json).map_err(|e| Error::Invalid(format!("query list: {e}")))?;
    for q in &queries {
        q.validate()?;
    }
    Ok(queries)
}

/// Queries for a synthetic corpus: every concept name alone, and every
/// concept paired with the next one. Categories cycle through the four
/// fixed ones so reports keep the same shape.
pub fn synthetic_queries(n_concepts: usize) -> Vec<QuerySpec> {
    let name = crate::corpus::concept_name;
    let simple = (0..n_concepts).map(|c| QuerySpec {
        words: vec![name(c)],
        category: Category::ALL[c % 4],
        complexity: Complexity::Simple,
    });
    let complex = (0..n_concepts)
        .filter(|_| n_concepts > 1)
        .map(|c| QuerySpec {
            words: vec![name(c), name((c + 1) % n_concepts)],
            category: Category::ALL[c % 4],
            complexity: Complexity::Complex,
        });
    simple.chain(complex).collect()
}

/// Fraction of the first `k` positions that are relevant; positions past
/// the end of the list count as misses.
pub fn precision_at_k(relevance: &[bool], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    let hits = relevance.iter().take(k).filter(|&&r| r).count();
    Ok(hits as f64 / k as f64)
}

/// A simple query is satisfied by an item labeled with its word; a complex
/// one needs every word among the labels.
pub fn relevance_complex(query: &QuerySpec, labels: &BTreeSet<String>) -> bool {
    query.words.iter().all(|w| labels.contains(w))
}

/// Mean of precision@i over the relevant positions i; 0 without any
/// relevant item.
pub fn average_precision(relevance: &[bool]) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &r) in relevance.iter().enumerate() {
        if r {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

/// Arithmetic mean; 0 for an empty list.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Coefficient of determination of the least-squares line of `y` on `x`:
/// `1 − SS_res / SS_tot`.
pub fn r_squared(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Undefined("R² needs at least two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Undefined("x is constant".into()));
    }
    if ss_tot == 0.0 {
        return Err(Error::Undefined("y is constant".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - (intercept + slope * a)).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}
