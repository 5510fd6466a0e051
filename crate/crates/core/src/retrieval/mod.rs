//! Exact cosine retrieval over visual embeddings and the weighted query
//! algebra used to compose multimodal queries.

mod io;
mod query;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_index, read_index, save_index, write_index};
pub use query::{execute_query, parse_query, QueryContext, QueryOutcome, QueryTerm};

/// Norm below which a composed query is considered to have cancelled out.
pub const DEGENERATE_NORM: f64 = 1e-9;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Invalid("vector contains NaN or infinite values".into()))
    }
}

/// `v / ‖v‖`.
pub fn normalize(v: &[f64]) -> Result<Vec<f64>> {
    check_finite(v)?;
    let n = norm(v);
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// `⟨a, b⟩ / (‖a‖·‖b‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            expected: a.len(),
            found: b.len(),
        });
    }
    check_finite(a)?;
    check_finite(b)?;
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// `Σ wᵢ·v̂ᵢ`, normalized. Each term vector is normalized before weighting
/// so weights alone express how much a concept is added or removed.
pub fn compose_query<V: AsRef<[f64]>>(terms: &[(V, f64)]) -> Result<Vec<f64>> {
    let Some((first, _)) = terms.first() else {
        return Err(Error::Invalid("a query needs at least one term".into()));
    };
    let d = first.as_ref().len();
    let mut acc = vec![0.0; d];
    for (v, w) in terms {
        let v = v.as_ref();
        if v.len() != d {
            return Err(Error::Shape {
                expected: d,
                found: v.len(),
            });
        }
        if !w.is_finite() {
            return Err(Error::Invalid(format!("term weight {w} is not finite")));
        }
        for (a, x) in acc.iter_mut().zip(normalize(v)?) {
            *a += w * x;
        }
    }
    let n = norm(&acc);
    if n < DEGENERATE_NORM {
        return Err(Error::DegenerateQuery);
    }
    Ok(acc.into_iter().map(|x| x / n).collect())
}

/// One ranked item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub id: String,
    pub score: f64,
}

/// Immutable exact-search index of unit-normalized single-precision rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalIndex {
    ids: Vec<String>,
    dim: usize,
    rows: Vec<f32>,
    positions: HashMap<String, usize>,
}

/// Normalizes and stores `items` in order. Ids must be unique, dimensions
/// uniform and vectors nonzero; an empty list gives an empty index.
pub fn build_index<S: Into<String>, V: AsRef<[f64]>>(
    items: impl IntoIterator<Item = (S, V)>,
) -> Result<RetrievalIndex> {
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut dim = None;
    for (id, v) in items {
        let id = id.into();
        let v = v.as_ref();
        let d = *dim.get_or_insert(v.len());
        if v.len() != d || d == 0 {
            return Err(Error::Shape {
                expected: d,
                found: v.len(),
            });
        }
        let unit = normalize(v).map_err(|e| match e {
            Error::ZeroNorm => Error::Invalid(format!("item {id:?} has a zero vector")),
            e => e,
        })?;
        rows.extend(unit.into_iter().map(|x| x as f32));
        ids.push(id);
    }
    RetrievalIndex::from_parts(ids, dim.unwrap_or(0), rows)
}

impl RetrievalIndex {
    pub(crate) fn from_parts(ids: Vec<String>, dim: usize, rows: Vec<f32>) -> Result<Self> {
        if rows.len() != ids.len() * dim {
            return Err(Error::Shape {
                expected: ids.len() * dim,
                found: rows.len(),
            });
        }
        let mut positions = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if positions.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(RetrievalIndex {
            ids,
            dim,
            rows,
            positions,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Vector dimension; 0 for an empty index.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn contains(&self, id: &str) -> bool {
        self.positions.contains_key(id)
    }

    /// The stored unit row at `position`.
    pub fn row(&self, position: usize) -> &[f32] {
        &self.rows[position * self.dim..(position + 1) * self.dim]
    }

    /// The stored unit vector of `id`.
    pub fn vector(&self, id: &str) -> Option<Vec<f64>> {
        self.positions
            .get(id)
            .map(|&i| self.row(i).iter().map(|&x| f64::from(x)).collect())
    }

    pub(crate) fn raw_rows(&self) -> &[f32] {
        &self.rows
    }

    /// Cosine score of every stored item against `q`, in index order.
    pub fn scores(&self, q: &[f64]) -> Result<Vec<f64>> {
        let q = normalize(q)?;
        if self.is_empty() {
            return Ok(Vec::new());
        }
        if q.len() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                found: q.len(),
            });
        }
        Ok(self
            .rows
            .chunks_exact(self.dim)
            .map(|row| {
                let dot: f64 = row.iter().zip(&q).map(|(&r, x)| f64::from(r) * x).sum();
                dot.clamp(-1.0, 1.0)
            })
            .collect())
    }

    /// The `k` items most similar to `q`, by descending cosine score with
    /// ties broken by ascending id. Returns every item when `k > len`.
    pub fn query_nearest(&self, q: &[f64], k: usize) -> Result<Vec<Hit>> {
        if k == 0 {
            return Err(Error::Invalid("k must be at least 1".into()));
        }
        let scores = self.scores(q)?;
        Ok(self.rank(&scores, k))
    }

    /// Full ranking of `scores` (one per item, in index order).
    pub(crate) fn rank(&self, scores: &[f64], k: usize) -> Vec<Hit> {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        let cmp = |&a: &usize, &b: &usize| {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| self.ids[a].cmp(&self.ids[b]))
        };
        let k = k.min(order.len());
        if k < order.len() {
            order.select_nth_unstable_by(k, cmp);
            order.truncate(k);
        }
        order.sort_unstable_by(cmp);
        order
            .into_iter()
            .map(|i| Hit {
                id: self.ids[i].clone(),
                score: scores[i],
            })
            .collect()
    }
}
