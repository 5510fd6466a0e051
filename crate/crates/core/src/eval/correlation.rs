use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::r_squared;
use crate::corpus::{Document, TfIdfStats};
use crate::error::{Error, Result};
use crate::retrieval::cosine_similarity;
use crate::text::{embed_document, Aggregation, TextEmbedder};
use crate::visual::VisualEmbedder;

/// One sampled document pair. Distances are min–max normalized over the
/// whole sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPoint {
    pub a: String,
    pub b: String,
    pub text_dist: f64,
    pub image_dist: f64,
    pub shared_tags: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub points: Vec<PairPoint>,
}

/// Shared-tag buckets 0, 1, 2, 3 and 4 or more.
pub const BUCKETS: usize = 5;

impl PairSample {
    pub fn text_distances(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.text_dist).collect()
    }

    pub fn image_distances(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.image_dist).collect()
    }

    /// Pair count per shared-tag bucket.
    pub fn bucket_counts(&self) -> [usize; BUCKETS] {
        let mut c = [0; BUCKETS];
        for p in &self.points {
            c[p.shared_tags.min(BUCKETS - 1)] += 1;
        }
        c
    }

    /// Mean image distance over pairs whose shared-tag count satisfies
    /// `keep`, or `None` when no pair does.
    pub fn mean_image_distance(&self, keep: impl Fn(usize) -> bool) -> Option<f64> {
        let v: Vec<f64> = self
            .points
            .iter()
            .filter(|p| keep(p.shared_tags))
            .map(|p| p.image_dist)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// `text_dist,image_dist,shared_tags`.
    pub fn write_csv(&self, out: impl std::io::Write) -> Result<()> {
        let err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["text_dist", "image_dist", "shared_tags"])
            .map_err(err)?;
        for p in &self.points {
            w.write_record([
                p.text_dist.to_string(),
                p.image_dist.to_string(),
                p.shared_tags.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Invalid(format!("csv: {e}")))
    }
}

fn min_max(values: &mut [f64], axis: &str) -> Result<()> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::Undefined(format!("{axis} distance is constant over the sample")));
    }
    values.iter_mut().for_each(|v| *v = (*v - lo) / (hi - lo));
    Ok(())
}

/// Samples `n_pairs` random document pairs and compares the cosine
/// distance of their text embeddings with that of their image embeddings.
///
/// Documents without tags or whose text cannot be embedded are left out;
/// every document must have features. Returns the normalized sample and
/// the R² of image distance regressed on text distance.
#[allow(clippy::too_many_arguments)]
pub fn distance_correlation_study(
    docs: &[&Document],
    text: &TextEmbedder,
    aggregation: Aggregation,
    stats: Option<&TfIdfStats>,
    visual: &VisualEmbedder,
    n_pairs: usize,
    seed: u64,
) -> Result<(PairSample, f64)> {
    if n_pairs < 2 {
        return Err(Error::Invalid("n_pairs must be at least 2".into()));
    }
    let missing: Vec<String> = docs
        .iter()
        .filter(|d| d.features.is_none())
        .map(|d| d.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingFeatures(missing));
    }
    let mut pool = Vec::new();
    for d in docs.iter().filter(|d| !d.tags.is_empty()) {
        let t = match embed_document(text, &d.tokens(), aggregation, stats) {
            Ok(v) => v,
            Err(Error::Unembeddable(_)) => continue,
            Err(e) => return Err(e),
        };
        let v = visual.forward(d.features.as_ref().unwrap())?;
        pool.push((*d, t, v));
    }
    if pool.len() < 2 {
        return Err(Error::Protocol(
            "fewer than two usable documents for pair sampling".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = pool.len();
    let mut points = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (da, ta, va) = &pool[i];
        let (db, tb, vb) = &pool[j];
        points.push(PairPoint {
            a: da.id.clone(),
            b: db.id.clone(),
            text_dist: 1.0 - cosine_similarity(ta, tb)?,
            image_dist: 1.0 - cosine_similarity(va, vb)?,
            shared_tags: da.tags.intersection(&db.tags).count(),
        });
    }
    let mut tx: Vec<f64> = points.iter().map(|p| p.text_dist).collect();
    let mut iy: Vec<f64> = points.iter().map(|p| p.image_dist).collect();
    min_max(&mut tx, "text")?;
    min_max(&mut iy, "image")?;
    for (p, (t, i)) in points.iter_mut().zip(tx.iter().zip(&iy)) {
        p.text_dist = *t;
        p.image_dist = *i;
    }
    let r2 = r_squared(&tx, &iy)?;
    Ok((PairSample { points }, r2))
}
