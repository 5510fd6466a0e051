use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Corpus, Document, Split};
use crate::error::{Error, Result};

/// Parameters of the concept-mixture corpus generator.
///
/// Each document draws between `min_concepts` and `max_concepts` distinct
/// concepts. Its caption samples words from those concepts' private
/// vocabularies, its tags and labels are the concept names, and its feature
/// vector is the sum of the concepts' indicator basis vectors plus
/// isotropic Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_concepts: usize,
    pub words_per_concept: usize,
    pub n_docs: usize,
    pub feature_dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub min_concepts: usize,
    pub max_concepts: usize,
    pub min_caption_len: usize,
    pub max_caption_len: usize,
    pub train_fraction: f64,
    pub val_fraction: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_concepts: 10,
            words_per_concept: 50,
            n_docs: 5000,
            feature_dim: 64,
            noise_sigma: 0.1,
            seed: 0,
            min_concepts: 1,
            max_concepts: 3,
            min_caption_len: 6,
            max_caption_len: 12,
            train_fraction: 0.8,
            val_fraction: 0.1,
        }
    }
}

impl SyntheticSpec {
    pub fn new(
        n_concepts: usize,
        words_per_concept: usize,
        n_docs: usize,
        feature_dim: usize,
        noise_sigma: f64,
        seed: u64,
    ) -> Self {
        SyntheticSpec {
            n_concepts,
            words_per_concept,
            n_docs,
            feature_dim,
            noise_sigma,
            seed,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_concepts == 0 || self.words_per_concept == 0 || self.n_docs == 0 {
            return Err(Error::Config("synthetic counts must be positive".into()));
        }
        if self.feature_dim < self.n_concepts {
            return Err(Error::Config(format!(
                "feature_dim {} smaller than n_concepts {}",
                self.feature_dim, self.n_concepts
            )));
        }
        if self.min_concepts == 0
            || self.min_concepts > self.max_concepts
            || self.max_concepts > self.n_concepts
        {
            return Err(Error::Config(format!(
                "concepts per document must satisfy 1 <= {} <= {} <= {}",
                self.min_concepts, self.max_concepts, self.n_concepts
            )));
        }
        if self.min_caption_len == 0 || self.min_caption_len > self.max_caption_len {
            return Err(Error::Config("invalid caption length range".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config("noise_sigma must be finite and >= 0".into()));
        }
        let (t, v) = (self.train_fraction, self.val_fraction);
        if !(t >= 0.0 && v >= 0.0 && t + v <= 1.0) {
            return Err(Error::Config("split fractions must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

pub fn concept_name(concept: usize) -> String {
    format!("concept{concept}")
}

pub fn concept_word(concept: usize, word: usize) -> String {
    format!("c{concept}w{word}")
}

pub fn generate_synthetic_corpus(spec: &SyntheticSpec) -> Result<Corpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let width = (spec.n_docs.max(1) - 1).to_string().len();

    let mut docs = Vec::with_capacity(spec.n_docs);
    for i in 0..spec.n_docs {
        let k = rng.random_range(spec.min_concepts..=spec.max_concepts);
        let mut concepts = sample(&mut rng, spec.n_concepts, k).into_vec();
        concepts.sort_unstable();

        let len = rng.random_range(spec.min_caption_len..=spec.max_caption_len);
        let words: Vec<String> = (0..len)
            .map(|_| {
                let c = concepts[rng.random_range(0..concepts.len())];
                concept_word(c, rng.random_range(0..spec.words_per_concept))
            })
            .collect();

        let mut features = vec![0.0; spec.feature_dim];
        for &c in &concepts {
            features[c] += 1.0;
        }
        if spec.noise_sigma > 0.0 {
            for f in features.iter_mut() {
                *f += noise.sample(&mut rng);
            }
        }

        let r: f64 = rng.random();
        let split = if r < spec.train_fraction {
            Split::Train
        } else if r < spec.train_fraction + spec.val_fraction {
            Split::Val
        } else {
            Split::Test
        };

        let names: BTreeSet<String> = concepts.iter().map(|&c| concept_name(c)).collect();
        docs.push(Document {
            id: format!("d{i:0width$}"),
            caption: words.join(" "),
            tags: names.clone(),
            features: Some(features),
            labels: Some(names),
            split,
        });
    }
    Corpus::new(docs)
}
