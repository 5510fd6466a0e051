//! Skip-gram negative-sampling machinery shared by word2vec, fastText and
//! doc2vec.
//!
//! Parameter tables store `f32` bit patterns in relaxed atomics. One worker
//! sees plain sequential semantics; several workers race on rows without
//! locks, which loses some updates but never tears a value.

use std::sync::atomic::{AtomicU32, Ordering};

use rand::Rng;

use crate::corpus::Vocabulary;

pub(crate) struct Table {
    data: Vec<AtomicU32>,
    dim: usize,
}

impl Table {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Table {
            data: (0..rows * dim).map(|_| AtomicU32::new(0)).collect(),
            dim,
        }
    }

    /// Uniform in `(-0.5/dim, 0.5/dim)`, drawn row by row.
    pub fn uniform(rows: usize, dim: usize, rng: &mut impl Rng) -> Self {
        let scale = 1.0 / dim as f32;
        Table {
            data: (0..rows * dim)
                .map(|_| AtomicU32::new(((rng.random::<f32>() - 0.5) * scale).to_bits()))
                .collect(),
            dim,
        }
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
            .into_iter()
            .map(|a| f32::from_bits(a.into_inner()))
            .collect()
    }

    #[inline]
    fn get(&self, i: usize) -> f32 {
        f32::from_bits(self.data[i].load(Ordering::Relaxed))
    }

    #[inline]
    fn set(&self, i: usize, v: f32) {
        self.data[i].store(v.to_bits(), Ordering::Relaxed);
    }

    pub fn read_row(&self, row: usize, out: &mut [f32]) {
        let base = row * self.dim;
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.get(base + k);
        }
    }

    pub fn add_to_row(&self, row: usize, delta: &[f32]) {
        let base = row * self.dim;
        for (k, d) in delta.iter().enumerate() {
            self.set(base + k, self.get(base + k) + d);
        }
    }
}

/// Read access to output vectors, optionally writable.
pub(crate) trait OutputRows {
    fn dot(&self, row: usize, v: &[f32]) -> f32;
    /// `grad += g · row`
    fn accumulate(&self, row: usize, g: f32, grad: &mut [f32]);
    /// `row += g · v`; frozen tables ignore it.
    fn update(&self, row: usize, g: f32, v: &[f32]);
}

impl OutputRows for Table {
    #[inline]
    fn dot(&self, row: usize, v: &[f32]) -> f32 {
        let base = row * self.dim;
        v.iter().enumerate().map(|(k, x)| x * self.get(base + k)).sum()
    }

    #[inline]
    fn accumulate(&self, row: usize, g: f32, grad: &mut [f32]) {
        let base = row * self.dim;
        for (k, gr) in grad.iter_mut().enumerate() {
            *gr += g * self.get(base + k);
        }
    }

    #[inline]
    fn update(&self, row: usize, g: f32, v: &[f32]) {
        let base = row * self.dim;
        for (k, x) in v.iter().enumerate() {
            self.set(base + k, self.get(base + k) + g * x);
        }
    }
}

/// A frozen row-major table.
pub(crate) struct Frozen<'a> {
    pub data: &'a [f32],
    pub dim: usize,
}

impl OutputRows for Frozen<'_> {
    #[inline]
    fn dot(&self, row: usize, v: &[f32]) -> f32 {
        let r = &self.data[row * self.dim..(row + 1) * self.dim];
        r.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    #[inline]
    fn accumulate(&self, row: usize, g: f32, grad: &mut [f32]) {
        let r = &self.data[row * self.dim..(row + 1) * self.dim];
        for (gr, x) in grad.iter_mut().zip(r) {
            *gr += g * x;
        }
    }

    #[inline]
    fn update(&self, _row: usize, _g: f32, _v: &[f32]) {}
}

/// Draws noise words from the unigram distribution raised to 3/4.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(vocab: &Vocabulary) -> Self {
        let mut acc = 0.0;
        let cumulative = vocab
            .freqs()
            .iter()
            .map(|&f| {
                acc += (f as f64).powf(0.75);
                acc
            })
            .collect();
        NegativeSampler { cumulative }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> u32 {
        let total = *self.cumulative.last().unwrap();
        let u = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.cumulative.len() - 1) as u32
    }
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

/// One positive pair plus `negative` noise pairs for hidden vector `h`.
///
/// Output rows are updated in place; the gradient for `h` is accumulated
/// into `grad` (already scaled by `lr`). Returns the pair loss.
#[allow(clippy::too_many_arguments)]
pub(crate) fn train_pair(
    h: &[f32],
    target: u32,
    negative: usize,
    sampler: &NegativeSampler,
    output: &impl OutputRows,
    lr: f32,
    grad: &mut [f32],
    rng: &mut impl Rng,
) -> f64 {
    let mut loss = 0.0f64;
    for k in 0..=negative {
        let (word, label) = if k == 0 {
            (target, 1.0f32)
        } else {
            let w = sampler.sample(rng);
            if w == target {
                continue;
            }
            (w, 0.0)
        };
        let row = word as usize;
        let score = output.dot(row, h);
        let p = sigmoid(score);
        loss -= if label > 0.0 {
            (p as f64).max(1e-12).ln()
        } else {
            (1.0 - p as f64).max(1e-12).ln()
        };
        let g = (label - p) * lr;
        output.accumulate(row, g, grad);
        output.update(row, g, h);
    }
    loss
}

/// Linearly decayed learning rate with a floor of `1e-4 · start`.
pub(crate) fn decayed_lr(start: f64, done: u64, total: u64) -> f32 {
    let frac = if total == 0 { 0.0 } else { done as f64 / total as f64 };
    (start * (1.0 - frac).max(1e-4)) as f32
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampler_follows_powered_unigram() {
        let vocab = Vocabulary::from_parts(
            vec!["a".into(), "b".into()],
            vec![16, 1],
            vec![1, 1],
            1,
        )
        .unwrap();
        let s = NegativeSampler::new(&vocab);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 40_000;
        let hits_a = (0..n).filter(|_| s.sample(&mut rng) == 0).count();
        // 16^0.75 = 8 → P(a) = 8/9
        let p = hits_a as f64 / n as f64;
        assert!((p - 8.0 / 9.0).abs() < 0.01, "{p}");
    }

    #[test]
    fn positive_pair_moves_score_up() {
        let vocab = Vocabulary::from_parts(vec!["a".into()], vec![1], vec![1], 1).unwrap();
        let sampler = NegativeSampler::new(&vocab);
        let out = Table::zeros(1, 3);
        let h = [0.5f32, -0.25, 1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let before = out.dot(0, &h);
        let mut grad = [0.0f32; 3];
        // Only one word: negatives equal the target and are skipped.
        train_pair(&h, 0, 3, &sampler, &out, 0.1, &mut grad, &mut rng);
        assert!(out.dot(0, &h) > before);
    }
}
