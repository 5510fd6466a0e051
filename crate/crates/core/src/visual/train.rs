use std::io::Write;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::VisualEmbedder;
use crate::corpus::{Corpus, TfIdfStats};
use crate::error::{Error, Result};
use crate::text::{embed_document, Aggregation, TextEmbedder};

/// SGD-with-momentum schedule for the regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Multiplies the learning rate every `decay_interval` iterations.
    pub lr_decay: f64,
    pub decay_interval: usize,
    pub momentum: f64,
    pub batch_size: usize,
    pub max_iters: usize,
    pub hidden: Vec<usize>,
    /// Iterations averaged into one loss-curve point.
    pub log_interval: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            lr_decay: 0.1,
            decay_interval: 100_000,
            momentum: 0.9,
            batch_size: 120,
            max_iters: 10_000,
            hidden: vec![256],
            log_interval: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_owned()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad("lr_decay must lie in (0, 1]");
        }
        if self.decay_interval == 0 {
            return bad("decay_interval must be at least 1");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.log_interval == 0 {
            return bad("log_interval must be at least 1");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        Ok(())
    }

    /// Learning rate in effect at (0-based) iteration `iter`.
    pub fn learning_rate_at(&self, iter: usize) -> f64 {
        let steps = (iter / self.decay_interval) as i32;
        self.learning_rate * self.lr_decay.powi(steps)
    }
}

/// Aligned feature and target matrices for the train split.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPairs {
    pub ids: Vec<String>,
    pub features: Array2<f64>,
    pub targets: Array2<f64>,
    /// Train documents left out because no token could be embedded.
    pub skipped: Vec<String>,
}

/// Pairs every train document's image features with φ of its text.
pub fn collect_training_pairs(
    corpus: &Corpus,
    text: &TextEmbedder,
    aggregation: Aggregation,
    stats: Option<&TfIdfStats>,
) -> Result<TrainingPairs> {
    let missing: Vec<String> = corpus
        .train()
        .filter(|d| d.features.is_none())
        .map(|d| d.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingFeatures(missing));
    }
    let f = corpus.feature_dim().ok_or(Error::EmptyTrainSplit)?;
    let (mut ids, mut skipped) = (Vec::new(), Vec::new());
    let (mut feats, mut targets) = (Vec::new(), Vec::new());
    for d in corpus.train() {
        match embed_document(text, &d.tokens(), aggregation, stats) {
            Ok(v) => {
                ids.push(d.id.clone());
                feats.extend_from_slice(d.features.as_ref().unwrap());
                targets.extend(v);
            }
            Err(Error::Unembeddable(_)) => skipped.push(d.id.clone()),
            Err(e) => return Err(e),
        }
    }
    if ids.is_empty() {
        return Err(Error::EmptyTrainSplit);
    }
    let n = ids.len();
    Ok(TrainingPairs {
        ids,
        features: Array2::from_shape_vec((n, f), feats).unwrap(),
        targets: Array2::from_shape_vec((n, text.dim()), targets).unwrap(),
        skipped,
    })
}

#[derive(Debug, Clone)]
pub struct VisualOutcome {
    pub embedder: VisualEmbedder,
    /// `(iteration, mean batch loss)` over consecutive windows of
    /// `log_interval` iterations.
    pub loss_curve: Vec<(usize, f64)>,
    /// Loss over all training pairs before the first update.
    pub initial_loss: f64,
    /// Loss over all training pairs after the last update.
    pub final_loss: f64,
    pub skipped: Vec<String>,
}

/// Trains ψ to regress φ of each train document from its image features.
pub fn train_visual(
    corpus: &Corpus,
    text: &TextEmbedder,
    aggregation: Aggregation,
    stats: Option<&TfIdfStats>,
    config: &TrainConfig,
) -> Result<VisualOutcome> {
    config.validate()?;
    let pairs = collect_training_pairs(corpus, text, aggregation, stats)?;
    let mut out = train_visual_pairs(pairs.features.view(), pairs.targets.view(), config)?;
    out.skipped = pairs.skipped;
    Ok(out)
}

/// Mini-batch SGD with momentum on feature/target rows.
///
/// The network is initialized exactly as
/// `VisualEmbedder::new(F, &config.hidden, d, config.seed)`; batches are
/// then drawn from the same generator, reshuffling at every pass.
pub fn train_visual_pairs(
    features: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    config: &TrainConfig,
) -> Result<VisualOutcome> {
    config.validate()?;
    let n = features.nrows();
    if n == 0 {
        return Err(Error::EmptyTrainSplit);
    }
    if targets.nrows() != n {
        return Err(Error::Shape {
            expected: n,
            found: targets.nrows(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = VisualEmbedder::init(
        features.ncols(),
        &config.hidden,
        targets.ncols(),
        &mut rng,
    )?;
    let initial_loss = net.loss(features, targets)?;

    let mut velocity: Vec<(Array2<f64>, Array1<f64>)> = net
        .layers()
        .iter()
        .map(|l| (Array2::zeros(l.weight.dim()), Array1::zeros(l.bias.len())))
        .collect();
    let batch = config.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut cursor = n;
    let mut rows = Vec::with_capacity(batch);
    let mut loss_curve = Vec::new();
    let mut window = 0.0;

    for iter in 0..config.max_iters {
        rows.clear();
        while rows.len() < batch {
            if cursor == n {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            rows.push(order[cursor]);
            cursor += 1;
        }
        let x = features.select(Axis(0), &rows);
        let t = targets.select(Axis(0), &rows);
        let (loss, grads) = match net.loss_and_gradients(x.view(), t.view()) {
            Ok((l, g)) if l.is_finite() => (l, g),
            Ok((l, _)) => return Err(Error::Diverged(format!("loss {l} at iteration {iter}"))),
            Err(Error::Invalid(_)) if iter > 0 => {
                return Err(Error::Diverged(format!(
                    "network output overflowed at iteration {iter}"
                )))
            }
            Err(e) => return Err(e),
        };
        let lr = config.learning_rate_at(iter);
        for ((layer, (vw, vb)), (gw, gb)) in
            net.layers_mut().iter_mut().zip(&mut velocity).zip(&grads)
        {
            vw.zip_mut_with(gw, |v, &g| *v = config.momentum * *v - lr * g);
            vb.zip_mut_with(gb, |v, &g| *v = config.momentum * *v - lr * g);
            layer.weight += &*vw;
            layer.bias += &*vb;
        }
        if !net.is_finite() {
            return Err(Error::Diverged(format!(
                "non-finite parameters after iteration {iter}"
            )));
        }
        window += loss;
        let done = iter + 1;
        if done % config.log_interval == 0 || done == config.max_iters {
            let len = (done - 1) % config.log_interval + 1;
            loss_curve.push((done, window / len as f64));
            window = 0.0;
        }
    }

    net.round_to_f32();
    let final_loss = match net.loss(features, targets) {
        Ok(l) if l.is_finite() => l,
        _ => return Err(Error::Diverged("final loss is not finite".into())),
    };
    Ok(VisualOutcome {
        embedder: net,
        loss_curve,
        initial_loss,
        final_loss,
        skipped: Vec::new(),
    })
}

/// `iteration,loss` CSV.
pub fn write_loss_curve(curve: &[(usize, f64)], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "iteration,loss")?;
    for (i, l) in curve {
        writeln!(out, "{i},{l}")?;
    }
    Ok(())
}
