//! The visual embedding ψ: a feed-forward regressor from image feature
//! vectors into the text-embedding space.
//!
//! Hidden layers use a rectifier, the output layer is affine. Parameters
//! are held in `f64` for arithmetic but always rounded to single precision
//! at initialization and at the end of training, so a saved model reloads
//! bit-exactly.

mod io;
mod train;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub use io::{load_visual, read_visual, save_visual, write_visual};
pub use train::{
    collect_training_pairs, train_visual, train_visual_pairs, write_loss_curve, TrainConfig,
    TrainingPairs, VisualOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            _ => None,
        }
    }
}

/// One affine layer. `weight` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.nrows()
    }
}

/// Parameter gradients, one `(weight, bias)` pair per layer.
pub type Gradients = Vec<(Array2<f64>, Array1<f64>)>;

#[derive(Debug, Clone, PartialEq)]
pub struct VisualEmbedder {
    layers: Vec<Layer>,
}

fn round_f32(a: &mut [f64]) {
    a.iter_mut().for_each(|x| *x = *x as f32 as f64);
}

impl VisualEmbedder {
    /// He-initialized network `input → hidden… → output`: weights drawn
    /// from `N(0, 2/fan_in)` in layer order, row-major; biases zero.
    pub fn new(input: usize, hidden: &[usize], output: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init(input, hidden, output, &mut rng)
    }

    pub(crate) fn init(
        input: usize,
        hidden: &[usize],
        output: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let sizes: Vec<usize> = std::iter::once(input)
            .chain(hidden.iter().copied())
            .chain(std::iter::once(output))
            .collect();
        if sizes.contains(&0) {
            return Err(Error::Config(format!("layer sizes must be positive: {sizes:?}")));
        }
        let n = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
                let mut weight =
                    Array2::from_shape_fn((fan_out, fan_in), |_| normal.sample(&mut *rng));
                round_f32(weight.as_slice_mut().unwrap());
                Layer {
                    weight,
                    bias: Array1::zeros(fan_out),
                    activation: if i + 1 == n {
                        Activation::Identity
                    } else {
                        Activation::Relu
                    },
                }
            })
            .collect();
        Ok(VisualEmbedder { layers })
    }

    /// Builds a network from explicit layers, checking that shapes chain.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("a network needs at least one layer".into()));
        }
        for l in &layers {
            if l.bias.len() != l.output_dim() {
                return Err(Error::Shape {
                    expected: l.output_dim(),
                    found: l.bias.len(),
                });
            }
            if l.input_dim() == 0 || l.output_dim() == 0 {
                return Err(Error::Config("layer sizes must be positive".into()));
            }
        }
        for pair in layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::Shape {
                    expected: pair[0].output_dim(),
                    found: pair[1].input_dim(),
                });
            }
        }
        Ok(VisualEmbedder { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    /// Output dimension d.
    pub fn dim(&self) -> usize {
        self.layers.last().unwrap().output_dim()
    }

    /// `[F, h1, …, d]`.
    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Layer::output_dim))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(&l.bias).all(|x| x.is_finite()))
    }

    pub(crate) fn round_to_f32(&mut self) {
        for l in &mut self.layers {
            round_f32(l.weight.as_slice_mut().unwrap());
            round_f32(l.bias.as_slice_mut().unwrap());
        }
    }

    /// ψ(x) for one feature vector.
    pub fn forward(&self, feature: &[f64]) -> Result<Vec<f64>> {
        let x = ArrayView2::from_shape((1, feature.len()), feature).unwrap();
        Ok(self.forward_batch(x)?.into_raw_vec_and_offset().0)
    }

    /// ψ applied to each row of `features`.
    pub fn forward_batch(&self, features: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.activations(features)?.pop().unwrap())
    }

    /// Layer inputs followed by the network output.
    fn activations(&self, features: ArrayView2<f64>) -> Result<Vec<Array2<f64>>> {
        if features.ncols() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                found: features.ncols(),
            });
        }
        let mut acts = vec![features.to_owned()];
        for l in &self.layers {
            let mut z = acts.last().unwrap().dot(&l.weight.t());
            z += &l.bias;
            if l.activation == Activation::Relu {
                z.mapv_inplace(|v| v.max(0.0));
            }
            acts.push(z);
        }
        Ok(acts)
    }

    /// Which rectifier units are active, for every row and hidden layer.
    fn rectifier_pattern(&self, features: ArrayView2<f64>) -> Result<Vec<bool>> {
        let acts = self.activations(features)?;
        Ok(self
            .layers
            .iter()
            .zip(&acts[1..])
            .filter(|(l, _)| l.activation == Activation::Relu)
            .flat_map(|(_, a)| a.iter().map(|&v| v > 0.0))
            .collect())
    }

    /// Batch loss and its gradient with respect to every parameter.
    pub fn loss_and_gradients(
        &self,
        features: ArrayView2<f64>,
        targets: ArrayView2<f64>,
    ) -> Result<(f64, Gradients)> {
        let acts = self.activations(features)?;
        let (loss, mut delta) = sigmoid_xent_loss(targets, acts.last().unwrap().view())?;
        let mut grads = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate().rev() {
            let input = &acts[i];
            let gw = delta.t().dot(input);
            let gb = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut next = delta.dot(&l.weight);
                if self.layers[i - 1].activation == Activation::Relu {
                    next.zip_mut_with(input, |d, &a| {
                        if a <= 0.0 {
                            *d = 0.0
                        }
                    });
                }
                delta = next;
            }
            grads.push((gw, gb));
        }
        grads.reverse();
        Ok((loss, grads))
    }

    /// Mean loss of the network over a batch.
    pub fn loss(&self, features: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<f64> {
        let out = self.forward_batch(features)?;
        Ok(sigmoid_xent_loss(targets, out.view())?.0)
    }
}

fn check_finite(a: ArrayView2<f64>, what: &str) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Invalid(format!("{what} contain NaN or infinite values")))
    }
}

/// `max(z,0) − z·p + ln(1 + e^{−|z|})`, the cross-entropy between
/// `p` and `σ(z)` without overflow.
#[inline]
fn xent(z: f64, p: f64) -> f64 {
    z.max(0.0) - z * p + (-z.abs()).exp().ln_1p()
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Sigmoid cross-entropy between `σ(targets)` and `σ(predictions)`,
/// averaged over components and over the batch, together with its gradient
/// `(σ(z) − σ(φ)) / (N·d)` with respect to the predictions.
pub fn sigmoid_xent_loss(
    targets: ArrayView2<f64>,
    predictions: ArrayView2<f64>,
) -> Result<(f64, Array2<f64>)> {
    if targets.dim() != predictions.dim() {
        return Err(Error::Shape {
            expected: targets.len(),
            found: predictions.len(),
        });
    }
    let (n, d) = targets.dim();
    if n == 0 || d == 0 {
        return Err(Error::Invalid("empty batch".into()));
    }
    check_finite(targets, "targets")?;
    check_finite(predictions, "predictions")?;
    let scale = 1.0 / (n * d) as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros((n, d));
    ndarray::Zip::from(&mut grad)
        .and(targets)
        .and(predictions)
        .for_each(|g, &t, &z| {
            let p = sigmoid(t);
            loss += xent(z, p);
            *g = (sigmoid(z) - p) * scale;
        });
    Ok((loss * scale, grad))
}

/// Mean binary entropy of `σ(targets)`: the smallest value the loss can
/// take for these targets, reached when predictions equal the targets.
pub fn entropy_floor(targets: ArrayView2<f64>) -> Result<f64> {
    Ok(sigmoid_xent_loss(targets, targets)?.0)
}

/// Outcome of [`gradient_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    /// Largest `|a − n| / max(|a|, |n|, 1e-8)` over compared parameters.
    pub max_relative_error: f64,
    pub checked: usize,
    /// Parameters whose probe moved a rectifier across its kink, where the
    /// loss is not differentiable and central differences are meaningless.
    pub skipped_at_kinks: usize,
}

/// Compares backpropagated parameter gradients against central differences
/// with step `epsilon`.
pub fn gradient_check(
    embedder: &VisualEmbedder,
    features: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    epsilon: f64,
) -> Result<GradientCheck> {
    if !(epsilon > 0.0 && epsilon <= 1e-2) {
        return Err(Error::Config(format!("epsilon {epsilon} outside (0, 1e-2]")));
    }
    let (_, grads) = embedder.loss_and_gradients(features, targets)?;
    let base = embedder.rectifier_pattern(features)?;
    let mut probe = embedder.clone();
    let mut report = GradientCheck {
        max_relative_error: 0.0,
        checked: 0,
        skipped_at_kinks: 0,
    };
    let mut compare = |analytic: f64, numeric: Option<f64>| match numeric {
        Some(numeric) => {
            let denom = analytic.abs().max(numeric.abs()).max(1e-8);
            let rel = (analytic - numeric).abs() / denom;
            report.max_relative_error = report.max_relative_error.max(rel);
            report.checked += 1;
        }
        None => report.skipped_at_kinks += 1,
    };
    for (li, (gw, gb)) in grads.iter().enumerate() {
        for idx in 0..gw.len() {
            let numeric = central_difference(&mut probe, features, targets, epsilon, &base, |e| {
                &mut e.layers[li].weight.as_slice_mut().unwrap()[idx]
            })?;
            compare(gw.as_slice().unwrap()[idx], numeric);
        }
        for idx in 0..gb.len() {
            let numeric = central_difference(&mut probe, features, targets, epsilon, &base, |e| {
                &mut e.layers[li].bias[idx]
            })?;
            compare(gb[idx], numeric);
        }
    }
    Ok(report)
}

fn central_difference(
    e: &mut VisualEmbedder,
    features: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    epsilon: f64,
    pattern: &[bool],
    param: impl Fn(&mut VisualEmbedder) -> &mut f64,
) -> Result<Option<f64>> {
    let original = *param(e);
    *param(e) = original + epsilon;
    let plus = e.loss(features, targets)?;
    let plus_same = e.rectifier_pattern(features)? == pattern;
    *param(e) = original - epsilon;
    let minus = e.loss(features, targets)?;
    let minus_same = e.rectifier_pattern(features)? == pattern;
    *param(e) = original;
    Ok((plus_same && minus_same).then(|| (plus - minus) / (2.0 * epsilon)))
}

/// Central-difference gradient of [`sigmoid_xent_loss`] with respect to the
/// predictions.
pub fn numeric_loss_gradient(
    targets: ArrayView2<f64>,
    predictions: ArrayView2<f64>,
    epsilon: f64,
) -> Result<Array2<f64>> {
    let mut probe = predictions.to_owned();
    let mut out = Array2::zeros(predictions.dim());
    for idx in 0..probe.len() {
        let original = probe.as_slice().unwrap()[idx];
        probe.as_slice_mut().unwrap()[idx] = original + epsilon;
        let plus = sigmoid_xent_loss(targets, probe.view())?.0;
        probe.as_slice_mut().unwrap()[idx] = original - epsilon;
        let minus = sigmoid_xent_loss(targets, probe.view())?.0;
        probe.as_slice_mut().unwrap()[idx] = original;
        out.as_slice_mut().unwrap()[idx] = (plus - minus) / (2.0 * epsilon);
    }
    Ok(out)
}
