//! Binary layout (little-endian): magic `WSVE`, `u32` version, `u64` layer
//! count, then per layer `u8` activation, `u64` in, `u64` out, the
//! row-major `out × in` weights and the biases as single-precision floats.

use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Activation, Layer, VisualEmbedder};
use crate::binio::{read_file, ByteReader, ByteWriter};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"WSVE";
const VERSION: u32 = 1;

fn encode(e: &VisualEmbedder) -> ByteWriter {
    let mut w = ByteWriter::new(MAGIC, VERSION);
    w.len(e.layers.len());
    for l in &e.layers {
        w.u8(l.activation.tag());
        w.len(l.input_dim());
        w.len(l.output_dim());
        let weights: Vec<f32> = l.weight.iter().map(|&x| x as f32).collect();
        let bias: Vec<f32> = l.bias.iter().map(|&x| x as f32).collect();
        w.f32s(&weights);
        w.f32s(&bias);
    }
    w
}

pub fn write_visual(e: &VisualEmbedder) -> Vec<u8> {
    encode(e).into_bytes()
}

pub fn save_visual(e: &VisualEmbedder, path: impl AsRef<Path>) -> Result<()> {
    encode(e).write_to(path.as_ref())
}

pub fn load_visual(path: impl AsRef<Path>) -> Result<VisualEmbedder> {
    read_visual(&read_file(path.as_ref())?)
}

pub fn read_visual(bytes: &[u8]) -> Result<VisualEmbedder> {
    let mut r = ByteReader::open(bytes, MAGIC, VERSION)?;
    let n = r.len()?;
    let mut layers = Vec::with_capacity(n.min(64));
    for _ in 0..n {
        let tag = r.u8()?;
        let activation = Activation::from_tag(tag)
            .ok_or_else(|| Error::Format(format!("unknown activation tag {tag}")))?;
        let (input, output) = (r.len()?, r.len()?);
        let weights = r.f32s()?;
        if Some(weights.len()) != input.checked_mul(output) {
            return Err(Error::Format("weight table does not match layer shape".into()));
        }
        let bias = r.f32s()?;
        if bias.len() != output {
            return Err(Error::Format("bias length does not match layer shape".into()));
        }
        layers.push(Layer {
            weight: Array2::from_shape_vec(
                (output, input),
                weights.into_iter().map(f64::from).collect(),
            )
            .unwrap(),
            bias: Array1::from_iter(bias.into_iter().map(f64::from)),
            activation,
        });
    }
    r.finish()?;
    VisualEmbedder::from_layers(layers).map_err(|e| Error::Format(e.to_string()))
}
