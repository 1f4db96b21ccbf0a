use ndarray::{s, Array2, ArrayView2};

use super::params::LayerSlot;
use super::{embed, transform::adf_helmholtz_factor, Arch, NetworkConfig, NetworkParams, OutputTransform};
use crate::diffcore::{JetBatch, JetLayout, NodeId, Tape};
use crate::error::{Error, Result};
use crate::par;

const EVAL_CHUNK: usize = 1024;

/// Records the network body (embedding output to raw network output) on a tape.
pub fn record_network(
    tape: &mut Tape<'_>,
    config: &NetworkConfig,
    layers: &[LayerSlot],
    input: NodeId,
) -> Result<NodeId> {
    let act = config.activation;
    let expected = super::layer_shapes(config).len();
    if layers.len() != expected {
        return Err(Error::config(format!(
            "{} parameter layers for a config needing {expected}",
            layers.len()
        )));
    }
    let dense = |tape: &mut Tape<'_>, x: NodeId, layer: &LayerSlot| -> Result<NodeId> {
        let z = tape.affine(x, layer.weight, layer.bias)?;
        Ok(tape.activation(z, act))
    };
    let head = layers.last().expect("head layer");
    let hidden = match config.arch {
        Arch::Em => {
            let a = dense(tape, input, &layers[0])?;
            let b = dense(tape, input, &layers[1])?;
            let mut h = tape.hadamard(a, b)?;
            for block in layers[2..layers.len() - 1].chunks_exact(4) {
                let a = dense(tape, h, &block[0])?;
                let b = dense(tape, h, &block[1])?;
                let h1 = tape.hadamard(a, b)?;
                let a = dense(tape, h1, &block[2])?;
                let b = dense(tape, h1, &block[3])?;
                let h2 = tape.hadamard(a, b)?;
                h = tape.add(h2, h)?;
            }
            h
        }
        Arch::Mlp => {
            let mut h = input;
            for layer in &layers[..layers.len() - 1] {
                h = dense(tape, h, layer)?;
            }
            h
        }
    };
    tape.affine(hidden, head.weight, head.bias)
}

/// Propagates embedded seed jets through the network (no output transform).
pub fn forward(params: &NetworkParams, config: &NetworkConfig, seed: &JetBatch) -> Result<JetBatch> {
    let mut tape = Tape::new(params.values());
    let input = tape.leaf(seed.clone());
    let out = record_network(&mut tape, config, params.layers(), input)?;
    Ok(tape.value(out).clone())
}

/// Embedded seeds and output-transform factor for a fixed set of points.
#[derive(Clone, Debug)]
pub struct PreparedPoints {
    pub seed: JetBatch,
    pub factor: Option<JetBatch>,
}

impl PreparedPoints {
    pub fn new(
        params: &NetworkParams,
        config: &NetworkConfig,
        points: ArrayView2<'_, f64>,
        layout: &JetLayout,
    ) -> Result<Self> {
        let seed = embed(points, &config.embedding, params.fourier(), layout)?;
        let factor = match config.output_transform {
            OutputTransform::None => None,
            OutputTransform::AdfHelmholtz => Some(adf_helmholtz_factor(points, layout)?),
        };
        Ok(Self { seed, factor })
    }

    pub fn points(&self) -> usize {
        self.seed.points()
    }
}

/// Records embedding leaf, network body and output transform.
pub fn record_prediction(
    tape: &mut Tape<'_>,
    params: &NetworkParams,
    config: &NetworkConfig,
    prepared: &PreparedPoints,
) -> Result<NodeId> {
    let input = tape.leaf(prepared.seed.clone());
    let out = record_network(tape, config, params.layers(), input)?;
    match &prepared.factor {
        Some(phi) => tape.mul_const(out, phi.clone()),
        None => Ok(out),
    }
}

/// Network output jets (after the output transform) at raw points.
pub fn predict(
    params: &NetworkParams,
    config: &NetworkConfig,
    points: ArrayView2<'_, f64>,
    layout: &JetLayout,
) -> Result<JetBatch> {
    let ranges = par::chunk_ranges(points.nrows(), EVAL_CHUNK);
    let parts = par::map_ordered(&ranges, |r| -> Result<JetBatch> {
        let prepared = PreparedPoints::new(params, config, points.slice(s![r.clone(), ..]), layout)?;
        let mut tape = Tape::new(params.values());
        let out = record_prediction(&mut tape, params, config, &prepared)?;
        Ok(tape.value(out).clone())
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    concat_points(layout, config.out_dim, &parts)
}

fn concat_points(layout: &JetLayout, width: usize, parts: &[JetBatch]) -> Result<JetBatch> {
    let total: usize = parts.iter().map(|b| b.points()).sum();
    let comps = layout.components();
    let mut data = Array2::zeros((comps * total, width));
    let mut start = 0;
    for part in parts {
        let n = part.points();
        for c in 0..comps {
            data.slice_mut(s![c * total + start..c * total + start + n, ..])
                .assign(&part.component(c));
        }
        start += n;
    }
    JetBatch::from_data(layout.clone(), total, data)
}
