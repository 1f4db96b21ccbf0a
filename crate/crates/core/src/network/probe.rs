use ndarray::Array2;

use super::{init_params, predict, Arch, EmbeddingSpec, NetworkConfig, OutputTransform};
use crate::diffcore::{Activation, JetLayout};
use crate::error::Result;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ProbeOptions {
    /// Zero the second factor of every Hadamard product in the EM net.
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeResult {
    pub mlp_d1_spread: f64,
    pub em_d1_spread: f64,
}

/// Spread of `du/dx` across `points` for freshly initialised linear-regime nets.
///
/// Both nets use identity activations and zero biases on a scalar input. The
/// MLP has `2 * num_blocks` hidden layers so the affine layer counts match.
/// In this regime an MLP derivative is a constant weight product, while the
/// EM derivative is a polynomial in `x`.
pub fn pathology_probe(
    config: &NetworkConfig,
    seed: u64,
    points: &[f64],
    options: ProbeOptions,
) -> Result<ProbeResult> {
    let base = NetworkConfig {
        arch: Arch::Em,
        num_blocks: config.num_blocks,
        width: config.width,
        activation: Activation::Identity,
        embedding: EmbeddingSpec::None,
        output_transform: OutputTransform::None,
        out_dim: 1,
        input_dim: 1,
    };
    let mlp = NetworkConfig {
        arch: Arch::Mlp,
        num_blocks: 2 * config.num_blocks,
        ..base.clone()
    };
    let xs = Array2::from_shape_vec((points.len(), 1), points.to_vec()).expect("column of points");
    let layout = JetLayout::new(1, vec![]).expect("one coordinate");

    let spread = |cfg: &NetworkConfig, degenerate: bool| -> Result<f64> {
        let mut params = init_params(cfg, seed)?;
        for layer in 0..params.layers().len() {
            let bias = params.layers()[layer].bias;
            bias.view_mut(params.values_mut()).fill(0.0);
        }
        if degenerate {
            let second_factors = std::iter::once(1).chain((0..cfg.num_blocks).flat_map(|b| [3 + 4 * b, 5 + 4 * b]));
            for layer in second_factors {
                params.weight_mut(layer).fill(0.0);
            }
        }
        let out = predict(&params, cfg, xs.view(), &layout)?;
        Ok(std_dev(out.component(1).iter().copied()))
    };

    Ok(ProbeResult {
        mlp_d1_spread: spread(&mlp, false)?,
        em_d1_spread: spread(&base, options.degenerate)?,
    })
}

fn std_dev(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n;
    (values.map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}
