//! Element-wise multiplication networks, the plain MLP baseline, input
//! embeddings and exact boundary transforms.

mod embedding;
mod model;
mod params;
mod probe;
mod transform;

use serde::{Deserialize, Serialize};

pub use crate::diffcore::Activation;
pub use embedding::{embed, EmbeddingSpec};
pub use model::{forward, predict, record_network, record_prediction, PreparedPoints};
pub use params::{init_params, layer_shapes, parameter_count, LayerSlot, NetworkParams, SavedParams};
pub use probe::{pathology_probe, ProbeOptions, ProbeResult};
pub use transform::{adf_helmholtz_factor, apply_output_transform};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    /// Hadamard-product stem followed by shortcut-connected blocks.
    Em,
    /// Alternating affine and activation layers.
    Mlp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputTransform {
    None,
    /// Multiplies by `(1 - x^2)(1 - y^2)`, vanishing on the square `[-1, 1]^2`.
    AdfHelmholtz,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub arch: Arch,
    /// Shortcut blocks for `em`, hidden layers for `mlp`.
    pub num_blocks: usize,
    pub width: usize,
    pub activation: Activation,
    pub embedding: EmbeddingSpec,
    pub output_transform: OutputTransform,
    pub out_dim: usize,
    /// Number of raw input coordinates.
    pub input_dim: usize,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::config("network width must be at least 1"));
        }
        if self.num_blocks == 0 {
            return Err(Error::config("num_blocks must be at least 1"));
        }
        if self.out_dim == 0 {
            return Err(Error::config("out_dim must be at least 1"));
        }
        if self.input_dim == 0 {
            return Err(Error::config("input_dim must be at least 1"));
        }
        self.embedding.validate(self.input_dim)?;
        if self.output_transform == OutputTransform::AdfHelmholtz && self.input_dim != 2 {
            return Err(Error::config("adf_helmholtz needs a 2-D (x, y) input"));
        }
        Ok(())
    }

    /// Width of the embedded input fed to the first layer.
    pub fn embedded_dim(&self) -> usize {
        self.embedding.output_dim(self.input_dim)
    }
}
