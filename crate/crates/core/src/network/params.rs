use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Arch, EmbeddingSpec, NetworkConfig};
use crate::diffcore::{MatrixSlot, VectorSlot};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerSlot {
    pub weight: MatrixSlot,
    pub bias: VectorSlot,
}

/// `(rows, cols)` of every affine layer in forward order.
///
/// EM: two stem layers, four per block, then the head.
/// MLP: one per hidden layer, then the head.
pub fn layer_shapes(config: &NetworkConfig) -> Vec<(usize, usize)> {
    let w = config.width;
    let e = config.embedded_dim();
    let mut shapes = Vec::new();
    match config.arch {
        Arch::Em => {
            shapes.push((w, e));
            shapes.push((w, e));
            for _ in 0..config.num_blocks {
                shapes.extend([(w, w); 4]);
            }
        }
        Arch::Mlp => {
            shapes.push((w, e));
            for _ in 1..config.num_blocks {
                shapes.push((w, w));
            }
        }
    }
    shapes.push((config.out_dim, w));
    shapes
}

pub fn parameter_count(config: &NetworkConfig) -> usize {
    layer_shapes(config).iter().map(|(r, c)| r * c + r).sum()
}

fn slots(config: &NetworkConfig) -> Vec<LayerSlot> {
    let mut offset = 0;
    layer_shapes(config)
        .into_iter()
        .map(|(rows, cols)| {
            let weight = MatrixSlot { offset, rows, cols };
            offset += rows * cols;
            let bias = VectorSlot { offset, len: rows };
            offset += rows;
            LayerSlot { weight, bias }
        })
        .collect()
}

/// Trainable weights and biases in one flat vector, plus the frozen Fourier matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    layers: Vec<LayerSlot>,
    values: Vec<f64>,
    fourier: Option<Array2<f64>>,
}

impl NetworkParams {
    pub fn from_flat(config: &NetworkConfig, values: Vec<f64>, fourier: Option<Array2<f64>>) -> Result<Self> {
        config.validate()?;
        let layers = slots(config);
        let expected = parameter_count(config);
        if values.len() != expected {
            return Err(Error::config(format!(
                "flat parameter vector has {} entries, config needs {expected}",
                values.len()
            )));
        }
        match (&config.embedding, &fourier) {
            (EmbeddingSpec::GaussianFourier { num_features, .. }, Some(b))
                if b.dim() == (*num_features, config.input_dim) => {}
            (EmbeddingSpec::GaussianFourier { .. }, _) => {
                return Err(Error::config("gaussian_fourier needs a matching B matrix"))
            }
            (_, None) => {}
            (_, Some(_)) => return Err(Error::config("B matrix given for a non-Gaussian embedding")),
        }
        Ok(Self {
            layers,
            values,
            fourier,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.values.clone()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn layers(&self) -> &[LayerSlot] {
        &self.layers
    }

    pub fn fourier(&self) -> Option<&Array2<f64>> {
        self.fourier.as_ref()
    }

    pub fn weight(&self, layer: usize) -> ArrayView2<'_, f64> {
        self.layers[layer].weight.view(&self.values)
    }

    pub fn bias(&self, layer: usize) -> ArrayView1<'_, f64> {
        self.layers[layer].bias.view(&self.values)
    }

    pub fn weight_mut(&mut self, layer: usize) -> ndarray::ArrayViewMut2<'_, f64> {
        self.layers[layer].weight.view_mut(&mut self.values)
    }

    pub fn to_saved(&self) -> SavedParams {
        SavedParams {
            values: self.values.clone(),
            fourier: self
                .fourier
                .as_ref()
                .map(|b| b.rows().into_iter().map(|r| r.to_vec()).collect()),
        }
    }

    pub fn from_saved(config: &NetworkConfig, saved: SavedParams) -> Result<Self> {
        let fourier = match saved.fourier {
            None => None,
            Some(rows) => {
                let cols = rows.first().map_or(0, |r| r.len());
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                Some(
                    Array2::from_shape_vec((rows.len(), cols), flat)
                        .map_err(|e| Error::Parse(format!("fourier matrix: {e}")))?,
                )
            }
        };
        Self::from_flat(config, saved.values, fourier)
    }
}

/// Serialized form of [`NetworkParams`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SavedParams {
    pub values: Vec<f64>,
    pub fourier: Option<Vec<Vec<f64>>>,
}

/// Xavier-normal weights, zero biases, and (for Gaussian Fourier features)
/// a frozen `B ~ N(0, s^2)` drawn from an independent stream of the same seed.
pub fn init_params(config: &NetworkConfig, seed: u64) -> Result<NetworkParams> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(parameter_count(config));
    for (rows, cols) in layer_shapes(config) {
        let std = (2.0 / (rows + cols) as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("positive std");
        values.extend((0..rows * cols).map(|_| normal.sample(&mut rng)));
        values.extend(std::iter::repeat_n(0.0, rows));
    }
    let fourier = match config.embedding {
        EmbeddingSpec::GaussianFourier { scale, num_features } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            let normal = Normal::new(0.0, scale).map_err(|e| Error::config(e.to_string()))?;
            Some(Array2::from_shape_simple_fn((num_features, config.input_dim), || {
                normal.sample(&mut rng)
            }))
        }
        _ => None,
    };
    NetworkParams::from_flat(config, values, fourier)
}
