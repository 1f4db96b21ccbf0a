use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diffcore::Activation;
use crate::error::{Error, Result};
use crate::network::{Arch, EmbeddingSpec, NetworkConfig, OutputTransform};
use crate::optim::{AdamConfig, LbfgsConfig};
use crate::pde::{BoundaryHandling, CollocationCounts, PdeProblem, ProblemKind, SamplingStrategy};
use crate::reference::SpectralConfig;

/// Everything needed to reproduce a set of training runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: PdeProblem,
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub collocation: CollocationSpec,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Run seeds one after another and write zero elapsed times so outputs
    /// are reproducible byte for byte.
    #[serde(default)]
    pub deterministic: bool,
    #[serde(default)]
    pub reference: ReferenceSpec,
}

fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}

/// Adam phase followed by an optional L-BFGS phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub adam: Option<AdamPhase>,
    #[serde(default)]
    pub lbfgs: Option<LbfgsConfig>,
    /// Adam steps between metric rows. L-BFGS logs every iteration.
    #[serde(default = "default_log_every")]
    pub log_every: u64,
}

fn default_log_every() -> u64 {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamPhase {
    pub steps: u64,
    pub initial_lr: f64,
    pub decay_steps: f64,
    pub decay_rate: f64,
}

impl AdamPhase {
    pub fn optimizer(&self) -> AdamConfig {
        AdamConfig::new(self.initial_lr, self.decay_steps, self.decay_rate)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollocationSpec {
    pub residual: usize,
    #[serde(default)]
    pub ic: usize,
    #[serde(default)]
    pub bc: usize,
    pub strategy: SamplingStrategy,
}

impl CollocationSpec {
    pub fn counts(&self) -> CollocationCounts {
        CollocationCounts {
            residual: self.residual,
            ic: self.ic,
            bc: self.bc,
        }
    }
}

/// Where the reference field comes from. Problems with a closed-form
/// solution ignore both fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    #[serde(default)]
    pub spectral: SpectralConfig,
    /// Grid file to use instead of the spectral solve.
    #[serde(default)]
    pub import: Option<PathBuf>,
}

pub const PRESETS: [&str; 6] = [
    "allen_cahn_paper",
    "allen_cahn_desk",
    "helmholtz_paper",
    "helmholtz_desk",
    "advection_paper",
    "advection_desk",
];

/// Initial-condition points used by the evolution presets.
const IC_POINTS: usize = 256;

fn em(num_blocks: usize, width: usize, embedding: EmbeddingSpec, output_transform: OutputTransform) -> NetworkConfig {
    NetworkConfig {
        arch: Arch::Em,
        num_blocks,
        width,
        activation: Activation::Tanh,
        embedding,
        output_transform,
        out_dim: 1,
        input_dim: 2,
    }
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let cfg = match name {
            "allen_cahn_paper" => Self {
                name: name.into(),
                problem: PdeProblem::allen_cahn(),
                network: em(
                    4,
                    185,
                    EmbeddingSpec::Periodic1dPlusTime { m: 10, period_x: 2.0 },
                    OutputTransform::None,
                ),
                train: TrainConfig {
                    adam: Some(AdamPhase {
                        steps: 300_000,
                        initial_lr: 0.001,
                        decay_steps: 8000.0,
                        decay_rate: 0.9,
                    }),
                    lbfgs: None,
                    log_every: default_log_every(),
                },
                collocation: CollocationSpec {
                    residual: 25_600,
                    ic: IC_POINTS,
                    bc: 0,
                    strategy: SamplingStrategy::UniformRandom,
                },
                seeds: default_seeds(),
                output_dir: None,
                deterministic: false,
                reference: ReferenceSpec::default(),
            },
            "allen_cahn_desk" => {
                let mut c = Self::preset("allen_cahn_paper")?;
                c.name = name.into();
                c.network.num_blocks = 2;
                c.network.width = 128;
                c.train.adam.as_mut().expect("adam phase").steps = 50_000;
                c.collocation.residual = 8192;
                c.seeds = vec![0, 1, 2];
                c
            }
            "helmholtz_paper" => Self {
                name: name.into(),
                problem: PdeProblem::helmholtz(),
                network: em(
                    1,
                    64,
                    EmbeddingSpec::GaussianFourier {
                        scale: 2.0,
                        num_features: 32,
                    },
                    OutputTransform::AdfHelmholtz,
                ),
                train: TrainConfig {
                    adam: Some(AdamPhase {
                        steps: 500,
                        initial_lr: 0.005,
                        decay_steps: 1000.0,
                        decay_rate: 1.0,
                    }),
                    lbfgs: Some(LbfgsConfig::new(500)),
                    log_every: default_log_every(),
                },
                collocation: CollocationSpec {
                    residual: 10_201,
                    ic: 0,
                    bc: 0,
                    strategy: SamplingStrategy::Grid,
                },
                seeds: default_seeds(),
                output_dir: None,
                deterministic: false,
                reference: ReferenceSpec::default(),
            },
            "helmholtz_desk" => {
                let mut c = Self::preset("helmholtz_paper")?;
                c.name = name.into();
                c
            }
            "advection_paper" => Self {
                name: name.into(),
                problem: PdeProblem::advection(),
                network: em(
                    22,
                    128,
                    EmbeddingSpec::PeriodicXAndT {
                        period_x: 2.0 * PI,
                        period_t: 2.0 * PI,
                    },
                    OutputTransform::None,
                ),
                train: TrainConfig {
                    adam: Some(AdamPhase {
                        steps: 100_000,
                        initial_lr: 0.001,
                        decay_steps: 2000.0,
                        decay_rate: 0.9,
                    }),
                    lbfgs: None,
                    log_every: default_log_every(),
                },
                collocation: CollocationSpec {
                    residual: 20_000,
                    ic: IC_POINTS,
                    bc: 0,
                    strategy: SamplingStrategy::UniformRandom,
                },
                seeds: default_seeds(),
                output_dir: None,
                deterministic: false,
                reference: ReferenceSpec::default(),
            },
            "advection_desk" => {
                let mut c = Self::preset("advection_paper")?;
                c.name = name.into();
                c.network.num_blocks = 4;
                c.network.width = 64;
                c.train.adam.as_mut().expect("adam phase").steps = 30_000;
                c.seeds = vec![0];
                c
            }
            other => {
                return Err(Error::config(format!(
                    "unknown preset '{other}', expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(cfg)
    }

    /// Reads a TOML or JSON config, chosen by file extension.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?,
            _ => toml::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config(format!("cannot serialise config: {e}")))
    }

    /// Sets one field addressed by a dotted path, e.g. `network.width=32` or
    /// `train.lbfgs.max_iter=3000`. The value is read as JSON when it parses,
    /// otherwise as a string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override '{assignment}' is not key=value")))?;
        let value: serde_json::Value =
            serde_json::from_str(raw.trim()).unwrap_or_else(|_| serde_json::Value::String(raw.trim().to_owned()));
        let mut doc = serde_json::to_value(&*self).map_err(|e| Error::config(e.to_string()))?;
        let mut slot = &mut doc;
        for key in path.trim().split('.') {
            slot = match slot {
                serde_json::Value::Object(map) => map
                    .get_mut(key)
                    .ok_or_else(|| Error::config(format!("override path '{path}': no field '{key}'")))?,
                serde_json::Value::Array(items) => {
                    let idx: usize = key
                        .parse()
                        .map_err(|_| Error::config(format!("override path '{path}': '{key}' is not an index")))?;
                    items
                        .get_mut(idx)
                        .ok_or_else(|| Error::config(format!("override path '{path}': index {idx} out of range")))?
                }
                serde_json::Value::Null => {
                    return Err(Error::config(format!(
                        "override path '{path}': '{key}' is inside an unset section; set the whole section instead"
                    )))
                }
                _ => return Err(Error::config(format!("override path '{path}': '{key}' is not a section"))),
            };
        }
        *slot = value;
        let updated: Self =
            serde_json::from_value(doc).map_err(|e| Error::config(format!("override '{assignment}': {e}")))?;
        *self = updated;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        self.network.validate()?;
        if self.network.input_dim != 2 || self.network.out_dim != 1 {
            return Err(Error::config("benchmark networks map two coordinates to one value"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::config("seeds must be distinct"));
        }
        if let Some(adam) = &self.train.adam {
            adam.optimizer().validate()?;
        }
        if let Some(lbfgs) = &self.train.lbfgs {
            lbfgs.validate()?;
        }
        if self.train.log_every == 0 {
            return Err(Error::config("log_every must be positive"));
        }
        self.check_boundary()?;
        let c = &self.collocation;
        if self.problem.has_initial_condition() && self.problem.weights.ic > 0.0 && c.ic == 0 {
            return Err(Error::config("initial-condition loss needs ic points"));
        }
        if self.problem.bc == BoundaryHandling::LossTerm && c.bc == 0 {
            return Err(Error::config("boundary loss needs bc points"));
        }
        if self.problem.kind() == ProblemKind::AllenCahn && self.reference.import.is_none() {
            self.reference.spectral.validate()?;
        }
        Ok(())
    }

    /// Boundary handling must agree with the embedding and output transform.
    fn check_boundary(&self) -> Result<()> {
        let x_period = self.problem.domain[1].1 - self.problem.domain[1].0;
        let periodic_x = match self.network.embedding {
            EmbeddingSpec::Periodic1dPlusTime { period_x, .. } | EmbeddingSpec::PeriodicXAndT { period_x, .. } => {
                Some(period_x)
            }
            _ => None,
        };
        let adf = self.network.output_transform == OutputTransform::AdfHelmholtz;
        match self.problem.bc {
            BoundaryHandling::ExactViaEmbedding => match periodic_x {
                Some(p) if (p - x_period).abs() <= 1e-12 * x_period => Ok(()),
                Some(p) => Err(Error::config(format!(
                    "embedding period {p} differs from the spatial period {x_period}"
                ))),
                None => Err(Error::config("exact periodic boundary needs a periodic embedding")),
            },
            BoundaryHandling::ExactViaAdf if !adf => {
                Err(Error::config("exact Dirichlet boundary needs the ADF output transform"))
            }
            BoundaryHandling::LossTerm if adf => {
                Err(Error::config("the ADF output transform already fixes the boundary; use exact_via_adf"))
            }
            _ if adf && self.problem.kind() != ProblemKind::Helmholtz => {
                Err(Error::config("the ADF output transform is specific to the Helmholtz square"))
            }
            _ => Ok(()),
        }
    }
}
