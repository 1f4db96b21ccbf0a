use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::diffcore::Activation;
use crate::error::{Error, Result};
use crate::network::{pathology_probe, Arch, EmbeddingSpec, NetworkConfig, OutputTransform, ProbeOptions};

/// MLP derivative spread at or below this counts as constant.
pub const MLP_SPREAD_MAX: f64 = 1e-12;
/// EM derivative spread at or above this counts as input-dependent.
pub const EM_SPREAD_MIN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSettings {
    pub depths: Vec<usize>,
    pub width: usize,
    pub seeds: Vec<u64>,
    /// Probe inputs, spread evenly over `[-1, 1]`.
    pub points: usize,
    /// Zero the second Hadamard factor of the EM net.
    pub degenerate: bool,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            depths: vec![2, 4, 8],
            width: 32,
            seeds: (0..5).collect(),
            points: 64,
            degenerate: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub depth: usize,
    pub seed: u64,
    pub mlp_spread: f64,
    pub em_spread: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeStatus {
    /// Every MLP derivative is constant and every EM derivative varies.
    Separated,
    /// Some EM derivative is constant.
    Degenerate,
    /// Some MLP derivative varies, so the linear-regime premise failed.
    MlpNotConstant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    pub status: ProbeStatus,
}

impl ProbeReport {
    pub fn to_csv(&self) -> String {
        let mut text = String::from("depth,seed,mlp_spread,em_spread\n");
        for r in &self.rows {
            writeln!(text, "{},{},{:e},{:e}", r.depth, r.seed, r.mlp_spread, r.em_spread).expect("write to string");
        }
        text
    }
}

/// Input-derivative spread of fresh linear-regime MLP and EM nets across
/// depths and seeds.
pub fn run_probe(settings: &ProbeSettings) -> Result<ProbeReport> {
    if settings.depths.is_empty() || settings.seeds.is_empty() || settings.points < 2 {
        return Err(Error::config("probe needs depths, seeds and at least two points"));
    }
    let xs: Vec<f64> = (0..settings.points)
        .map(|i| -1.0 + 2.0 * i as f64 / (settings.points - 1) as f64)
        .collect();
    let mut rows = Vec::new();
    for &depth in &settings.depths {
        let config = NetworkConfig {
            arch: Arch::Em,
            num_blocks: depth,
            width: settings.width,
            activation: Activation::Identity,
            embedding: EmbeddingSpec::None,
            output_transform: OutputTransform::None,
            out_dim: 1,
            input_dim: 1,
        };
        config.validate()?;
        for &seed in &settings.seeds {
            let r = pathology_probe(
                &config,
                seed,
                &xs,
                ProbeOptions {
                    degenerate: settings.degenerate,
                },
            )?;
            rows.push(ProbeRow {
                depth,
                seed,
                mlp_spread: r.mlp_d1_spread,
                em_spread: r.em_d1_spread,
            });
        }
    }
    let status = if rows.iter().any(|r| !(r.mlp_spread <= MLP_SPREAD_MAX)) {
        ProbeStatus::MlpNotConstant
    } else if rows.iter().any(|r| !(r.em_spread >= EM_SPREAD_MIN)) {
        ProbeStatus::Degenerate
    } else {
        ProbeStatus::Separated
    };
    Ok(ProbeReport { rows, status })
}
