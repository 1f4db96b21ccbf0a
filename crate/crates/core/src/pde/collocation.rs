use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BoundaryHandling, PdeProblem, ProblemKind};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingStrategy {
    UniformRandom,
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollocationCounts {
    pub residual: usize,
    pub ic: usize,
    pub bc: usize,
}

/// Fixed point sets for one training run. Rows are raw coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CollocationSet {
    pub residual: Array2<f64>,
    pub ic: Array2<f64>,
    pub bc: Array2<f64>,
    /// For periodic boundary losses, the partner of each `bc` row one period away.
    pub bc_partner: Option<Array2<f64>>,
    pub seed: u64,
    pub strategy: SamplingStrategy,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn from_rows(rows: Vec<[f64; 2]>) -> Array2<f64> {
    let n = rows.len();
    Array2::from_shape_vec((n, 2), rows.into_iter().flatten().collect()).expect("n x 2")
}

/// Draws residual, initial-condition and boundary points for `problem`.
///
/// Boundary points are only produced when the problem penalises its boundary
/// condition through the loss; exact imposition needs none.
pub fn sample_collocation(
    problem: &PdeProblem,
    counts: CollocationCounts,
    seed: u64,
    strategy: SamplingStrategy,
) -> Result<CollocationSet> {
    problem.validate()?;
    if counts.residual == 0 {
        return Err(Error::config("residual point count must be positive"));
    }
    let (d0, d1) = (problem.domain[0], problem.domain[1]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |(lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();

    let residual = match strategy {
        SamplingStrategy::UniformRandom => {
            from_rows((0..counts.residual).map(|_| [uniform(d0), uniform(d1)]).collect())
        }
        SamplingStrategy::Grid => {
            let n = (counts.residual as f64).sqrt().round() as usize;
            if n * n != counts.residual {
                return Err(Error::config(format!(
                    "grid sampling needs a square residual count, got {}",
                    counts.residual
                )));
            }
            let a = linspace(d0.0, d0.1, n);
            let b = linspace(d1.0, d1.1, n);
            from_rows(a.iter().flat_map(|&u| b.iter().map(move |&v| [u, v])).collect())
        }
    };

    let ic = if problem.has_initial_condition() {
        let xs = match strategy {
            SamplingStrategy::UniformRandom => (0..counts.ic).map(|_| uniform(d1)).collect(),
            SamplingStrategy::Grid => linspace(d1.0, d1.1, counts.ic),
        };
        from_rows(xs.into_iter().map(|x| [d0.0, x]).collect())
    } else {
        Array2::zeros((0, 2))
    };

    let (bc, bc_partner) = if problem.bc == BoundaryHandling::LossTerm {
        match problem.kind() {
            ProblemKind::Helmholtz => {
                let rows = match strategy {
                    SamplingStrategy::UniformRandom => (0..counts.bc)
                        .map(|_| {
                            let edge = (uniform((0.0, 4.0)) as usize).min(3);
                            edge_point(edge, d0, d1, uniform((0.0, 1.0)))
                        })
                        .collect(),
                    SamplingStrategy::Grid => {
                        if !counts.bc.is_multiple_of(4) {
                            return Err(Error::config("grid boundary count must be divisible by 4"));
                        }
                        let m = counts.bc / 4;
                        (0..4)
                            .flat_map(|edge| (0..m).map(move |i| edge_point(edge, d0, d1, i as f64 / m as f64)))
                            .collect()
                    }
                };
                (from_rows(rows), None)
            }
            ProblemKind::AllenCahn | ProblemKind::Advection => {
                let ts: Vec<f64> = match strategy {
                    SamplingStrategy::UniformRandom => (0..counts.bc).map(|_| uniform(d0)).collect(),
                    SamplingStrategy::Grid => linspace(d0.0, d0.1, counts.bc),
                };
                let lo = from_rows(ts.iter().map(|&t| [t, d1.0]).collect());
                let hi = from_rows(ts.iter().map(|&t| [t, d1.1]).collect());
                (lo, Some(hi))
            }
        }
    } else {
        (Array2::zeros((0, 2)), None)
    };

    Ok(CollocationSet {
        residual,
        ic,
        bc,
        bc_partner,
        seed,
        strategy,
    })
}

/// Point at fraction `s` along edge `edge` of the box, walking the perimeter
/// counter-clockwise so that `s in [0, 1)` on each edge covers it once.
fn edge_point(edge: usize, d0: (f64, f64), d1: (f64, f64), s: f64) -> [f64; 2] {
    let lerp = |(lo, hi): (f64, f64), s: f64| lo + (hi - lo) * s;
    match edge {
        0 => [lerp(d0, s), d1.0],
        1 => [d0.1, lerp(d1, s)],
        2 => [lerp(d0, 1.0 - s), d1.1],
        _ => [d0.0, lerp(d1, 1.0 - s)],
    }
}
