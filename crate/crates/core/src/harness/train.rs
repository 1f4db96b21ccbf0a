use std::cell::RefCell;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::diffcore::JetLayout;
use crate::error::{Error, Result};
use crate::network::{init_params, predict, NetworkParams};
use crate::optim::{lbfgs_minimize, AdamState, LbfgsStatus};
use crate::pde::{sample_collocation, LossTerms, PinnObjective};
use crate::reference::{GridField, SolutionGrid};

/// Offset between the initialization seed and the collocation sampling seed,
/// so the two draws never share a random stream.
const COLLOCATION_SEED_OFFSET: u64 = 1 << 32;

/// One row of `metrics.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub step: u64,
    pub l_ic: f64,
    pub l_bc: f64,
    pub l_r: f64,
    pub total: f64,
    /// Adam learning rate, or the accepted line-search step for L-BFGS rows.
    pub lr: f64,
    pub elapsed_s: f64,
}

impl MetricRow {
    pub const HEADER: &'static str = "step,l_ic,l_bc,l_r,total,lr,elapsed_s";

    fn new(step: u64, terms: &LossTerms, lr: f64, elapsed_s: f64) -> Self {
        Self {
            step,
            l_ic: terms.l_ic,
            l_bc: terms.l_bc,
            l_r: terms.l_r,
            total: terms.total,
            lr,
            elapsed_s,
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:.3}",
            self.step, self.l_ic, self.l_bc, self.l_r, self.total, self.lr, self.elapsed_s
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SeedStatus {
    Completed,
    /// The loss or gradient became non-finite at `step`; the seed was dropped.
    Diverged { step: u64 },
}

/// Result of training one seed.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub seed: u64,
    pub status: SeedStatus,
    pub metrics: Vec<MetricRow>,
    pub params: NetworkParams,
    pub lbfgs_status: Option<LbfgsStatus>,
    pub wall_clock_s: f64,
}

struct Clock {
    start: Instant,
    frozen: bool,
}

impl Clock {
    fn elapsed(&self) -> f64 {
        if self.frozen {
            0.0
        } else {
            self.start.elapsed().as_secs_f64()
        }
    }
}

/// Trains one seed: initialization, collocation sampling, Adam, then L-BFGS.
///
/// Configuration problems are errors. A non-finite loss is not: the outcome
/// carries a diverged status and the parameters reached so far.
pub fn train_seed(config: &ExperimentConfig, seed: u64) -> Result<TrainOutcome> {
    train_seed_with(config, seed, |_| {})
}

/// As [`train_seed`], calling `on_row` as each metric row is produced.
pub fn train_seed_with(
    config: &ExperimentConfig,
    seed: u64,
    mut on_row: impl FnMut(&MetricRow),
) -> Result<TrainOutcome> {
    config.validate()?;
    let start = Instant::now();
    let clock = Clock {
        start,
        frozen: config.deterministic,
    };
    let mut params = init_params(&config.network, seed)?;
    let colloc = sample_collocation(
        &config.problem,
        config.collocation.counts(),
        seed.wrapping_add(COLLOCATION_SEED_OFFSET),
        config.collocation.strategy,
    )?;
    let objective = PinnObjective::new(&config.problem, &config.network, &params, &colloc)?;
    let mut metrics = Vec::new();
    let mut push = |row: MetricRow, metrics: &mut Vec<MetricRow>| {
        on_row(&row);
        metrics.push(row);
    };
    let diverged = |step: u64, params: NetworkParams, metrics: Vec<MetricRow>| TrainOutcome {
        seed,
        status: SeedStatus::Diverged { step },
        metrics,
        params,
        lbfgs_status: None,
        wall_clock_s: start.elapsed().as_secs_f64(),
    };

    let mut step = 0u64;
    if let Some(phase) = &config.train.adam {
        let mut adam = AdamState::new(phase.optimizer(), params.len());
        while step < phase.steps {
            let (terms, grad) = match objective.evaluate_with_grad(params.values()) {
                Ok(v) => v,
                Err(Error::NonFinite) => return Ok(diverged(step, params, metrics)),
                Err(e) => return Err(e),
            };
            if step.is_multiple_of(config.train.log_every) {
                push(MetricRow::new(step, &terms, adam.current_lr(), clock.elapsed()), &mut metrics);
            }
            match adam.step(params.values_mut(), &grad) {
                Ok(()) => {}
                Err(Error::Diverged { .. }) => return Ok(diverged(step, params, metrics)),
                Err(e) => return Err(e),
            }
            step += 1;
        }
        if config.train.lbfgs.is_none() {
            match objective.evaluate(params.values()) {
                Ok(terms) => push(MetricRow::new(step, &terms, adam.current_lr(), clock.elapsed()), &mut metrics),
                Err(Error::NonFinite) => return Ok(diverged(step, params, metrics)),
                Err(e) => return Err(e),
            }
        }
    }

    let mut lbfgs_status = None;
    if let Some(lbfgs) = &config.train.lbfgs {
        // Loss terms of every evaluation, so accepted iterates can be logged
        // with their components.
        let seen: RefCell<Vec<LossTerms>> = RefCell::new(Vec::new());
        let f_and_grad = |x: &[f64]| {
            let (terms, grad) = objective.evaluate_with_grad(x)?;
            seen.borrow_mut().push(terms);
            Ok((terms.total, grad))
        };
        let base = step;
        let observe = |it: &crate::optim::LbfgsIteration| {
            let terms = seen
                .borrow()
                .iter()
                .rev()
                .find(|t| t.total.to_bits() == it.f.to_bits())
                .copied()
                .expect("accepted iterate was evaluated");
            push(
                MetricRow::new(base + it.iteration as u64, &terms, it.step, clock.elapsed()),
                &mut metrics,
            );
        };
        match lbfgs_minimize(f_and_grad, params.flatten(), lbfgs, observe) {
            Ok(result) => {
                params.values_mut().copy_from_slice(&result.params);
                lbfgs_status = Some(result.status);
            }
            Err(Error::NonFinite) => return Ok(diverged(step, params, metrics)),
            Err(e) => return Err(e),
        }
    }
    Ok(TrainOutcome {
        seed,
        status: SeedStatus::Completed,
        metrics,
        params,
        lbfgs_status,
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}

/// Network prediction on the reference grid, scored against it.
pub fn evaluate_on_grid(config: &ExperimentConfig, params: &NetworkParams, reference: &GridField) -> Result<SolutionGrid> {
    let points = reference.points();
    let out = predict(params, &config.network, points.view(), &JetLayout::value_only())?;
    let values = out
        .values()
        .column(0)
        .to_owned()
        .into_shape_with_order(reference.shape())
        .map_err(|e| Error::config(format!("prediction shape: {e}")))?;
    SolutionGrid::new(reference.clone(), values)
}
